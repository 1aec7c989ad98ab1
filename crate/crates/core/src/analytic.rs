//! Closed-form p- and infinity-harmonic functions used as oracles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GridSpec, Jet, PlanarFunction, Point, ScalarField, SecondOrder, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticSolution {
    /// `b + a·x`
    Affine { b: f64, a: [f64; 2] },
    /// `x₁^{4/3} − x₂^{4/3}`
    Aronsson,
    /// `|x − vertex|`
    Cone { vertex: Point },
    /// `x₁ x₂`
    Saddle,
    /// `|x|^{(p−2)/(p−1)}`, p-harmonic off the origin for `p > 2`.
    RadialP { p: f64 },
}

fn cbrt_pow4(t: f64) -> f64 {
    let c = t.cbrt();
    c * c * c * c
}

impl AnalyticSolution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AnalyticSolution::RadialP { p } if !(p > 2.0 && p.is_finite()) => {
                Err(Error::Config(format!("radial_p needs p > 2, got {p}")))
            }
            AnalyticSolution::Affine { b, a }
                if !(b.is_finite() && a.iter().all(|v| v.is_finite())) =>
            {
                Err(Error::Config("affine coefficients must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AnalyticSolution::Affine { .. } => "affine",
            AnalyticSolution::Aronsson => "aronsson",
            AnalyticSolution::Cone { .. } => "cone",
            AnalyticSolution::Saddle => "saddle",
            AnalyticSolution::RadialP { .. } => "radial_p",
        }
    }

    /// Whether `x` lies on the set where the function fails to be C².
    pub fn is_singular(&self, x: Point) -> bool {
        match *self {
            AnalyticSolution::Affine { .. } | AnalyticSolution::Saddle => false,
            AnalyticSolution::Aronsson => x[0] == 0.0 || x[1] == 0.0,
            AnalyticSolution::Cone { vertex } => x == vertex,
            AnalyticSolution::RadialP { .. } => x == [0.0, 0.0],
        }
    }

    /// Distance from `x` to the singular set (infinite when there is none).
    pub fn singular_distance(&self, x: Point) -> f64 {
        match *self {
            AnalyticSolution::Affine { .. } | AnalyticSolution::Saddle => f64::INFINITY,
            AnalyticSolution::Aronsson => x[0].abs().min(x[1].abs()),
            AnalyticSolution::Cone { vertex } => (x[0] - vertex[0]).hypot(x[1] - vertex[1]),
            AnalyticSolution::RadialP { .. } => x[0].hypot(x[1]),
        }
    }

    /// Whether the closed rectangle `[lo, hi]` meets the singular set.
    pub fn meets_rectangle(&self, lo: Point, hi: Point) -> bool {
        let inside = |v: Point| v[0] >= lo[0] && v[0] <= hi[0] && v[1] >= lo[1] && v[1] <= hi[1];
        match *self {
            AnalyticSolution::Affine { .. } | AnalyticSolution::Saddle => false,
            AnalyticSolution::Aronsson => {
                (lo[0] <= 0.0 && hi[0] >= 0.0) || (lo[1] <= 0.0 && hi[1] >= 0.0)
            }
            AnalyticSolution::Cone { vertex } => inside(vertex),
            AnalyticSolution::RadialP { .. } => inside([0.0, 0.0]),
        }
    }

    /// The exponent p for which the function is p-harmonic (`None` when it is
    /// p-harmonic for every p or only infinity-harmonic).
    pub fn harmonic_exponent(&self) -> Option<f64> {
        match *self {
            AnalyticSolution::Saddle => Some(2.0),
            AnalyticSolution::RadialP { p } => Some(p),
            _ => None,
        }
    }
}

impl PlanarFunction for AnalyticSolution {
    fn value(&self, x: Point) -> f64 {
        match *self {
            AnalyticSolution::Affine { b, a } => b + a[0] * x[0] + a[1] * x[1],
            AnalyticSolution::Aronsson => cbrt_pow4(x[0]) - cbrt_pow4(x[1]),
            AnalyticSolution::Cone { vertex } => (x[0] - vertex[0]).hypot(x[1] - vertex[1]),
            AnalyticSolution::Saddle => x[0] * x[1],
            AnalyticSolution::RadialP { p } => x[0].hypot(x[1]).powf((p - 2.0) / (p - 1.0)),
        }
    }

    fn gradient(&self, x: Point) -> [f64; 2] {
        self.jet(x).grad
    }
}

impl SecondOrder for AnalyticSolution {
    fn jet(&self, x: Point) -> Jet {
        let value = self.value(x);
        let (grad, hess) = match *self {
            AnalyticSolution::Affine { a, .. } => (a, [[0.0; 2]; 2]),
            AnalyticSolution::Aronsson => {
                let (c1, c2) = (x[0].cbrt(), x[1].cbrt());
                let h1 = 4.0 / (9.0 * c1 * c1);
                let h2 = -4.0 / (9.0 * c2 * c2);
                ([4.0 / 3.0 * c1, -4.0 / 3.0 * c2], [[h1, 0.0], [0.0, h2]])
            }
            AnalyticSolution::Cone { vertex } => {
                let d = [x[0] - vertex[0], x[1] - vertex[1]];
                let r = d[0].hypot(d[1]);
                let n = [d[0] / r, d[1] / r];
                let off = -n[0] * n[1] / r;
                (
                    n,
                    [
                        [(1.0 - n[0] * n[0]) / r, off],
                        [off, (1.0 - n[1] * n[1]) / r],
                    ],
                )
            }
            AnalyticSolution::Saddle => ([x[1], x[0]], [[0.0, 1.0], [1.0, 0.0]]),
            AnalyticSolution::RadialP { p } => {
                let alpha = (p - 2.0) / (p - 1.0);
                let r = x[0].hypot(x[1]);
                let c = alpha * r.powf(alpha - 2.0);
                let n = [x[0] / r, x[1] / r];
                let off = c * (alpha - 2.0) * n[0] * n[1];
                (
                    [c * x[0], c * x[1]],
                    [
                        [c * (1.0 + (alpha - 2.0) * n[0] * n[0]), off],
                        [off, c * (1.0 + (alpha - 2.0) * n[1] * n[1])],
                    ],
                )
            }
        };
        Jet { value, grad, hess }
    }
}

/// Closed-form samples of `u` and `Du` on every grid node. With `masked`,
/// nodes on the singular set get value and gradient 0 instead of an error.
pub fn analytic_eval(
    sol: &AnalyticSolution,
    grid: &GridSpec,
    masked: bool,
) -> Result<(ScalarField, VectorField)> {
    sol.validate()?;
    grid.validate()?;
    let n = grid.len();
    let (mut u, mut g1, mut g2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for (i, j, x) in grid.nodes() {
        let k = grid.index(i, j);
        if sol.is_singular(x) {
            if masked {
                continue;
            }
            return Err(Error::Domain(format!(
                "node {x:?} lies on the singular set of the {} solution",
                sol.name()
            )));
        }
        u[k] = sol.value(x);
        let d = sol.gradient(x);
        g1[k] = d[0];
        g2[k] = d[1];
    }
    Ok((
        ScalarField::new(*grid, u)?,
        VectorField::new(*grid, g1, g2)?,
    ))
}

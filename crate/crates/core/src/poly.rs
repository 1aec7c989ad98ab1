//! Exact bivariate polynomials with closed-form derivatives.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Jet, PlanarFunction, Point, SecondOrder};

pub const MAX_DEGREE: usize = 8;

/// `Σ c_ij x₁^i x₂^j` with total degree at most [`MAX_DEGREE`].
///
/// Coefficients are stored in scaled form `t_ij = c_ij · i! · j!`, so every
/// partial derivative is a pure index shift and mixed derivatives commute
/// bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyField {
    degree: usize,
    /// `scaled[i][j]` for `i + j <= degree`, zero elsewhere.
    scaled: Vec<Vec<f64>>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Derivative data up to third order at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
    /// `third[a][b][c] = ∂_a ∂_b ∂_c v`
    pub third: [[[f64; 2]; 2]; 2],
}

impl PolyField {
    /// Builds from ordinary monomial coefficients `coeffs[i][j]` of `x₁^i x₂^j`.
    pub fn new(coeffs: &[Vec<f64>]) -> Result<Self> {
        let mut degree = 0;
        for (i, row) in coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if !c.is_finite() {
                    return Err(Error::Config(format!(
                        "coefficient ({i},{j}) is not finite"
                    )));
                }
                if *c != 0.0 {
                    degree = degree.max(i + j);
                }
            }
        }
        if degree > MAX_DEGREE {
            return Err(Error::Config(format!(
                "total degree {degree} exceeds {MAX_DEGREE}"
            )));
        }
        let mut scaled = vec![vec![0.0; degree + 1]; degree + 1];
        for (i, row) in coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if *c != 0.0 {
                    scaled[i][j] = c * factorial(i) * factorial(j);
                }
            }
        }
        Ok(PolyField { degree, scaled })
    }

    /// From a list of `(i, j, c)` monomial terms.
    pub fn from_terms(terms: &[(usize, usize, f64)]) -> Result<Self> {
        let n = terms.iter().map(|t| t.0.max(t.1)).max().unwrap_or(0) + 1;
        let mut coeffs = vec![vec![0.0; n]; n];
        for &(i, j, c) in terms {
            coeffs[i][j] += c;
        }
        Self::new(&coeffs)
    }

    /// Coefficients uniform in `[-1, 1]` for every monomial of degree ≤ `degree`.
    pub fn random<R: Rng>(degree: usize, rng: &mut R) -> Result<Self> {
        let mut coeffs = vec![vec![0.0; degree + 1]; degree + 1];
        for i in 0..=degree {
            for j in 0..=(degree - i) {
                coeffs[i][j] = rng.gen_range(-1.0..=1.0);
            }
        }
        Self::new(&coeffs)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Ordinary monomial coefficient of `x₁^i x₂^j`.
    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        if i + j > self.degree {
            return 0.0;
        }
        self.scaled[i][j] / (factorial(i) * factorial(j))
    }

    /// `∂₁^a ∂₂^b v` as a new polynomial.
    pub fn partial(&self, a: usize, b: usize) -> PolyField {
        if a + b > self.degree {
            return PolyField {
                degree: 0,
                scaled: vec![vec![0.0]],
            };
        }
        let degree = self.degree - a - b;
        let mut scaled = vec![vec![0.0; degree + 1]; degree + 1];
        for (i, row) in scaled.iter_mut().enumerate() {
            for (j, t) in row.iter_mut().enumerate().take(degree + 1 - i) {
                *t = self.scaled[i + a][j + b];
            }
        }
        PolyField { degree, scaled }
    }

    pub fn dx(&self) -> PolyField {
        self.partial(1, 0)
    }

    pub fn dy(&self) -> PolyField {
        self.partial(0, 1)
    }

    /// Value of `∂₁^a ∂₂^b v` at `x`, by nested Horner evaluation of the
    /// scaled coefficients.
    pub fn eval_partial(&self, a: usize, b: usize, x: Point) -> f64 {
        if a + b > self.degree {
            return 0.0;
        }
        let n = self.degree - a - b;
        let mut outer = 0.0;
        for i in (0..=n).rev() {
            let m = n - i;
            let mut inner = 0.0;
            for j in (0..=m).rev() {
                inner = self.scaled[i + a][j + b] + inner * x[1] / (j + 1) as f64;
            }
            outer = inner + outer * x[0] / (i + 1) as f64;
        }
        outer
    }

    pub fn eval(&self, x: Point) -> f64 {
        self.eval_partial(0, 0, x)
    }

    pub fn derivatives(&self, x: Point) -> PolyJet {
        let e = |a, b| self.eval_partial(a, b, x);
        let (v111, v112, v122, v222) = (e(3, 0), e(2, 1), e(1, 2), e(0, 3));
        PolyJet {
            value: e(0, 0),
            grad: [e(1, 0), e(0, 1)],
            hess: {
                let off = e(1, 1);
                [[e(2, 0), off], [off, e(0, 2)]]
            },
            third: [[[v111, v112], [v112, v122]], [[v112, v122], [v122, v222]]],
        }
    }
}

impl PlanarFunction for PolyField {
    fn value(&self, x: Point) -> f64 {
        self.eval(x)
    }

    fn gradient(&self, x: Point) -> [f64; 2] {
        [self.eval_partial(1, 0, x), self.eval_partial(0, 1, x)]
    }
}

impl SecondOrder for PolyField {
    fn jet(&self, x: Point) -> Jet {
        let d = self.derivatives(x);
        Jet {
            value: d.value,
            grad: d.grad,
            hess: d.hess,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Naive monomial sum, independent of the Horner path.
    fn naive(coeffs: &[Vec<f64>], x: Point) -> f64 {
        let mut s = 0.0;
        for (i, row) in coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                s += c * x[0].powi(i as i32) * x[1].powi(j as i32);
            }
        }
        s
    }

    #[test]
    fn saddle_derivatives() {
        let v = PolyField::from_terms(&[(1, 1, 1.0)]).unwrap();
        let d = v.derivatives([0.3, -2.0]);
        assert_eq!(d.value, -0.6);
        assert_eq!(d.grad, [-2.0, 0.3]);
        assert_eq!(d.hess, [[0.0, 1.0], [1.0, 0.0]]);
        assert_eq!(d.third, [[[0.0; 2]; 2]; 2]);
    }

    #[test]
    fn degree_cap_enforced() {
        assert!(PolyField::from_terms(&[(5, 4, 1.0)]).is_err());
        assert!(PolyField::from_terms(&[(4, 4, 1.0)]).is_ok());
    }

    #[test]
    fn coefficients_round_trip() {
        let v = PolyField::from_terms(&[(3, 1, 0.25), (0, 2, -1.5)]).unwrap();
        assert_eq!(v.coefficient(3, 1), 0.25);
        assert_eq!(v.coefficient(0, 2), -1.5);
        assert_eq!(v.dx().coefficient(2, 1), 0.75);
    }

    proptest! {
        #[test]
        fn horner_matches_naive_sum(seed in 0u64..1000, x in -1.5f64..1.5, y in -1.5f64..1.5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = PolyField::random(5, &mut rng).unwrap();
            let coeffs: Vec<Vec<f64>> = (0..=5)
                .map(|i| (0..=5).map(|j| v.coefficient(i, j)).collect())
                .collect();
            let a = v.eval([x, y]);
            let b = naive(&coeffs, [x, y]);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }

        #[test]
        fn mixed_partials_commute_bitwise(seed in 0u64..1000, x in -1.0f64..1.0, y in -1.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = PolyField::random(6, &mut rng).unwrap();
            let a = v.dx().dy().eval([x, y]);
            let b = v.dy().dx().eval([x, y]);
            prop_assert_eq!(a.to_bits(), b.to_bits());
            prop_assert_eq!(v.eval_partial(2, 1, [x, y]).to_bits(), v.dy().dx().dx().eval([x, y]).to_bits());
        }

        #[test]
        fn derivative_matches_finite_difference(seed in 0u64..1000, x in -1.0f64..1.0, y in -1.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = PolyField::random(4, &mut rng).unwrap();
            let h = 1e-5;
            let fd = (v.eval([x + h, y]) - v.eval([x - h, y])) / (2.0 * h);
            prop_assert!((fd - v.eval_partial(1, 0, [x, y])).abs() < 1e-8);
        }
    }
}

//! The complex gradient `V_β(Du)`, its pointwise Jacobian determinant and the
//! distributional determinant defined by pairing with test bumps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bump::TestBump;
use crate::error::{Error, Result};
use crate::field::{gradient, gradient4, hessian, GridSpec, ScalarField, SecondOrder, VectorField};

pub const DEFAULT_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct ComplexGradientField {
    pub beta: f64,
    /// `(|Du|^β u_{x₁}, −|Du|^β u_{x₂})`
    pub v: VectorField,
    /// `|Du|^{β+1}`
    pub speed: ScalarField,
    pub floor: f64,
    /// Nodes with `|Du| <= floor`; their `V` and speed are stored as 0.
    pub flagged: Vec<bool>,
}

impl ComplexGradientField {
    /// Flagged nodes that must be left out of pointwise reports (β < 0 only).
    pub fn is_masked(&self, k: usize) -> bool {
        self.beta < 0.0 && self.flagged[k]
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > -1.0 && beta.is_finite()) {
        return Err(Error::Config(format!("beta must exceed -1, got {beta}")));
    }
    Ok(())
}

pub fn complex_gradient(du: &VectorField, beta: f64) -> Result<ComplexGradientField> {
    complex_gradient_with_floor(du, beta, DEFAULT_FLOOR)
}

pub fn complex_gradient_with_floor(
    du: &VectorField,
    beta: f64,
    floor: f64,
) -> Result<ComplexGradientField> {
    check_beta(beta)?;
    let n = du.comp1.len();
    let (mut v1, mut v2, mut sp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut flagged = vec![false; n];
    for k in 0..n {
        let [a, b] = du.at(k);
        let m = a.hypot(b);
        if m <= floor {
            flagged[k] = true;
            continue;
        }
        let scale = m.powf(beta);
        v1[k] = scale * a;
        v2[k] = -scale * b;
        sp[k] = scale * m;
    }
    Ok(ComplexGradientField {
        beta,
        v: VectorField::new(du.grid, v1, v2)?,
        speed: ScalarField::new(du.grid, sp)?,
        floor,
        flagged,
    })
}

/// Where second derivatives come from.
#[derive(Clone, Copy)]
pub enum DetSource<'a> {
    /// Stencil derivatives of sampled values.
    Sampled(&'a ScalarField),
    /// Exact derivatives evaluated at the nodes of `grid`.
    Exact {
        f: &'a dyn SecondOrder,
        grid: GridSpec,
    },
}

impl DetSource<'_> {
    fn grid(&self) -> GridSpec {
        match self {
            DetSource::Sampled(u) => u.grid,
            DetSource::Exact { grid, .. } => *grid,
        }
    }

    /// Gradient and Hessian at every node.
    fn derivatives(&self) -> Result<Vec<([f64; 2], [[f64; 2]; 2])>> {
        match self {
            DetSource::Sampled(u) => {
                let du = gradient(u)?;
                let h = hessian(u)?;
                Ok((0..u.values.len()).map(|k| (du.at(k), h.at(k))).collect())
            }
            DetSource::Exact { f, grid } => {
                grid.validate()?;
                Ok(grid
                    .nodes()
                    .map(|(_, _, x)| {
                        let j = f.jet(x);
                        (j.grad, j.hess)
                    })
                    .collect())
            }
        }
    }
}

/// Pointwise invariants of a gradient/Hessian pair.
#[derive(Debug, Clone, Copy)]
struct Local {
    grad_sq: f64,
    hess_sq: f64,
    lap: f64,
    /// `D²v Dv`
    hdv: [f64; 2],
    /// `D²v Dv · Dv`
    ainf: f64,
}

fn local(g: [f64; 2], h: [[f64; 2]; 2]) -> Local {
    let hdv = [
        h[0][0] * g[0] + h[0][1] * g[1],
        h[1][0] * g[0] + h[1][1] * g[1],
    ];
    Local {
        grad_sq: g[0] * g[0] + g[1] * g[1],
        hess_sq: h[0][0] * h[0][0] + 2.0 * h[0][1] * h[0][1] + h[1][1] * h[1][1],
        lap: h[0][0] + h[1][1],
        hdv,
        ainf: hdv[0] * g[0] + hdv[1] * g[1],
    }
}

/// `det DV_β = −det D[(|Dv|²+ε)^{β/2} Dv]` through the structural identity.
fn structural_det(l: &Local, beta: f64, eps: f64) -> f64 {
    let s = l.grad_sq + eps;
    let hdv_sq = l.hdv[0] * l.hdv[0] + l.hdv[1] * l.hdv[1];
    let first = 0.5 * s.powf(beta) * (l.hess_sq - l.lap * l.lap);
    if beta == 0.0 {
        return first;
    }
    first + beta * s.powf(beta - 1.0) * (hdv_sq - l.lap * l.ainf)
}

/// `(1/(β+1))|D|Dv|^{β+1}|² + (β+1)(p−2)|Dv|^{2β−4}(Δ_∞v)²`, valid for
/// p-harmonic `v` off its critical set.
fn pharmonic_form(l: &Local, beta: f64, p: f64) -> f64 {
    let m2 = l.grad_sq;
    let hdv_sq = l.hdv[0] * l.hdv[0] + l.hdv[1] * l.hdv[1];
    (beta + 1.0) * m2.powf(beta - 1.0) * hdv_sq
        + (beta + 1.0) * (p - 2.0) * m2.powf(beta - 2.0) * l.ainf * l.ainf
}

#[derive(Debug, Clone)]
pub struct PointwiseDet {
    pub det: ScalarField,
    /// The p-harmonic form, when an exponent was supplied.
    pub pharmonic: Option<ScalarField>,
    pub masked: Vec<bool>,
    pub masked_count: usize,
}

pub fn pointwise_det(
    source: DetSource,
    beta: f64,
    p: Option<f64>,
    eps: f64,
) -> Result<PointwiseDet> {
    check_beta(beta)?;
    if !(eps >= 0.0) {
        return Err(Error::Config(format!("epsilon must be >= 0, got {eps}")));
    }
    if let Some(p) = p {
        if !(p > 1.0) {
            return Err(Error::Config(format!("p must exceed 1, got {p}")));
        }
    }
    let grid = source.grid();
    let derivs = source.derivatives()?;
    let n = derivs.len();
    let mut det = vec![0.0; n];
    let mut ph = p.map(|_| vec![0.0; n]);
    let mut masked = vec![false; n];
    for (k, (g, h)) in derivs.iter().enumerate() {
        let l = local(*g, *h);
        let small = l.grad_sq.sqrt() <= DEFAULT_FLOOR;
        if small && eps == 0.0 && beta < 0.0 {
            masked[k] = true;
            continue;
        }
        det[k] = if small && eps == 0.0 && beta > 0.0 {
            0.0
        } else {
            structural_det(&l, beta, eps)
        };
        if let (Some(p), Some(out)) = (p, ph.as_mut()) {
            out[k] = if small {
                0.0
            } else {
                pharmonic_form(&l, beta, p)
            };
        }
    }
    let masked_count = masked.iter().filter(|m| **m).count();
    if masked_count == n {
        return Err(Error::Degenerate("every node is masked".into()));
    }
    Ok(PointwiseDet {
        det: ScalarField::new(grid, det)?,
        pharmonic: match ph {
            Some(v) => Some(ScalarField::new(grid, v)?),
            None => None,
        },
        masked,
        masked_count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingMode {
    Pointwise,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingOptions {
    pub epsilon: f64,
    /// Drop the third integral (valid for infinity-harmonic inputs) and
    /// report it separately.
    pub orthogonal: bool,
    /// Exponent of a p-harmonic input, selecting the p-dependent constants.
    pub p: Option<f64>,
}

impl Default for PairingOptions {
    fn default() -> Self {
        PairingOptions {
            epsilon: 0.0,
            orthogonal: false,
            p: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingReport {
    pub pairing: f64,
    /// `(1/(β+1)) ∫ |D|Du|^{β+1}|² ψ`
    pub lower_rhs: f64,
    /// Constant times the average of `|Du|^{2+2β}` over the support ball of ψ.
    pub upper_rhs: f64,
    #[serde(rename = "C_emp")]
    pub c_emp: f64,
    pub beta: f64,
    pub p: Option<f64>,
    pub epsilon: f64,
    pub psi: TestBump,
    pub mode: PairingMode,
    pub masked_area: f64,
    /// The three integrals of the weak form (zeros in pointwise mode).
    pub terms: [f64; 3],
    pub orthogonality_residual: Option<f64>,
}

/// Constant of the upper bound: `1 + 1/(β+1)`, plus `β²/((p−1)(β+1))` for
/// p-harmonic inputs.
pub fn upper_constant(beta: f64, p: Option<f64>) -> f64 {
    let base = 1.0 + 1.0 / (beta + 1.0);
    match p {
        Some(p) => base + beta * beta / ((p - 1.0) * (beta + 1.0)),
        None => base,
    }
}

fn check_support(grid: &GridSpec, psi: &TestBump) -> Result<()> {
    if !grid.contains_disk(psi.center, psi.radius) {
        return Err(Error::Domain(format!(
            "bump support B({:?}, {}) is not inside the grid rectangle",
            psi.center, psi.radius
        )));
    }
    Ok(())
}

/// Trapezoid average of `|Du|^{2+2β}` over the nodes of `B(center, radius)`.
fn ball_average(grid: &GridSpec, psi: &TestBump, grad_sq: &[f64], beta: f64) -> f64 {
    let r2 = psi.radius * psi.radius;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, j, x) in grid.nodes() {
        let d2 = (x[0] - psi.center[0]).powi(2) + (x[1] - psi.center[1]).powi(2);
        if d2 <= r2 {
            let w = grid.trapezoid_weight(i, j);
            num += w * grad_sq[grid.index(i, j)].powf(1.0 + beta);
            den += w;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn finish(mut r: PairingReport, grid: &GridSpec, grad_sq: &[f64]) -> PairingReport {
    r.upper_rhs = upper_constant(r.beta, r.p) * ball_average(grid, &r.psi, grad_sq, r.beta);
    r.c_emp = if r.upper_rhs > 0.0 {
        r.pairing / r.upper_rhs
    } else {
        0.0
    };
    r
}

/// `∂_b ∂_a ψ` as a five-point central difference of the exact gradient. On a uniform
/// grid the node sums of these telescope, so constant gradients pair to zero
/// up to rounding.
fn differenced_hessian(psi: &TestBump, x: [f64; 2], grid: &GridSpec) -> [[f64; 2]; 2] {
    let (hx, hy) = (grid.hx, grid.hy);
    let g = |a: f64, b: f64| psi.derivatives([x[0] + a, x[1] + b]).grad;
    let five = |m2: [f64; 2], m1: [f64; 2], p1: [f64; 2], p2: [f64; 2], h: f64, c: usize| {
        (m2[c] - 8.0 * m1[c] + 8.0 * p1[c] - p2[c]) / (12.0 * h)
    };
    let (xm2, xm1, xp1, xp2) = (g(-2.0 * hx, 0.0), g(-hx, 0.0), g(hx, 0.0), g(2.0 * hx, 0.0));
    let (ym2, ym1, yp1, yp2) = (g(0.0, -2.0 * hy), g(0.0, -hy), g(0.0, hy), g(0.0, 2.0 * hy));
    [
        [
            five(xm2, xm1, xp1, xp2, hx, 0),
            five(ym2, ym1, yp1, yp2, hy, 0),
        ],
        [
            five(xm2, xm1, xp1, xp2, hx, 1),
            five(ym2, ym1, yp1, yp2, hy, 1),
        ],
    ]
}

/// Distributional pairing `∫ det DV_β(Du) ψ` by the three-integral weak form,
/// with `|Du|²` replaced by `|Du|² + ε`. Only stencil first derivatives of
/// `u` and of the speed `(|Du|²+ε)^{(β+1)/2}` enter.
pub fn weak_det_pairing(
    u: &ScalarField,
    beta: f64,
    psi: &TestBump,
    opts: &PairingOptions,
) -> Result<PairingReport> {
    check_beta(beta)?;
    let eps = opts.epsilon;
    if !(eps >= 0.0) {
        return Err(Error::Config(format!("epsilon must be >= 0, got {eps}")));
    }
    let grid = u.grid;
    check_support(&grid, psi)?;
    let du = gradient4(u)?;
    let n = grid.len();
    let grad_sq: Vec<f64> = (0..n)
        .map(|k| {
            let [a, b] = du.at(k);
            a * a + b * b
        })
        .collect();
    let speed: Vec<f64> = grad_sq
        .iter()
        .map(|m| (m + eps).powf(0.5 * (beta + 1.0)))
        .collect();
    let dspeed = gradient4(&ScalarField::new(grid, speed)?)?;
    let mut terms = [0.0; 3];
    let mut lower = 0.0;
    let mut masked_area = 0.0;
    for (i, j, x) in grid.nodes() {
        let w = grid.trapezoid_weight(i, j);
        let jet = psi.derivatives(x);
        let h = differenced_hessian(psi, x, &grid);
        let lap = h[0][0] + h[1][1];
        if jet.value == 0.0 && jet.grad == [0.0, 0.0] && h == [[0.0; 2]; 2] {
            continue;
        }
        let k = grid.index(i, j);
        let g = du.at(k);
        let s = grad_sq[k] + eps;
        if eps == 0.0 && grad_sq[k].sqrt() <= DEFAULT_FLOOR {
            masked_area += w;
            continue;
        }
        let quad =
            h[0][0] * g[0] * g[0] + (h[0][1] + h[1][0]) * g[0] * g[1] + h[1][1] * g[1] * g[1];
        let ds = dspeed.at(k);
        terms[0] += w * (-0.5 * s.powf(beta) * quad);
        terms[1] += w * (s.powf(beta + 1.0) * lap / (2.0 * beta + 2.0));
        if beta != 0.0 {
            let along = ds[0] * g[0] + ds[1] * g[1];
            let flux = g[0] * jet.grad[0] + g[1] * jet.grad[1];
            terms[2] += w * (-beta / (beta + 1.0) * s.powf(0.5 * (beta - 1.0)) * along * flux);
        }
        lower += w * (ds[0] * ds[0] + ds[1] * ds[1]) * jet.value / (beta + 1.0);
    }
    let (pairing, orth) = if opts.orthogonal {
        (terms[0] + terms[1], Some(terms[2]))
    } else {
        (terms[0] + terms[1] + terms[2], None)
    };
    let report = PairingReport {
        pairing,
        lower_rhs: lower,
        upper_rhs: 0.0,
        c_emp: 0.0,
        beta,
        p: opts.p,
        epsilon: eps,
        psi: *psi,
        mode: PairingMode::Weak,
        masked_area,
        terms,
        orthogonality_residual: orth,
    };
    Ok(finish(report, &grid, &grad_sq))
}

/// `∫ det DV_β ψ` with the pointwise determinant integrated by the trapezoid
/// rule; the oracle side of the pointwise/weak comparison.
pub fn pointwise_pairing(
    source: DetSource,
    beta: f64,
    psi: &TestBump,
    opts: &PairingOptions,
) -> Result<PairingReport> {
    let grid = source.grid();
    check_support(&grid, psi)?;
    let det = pointwise_det(source, beta, opts.p, opts.epsilon)?;
    let derivs = source.derivatives()?;
    let grad_sq: Vec<f64> = derivs
        .iter()
        .map(|(g, _)| g[0] * g[0] + g[1] * g[1])
        .collect();
    let mut pairing = 0.0;
    let mut lower = 0.0;
    let mut masked_area = 0.0;
    for (i, j, x) in grid.nodes() {
        let psi_x = psi.value(x);
        if psi_x == 0.0 {
            continue;
        }
        let w = grid.trapezoid_weight(i, j);
        let k = grid.index(i, j);
        if det.masked[k] {
            masked_area += w;
            continue;
        }
        pairing += w * det.det.values[k] * psi_x;
        // |D (|Dv|²+ε)^{(β+1)/2}|² = (β+1)² s^{β−1} |D²v Dv|²
        let l = local(derivs[k].0, derivs[k].1);
        let s = l.grad_sq + opts.epsilon;
        if s > 0.0 {
            let hdv_sq = l.hdv[0] * l.hdv[0] + l.hdv[1] * l.hdv[1];
            lower += w * (beta + 1.0) * s.powf(beta - 1.0) * hdv_sq * psi_x;
        }
    }
    let report = PairingReport {
        pairing,
        lower_rhs: lower,
        upper_rhs: 0.0,
        c_emp: 0.0,
        beta,
        p: opts.p,
        epsilon: opts.epsilon,
        psi: *psi,
        mode: PairingMode::Pointwise,
        masked_area,
        terms: [0.0; 3],
        orthogonality_residual: None,
    };
    Ok(finish(report, &grid, &grad_sq))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdict {
    pub center: [f64; 2],
    pub radius: f64,
    /// `min{1, p−1}` for p-harmonic inputs, 1 otherwise.
    pub lower_factor: f64,
    pub lower_margin: f64,
    pub lower_ok: bool,
    pub nonnegative: bool,
    pub c_emp: f64,
    pub upper_ok: bool,
    pub pass: bool,
}

/// Checks the lower bound, nonnegativity and finiteness of the empirical
/// upper constant for a report computed with ψ supported in `B(center, r)`.
pub fn check_bounds(
    report: &PairingReport,
    center: [f64; 2],
    r: f64,
    grid: &GridSpec,
    tol: f64,
) -> Result<BoundVerdict> {
    if !(r > 0.0) || !grid.contains_disk(center, 0.5 * r) {
        return Err(Error::Domain(format!(
            "half ball B({center:?}, {}) is not inside the grid",
            0.5 * r
        )));
    }
    let psi = &report.psi;
    let gap = (psi.center[0] - center[0]).hypot(psi.center[1] - center[1]);
    if gap + psi.radius > r * (1.0 + 1e-12) {
        return Err(Error::Domain("bump support is not inside the ball".into()));
    }
    let lower_factor = report.p.map_or(1.0, |p| (p - 1.0).min(1.0));
    let lower_margin = report.pairing - lower_factor * report.lower_rhs;
    let lower_ok = lower_margin >= -tol;
    let nonnegative = report.pairing >= -tol;
    let upper_ok = report.c_emp.is_finite();
    Ok(BoundVerdict {
        center,
        radius: r,
        lower_factor,
        lower_margin,
        lower_ok,
        nonnegative,
        c_emp: report.c_emp,
        upper_ok,
        pass: lower_ok && nonnegative && upper_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSequence {
    pub pairings: Vec<f64>,
    pub limit: f64,
    /// `|pairing(u_p) − pairing(u_∞)|`
    pub gaps: Vec<f64>,
}

impl ConvergenceSequence {
    pub fn gaps_strictly_decreasing(&self) -> bool {
        self.gaps.windows(2).all(|w| w[1] < w[0])
    }
}

/// Pairings of a family of approximations and of their limit, for weak-star
/// convergence checks.
pub fn weak_convergence_pairings(
    fields: &[ScalarField],
    u_inf: &ScalarField,
    beta: f64,
    psi: &TestBump,
    opts: &PairingOptions,
) -> Result<ConvergenceSequence> {
    if fields.iter().any(|f| f.grid != u_inf.grid) {
        return Err(Error::Config("all fields must share one grid".into()));
    }
    let limit_opts = PairingOptions { p: None, ..*opts };
    let limit = weak_det_pairing(u_inf, beta, psi, &limit_opts)?.pairing;
    let pairings = fields
        .par_iter()
        .map(|f| weak_det_pairing(f, beta, psi, opts).map(|r| r.pairing))
        .collect::<Result<Vec<_>>>()?;
    let gaps = pairings.iter().map(|v| (v - limit).abs()).collect();
    Ok(ConvergenceSequence {
        pairings,
        limit,
        gaps,
    })
}

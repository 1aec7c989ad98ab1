//! Pointwise and integrated differential identities checked on exactly
//! differentiated fields. Residuals isolate rounding (pointwise checks) or
//! quadrature error (integrated checks).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::AnalyticSolution;
use crate::bump::TestBump;
use crate::error::{Error, Result};
use crate::field::{GridSpec, Jet, Point, SecondOrder};
use crate::poly::PolyField;

/// Gradients at or below this magnitude count as critical.
pub const CRITICAL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityId {
    /// `−det D²v = ½[|D²v|² − (Δv)²] = ½ div(D²v Dv − Δv Dv)`
    DivStructure,
    /// `|D²v Dv|² − Δv Δ_∞v = ½[|D²v|² − (Δv)²]|Dv|²`
    HessianIdentity,
    /// Expansion of `−det D[(|Dv|²+ε)^{β/2} Dv]`.
    Structural,
    /// The structural identity integrated against a bump.
    WeakStructural,
    /// The `(−det D²u) u²` formula for infinity-harmonic `u`.
    USquared,
    /// The determinant of `|Du|^β Du` for p-harmonic `u`.
    PHarmonic,
    /// `|D(Du/|Du|)|²` against `|D log|Du||²`.
    LogGradient,
}

impl IdentityId {
    pub const ALL: [IdentityId; 7] = [
        IdentityId::DivStructure,
        IdentityId::HessianIdentity,
        IdentityId::Structural,
        IdentityId::WeakStructural,
        IdentityId::USquared,
        IdentityId::PHarmonic,
        IdentityId::LogGradient,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            IdentityId::DivStructure => "div_structure",
            IdentityId::HessianIdentity => "hessian_identity",
            IdentityId::Structural => "structural",
            IdentityId::WeakStructural => "weak_structural",
            IdentityId::USquared => "u_squared",
            IdentityId::PHarmonic => "p_harmonic",
            IdentityId::LogGradient => "log_gradient",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown identity '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub identity: IdentityId,
    /// `max |L − R| / (1 + |L| + |R|)` over the samples.
    pub max_rel_residual: f64,
    pub sample_count: usize,
    pub beta: Option<f64>,
    pub epsilon: Option<f64>,
    pub p: Option<f64>,
    pub seed: Option<u64>,
    /// Outcome of the accompanying inequality, when one applies.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub inequality_holds: Option<bool>,
}

impl IdentityResidual {
    fn new(identity: IdentityId) -> Self {
        IdentityResidual {
            identity,
            max_rel_residual: 0.0,
            sample_count: 0,
            beta: None,
            epsilon: None,
            p: None,
            seed: None,
            inequality_holds: None,
        }
    }

    fn push(&mut self, l: f64, r: f64) {
        self.max_rel_residual = self.max_rel_residual.max(rel_residual(l, r));
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

pub fn rel_residual(l: f64, r: f64) -> f64 {
    (l - r).abs() / (1.0 + l.abs() + r.abs())
}

/// `n` points uniform in the rectangle `[lo, hi]`.
pub fn uniform_samples(n: usize, lo: Point, hi: Point, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])])
        .collect()
}

/// `n` points uniform in area on the annulus `r0 <= |x| <= r1`.
pub fn annulus_samples(n: usize, r0: f64, r1: f64, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let r = rng.gen_range(r0 * r0..=r1 * r1).sqrt();
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            [r * t.cos(), r * t.sin()]
        })
        .collect()
}

/// Second-order invariants at one point.
#[derive(Debug, Clone, Copy)]
struct Invariants {
    g: [f64; 2],
    h: [[f64; 2]; 2],
    m2: f64,
    hess_sq: f64,
    lap: f64,
    hdv: [f64; 2],
    hdv_sq: f64,
    ainf: f64,
}

fn invariants(jet: &Jet) -> Invariants {
    let (g, h) = (jet.grad, jet.hess);
    let hdv = [
        h[0][0] * g[0] + h[0][1] * g[1],
        h[1][0] * g[0] + h[1][1] * g[1],
    ];
    Invariants {
        g,
        h,
        m2: g[0] * g[0] + g[1] * g[1],
        hess_sq: h[0][0] * h[0][0] + 2.0 * h[0][1] * h[0][1] + h[1][1] * h[1][1],
        lap: h[0][0] + h[1][1],
        hdv,
        hdv_sq: hdv[0] * hdv[0] + hdv[1] * hdv[1],
        ainf: hdv[0] * g[0] + hdv[1] * g[1],
    }
}

fn det2(a: [[f64; 2]; 2]) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// `−det D[(|Dv|²+ε)^{β/2} Dv]` by the chain rule on exact derivatives.
fn chain_rule_det(q: &Invariants, beta: f64, eps: f64) -> f64 {
    let s = q.m2 + eps;
    let phi = s.powf(0.5 * beta);
    let dphi = if beta == 0.0 {
        0.0
    } else {
        0.5 * beta * s.powf(0.5 * beta - 1.0)
    };
    let mut dw = [[0.0; 2]; 2];
    for (i, row) in dw.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            *e = phi * q.h[i][j] + dphi * q.g[i] * 2.0 * q.hdv[j];
        }
    }
    -det2(dw)
}

/// Right side of the structural expansion.
fn structural_rhs(q: &Invariants, beta: f64, eps: f64) -> f64 {
    let s = q.m2 + eps;
    let first = 0.5 * s.powf(beta) * (q.hess_sq - q.lap * q.lap);
    if beta == 0.0 {
        return first;
    }
    first + beta * s.powf(beta - 1.0) * (q.hdv_sq - q.lap * q.ainf)
}

/// `|Dv|² Δv + (p−2) Δ_∞v`, the p-Laplacian defect (zero for p-harmonic `v`).
fn defect(q: &Invariants, p: f64) -> f64 {
    q.m2 * q.lap + (p - 2.0) * q.ainf
}

fn require_noncritical(q: &Invariants, x: Point) -> Result<()> {
    if q.m2.sqrt() <= CRITICAL_FLOOR {
        return Err(Error::Precondition(format!("gradient vanishes at {x:?}")));
    }
    Ok(())
}

pub fn check_div_structure(v: &PolyField, samples: &[Point]) -> IdentityResidual {
    let mut out = IdentityResidual::new(IdentityId::DivStructure);
    for &x in samples {
        let d = v.derivatives(x);
        let q = invariants(&v.jet(x));
        let neg_det = -det2(d.hess);
        let half = 0.5 * (q.hess_sq - q.lap * q.lap);
        // div(D²v Dv − Δv Dv) with third derivatives kept unsimplified
        let mut div = 0.0;
        for i in 0..2 {
            let dlap_i = d.third[i][0][0] + d.third[i][1][1];
            for j in 0..2 {
                div += d.third[i][i][j] * d.grad[j] + d.hess[i][j] * d.hess[i][j];
            }
            div -= dlap_i * d.grad[i] + q.lap * d.hess[i][i];
        }
        let div = 0.5 * div;
        out.push(neg_det, half);
        out.push(half, div);
        out.push(neg_det, div);
    }
    out.sample_count = samples.len();
    out
}

pub fn check_hessian_identity(v: &dyn SecondOrder, samples: &[Point]) -> IdentityResidual {
    let mut out = IdentityResidual::new(IdentityId::HessianIdentity);
    for &x in samples {
        let q = invariants(&v.jet(x));
        out.push(
            q.hdv_sq - q.lap * q.ainf,
            0.5 * (q.hess_sq - q.lap * q.lap) * q.m2,
        );
    }
    out.sample_count = samples.len();
    out
}

pub fn check_structural_identity(
    v: &dyn SecondOrder,
    beta: f64,
    eps: f64,
    samples: &[Point],
) -> Result<IdentityResidual> {
    check_params(beta, eps)?;
    let mut out = IdentityResidual::new(IdentityId::Structural);
    out.beta = Some(beta);
    out.epsilon = Some(eps);
    for &x in samples {
        let q = invariants(&v.jet(x));
        if eps == 0.0 {
            require_noncritical(&q, x)?;
        }
        out.push(chain_rule_det(&q, beta, eps), structural_rhs(&q, beta, eps));
    }
    out.sample_count = samples.len();
    Ok(out)
}

fn check_params(beta: f64, eps: f64) -> Result<()> {
    if !(beta > -1.0 && beta.is_finite()) {
        return Err(Error::Config(format!("beta must exceed -1, got {beta}")));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Config(format!("epsilon must be >= 0, got {eps}")));
    }
    Ok(())
}

fn check_support(grid: &GridSpec, psi: &TestBump) -> Result<()> {
    grid.validate()?;
    if !grid.contains_disk(psi.center, psi.radius) {
        return Err(Error::Domain("bump support is not inside the grid".into()));
    }
    Ok(())
}

/// Trapezoid sums of a pair of integrands over the nodes in the support of ψ.
fn quadrature_pair(
    grid: &GridSpec,
    psi: &TestBump,
    mut f: impl FnMut(Point) -> (f64, f64),
) -> (f64, f64, usize) {
    let (mut l, mut r, mut n) = (0.0, 0.0, 0);
    let r2 = psi.radius * psi.radius;
    for (i, j, x) in grid.nodes() {
        let d2 = (x[0] - psi.center[0]).powi(2) + (x[1] - psi.center[1]).powi(2);
        if d2 >= r2 {
            continue;
        }
        let w = grid.trapezoid_weight(i, j);
        let (a, b) = f(x);
        l += w * a;
        r += w * b;
        n += 1;
    }
    (l, r, n)
}

/// `∫ −det D[(|Dv|²+ε)^{β/2}Dv] ψ` against the three-integral weak form, both
/// with exact integrands and one shared trapezoid rule.
pub fn check_weak_identity(
    v: &dyn SecondOrder,
    beta: f64,
    eps: f64,
    psi: &TestBump,
    grid: &GridSpec,
) -> Result<IdentityResidual> {
    check_params(beta, eps)?;
    if eps == 0.0 {
        return Err(Error::Precondition(
            "the weak identity needs epsilon > 0".into(),
        ));
    }
    check_support(grid, psi)?;
    let (l, r, n) = quadrature_pair(grid, psi, |x| {
        let q = invariants(&v.jet(x));
        let b = psi.derivatives(x);
        let s = q.m2 + eps;
        let g = q.g;
        let quad = b.hessian[0][0] * g[0] * g[0]
            + 2.0 * b.hessian[0][1] * g[0] * g[1]
            + b.hessian[1][1] * g[1] * g[1];
        let flux = g[0] * b.grad[0] + g[1] * b.grad[1];
        // D s^{(β+1)/2} · Dv = (β+1) s^{(β−1)/2} Δ_∞v
        let third = -beta * s.powf(beta - 1.0) * q.ainf * flux;
        let rhs = -0.5 * s.powf(beta) * quad
            + s.powf(beta + 1.0) * b.laplacian / (2.0 * beta + 2.0)
            + third;
        (chain_rule_det(&q, beta, eps) * b.value, rhs)
    });
    let mut out = IdentityResidual::new(IdentityId::WeakStructural);
    out.beta = Some(beta);
    out.epsilon = Some(eps);
    out.push(l, r);
    out.sample_count = n;
    Ok(out)
}

/// `∫(−det D²u)u²ψ + ∫|Du|⁴ψ` against
/// `−∫|Du|²(Du·Dψ)u + ½∫u²[|Du|²Δψ − D²ψ Du·Du]` for infinity-harmonic `u`.
pub fn check_u2_formula(
    u: &AnalyticSolution,
    psi: &TestBump,
    grid: &GridSpec,
) -> Result<IdentityResidual> {
    u.validate()?;
    check_support(grid, psi)?;
    if u.meets_rectangle([grid.x0, grid.y0], [grid.x1(), grid.y1()]) {
        return Err(Error::Domain(format!(
            "grid meets the singular set of {}",
            u.name()
        )));
    }
    let (l, r, n) = quadrature_pair(grid, psi, |x| {
        let jet = u.jet(x);
        let q = invariants(&jet);
        let b = psi.derivatives(x);
        let uu = jet.value;
        let g = q.g;
        let quad = b.hessian[0][0] * g[0] * g[0]
            + 2.0 * b.hessian[0][1] * g[0] * g[1]
            + b.hessian[1][1] * g[1] * g[1];
        let flux = g[0] * b.grad[0] + g[1] * b.grad[1];
        let lhs = (-det2(q.h) * uu * uu + q.m2 * q.m2) * b.value;
        let rhs = -q.m2 * flux * uu + 0.5 * uu * uu * (q.m2 * b.laplacian - quad);
        (lhs, rhs)
    });
    let mut out = IdentityResidual::new(IdentityId::USquared);
    out.push(l, r);
    out.sample_count = n;
    Ok(out)
}

/// `−det D[|Du|^β Du]` by the chain rule against
/// `(β+1)|Du|^{2β−2}|D²u Du|² + (β+1)(p−2)|Du|^{2β−4}(Δ_∞u)² − (β+1)|Du|^{2β−4}Δ_∞u L`
/// where `L = |Du|²Δu + (p−2)Δ_∞u` vanishes for p-harmonic `u`.
pub fn check_pharmonic_formula(
    p: f64,
    u: &dyn SecondOrder,
    beta: f64,
    samples: &[Point],
) -> Result<IdentityResidual> {
    check_params(beta, 0.0)?;
    check_p(p)?;
    let mut out = IdentityResidual::new(IdentityId::PHarmonic);
    out.beta = Some(beta);
    out.p = Some(p);
    for &x in samples {
        let q = invariants(&u.jet(x));
        require_noncritical(&q, x)?;
        let lhs = chain_rule_det(&q, beta, 0.0);
        let b1 = beta + 1.0;
        let rhs = b1 * q.m2.powf(beta - 1.0) * q.hdv_sq
            + b1 * (p - 2.0) * q.m2.powf(beta - 2.0) * q.ainf * q.ainf
            - b1 * q.m2.powf(beta - 2.0) * q.ainf * defect(&q, p);
        out.push(lhs, rhs);
    }
    out.sample_count = samples.len();
    Ok(out)
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Config(format!("p must exceed 1, got {p}")));
    }
    Ok(())
}

/// `|D(Du/|Du|)|²` by direct differentiation against
/// `|D log|Du||² + (p−2)p(Δ_∞u)²/|Du|⁶ + [L² − 2(p−1)LΔ_∞u]/|Du|⁶`.
///
/// When the defect `L` is negligible at every sample, also checks the
/// inequalities: `≥ |D log|Du||²` for `p ≥ 2`, and
/// `(p−1)²|D log|Du||² ≤ · ≤ |D log|Du||²` for `1 < p < 2`.
pub fn check_log_gradient_identity(
    p: f64,
    u: &dyn SecondOrder,
    samples: &[Point],
) -> Result<IdentityResidual> {
    check_p(p)?;
    let mut out = IdentityResidual::new(IdentityId::LogGradient);
    out.p = Some(p);
    let mut harmonic = true;
    let mut holds = true;
    for &x in samples {
        let q = invariants(&u.jet(x));
        require_noncritical(&q, x)?;
        let m = q.m2.sqrt();
        let m3 = m * q.m2;
        let mut lhs = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let e = q.h[i][j] / m - q.g[i] * q.hdv[j] / m3;
                lhs += e * e;
            }
        }
        let dlog = q.hdv_sq / (q.m2 * q.m2);
        let m6 = q.m2 * q.m2 * q.m2;
        let l = defect(&q, p);
        let rhs = dlog
            + (p - 2.0) * p * q.ainf * q.ainf / m6
            + (l * l - 2.0 * (p - 1.0) * l * q.ainf) / m6;
        out.push(lhs, rhs);
        if l.abs() > 1e-9 * (1.0 + q.m2 * q.hess_sq.sqrt()) {
            harmonic = false;
        }
        let slack = 1e-12 * (1.0 + dlog);
        holds &= if p >= 2.0 {
            lhs >= dlog - slack
        } else {
            lhs <= dlog + slack && lhs >= (p - 1.0) * (p - 1.0) * dlog - slack
        };
    }
    out.sample_count = samples.len();
    out.inequality_holds = harmonic.then_some(holds);
    Ok(out)
}

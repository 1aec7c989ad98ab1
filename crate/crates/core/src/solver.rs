//! Damped Newton minimization of the discrete regularized (β+2)-Dirichlet
//! energy, with ε- and p-continuation.

use serde::{Deserialize, Serialize};

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};
use crate::field::{GridSpec, Point, ScalarField};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_NEWTON: usize = 200;
pub const DEFAULT_P_SCHEDULE: [f64; 4] = [4.0, 8.0, 16.0, 32.0];
const FLAT_REL: f64 = 1e-14;
const FLAT_STEPS: usize = 3;
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub beta: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_newton: usize,
    /// Descending ε values solved before `epsilon`, each warm-starting the next.
    #[serde(default)]
    pub eps_schedule: Vec<f64>,
}

impl SolveConfig {
    pub fn new(beta: f64, epsilon: f64) -> Self {
        SolveConfig {
            beta,
            epsilon,
            tol: DEFAULT_TOL,
            max_newton: DEFAULT_MAX_NEWTON,
            eps_schedule: Vec::new(),
        }
    }

    /// Standard continuation for `p = beta + 2`: ε through 1e-2, 1e-4, 1e-6,
    /// ending at 0 (β ≥ 0) or 1e-8 (β < 0).
    pub fn pharmonic(p: f64) -> Self {
        let beta = p - 2.0;
        let last = if beta >= 0.0 { 0.0 } else { 1e-8 };
        SolveConfig {
            eps_schedule: vec![1e-2, 1e-4, 1e-6],
            ..Self::new(beta, last)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > -1.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!(
                "beta must exceed -1, got {}",
                self.beta
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if self.beta < 0.0 && self.epsilon == 0.0 {
            return Err(Error::Config(
                "beta < 0 needs a positive final epsilon".into(),
            ));
        }
        if !(self.tol > 0.0) || self.max_newton == 0 {
            return Err(Error::Config(
                "tol must be positive and max_newton at least 1".into(),
            ));
        }
        let mut prev = f64::INFINITY;
        for &e in self
            .eps_schedule
            .iter()
            .chain(std::iter::once(&self.epsilon))
        {
            if !(e >= 0.0 && e < prev) {
                return Err(Error::Config(format!(
                    "epsilon schedule must be strictly descending and >= 0 (at {e})"
                )));
            }
            prev = e;
        }
        Ok(())
    }

    pub fn p(&self) -> f64 {
        self.beta + 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Residual,
    FlatEnergy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub epsilon: f64,
    pub iterations: usize,
    pub residual: f64,
    pub stop: StopReason,
    /// Energy after every accepted step, starting with the initial iterate.
    pub energies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub beta: f64,
    pub stages: Vec<StageReport>,
}

impl SolveReport {
    pub fn iterations(&self) -> usize {
        self.stages.iter().map(|s| s.iterations).sum()
    }

    pub fn residual(&self) -> f64 {
        self.stages.last().map_or(0.0, |s| s.residual)
    }

    /// True when energy never increased across accepted steps of any stage.
    pub fn energy_monotone(&self) -> bool {
        self.stages
            .iter()
            .all(|s| s.energies.windows(2).all(|w| w[1] <= w[0]))
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub u: ScalarField,
    pub report: SolveReport,
}

/// Discrete energy: every cell is split into four right triangles, one per
/// corner, each carrying a quarter of the cell area and the one-sided gradient
/// along the two cell edges meeting at that corner.
struct Energy<'a> {
    grid: GridSpec,
    beta: f64,
    eps: f64,
    rhs: Option<&'a [f64]>,
    /// Unknown index of each node (`usize::MAX` on the boundary).
    unknown: Vec<usize>,
    n_unknown: usize,
}

/// (corner, x-neighbour, y-neighbour) offsets within a cell.
const CORNERS: [[(usize, usize); 3]; 4] = [
    [(0, 0), (1, 0), (0, 1)],
    [(1, 0), (0, 0), (1, 1)],
    [(0, 1), (1, 1), (0, 0)],
    [(1, 1), (0, 1), (1, 0)],
];

impl<'a> Energy<'a> {
    fn new(grid: GridSpec, beta: f64, eps: f64, rhs: Option<&'a [f64]>) -> Self {
        let mut unknown = vec![usize::MAX; grid.len()];
        let mut n = 0;
        for j in 1..grid.ny {
            for i in 1..grid.nx {
                unknown[grid.index(i, j)] = n;
                n += 1;
            }
        }
        Energy {
            grid,
            beta,
            eps,
            rhs,
            unknown,
            n_unknown: n,
        }
    }

    fn density(&self, s: f64) -> f64 {
        s.powf(0.5 * (self.beta + 2.0)) / (self.beta + 2.0)
    }

    fn corner_nodes(&self, ci: usize, cj: usize, c: usize) -> [usize; 3] {
        let g = &self.grid;
        CORNERS[c].map(|(di, dj)| g.index(ci + di, cj + dj))
    }

    fn value(&self, w: &[f64]) -> f64 {
        let g = &self.grid;
        let area = 0.25 * g.hx * g.hy;
        let mut total = 0.0;
        for cj in 0..g.ny {
            for ci in 0..g.nx {
                for c in 0..4 {
                    let [k0, ka, kb] = self.corner_nodes(ci, cj, c);
                    let gx = (w[ka] - w[k0]) / g.hx;
                    let gy = (w[kb] - w[k0]) / g.hy;
                    total += area * self.density(gx * gx + gy * gy + self.eps);
                }
            }
        }
        if let Some(f) = self.rhs {
            for (k, &u) in self.unknown.iter().enumerate() {
                if u != usize::MAX {
                    total += g.hx * g.hy * f[k] * w[k];
                }
            }
        }
        total
    }

    /// `E(w + t·dir) − E(w)` summed term by term in cancellation-free form,
    /// so that line-search decisions stay meaningful when `E` is huge.
    fn change(&self, w: &[f64], dir: &[f64], t: f64) -> f64 {
        let g = &self.grid;
        let area = 0.25 * g.hx * g.hy;
        let q = 0.5 * (self.beta + 2.0);
        let step = |k: usize| {
            let u = self.unknown[k];
            if u == usize::MAX {
                0.0
            } else {
                t * dir[u]
            }
        };
        let mut total = 0.0;
        for cj in 0..g.ny {
            for ci in 0..g.nx {
                for c in 0..4 {
                    let [k0, ka, kb] = self.corner_nodes(ci, cj, c);
                    let gx = (w[ka] - w[k0]) / g.hx;
                    let gy = (w[kb] - w[k0]) / g.hy;
                    let dx = (step(ka) - step(k0)) / g.hx;
                    let dy = (step(kb) - step(k0)) / g.hy;
                    let s = gx * gx + gy * gy + self.eps;
                    let ds = dx * (2.0 * gx + dx) + dy * (2.0 * gy + dy);
                    let df = if s > 0.0 {
                        s.powf(q) * (q * (ds / s).ln_1p()).exp_m1()
                    } else {
                        ds.max(0.0).powf(q)
                    };
                    total += area * df / (self.beta + 2.0);
                }
            }
        }
        if let Some(f) = self.rhs {
            for (k, &u) in self.unknown.iter().enumerate() {
                if u != usize::MAX {
                    total += g.hx * g.hy * f[k] * t * dir[u];
                }
            }
        }
        total
    }

    /// Gradient with respect to the unknowns and, optionally, the Hessian.
    fn derivatives(&self, w: &[f64], with_hessian: bool) -> (Vec<f64>, Option<BandedMatrix>) {
        let g = &self.grid;
        let area = 0.25 * g.hx * g.hy;
        let mut grad = vec![0.0; self.n_unknown];
        let mut hess = with_hessian.then(|| BandedMatrix::zeros(self.n_unknown, g.nx));
        // d g / d (w_corner, w_a, w_b)
        let bx = [-1.0 / g.hx, 1.0 / g.hx, 0.0];
        let by = [-1.0 / g.hy, 0.0, 1.0 / g.hy];
        let half = 0.5 * self.beta;
        for cj in 0..g.ny {
            for ci in 0..g.nx {
                for c in 0..4 {
                    let nodes = self.corner_nodes(ci, cj, c);
                    let [k0, ka, kb] = nodes;
                    let gx = (w[ka] - w[k0]) / g.hx;
                    let gy = (w[kb] - w[k0]) / g.hy;
                    let s = gx * gx + gy * gy + self.eps;
                    let phi = if s == 0.0 {
                        if self.beta == 0.0 {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        s.powf(half)
                    };
                    let fx = phi * gx;
                    let fy = phi * gy;
                    for a in 0..3 {
                        let ua = self.unknown[nodes[a]];
                        if ua != usize::MAX {
                            grad[ua] += area * (fx * bx[a] + fy * by[a]);
                        }
                    }
                    if let Some(h) = hess.as_mut() {
                        let q = if s == 0.0 {
                            0.0
                        } else {
                            self.beta * s.powf(half - 1.0)
                        };
                        let m = [
                            [phi + q * gx * gx, q * gx * gy],
                            [q * gx * gy, phi + q * gy * gy],
                        ];
                        for a in 0..3 {
                            let ua = self.unknown[nodes[a]];
                            if ua == usize::MAX {
                                continue;
                            }
                            let va = [bx[a], by[a]];
                            let ma = [
                                m[0][0] * va[0] + m[0][1] * va[1],
                                m[1][0] * va[0] + m[1][1] * va[1],
                            ];
                            for b in 0..=a {
                                let ub = self.unknown[nodes[b]];
                                if ub == usize::MAX {
                                    continue;
                                }
                                let v = area * (ma[0] * bx[b] + ma[1] * by[b]);
                                if a == b {
                                    h.add(ua, ua, v);
                                } else {
                                    h.add(ua, ub, v);
                                }
                            }
                        }
                    }
                }
            }
        }
        if let Some(f) = self.rhs {
            for (k, &u) in self.unknown.iter().enumerate() {
                if u != usize::MAX {
                    grad[u] += g.hx * g.hy * f[k];
                }
            }
        }
        (grad, hess)
    }

    fn residual(&self, grad: &[f64]) -> f64 {
        let scale = self.grid.hx * self.grid.hy;
        grad.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale
    }
}

/// Factor and solve, adding a growing diagonal shift if the matrix is not
/// numerically positive definite.
fn newton_direction(h: BandedMatrix, grad: &[f64]) -> Result<Vec<f64>> {
    let rhs: Vec<f64> = grad.iter().map(|v| -v).collect();
    if let Some(ch) = h.clone().cholesky() {
        return Ok(ch.solve(&rhs));
    }
    let scale = h.max_diagonal().max(f64::MIN_POSITIVE);
    let mut shift = 1e-12 * scale;
    for _ in 0..16 {
        let mut m = h.clone();
        m.add_diagonal(shift);
        if let Some(ch) = m.cholesky() {
            return Ok(ch.solve(&rhs));
        }
        shift *= 10.0;
    }
    Err(Error::Degenerate(
        "Newton matrix could not be regularized".into(),
    ))
}

fn run_stage(energy: &Energy, w: &mut [f64], cfg: &SolveConfig) -> Result<StageReport> {
    let mut e_cur = energy.value(w);
    let mut energies = vec![e_cur];
    let mut flat = 0;
    let mut last_residual = f64::INFINITY;
    for it in 0..cfg.max_newton {
        let (grad, hess) = energy.derivatives(w, true);
        let residual = energy.residual(&grad);
        last_residual = residual;
        if residual <= cfg.tol {
            return Ok(StageReport {
                epsilon: energy.eps,
                iterations: it,
                residual,
                stop: StopReason::Residual,
                energies,
            });
        }
        let dir = newton_direction(hess.expect("hessian requested"), &grad)?;
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        let mut t = 1.0;
        let mut accepted: Option<(f64, f64)> = None;
        let mut best: Option<(f64, f64)> = None;
        for _ in 0..MAX_HALVINGS {
            let de = energy.change(w, &dir, t);
            if de.is_finite() {
                if de <= ARMIJO * t * slope.min(0.0) {
                    accepted = Some((t, de));
                    break;
                }
                if de <= 0.0 && best.map_or(true, |(_, b)| de < b) {
                    best = Some((t, de));
                }
            }
            t *= 0.5;
        }
        let decrease = match accepted.or(best) {
            Some((t, de)) => {
                for (k, &u) in energy.unknown.iter().enumerate() {
                    if u != usize::MAX {
                        w[k] += t * dir[u];
                    }
                }
                e_cur += de;
                energies.push(e_cur);
                -de
            }
            None => 0.0,
        };
        if decrease <= FLAT_REL * e_cur.abs().max(f64::MIN_POSITIVE) {
            flat += 1;
        } else {
            flat = 0;
        }
        if flat >= FLAT_STEPS {
            let (grad, _) = energy.derivatives(w, false);
            return Ok(StageReport {
                epsilon: energy.eps,
                iterations: it + 1,
                residual: energy.residual(&grad),
                stop: StopReason::FlatEnergy,
                energies,
            });
        }
    }
    Err(Error::Convergence {
        iterations: cfg.max_newton,
        residual: last_residual,
    })
}

fn boundary_vector(grid: &GridSpec, boundary: &dyn Fn(Point) -> f64) -> Result<Vec<f64>> {
    let mut w = vec![0.0; grid.len()];
    for (i, j, x) in grid.nodes() {
        if grid.is_boundary(i, j) {
            let v = boundary(x);
            if !v.is_finite() {
                return Err(Error::Domain(format!("boundary trace not finite at {x:?}")));
            }
            w[grid.index(i, j)] = v;
        }
    }
    Ok(w)
}

/// Discrete harmonic extension of the boundary values already stored in `w`.
fn harmonic_extension(grid: &GridSpec, w: &mut [f64]) -> Result<()> {
    let energy = Energy::new(*grid, 0.0, 0.0, None);
    let (grad, hess) = energy.derivatives(w, true);
    let dir = newton_direction(hess.expect("hessian requested"), &grad)?;
    for (k, &u) in energy.unknown.iter().enumerate() {
        if u != usize::MAX {
            w[k] += dir[u];
        }
    }
    Ok(())
}

/// Full solver: optional warm start `init` (its boundary values are replaced
/// by the trace), otherwise the discrete harmonic extension of the trace.
pub fn solve_from(
    grid: &GridSpec,
    cfg: &SolveConfig,
    boundary: &dyn Fn(Point) -> f64,
    rhs: Option<&ScalarField>,
    init: Option<&ScalarField>,
) -> Result<SolveOutput> {
    cfg.validate()?;
    grid.validate()?;
    if let Some(f) = rhs {
        if f.grid != *grid {
            return Err(Error::Config(
                "right-hand side lives on a different grid".into(),
            ));
        }
    }
    let mut w = boundary_vector(grid, boundary)?;
    match init {
        Some(u0) => {
            if u0.grid != *grid {
                return Err(Error::Config(
                    "initial guess lives on a different grid".into(),
                ));
            }
            for (i, j, _) in grid.nodes() {
                if !grid.is_boundary(i, j) {
                    let k = grid.index(i, j);
                    w[k] = u0.values[k];
                }
            }
        }
        None => harmonic_extension(grid, &mut w)?,
    }
    let rhs_vals = rhs.map(|f| f.values.as_slice());
    let mut stages = Vec::new();
    for &eps in cfg.eps_schedule.iter().chain(std::iter::once(&cfg.epsilon)) {
        let energy = Energy::new(*grid, cfg.beta, eps, rhs_vals);
        stages.push(run_stage(&energy, &mut w, cfg)?);
    }
    Ok(SolveOutput {
        u: ScalarField::new(*grid, w)?,
        report: SolveReport {
            beta: cfg.beta,
            stages,
        },
    })
}

/// Solve `div((|Dw|²+ε)^{β/2} Dw) = rhs` with `w = boundary` on the grid boundary.
pub fn solve_regularized(
    grid: &GridSpec,
    cfg: &SolveConfig,
    boundary: &dyn Fn(Point) -> f64,
    rhs: Option<&ScalarField>,
) -> Result<SolveOutput> {
    solve_from(grid, cfg, boundary, rhs, None)
}

pub fn solve_pharmonic(
    grid: &GridSpec,
    p: f64,
    boundary: &dyn Fn(Point) -> f64,
) -> Result<SolveOutput> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Config(format!("p must exceed 1, got {p}")));
    }
    solve_regularized(grid, &SolveConfig::pharmonic(p), boundary, None)
}

/// p-continuation: solves for every p of the ascending schedule, each
/// warm-started from the previous solution.
pub fn infinity_approx(
    grid: &GridSpec,
    boundary: &dyn Fn(Point) -> f64,
    p_schedule: &[f64],
) -> Result<Vec<SolveOutput>> {
    if p_schedule.is_empty() {
        return Err(Error::Config("p schedule is empty".into()));
    }
    let mut prev = 2.0;
    for &p in p_schedule {
        if !(p > prev && p.is_finite()) {
            return Err(Error::Config(format!(
                "p schedule must be ascending with every p > 2 (at {p})"
            )));
        }
        prev = p;
    }
    let mut out: Vec<SolveOutput> = Vec::with_capacity(p_schedule.len());
    for &p in p_schedule {
        let init = out.last().map(|s| &s.u);
        out.push(solve_from(
            grid,
            &SolveConfig::pharmonic(p),
            boundary,
            None,
            init,
        )?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::AnalyticSolution;
    use crate::field::PlanarFunction;

    fn affine(x: Point) -> f64 {
        1.0 + 2.0 * x[0] - x[1]
    }

    #[test]
    fn config_validation() {
        assert!(matches!(
            SolveConfig::new(-1.0, 0.1).validate(),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            SolveConfig::new(-0.5, 0.0).validate(),
            Err(Error::Config(_))
        ));
        let mut c = SolveConfig::new(1.0, 0.0);
        c.eps_schedule = vec![1e-4, 1e-2];
        assert!(c.validate().is_err());
        assert!(SolveConfig::pharmonic(1.5).validate().is_ok());
    }

    #[test]
    fn affine_data_reproduced() {
        let g = GridSpec::square(16, -1.0, 1.0).unwrap();
        for (beta, eps) in [(0.0, 0.0), (2.0, 0.0), (-0.5, 0.1), (1.0, 1e-3)] {
            let out = solve_regularized(&g, &SolveConfig::new(beta, eps), &affine, None).unwrap();
            let exact = ScalarField::sample(g, affine).unwrap();
            assert!(out.u.max_abs_diff(&exact) < 1e-10, "beta {beta}");
        }
    }

    #[test]
    fn laplace_reproduces_harmonic_quadratics() {
        let g = GridSpec::square(16, -1.0, 1.0).unwrap();
        for f in [|x: Point| x[0] * x[1], |x: Point| x[0] * x[0] - x[1] * x[1]] {
            let out = solve_pharmonic(&g, 2.0, &f).unwrap();
            let exact = ScalarField::sample(g, f).unwrap();
            assert!(out.u.max_abs_diff(&exact) < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_difference_of_energy() {
        let g = GridSpec::square(8, 0.0, 1.0).unwrap();
        let rhs: Vec<f64> = (0..g.len()).map(|k| (k as f64 * 0.37).sin()).collect();
        let e = Energy::new(g, 0.7, 0.05, Some(&rhs));
        let w: Vec<f64> = (0..g.len()).map(|k| (k as f64 * 0.11).cos()).collect();
        let (grad, hess) = e.derivatives(&w, true);
        let hess = hess.unwrap();
        let k = g.index(3, 4);
        let u = e.unknown[k];
        let h = 1e-6;
        let mut wp = w.clone();
        wp[k] += h;
        let mut wm = w.clone();
        wm[k] -= h;
        let fd = (e.value(&wp) - e.value(&wm)) / (2.0 * h);
        assert!((fd - grad[u]).abs() < 1e-7 * (1.0 + fd.abs()));
        let (gp, _) = e.derivatives(&wp, false);
        let (gm, _) = e.derivatives(&wm, false);
        let kn = g.index(4, 5);
        let un = e.unknown[kn];
        let fdh = (gp[un] - gm[un]) / (2.0 * h);
        assert!((fdh - hess.get(u, un)).abs() < 1e-6);
    }

    #[test]
    fn maximum_principle_and_monotone_energy() {
        let g = GridSpec::square(24, 1.0, 2.0).unwrap();
        let aron = AnalyticSolution::Aronsson;
        let out = solve_pharmonic(&g, 10.0, &|x| aron.value(x)).unwrap();
        assert!(out.report.energy_monotone());
        let mut bmax = f64::NEG_INFINITY;
        let mut bmin = f64::INFINITY;
        for (i, j, _) in g.nodes() {
            if g.is_boundary(i, j) {
                let v = out.u.at(i, j);
                bmax = bmax.max(v);
                bmin = bmin.min(v);
            }
        }
        for v in &out.u.values {
            assert!(*v <= bmax + 1e-12 && *v >= bmin - 1e-12);
        }
    }

    #[test]
    fn epsilon_zero_is_stable() {
        let g = GridSpec::square(16, 1.0, 2.0).unwrap();
        let aron = AnalyticSolution::Aronsson;
        let b = |x: Point| aron.value(x);
        let zero = solve_pharmonic(&g, 4.0, &b).unwrap();
        let mut cfg = SolveConfig::pharmonic(4.0);
        cfg.epsilon = 1e-8;
        let small = solve_regularized(&g, &cfg, &b, None).unwrap();
        assert!(zero.u.max_abs_diff(&small.u) < 1e-6);
    }

    #[test]
    fn p_schedule_validated() {
        let g = GridSpec::square(8, 0.0, 1.0).unwrap();
        assert!(infinity_approx(&g, &affine, &[4.0, 3.0]).is_err());
        assert!(infinity_approx(&g, &affine, &[2.0]).is_err());
        let all = infinity_approx(&g, &affine, &[4.0, 8.0]).unwrap();
        let exact = ScalarField::sample(g, affine).unwrap();
        for s in &all {
            assert!(s.u.max_abs_diff(&exact) < 1e-10);
        }
    }
}

//! Explicit extremal quasiregular maps: `H(ξ) = (ξ/|ξ| + ε|ξ|³/ξ³)|ξ|^{1/d}`,
//! its inverse `f`, the deformation `g = |f|^β f` through `G = g⁻¹`, their
//! distortion, and the dyadic-annulus energy of `log|f|`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI, TAU};

use crate::error::{Error, Result};
use crate::quadrature::gauss_interval;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalParams {
    pub p: f64,
    pub d: f64,
    pub eps_map: f64,
}

impl ExtremalParams {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Config(format!("p must exceed 1, got {p}")));
        }
        let inv_d = 0.5 * (-p + (16.0 * (p - 1.0) + (p - 2.0) * (p - 2.0)).sqrt());
        let d = 1.0 / inv_d;
        Ok(ExtremalParams {
            p,
            d,
            eps_map: (1.0 - d) / (1.0 + 3.0 * d),
        })
    }

    /// The homogeneity degree `1/d` of `H`.
    pub fn exponent(&self) -> f64 {
        1.0 / self.d
    }
}

/// `K(p, β) = max{(p−1)/(β+1), (β+1)/(p−1), β+1, 1/(β+1)}`.
pub fn k_constant(p: f64, beta: f64) -> f64 {
    let b1 = beta + 1.0;
    [(p - 1.0) / b1, b1 / (p - 1.0), b1, 1.0 / b1]
        .into_iter()
        .fold(f64::MIN, f64::max)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > -1.0 && beta.is_finite()) {
        return Err(Error::Config(format!("beta must exceed -1, got {beta}")));
    }
    Ok(())
}

/// `(e^{iθ} + ε e^{−3iθ}) r^a` at `ξ = r e^{iθ}`.
fn power_map(a: f64, eps: f64, xi: Complex64) -> Complex64 {
    let r = xi.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let u = xi / r;
    (u + eps * u.conj().powi(3)) * r.powf(a)
}

/// `∂_ξ` of [`power_map`]: `½ r^{a−1}[(a+1) + (a−3) ε e^{−4iθ}]`.
fn power_map_dxi(a: f64, eps: f64, xi: Complex64) -> Complex64 {
    let r = xi.norm();
    let u = xi / r;
    0.5 * r.powf(a - 1.0) * ((a + 1.0) + (a - 3.0) * eps * u.conj().powi(4))
}

/// `∂_ξ̄` of [`power_map`] by direct differentiation:
/// `½ r^{a−1}[(a−1) e^{2iθ} + (a+3) ε e^{−2iθ}]`.
#[cfg(test)]
fn power_map_dxibar(a: f64, eps: f64, xi: Complex64) -> Complex64 {
    let r = xi.norm();
    let u = xi / r;
    0.5 * r.powf(a - 1.0) * ((a - 1.0) * u * u + (a + 3.0) * eps * u.conj().powi(2))
}

pub fn map_h(params: &ExtremalParams, xi: Complex64) -> Complex64 {
    power_map(params.exponent(), params.eps_map, xi)
}

/// `(H_ξ, H_ξ̄)`; `H_ξ̄ = (½ − 1/p)[(ξ/ξ̄)H_ξ + (ξ̄/ξ) conj(H_ξ)]`.
pub fn derivatives_h(params: &ExtremalParams, xi: Complex64) -> Result<(Complex64, Complex64)> {
    if xi.norm() == 0.0 {
        return Err(Error::Domain("H is not differentiable at 0".into()));
    }
    let h_xi = power_map_dxi(params.exponent(), params.eps_map, xi);
    let rot = xi / xi.conj();
    let h_xibar = (0.5 - 1.0 / params.p) * (rot * h_xi + rot.conj() * h_xi.conj());
    Ok((h_xi, h_xibar))
}

/// Angle map `θ ↦ θ + arg(1 + ε e^{−4iθ})` and its derivative; strictly
/// increasing for `|ε| < 1/3`.
fn angle_map(eps: f64, theta: f64) -> (f64, f64) {
    let w = eps * Complex64::from_polar(1.0, -4.0 * theta);
    let one_w = 1.0 + w;
    (theta + one_w.arg(), 1.0 - 4.0 * (w / one_w).re)
}

const ANGLE_TOL: f64 = 4e-16;
const MAX_ANGLE_ITERS: usize = 200;

/// `θ` with `angle_map(θ) = phi`, by safeguarded Newton.
fn solve_angle(eps: f64, phi: f64) -> Result<f64> {
    if eps == 0.0 {
        return Ok(phi);
    }
    let (mut lo, mut hi) = (phi - 0.6, phi + 0.6);
    let mut theta = phi;
    for it in 0..MAX_ANGLE_ITERS {
        let (val, slope) = angle_map(eps, theta);
        let res = val - phi;
        if res.abs() <= ANGLE_TOL * (1.0 + phi.abs()) {
            return Ok(theta);
        }
        if res > 0.0 {
            hi = theta;
        } else {
            lo = theta;
        }
        let step = theta - res / slope;
        theta = if step > lo && step < hi {
            step
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * (1.0 + phi.abs()) {
            return Ok(theta);
        }
        if it + 1 == MAX_ANGLE_ITERS {
            return Err(Error::Convergence {
                iterations: MAX_ANGLE_ITERS,
                residual: res.abs(),
            });
        }
    }
    unreachable!()
}

/// The inverse `f = H⁻¹`, using `f(z) = |z|^d f(z/|z|)`.
pub fn inverse_f(params: &ExtremalParams, z: Complex64) -> Result<Complex64> {
    let rz = z.norm();
    if rz == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let eps = params.eps_map;
    let theta = solve_angle(eps, z.arg())?;
    let stretch = (1.0 + eps * Complex64::from_polar(1.0, -4.0 * theta)).norm();
    let xi = Complex64::from_polar((rz / stretch).powf(params.d), theta);
    let residual = (map_h(params, xi) - z).norm();
    if residual > 1e-12 * (1.0 + rz) {
        return Err(Error::Convergence {
            iterations: MAX_ANGLE_ITERS,
            residual,
        });
    }
    Ok(xi)
}

/// `(f, f_z, f_z̄)` at `z ≠ 0` from the derivatives of `H` at `f(z)`.
pub fn inverse_derivatives(
    params: &ExtremalParams,
    z: Complex64,
) -> Result<(Complex64, Complex64, Complex64)> {
    let xi = inverse_f(params, z)?;
    let (h_xi, h_xibar) = derivatives_h(params, xi)?;
    let jac = h_xi.norm_sqr() - h_xibar.norm_sqr();
    Ok((xi, h_xi.conj() / jac, -h_xibar / jac))
}

/// `(G_ξ, G_ξ̄)` for `G = g⁻¹`, `g = |f|^β f`. `G` has the same shape as `H`
/// with exponent `1/((β+1)d)`; `G_ξ̄` comes from the Beltrami-type relation
/// `G_ξ̄ = ½(a−b)(ξ/ξ̄)G_ξ + ½(a+b)(ξ̄/ξ) conj(G_ξ)` with
/// `a = (p−2−β)/(p+β)`, `b = β/(β+2)`.
pub fn derivatives_g(
    params: &ExtremalParams,
    beta: f64,
    xi: Complex64,
) -> Result<(Complex64, Complex64)> {
    check_beta(beta)?;
    if xi.norm() == 0.0 {
        return Err(Error::Domain("G is not differentiable at 0".into()));
    }
    let s = params.exponent() / (beta + 1.0);
    let g_xi = power_map_dxi(s, params.eps_map, xi);
    let (a, b) = beltrami_coefficients(params.p, beta);
    let rot = xi / xi.conj();
    let g_xibar = 0.5 * (a - b) * rot * g_xi + 0.5 * (a + b) * rot.conj() * g_xi.conj();
    Ok((g_xi, g_xibar))
}

fn beltrami_coefficients(p: f64, beta: f64) -> (f64, f64) {
    ((p - 2.0 - beta) / (p + beta), beta / (beta + 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ray {
    /// `ξ ∈ ℝ`
    RealAxis,
    /// `ξ ∈ ℝ − iℝ`, i.e. `arg ξ = −π/4`.
    Diagonal,
}

/// Polar sample of the annulus `r0 ≤ |ξ| ≤ r1` plus both critical rays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSample {
    pub angular: usize,
    pub radial: usize,
    pub r0: f64,
    pub r1: f64,
}

impl Default for AnnulusSample {
    fn default() -> Self {
        AnnulusSample {
            angular: 512,
            radial: 64,
            r0: 0.5,
            r1: 2.0,
        }
    }
}

impl AnnulusSample {
    fn points(&self) -> Result<Vec<Complex64>> {
        if self.angular == 0 || self.radial < 2 || !(self.r0 > 0.0 && self.r1 > self.r0) {
            return Err(Error::Config(
                "annulus sample needs angular >= 1, radial >= 2, 0 < r0 < r1".into(),
            ));
        }
        let mut thetas: Vec<f64> = (0..self.angular)
            .map(|k| TAU * k as f64 / self.angular as f64)
            .collect();
        thetas.extend([0.0, PI, -FRAC_PI_4, 3.0 * FRAC_PI_4]);
        let mut out = Vec::with_capacity(thetas.len() * self.radial);
        for i in 0..self.radial {
            let r = self.r0 + (self.r1 - self.r0) * i as f64 / (self.radial - 1) as f64;
            out.extend(thetas.iter().map(|&t| Complex64::from_polar(r, t)));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub p: f64,
    pub beta: f64,
    #[serde(rename = "K_theory")]
    pub k_theory: f64,
    pub target_ratio: f64,
    pub ratio_sup: f64,
    /// Sample `[re, im]` attaining `ratio_sup`.
    pub location: [f64; 2],
    pub expected_ray: Ray,
    /// Largest ratio found on the expected ray.
    pub ray_ratio: f64,
    pub sample_count: usize,
}

impl DistortionReport {
    pub fn matches_target(&self, tol: f64) -> bool {
        (self.ratio_sup - self.target_ratio).abs() <= tol
            && (self.ray_ratio - self.ratio_sup).abs() <= tol
    }
}

fn on_ray(xi: Complex64, ray: Ray) -> bool {
    let t = xi.arg();
    let tol = 1e-12;
    match ray {
        Ray::RealAxis => t.abs() <= tol || (t.abs() - PI).abs() <= tol,
        Ray::Diagonal => (t + FRAC_PI_4).abs() <= tol || (t - 3.0 * FRAC_PI_4).abs() <= tol,
    }
}

/// Sampled `sup |G_ξ̄|/|G_ξ|`, which equals `sup |g_z̄|/|g_z|`.
pub fn distortion_sup(
    params: &ExtremalParams,
    beta: f64,
    sample: &AnnulusSample,
) -> Result<DistortionReport> {
    check_beta(beta)?;
    let k = k_constant(params.p, beta);
    let (a, b) = beltrami_coefficients(params.p, beta);
    let expected_ray = if a.abs() >= b.abs() {
        Ray::RealAxis
    } else {
        Ray::Diagonal
    };
    let pts = sample.points()?;
    let mut best = (0.0f64, Complex64::new(sample.r0, 0.0));
    let mut ray_ratio = 0.0f64;
    for &xi in &pts {
        let (gx, gxb) = derivatives_g(params, beta, xi)?;
        let ratio = gxb.norm() / gx.norm();
        if ratio > best.0 {
            best = (ratio, xi);
        }
        if on_ray(xi, expected_ray) {
            ray_ratio = ray_ratio.max(ratio);
        }
    }
    Ok(DistortionReport {
        p: params.p,
        beta,
        k_theory: k,
        target_ratio: (k - 1.0) / (k + 1.0),
        ratio_sup: best.0,
        location: [best.1.re, best.1.im],
        expected_ray,
        ray_ratio,
        sample_count: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sharpness {
    /// Sampled sup of `2(|g_z|² + |g_z̄|²)/(|g_z|² − |g_z̄|²)`.
    pub lhs_sup: f64,
    /// `K + 1/K`
    pub rhs: f64,
    /// `min (rhs − ratio)` over the samples; nonnegative up to rounding.
    pub min_slack: f64,
}

pub fn sharpness_constants(
    params: &ExtremalParams,
    beta: f64,
    sample: &AnnulusSample,
) -> Result<Sharpness> {
    check_beta(beta)?;
    let k = k_constant(params.p, beta);
    let rhs = k + 1.0 / k;
    let mut lhs_sup = f64::MIN;
    for xi in sample.points()? {
        let (gx, gxb) = derivatives_g(params, beta, xi)?;
        let (a2, b2) = (gx.norm_sqr(), gxb.norm_sqr());
        lhs_sup = lhs_sup.max(2.0 * (a2 + b2) / (a2 - b2));
    }
    Ok(Sharpness {
        lhs_sup,
        rhs,
        min_slack: rhs - lhs_sup,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusEnergy {
    pub k: i32,
    pub inner: f64,
    pub outer: f64,
    /// `∫ |D log|f||²` over `inner < |z| < outer`.
    pub energy: f64,
}

/// `|D log|f||² = 4|∂_z log|f||²` at `z ≠ 0`.
pub fn log_gradient_density(params: &ExtremalParams, z: Complex64) -> Result<f64> {
    let (f, fz, fzb) = inverse_derivatives(params, z)?;
    let phi_z = 0.5 * (fz / f + fzb.conj() / f.conj());
    Ok(4.0 * phi_z.norm_sqr())
}

fn annulus_quadrature(
    params: &ExtremalParams,
    inner: f64,
    outer: f64,
    radial: usize,
    angular: usize,
) -> Result<f64> {
    let dt = TAU / angular as f64;
    let mut total = 0.0;
    for (r, wr) in gauss_interval(radial, inner, outer) {
        let mut ring = 0.0;
        for j in 0..angular {
            let t = (j as f64 + 0.5) * dt;
            ring += log_gradient_density(params, Complex64::from_polar(r, t))?;
        }
        total += wr * r * ring * dt;
    }
    Ok(total)
}

const ENERGY_TOL: f64 = 1e-10;
const MAX_REFINEMENTS: usize = 8;

/// Energies on the dyadic annuli `2^{−k−1} < |z| < 2^{−k}`, refining the
/// polar rule until two successive levels agree to 1e−10 relative.
pub fn annulus_log_energy(params: &ExtremalParams, ks: &[i32]) -> Result<Vec<AnnulusEnergy>> {
    ks.iter()
        .map(|&k| {
            let outer = 2f64.powi(-k);
            let inner = 0.5 * outer;
            let (mut radial, mut angular) = (8, 64);
            let mut prev = annulus_quadrature(params, inner, outer, radial, angular)?;
            for _ in 0..MAX_REFINEMENTS {
                radial *= 2;
                angular *= 2;
                let next = annulus_quadrature(params, inner, outer, radial, angular)?;
                if (next - prev).abs() <= ENERGY_TOL * next.abs().max(f64::MIN_POSITIVE) {
                    return Ok(AnnulusEnergy {
                        k,
                        inner,
                        outer,
                        energy: next,
                    });
                }
                prev = next;
            }
            Err(Error::Precision(format!(
                "annulus energy for k = {k} did not settle after {MAX_REFINEMENTS} refinements"
            )))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::LN_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Wirtinger derivatives by central differences.
    fn fd_wirtinger(f: impl Fn(Complex64) -> Complex64, xi: Complex64) -> (Complex64, Complex64) {
        let h = 1e-6;
        let fx = (f(xi + h) - f(xi - h)) / (2.0 * h);
        let fy = (f(xi + c(0.0, h)) - f(xi - c(0.0, h))) / (2.0 * h);
        let i = c(0.0, 1.0);
        (0.5 * (fx - i * fy), 0.5 * (fx + i * fy))
    }

    fn random_annulus(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Complex64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(-PI..PI)))
            .collect()
    }

    #[test]
    fn constants() {
        let q = ExtremalParams::new(2.0).unwrap();
        assert_eq!((q.d, q.eps_map), (1.0, 0.0));
        let q = ExtremalParams::new(10.0).unwrap();
        assert!((q.d - 0.45226).abs() < 1e-5 && (q.eps_map - 0.23241).abs() < 1e-5);
        assert!(ExtremalParams::new(1.0).is_err());
        assert_eq!(k_constant(3.0, 1.0), 2.0);
        assert_eq!(k_constant(10.0, 0.0), 9.0);
    }

    #[test]
    fn h_is_identity_at_p_two() {
        let q = ExtremalParams::new(2.0).unwrap();
        for xi in random_annulus(50, 1) {
            assert!((map_h(&q, xi) - xi).norm() < 1e-15);
            assert!((inverse_f(&q, xi).unwrap() - xi).norm() < 1e-15);
            assert_eq!(derivatives_h(&q, xi).unwrap().1, c(0.0, 0.0));
        }
        assert_eq!(map_h(&q, c(0.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn h_at_one_and_real_axis_ratio() {
        for p in [1.5, 3.0, 10.0] {
            let q = ExtremalParams::new(p).unwrap();
            assert!((map_h(&q, c(1.0, 0.0)) - (1.0 + q.eps_map)).norm() < 1e-15);
            let (a, b) = derivatives_h(&q, c(1.7, 0.0)).unwrap();
            assert!((b.norm() / a.norm() - (p - 2.0).abs() / p).abs() < 1e-14);
        }
        let q = ExtremalParams::new(10.0).unwrap();
        let (a, b) = derivatives_h(&q, Complex64::from_polar(1.0, PI / 7.0)).unwrap();
        assert!(b.norm() / a.norm() <= 0.8);
        assert!(matches!(
            derivatives_h(&q, c(0.0, 0.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn h_derivatives_match_direct_and_finite_differences() {
        for p in [1.3, 4.0, 10.0] {
            let q = ExtremalParams::new(p).unwrap();
            for xi in random_annulus(40, 2) {
                let (a, b) = derivatives_h(&q, xi).unwrap();
                let db = power_map_dxibar(q.exponent(), q.eps_map, xi);
                assert!((b - db).norm() < 1e-13 * (1.0 + db.norm()));
                let (fa, fb) = fd_wirtinger(|w| map_h(&q, w), xi);
                assert!((a - fa).norm() < 1e-7 && (b - fb).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn g_relation_matches_direct_differentiation() {
        for (p, beta) in [
            (3.0, 1.0),
            (10.0, 0.0),
            (1.5, -0.5),
            (10.0, 2.0),
            (4.0, -0.7),
        ] {
            let q = ExtremalParams::new(p).unwrap();
            let s = q.exponent() / (beta + 1.0);
            for xi in random_annulus(40, 3) {
                let (gx, gxb) = derivatives_g(&q, beta, xi).unwrap();
                let direct = power_map_dxibar(s, q.eps_map, xi);
                assert!(
                    (gxb - direct).norm() < 1e-13 * (1.0 + direct.norm()),
                    "{p} {beta}"
                );
                let (fa, fb) = fd_wirtinger(|w| power_map(s, q.eps_map, w), xi);
                assert!((gx - fa).norm() < 1e-7 && (gxb - fb).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn inverse_round_trip_and_homogeneity() {
        for p in [1.5, 3.0, 10.0, 50.0] {
            let q = ExtremalParams::new(p).unwrap();
            for xi in random_annulus(1000, 4) {
                let back = inverse_f(&q, map_h(&q, xi)).unwrap();
                assert!((back - xi).norm() < 1e-10 * xi.norm());
            }
            for z in random_annulus(50, 5) {
                let f = inverse_f(&q, z).unwrap();
                assert!((map_h(&q, f) - z).norm() < 1e-12 * (1.0 + z.norm()));
                for t in [0.5, 2.0, 10.0] {
                    let ft = inverse_f(&q, t * z).unwrap();
                    assert!((ft - t.powf(q.d) * f).norm() < 1e-10 * ft.norm());
                    let ht = map_h(&q, t * z);
                    assert!((ht - t.powf(q.exponent()) * map_h(&q, z)).norm() < 1e-10 * ht.norm());
                }
            }
        }
    }

    #[test]
    fn inverse_derivatives_match_finite_differences() {
        let q = ExtremalParams::new(4.0).unwrap();
        for z in random_annulus(30, 6) {
            let (_, fz, fzb) = inverse_derivatives(&q, z).unwrap();
            let (a, b) = fd_wirtinger(|w| inverse_f(&q, w).unwrap(), z);
            assert!((fz - a).norm() < 1e-6 && (fzb - b).norm() < 1e-6);
        }
    }

    #[test]
    fn distortion_cases() {
        let s = AnnulusSample::default();
        for (p, beta) in [
            (2.0, 0.0),
            (3.0, 1.0),
            (10.0, 0.0),
            (1.5, -0.5),
            (10.0, 2.0),
        ] {
            let q = ExtremalParams::new(p).unwrap();
            let r = distortion_sup(&q, beta, &s).unwrap();
            assert!(r.matches_target(1e-8), "{r:?}");
            let sh = sharpness_constants(&q, beta, &s).unwrap();
            assert!(
                (sh.lhs_sup - sh.rhs).abs() < 1e-6 && sh.min_slack >= -1e-9,
                "{sh:?}"
            );
        }
        let q = ExtremalParams::new(2.0).unwrap();
        assert_eq!(distortion_sup(&q, 0.0, &s).unwrap().ratio_sup, 0.0);
        let r = distortion_sup(&ExtremalParams::new(3.0).unwrap(), 1.0, &s).unwrap();
        assert_eq!(r.expected_ray, Ray::Diagonal);
    }

    #[test]
    fn annulus_energies_are_scale_invariant() {
        let q = ExtremalParams::new(2.0).unwrap();
        for e in annulus_log_energy(&q, &[0, 3]).unwrap() {
            // log|z| carries 2π ln 2 on every dyadic annulus
            assert!((e.energy - TAU * LN_2).abs() < 1e-9);
        }
        for p in [1.5, 4.0] {
            let q = ExtremalParams::new(p).unwrap();
            let es = annulus_log_energy(&q, &[0, 2, 5]).unwrap();
            for e in &es {
                assert!((e.energy - es[0].energy).abs() <= 1e-9 * es[0].energy);
            }
        }
    }

    #[test]
    fn log_density_matches_finite_differences() {
        let q = ExtremalParams::new(4.0).unwrap();
        let logf = |z: Complex64| inverse_f(&q, z).unwrap().norm().ln();
        for z in random_annulus(20, 8) {
            let h = 1e-6;
            let gx = (logf(z + h) - logf(z - h)) / (2.0 * h);
            let gy = (logf(z + c(0.0, h)) - logf(z - c(0.0, h))) / (2.0 * h);
            let want = gx * gx + gy * gy;
            assert!((log_gradient_density(&q, z).unwrap() - want).abs() < 1e-6 * (1.0 + want));
        }
    }

    proptest! {
        #[test]
        fn distortion_never_exceeds_target(p in 1.05f64..40.0, beta in -0.95f64..4.0, r in 0.1f64..10.0, t in -PI..PI) {
            let q = ExtremalParams::new(p).unwrap();
            let k = k_constant(p, beta);
            let (gx, gxb) = derivatives_g(&q, beta, Complex64::from_polar(r, t)).unwrap();
            prop_assert!(gxb.norm() / gx.norm() <= (k - 1.0) / (k + 1.0) + 1e-12);
        }

        #[test]
        fn round_trip_any_p(p in 1.05f64..60.0, r in 0.01f64..100.0, t in -PI..PI) {
            let q = ExtremalParams::new(p).unwrap();
            let xi = Complex64::from_polar(r, t);
            let back = inverse_f(&q, map_h(&q, xi)).unwrap();
            prop_assert!((back - xi).norm() <= 1e-10 * r);
        }
    }
}

//! Gauss–Legendre and polar (disk) quadrature rules.

use std::f64::consts::PI;

use crate::field::Point;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[k] = -x;
        nodes[n - 1 - k] = x;
        weights[k] = w;
        weights[n - 1 - k] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_interval(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| (a + half * (xi + 1.0), half * wi))
        .collect()
}

/// Polar product rule on a disk: Gauss–Legendre in the radius (optionally
/// split at interior radii), periodic trapezoid in the angle.
#[derive(Debug, Clone)]
pub struct PolarRule {
    pub radial: usize,
    pub angular: usize,
}

impl Default for PolarRule {
    fn default() -> Self {
        PolarRule {
            radial: 48,
            angular: 1024,
        }
    }
}

impl PolarRule {
    pub fn new(radial: usize, angular: usize) -> Self {
        PolarRule { radial, angular }
    }

    /// Nodes and weights on `B(center, radius)`; `breaks` are relative radii
    /// in `(0, 1)` where the radial rule is split.
    pub fn disk(&self, center: Point, radius: f64, breaks: &[f64]) -> Vec<(Point, f64)> {
        let mut edges = vec![0.0];
        edges.extend(breaks.iter().copied().filter(|b| *b > 0.0 && *b < 1.0));
        edges.push(1.0);
        let dth = 2.0 * PI / self.angular as f64;
        let mut out = Vec::with_capacity(self.radial * (edges.len() - 1) * self.angular);
        for seg in edges.windows(2) {
            for (t, wt) in gauss_interval(self.radial, seg[0], seg[1]) {
                let rho = t * radius;
                let w = wt * radius * rho * dth;
                for k in 0..self.angular {
                    let th = (k as f64 + 0.5) * dth;
                    out.push(([center[0] + rho * th.cos(), center[1] + rho * th.sin()], w));
                }
            }
        }
        out
    }

    /// Area-normalised average of `f` over the disk.
    pub fn average(&self, center: Point, radius: f64, f: impl Fn(Point) -> f64) -> f64 {
        let area = PI * radius * radius;
        self.disk(center, radius, &[])
            .iter()
            .map(|(x, w)| w * f(*x))
            .sum::<f64>()
            / area
    }
}

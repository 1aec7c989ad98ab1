//! Compactly supported radial test functions with closed-form derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpProfile {
    /// `(1 - |x-c|²/r²)^order` on the ball.
    Polynomial,
    /// Equal to 1 on `B(c, r/2)`, C³ septic smoothstep decay to 0 at `r`.
    Plateau,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestBump {
    pub center: Point,
    pub radius: f64,
    pub order: u32,
    pub profile: BumpProfile,
}

/// Value and closed-form derivatives of a bump at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hessian: [[f64; 2]; 2],
    pub laplacian: f64,
}

impl BumpJet {
    const ZERO: BumpJet = BumpJet {
        value: 0.0,
        grad: [0.0; 2],
        hessian: [[0.0; 2]; 2],
        laplacian: 0.0,
    };
}

pub const DEFAULT_ORDER: u32 = 4;

impl TestBump {
    /// Polynomial bump of the default order 4 (C³).
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        Self::with_order(center, radius, DEFAULT_ORDER)
    }

    pub fn with_order(center: Point, radius: f64, order: u32) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Config(format!(
                "bump radius must be positive, got {radius}"
            )));
        }
        if order < 3 {
            return Err(Error::Config(format!(
                "bump order must be at least 3, got {order}"
            )));
        }
        Ok(TestBump {
            center,
            radius,
            order,
            profile: BumpProfile::Polynomial,
        })
    }

    /// Plateau bump: 1 on `B(center, radius/2)`, supported in `B(center, radius)`.
    pub fn plateau(center: Point, radius: f64) -> Result<Self> {
        let mut b = Self::with_order(center, radius, 3)?;
        b.profile = BumpProfile::Plateau;
        Ok(b)
    }

    /// Radius of the set where the bump is identically 1 (0 for polynomial bumps).
    pub fn plateau_radius(&self) -> f64 {
        match self.profile {
            BumpProfile::Polynomial => 0.0,
            BumpProfile::Plateau => 0.5 * self.radius,
        }
    }

    pub fn value(&self, x: Point) -> f64 {
        self.derivatives(x).value
    }

    /// Closed-form value, gradient, Hessian and Laplacian.
    pub fn derivatives(&self, x: Point) -> BumpJet {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        let s = d[0] * d[0] + d[1] * d[1];
        let r2 = self.radius * self.radius;
        if s >= r2 {
            return BumpJet::ZERO;
        }
        match self.profile {
            BumpProfile::Polynomial => {
                // ψ = φ(s) with s = |x-c|²
                let n = self.order as i32;
                let q = 1.0 - s / r2;
                let phi = q.powi(n);
                let dphi = -(n as f64) / r2 * q.powi(n - 1);
                let ddphi = (n * (n - 1)) as f64 / (r2 * r2) * q.powi(n - 2);
                let off = 4.0 * ddphi * d[0] * d[1];
                let hxx = 4.0 * ddphi * d[0] * d[0] + 2.0 * dphi;
                let hyy = 4.0 * ddphi * d[1] * d[1] + 2.0 * dphi;
                BumpJet {
                    value: phi,
                    grad: [2.0 * dphi * d[0], 2.0 * dphi * d[1]],
                    hessian: [[hxx, off], [off, hyy]],
                    laplacian: hxx + hyy,
                }
            }
            BumpProfile::Plateau => {
                let rho = s.sqrt();
                let inner = 0.5 * self.radius;
                if rho <= inner {
                    return BumpJet {
                        value: 1.0,
                        ..BumpJet::ZERO
                    };
                }
                let w = self.radius - inner;
                let t = (rho - inner) / w;
                let omt = 1.0 - t;
                let step = t.powi(4) * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t.powi(3));
                let dstep = 140.0 * (t * omt).powi(3);
                let ddstep = 420.0 * (t * omt).powi(2) * (1.0 - 2.0 * t);
                let dpsi = -dstep / w;
                let ddpsi = -ddstep / (w * w);
                let n = [d[0] / rho, d[1] / rho];
                let tang = dpsi / rho;
                let off = (ddpsi - tang) * n[0] * n[1];
                let hxx = ddpsi * n[0] * n[0] + tang * (1.0 - n[0] * n[0]);
                let hyy = ddpsi * n[1] * n[1] + tang * (1.0 - n[1] * n[1]);
                BumpJet {
                    value: 1.0 - step,
                    grad: [dpsi * n[0], dpsi * n[1]],
                    hessian: [[hxx, off], [off, hyy]],
                    laplacian: hxx + hyy,
                }
            }
        }
    }
}

/// Free-function form of [`TestBump::derivatives`].
pub fn bump_derivatives(psi: &TestBump, x: Point) -> BumpJet {
    psi.derivatives(x)
}

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::quadrature::{integrate_piecewise, QuadResult};

/// Planar bubble `φ(y) = −(1/4πℓ) log(1 + πℓ|y|²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleProfile {
    pub ell: usize,
}

impl BubbleProfile {
    pub fn new(ell: usize) -> Result<Self> {
        if ell == 0 {
            return Err(Error::InvalidParameter("bubble needs ℓ ≥ 1".into()));
        }
        Ok(Self { ell })
    }

    /// Value at planar radius `r`.
    pub fn phi(&self, r: f64) -> f64 {
        let l = self.ell as f64;
        -(PI * l * r * r).ln_1p() / (4.0 * PI * l)
    }

    pub fn phi_at(&self, y: [f64; 2]) -> f64 {
        self.phi(y[0].hypot(y[1]))
    }

    /// Radial derivative `φ'(r)`.
    pub fn phi_prime(&self, r: f64) -> f64 {
        let l = self.ell as f64;
        -r / (2.0 * (1.0 + PI * l * r * r))
    }
}

/// `∫_{B_R} e^{8πℓφ} dy = (1/ℓ)(1 − 1/(1+πℓR²))`.
pub fn bubble_integral(ell: usize, radius: f64) -> f64 {
    let l = ell as f64;
    let s = PI * l * radius * radius;
    s / (l * (1.0 + s))
}

/// The same integral by adaptive quadrature of `2πr(1+πℓr²)⁻²`, with
/// breakpoints at decades of the bubble scale `1/√(πℓ)`.
pub fn bubble_integral_quadrature(ell: usize, radius: f64) -> QuadResult {
    let l = ell as f64;
    let scale = 1.0 / (PI * l).sqrt();
    let mut points = vec![0.0];
    let mut p = scale;
    while p < radius {
        points.push(p);
        p *= 10.0;
    }
    points.push(radius.max(0.0));
    let f = |r: f64| {
        let w = 1.0 + PI * l * r * r;
        2.0 * PI * r / (w * w)
    };
    integrate_piecewise(f, &points, 1e-15, 1e-14)
}

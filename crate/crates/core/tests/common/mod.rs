//! Independent closed-form oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E₁(x)` for `x > 0`.
pub fn e1(x: f64) -> f64 {
    assert!(x > 0.0);
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            sum += term / k as f64;
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        // Modified Lentz on the continued fraction e^{-x}/(x+1-1/(x+3-4/(x+5-…))).
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..300 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

const SPLIT: f64 = 0.05;
const IMAGES: i32 = 6;

/// Mean-zero Green function of `−Δ` on the unit square torus by Ewald splitting.
pub fn torus_green(x: f64, y: f64) -> f64 {
    let t = SPLIT;
    let mut real = 0.0;
    let mut freq = 0.0;
    for i in -IMAGES..=IMAGES {
        for j in -IMAGES..=IMAGES {
            let (dx, dy) = (x - i as f64, y - j as f64);
            let r2 = dx * dx + dy * dy;
            real += e1(r2 / (4.0 * t)) / (4.0 * PI);
            if i != 0 || j != 0 {
                let k2 = (i * i + j * j) as f64;
                freq += (-4.0 * PI * PI * k2 * t).exp() * (2.0 * PI * (i as f64 * x + j as f64 * y)).cos()
                    / (4.0 * PI * PI * k2);
            }
        }
    }
    real - t + freq
}

/// Regular constant `lim (G + (1/2π) log ρ)` of the unit torus Green function.
pub fn torus_green_constant() -> f64 {
    let t = SPLIT;
    let mut sum = ((4.0 * t).ln() - EULER_GAMMA) / (4.0 * PI) - t;
    for i in -IMAGES..=IMAGES {
        for j in -IMAGES..=IMAGES {
            if i != 0 || j != 0 {
                let k2 = (i * i + j * j) as f64;
                sum += e1(k2 / (4.0 * t)) / (4.0 * PI);
                sum += (-4.0 * PI * PI * k2 * t).exp() / (4.0 * PI * PI * k2);
            }
        }
    }
    sum
}

/// Truncated Fourier series `Σ' cos(2πk·x)/(4π²|k|²)`, `|k_i| ≤ cutoff`.
pub fn torus_green_fourier(x: f64, y: f64, cutoff: i32) -> f64 {
    let mut sum = 0.0;
    for i in -cutoff..=cutoff {
        for j in -cutoff..=cutoff {
            if i != 0 || j != 0 {
                let k2 = (i * i + j * j) as f64;
                sum += (2.0 * PI * (i as f64 * x + j as f64 * y)).cos() / (4.0 * PI * PI * k2);
            }
        }
    }
    sum
}

/// Green function of the unit sphere with charges `1/2` at `±x₀`, `α = 0`,
/// as a function of the angle `d` to `x₀`.
pub fn antipodal_green(d: f64) -> f64 {
    let d = d.min(PI - d);
    -(2.0 * d.sin()).ln() / (4.0 * PI) + (2.0 * 2f64.ln() - 1.0) / (4.0 * PI)
}

pub fn antipodal_green_constant() -> f64 {
    (2f64.ln() - 1.0) / (4.0 * PI)
}

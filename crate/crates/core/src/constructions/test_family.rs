use std::f64::consts::PI;

use serde::Serialize;

use super::green::{
    extract_a, green_l2_squared, log_model_disk_moment, upper_bound_value, AFitOptions, GreenDecomposition,
    RadialRemainder,
};
use super::moser::moser_radius_bound;
use crate::discretization::ExpValue;
use crate::error::{Error, Result};
use crate::geometry::{geodesic_distance, SurfaceMesh};
use crate::linalg::quadrature::{integrate, integrate_piecewise};
use crate::linalg::sorted_sum;

/// Scalars of a solved Green function that the test family consumes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreenSummary {
    pub ell: usize,
    pub alpha: f64,
    pub total_area: f64,
    pub a: f64,
    /// `‖G‖₂²`.
    pub l2_squared: f64,
    /// Largest admissible orbit-ball radius.
    pub r0: f64,
    /// Radially averaged regular remainder `ψ̃` near the orbit.
    pub psi: RadialRemainder,
}

impl GreenSummary {
    pub fn from_decomposition(dec: &GreenDecomposition, mesh: &SurfaceMesh, fit: &AFitOptions) -> Result<Self> {
        let fitted = extract_a(dec, mesh, fit)?;
        let a = fitted.a;
        Ok(Self {
            ell: dec.ell(),
            alpha: dec.alpha,
            total_area: mesh.total_area(),
            a,
            l2_squared: green_l2_squared(dec, mesh, a, 2),
            r0: moser_radius_bound(mesh, &dec.source_orbit)?,
            psi: fitted.radial_remainder(),
        })
    }

    /// Local model `A − (1/2πℓ) log ρ` of `G` near an orbit point.
    pub fn local_model(&self, rho: f64) -> f64 {
        self.a - rho.ln() / (2.0 * PI * self.ell as f64)
    }

    /// `A − (1/2πℓ) log ρ + ψ̃(ρ)`.
    pub fn local_green(&self, rho: f64) -> f64 {
        self.local_model(rho) + self.psi.value(rho)
    }

    fn local_green_derivative(&self, rho: f64) -> f64 {
        -1.0 / (2.0 * PI * self.ell as f64 * rho) + self.psi.derivative(rho)
    }
}

/// Glued family `η_ε`: the bubble plateau `c + (B − L)/c` on `B_{Rε}`,
/// `(G − ζψ̃)/c` on the shell up to `2Rε` and `G/c` beyond, with `R = −log ε`.
#[derive(Debug, Clone, Serialize)]
pub struct TestFunctionFamily {
    pub epsilon: f64,
    pub big_r: f64,
    pub c2: f64,
    pub b: f64,
    /// Mean `η̄_ε`.
    pub mean: f64,
    /// `|plateau − glued Green formula|` at `ρ = Rε`.
    pub continuity_error: f64,
    /// `|‖η_ε − η̄_ε‖²_{1,α} − 1|` at the solved constants.
    pub norm_error: f64,
    /// `∫|∇(c η_ε)|²` split into the plateau balls and the rest.
    pub energy_inner: f64,
    pub energy_outer: f64,
    pub int_eta: f64,
    pub int_eta_sq: f64,
    pub summary: GreenSummary,
}

/// Per-ball radial integrals: the bubble logarithm
/// `L(ρ) = (1/4πℓ) log(1 + πℓρ²/ε²)` on `B_{Rε}`, the glued function
/// `y = G_loc − ζψ̃` on the shell `Rε < ρ < 2Rε`, and `G_loc` on `B_{2Rε}`.
struct BallMoments {
    area: f64,
    l1: f64,
    l2: f64,
    shell1: f64,
    shell2: f64,
    shell_energy: f64,
    g1: f64,
    g2: f64,
    /// `∮_{∂B_{2Rε}} G ∂_ν G` with `ν` pointing into the ball.
    boundary: f64,
}

impl TestFunctionFamily {
    pub fn ell(&self) -> f64 {
        self.summary.ell as f64
    }

    pub fn c(&self) -> f64 {
        self.c2.sqrt()
    }

    pub fn gluing_radius(&self) -> f64 {
        self.big_r * self.epsilon
    }

    fn bubble_log(&self, rho: f64) -> f64 {
        let l = self.ell();
        (PI * l * (rho / self.epsilon).powi(2)).ln_1p() / (4.0 * PI * l)
    }

    /// Radial cubic smoothstep: 1 on `B_{Rε}`, 0 outside `B_{2Rε}`.
    pub fn cutoff(&self, rho: f64) -> f64 {
        let t = ((rho - self.gluing_radius()) / self.gluing_radius()).clamp(0.0, 1.0);
        1.0 - t * t * (3.0 - 2.0 * t)
    }

    /// `η_ε` at distance `rho` from the nearest orbit point where `G = green`.
    pub fn eta(&self, rho: f64, green: f64) -> f64 {
        let c = self.c();
        if rho <= self.gluing_radius() {
            c + (self.b - self.bubble_log(rho)) / c
        } else {
            let psi = green - self.summary.local_model(rho);
            (green - self.cutoff(rho) * psi) / c
        }
    }

    pub fn phi(&self, rho: f64, green: f64) -> f64 {
        self.eta(rho, green) - self.mean
    }

    /// Vertex samples of `φ_ε`.
    pub fn sample_on_mesh(&self, dec: &GreenDecomposition, mesh: &SurfaceMesh) -> Result<Vec<f64>> {
        let rho = nearest_orbit_distance(mesh, &dec.source_orbit)?;
        Ok(rho.iter().zip(&dec.values).map(|(&r, &g)| self.phi(r, g)).collect())
    }
}

fn nearest_orbit_distance(mesh: &SurfaceMesh, orbit: &[usize]) -> Result<Vec<f64>> {
    let mut best = vec![f64::INFINITY; mesh.n_vertices()];
    for &p in orbit {
        for (b, d) in best.iter_mut().zip(geodesic_distance(mesh, p)?.distances) {
            *b = b.min(d);
        }
    }
    Ok(best)
}

fn radial<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    integrate(|r| 2.0 * PI * r * f(r), a, b, 1e-300, 1e-14, 2000).value
}

fn smoothstep_down(t: f64) -> (f64, f64) {
    let t = t.clamp(0.0, 1.0);
    (1.0 - t * t * (3.0 - 2.0 * t), -6.0 * t * (1.0 - t))
}

fn ball_moments(s: &GreenSummary, epsilon: f64, big_r: f64) -> BallMoments {
    let l = s.ell as f64;
    let rho = big_r * epsilon;
    let w = 1.0 + PI * l * big_r * big_r;
    let lw = w.ln();
    let e2 = epsilon * epsilon;
    let psi = &s.psi;
    let shell = |r: f64| {
        let (z, _) = smoothstep_down((r - rho) / rho);
        s.local_green(r) - z * psi.value(r)
    };
    let shell_slope = |r: f64| {
        let (z, dz) = smoothstep_down((r - rho) / rho);
        s.local_green_derivative(r) - z * psi.derivative(r) - dz / rho * psi.value(r)
    };
    let outer = 2.0 * rho;
    let psi1 = radial(|r| psi.value(r), 0.0, outer);
    let psi_model = radial(|r| psi.value(r) * s.local_model(r), 0.0, outer);
    let psi2 = radial(|r| psi.value(r).powi(2), 0.0, outer);
    BallMoments {
        area: PI * rho * rho,
        l1: e2 * (w * lw - w + 1.0) / (4.0 * PI * l * l),
        l2: e2 * (w * lw * lw - 2.0 * w * lw + 2.0 * w - 2.0) / (16.0 * PI * PI * l * l * l),
        shell1: radial(shell, rho, outer),
        shell2: radial(|r| shell(r).powi(2), rho, outer),
        shell_energy: radial(|r| shell_slope(r).powi(2), rho, outer),
        g1: log_model_disk_moment(s.a, l, outer, 1) + psi1,
        g2: log_model_disk_moment(s.a, l, outer, 2) + 2.0 * psi_model + psi2,
        boundary: -2.0 * PI * outer * s.local_green(outer) * s.local_green_derivative(outer),
    }
}

/// Integrals of the family for a trial `c²`, with `B = κ − c²`.
struct Trial {
    b: f64,
    int_eta: f64,
    int_eta_sq: f64,
    energy_inner: f64,
    energy_outer: f64,
    norm_sq: f64,
}

fn trial(s: &GreenSummary, m: &BallMoments, big_r: f64, kappa: f64, c2: f64) -> Trial {
    let l = s.ell as f64;
    let b = kappa - c2;
    let c = c2.sqrt();
    let w = 1.0 + PI * l * big_r * big_r;
    let energy_inner = l * (w.ln() + 1.0 / w - 1.0) / (4.0 * PI * l * l);
    // Outside B_{2Rε} the energy follows from the Green identity.
    let energy_outer =
        l * m.shell_energy + s.alpha * (s.l2_squared - l * m.g2) + l * m.g1 / s.total_area + l * m.boundary;
    let y_in = b * m.area - m.l1;
    let int_y = l * (y_in + m.shell1) - l * m.g1;
    let int_y_sq = l * (b * b * m.area - 2.0 * b * m.l1 + m.l2 + m.shell2) + s.l2_squared - l * m.g2;
    let int_eta = c * l * m.area + int_y / c;
    let int_eta_sq = c2 * l * m.area + 2.0 * l * y_in + int_y_sq / c2;
    let variance = int_eta_sq - int_eta * int_eta / s.total_area;
    Trial {
        b,
        int_eta,
        int_eta_sq,
        energy_inner,
        energy_outer,
        norm_sq: (energy_inner + energy_outer) / c2 - s.alpha * variance,
    }
}

/// Solves continuity and `‖η_ε − η̄_ε‖_{1,α} = 1` for `(c², B)` to machine
/// precision, starting from `c² ≈ −log ε/(2πℓ)`.
pub fn build_test_family(s: &GreenSummary, epsilon: f64) -> Result<TestFunctionFamily> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let l = s.ell as f64;
    let big_r = -epsilon.ln();
    let rho = big_r * epsilon;
    if 2.0 * rho >= s.r0 {
        return Err(Error::Geometry(format!(
            "shell radius 2Rε = {:.4e} does not fit inside r₀ = {:.4e}; decrease ε",
            2.0 * rho,
            s.r0
        )));
    }
    let m = ball_moments(s, epsilon, big_r);
    let kappa = s.local_model(rho) + (PI * l * big_r * big_r).ln_1p() / (4.0 * PI * l);
    let f = |c2: f64| trial(s, &m, big_r, kappa, c2).norm_sq - 1.0;

    let guess = (big_r / (2.0 * PI * l) + ((PI * l).ln() - 1.0) / (4.0 * PI * l) + s.a).max(1e-3);
    let (mut lo, mut hi) = (guess, guess);
    let mut expand = 0;
    while f(lo) <= 0.0 {
        lo *= 0.5;
        expand += 1;
        if expand > 200 {
            return Err(normalization_failure(s, &m, epsilon, big_r, kappa, guess));
        }
    }
    while f(hi) >= 0.0 {
        hi *= 2.0;
        expand += 1;
        if expand > 200 {
            return Err(normalization_failure(s, &m, epsilon, big_r, kappa, guess));
        }
    }
    let (mut f_lo, mut f_hi) = (f(lo), f(hi));
    let mut side = 0i8;
    for _ in 0..400 {
        let x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        let x = if x > lo && x < hi { x } else { 0.5 * (lo + hi) };
        let fx = f(x);
        if fx == 0.0 {
            lo = x;
            hi = x;
            break;
        }
        if fx > 0.0 {
            lo = x;
            f_lo = fx;
            if side == 1 {
                f_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = x;
            f_hi = fx;
            if side == -1 {
                f_lo *= 0.5;
            }
            side = -1;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let c2 = 0.5 * (lo + hi);
    let t = trial(s, &m, big_r, kappa, c2);
    let c = c2.sqrt();
    let plateau_edge = c + (t.b - (PI * l * big_r * big_r).ln_1p() / (4.0 * PI * l)) / c;
    let glued_edge = s.local_model(rho) / c;
    Ok(TestFunctionFamily {
        epsilon,
        big_r,
        c2,
        b: t.b,
        mean: t.int_eta / s.total_area,
        continuity_error: (plateau_edge - glued_edge).abs(),
        norm_error: (t.norm_sq - 1.0).abs(),
        energy_inner: t.energy_inner,
        energy_outer: t.energy_outer,
        int_eta: t.int_eta,
        int_eta_sq: t.int_eta_sq,
        summary: s.clone(),
    })
}

fn normalization_failure(s: &GreenSummary, m: &BallMoments, epsilon: f64, big_r: f64, kappa: f64, guess: f64) -> Error {
    let t = trial(s, m, big_r, kappa, guess);
    Error::NoConvergence {
        what: format!(
            "test family normalization at ε = {epsilon:e} (plateau energy {:.6e}, outer energy {:.6e}, \
             ‖G‖² {:.6e}, norm² at guess {:.6e})",
            t.energy_inner, t.energy_outer, s.l2_squared, t.norm_sq
        ),
        iterations: 200,
        residual: t.norm_sq - 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub epsilon: f64,
    /// Lower estimate of `∫e^{4πℓφ_ε²}`.
    pub value: f64,
    /// `ℓ∫_{B_{Rε}} e^{4πℓφ_ε²}` by radial quadrature.
    pub inner: f64,
    /// `∫_{Σ∖∪B} (1 + 4πℓφ_ε²)`.
    pub outer: f64,
    pub bound: ExpValue,
    pub margin: f64,
    /// `inner − πℓe^{1+4πℓA}`.
    pub inner_excess: f64,
}

/// Inner balls by radial quadrature on the flat bubble scale, outer region
/// through `e^t ≥ 1 + t`, compared with `Vol + πℓe^{1+4πℓA}`.
pub fn test_family_lower_bound(fam: &TestFunctionFamily) -> LowerBoundReport {
    let s = &fam.summary;
    let l = s.ell as f64;
    let eps = fam.epsilon;
    let m = ball_moments(s, eps, fam.big_r);
    let c = fam.c();
    let d = c + fam.b / c - fam.mean;
    let beta = 4.0 * PI * l;
    // s = ρ/ε; the factor ε² of the area element is folded into the exponent.
    let integrand = |t: f64| {
        let phi = d - (PI * l * t * t).ln_1p() / (4.0 * PI * l) / c;
        2.0 * PI * t * (beta * phi * phi + 2.0 * eps.ln()).exp()
    };
    let scale = 1.0 / (PI * l).sqrt();
    let mut points = vec![0.0];
    let mut p = scale;
    while p < fam.big_r {
        points.push(p);
        p *= 4.0;
    }
    points.push(fam.big_r);
    let inner = l * integrate_piecewise(integrand, &points, 0.0, 1e-13).value;
    let ball_phi_sq = d * d * m.area - 2.0 * d * m.l1 / c + m.l2 / fam.c2;
    let variance = fam.int_eta_sq - fam.int_eta * fam.int_eta / s.total_area;
    let outer = s.total_area - l * m.area + beta * (variance - l * ball_phi_sq);
    let bound = upper_bound_value(s.a, s.total_area, s.ell);
    let mut parts = [inner, outer];
    let value = sorted_sum(&mut parts);
    LowerBoundReport {
        epsilon: eps,
        value,
        inner,
        outer,
        bound,
        margin: value - bound.value,
        inner_excess: inner - PI * l * (1.0 + beta * s.a).exp(),
    }
}

/// Mesh evaluation of the outer region with and without `e^t ≥ 1 + t`:
/// returns `(Σ a e^{4πℓφ²}, Σ a (1 + 4πℓφ²))` over vertices outside `B_{Rε}`.
pub fn outer_mesh_check(fam: &TestFunctionFamily, dec: &GreenDecomposition, mesh: &SurfaceMesh) -> Result<(f64, f64)> {
    let phi = fam.sample_on_mesh(dec, mesh)?;
    let rho = nearest_orbit_distance(mesh, &dec.source_orbit)?;
    let beta = 4.0 * PI * fam.ell();
    let areas = mesh.vertex_areas();
    let mut full = Vec::new();
    let mut linear = Vec::new();
    for v in 0..mesh.n_vertices() {
        if rho[v] > fam.gluing_radius() {
            let t = beta * phi[v] * phi[v];
            full.push(areas[v] * t.exp());
            linear.push(areas[v] * (1.0 + t));
        }
    }
    Ok((sorted_sum(&mut full), sorted_sum(&mut linear)))
}

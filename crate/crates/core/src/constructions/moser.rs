use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::discretization::{
    dirichlet_energy, norm_one_alpha, ExpValue, FemOperators, InvariantVector, NormParams, Subspace,
};
use crate::error::{Error, Result};
use crate::geometry::{geodesic_distance, GroupAction, SurfaceKind, SurfaceMesh};
use crate::linalg::quadrature::integrate;
use crate::linalg::sorted_sum;

/// Symmetrized Moser function: `log k` on `ρ ≤ r k^{-1/4}`, `4 log(r/ρ)` up to
/// `ρ = r`, zero outside, placed on every point of the orbit of `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoserSequence {
    pub center: usize,
    pub radius: f64,
    pub k: f64,
    pub orbit: Vec<usize>,
}

impl MoserSequence {
    pub fn new(mesh: &SurfaceMesh, action: &GroupAction, center: usize, radius: f64, k: f64) -> Result<Self> {
        if center >= mesh.n_vertices() {
            return Err(Error::InvalidParameter(format!("center {center} out of range")));
        }
        if !(radius > 0.0) || !(k >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Moser function needs r > 0 and k ≥ 1, got r = {radius}, k = {k}"
            )));
        }
        let orbit = action.orbit(center);
        let bound = moser_radius_bound(mesh, &orbit)?;
        if radius > bound {
            return Err(Error::OverlappingBalls { radius, bound });
        }
        Ok(Self {
            center,
            radius,
            k,
            orbit,
        })
    }

    pub fn ell(&self) -> usize {
        self.orbit.len()
    }

    /// Radius of the plateau `r k^{-1/4}`.
    pub fn plateau_radius(&self) -> f64 {
        self.radius * self.k.powf(-0.25)
    }

    /// Single-ball profile as a function of the distance to its center.
    pub fn profile(&self, rho: f64) -> f64 {
        if rho <= self.plateau_radius() {
            self.k.ln()
        } else if rho <= self.radius {
            4.0 * (self.radius / rho).ln()
        } else {
            0.0
        }
    }
}

/// `r₀`: a quarter of the smallest distance between orbit points, capped by
/// the injectivity radius.
pub fn moser_radius_bound(mesh: &SurfaceMesh, orbit: &[usize]) -> Result<f64> {
    let mut bound = mesh
        .injectivity_radius()
        .ok_or_else(|| Error::Unsupported("Moser functions need a model surface".into()))?;
    for (i, &p) in orbit.iter().enumerate() {
        let d = geodesic_distance(mesh, p)?.distances;
        for &q in &orbit[i + 1..] {
            bound = bound.min(0.25 * d[q]);
        }
    }
    Ok(bound)
}

#[derive(Debug, Clone, Serialize)]
pub struct MoserEvaluation {
    pub values: Vec<f64>,
    /// Element-wise Dirichlet energy of the P1 interpolant.
    pub mesh_energy: f64,
    /// `8πℓ log k`, exact for the flat model.
    pub flat_energy: f64,
}

pub fn moser_evaluate(seq: &MoserSequence, mesh: &SurfaceMesh) -> Result<MoserEvaluation> {
    let mut values = vec![0.0; mesh.n_vertices()];
    for &p in &seq.orbit {
        let d = geodesic_distance(mesh, p)?.distances;
        for (v, &rho) in d.iter().enumerate() {
            if rho <= seq.radius {
                values[v] += seq.profile(rho);
            }
        }
    }
    let mesh_energy = dirichlet_energy(mesh, &values);
    Ok(MoserEvaluation {
        values,
        mesh_energy,
        flat_energy: 8.0 * PI * seq.ell() as f64 * seq.k.ln(),
    })
}

/// `(M̃_k − mean)/‖·‖_{1,α}` in the working subspace.
pub fn moser_normalized<S: Subspace + ?Sized>(
    values: &[f64],
    ops: &FemOperators,
    space: &S,
    p: &NormParams,
) -> Result<InvariantVector> {
    let projected = space.project(values);
    let n = norm_one_alpha(&projected, ops, p)?;
    if !(n > 0.0) {
        return Err(Error::InvalidParameter(
            "Moser function vanishes after projection".into(),
        ));
    }
    Ok(InvariantVector::from_projected(
        projected.iter().map(|x| x / n).collect(),
    ))
}

/// Rotationally symmetric model metric around the orbit points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialModel {
    /// Unit sphere, area element `2π sin ρ dρ`.
    Sphere,
    /// Flat plane, area element `2πρ dρ`.
    Flat,
}

impl RadialModel {
    pub fn for_surface(kind: SurfaceKind) -> Result<Self> {
        match kind {
            SurfaceKind::UnitSphere => Ok(Self::Sphere),
            SurfaceKind::FlatTorus { .. } => Ok(Self::Flat),
            SurfaceKind::Imported => Err(Error::Unsupported("no radial model for an imported mesh".into())),
        }
    }

    pub fn area_density(self, rho: f64) -> f64 {
        match self {
            Self::Sphere => 2.0 * PI * rho.sin(),
            Self::Flat => 2.0 * PI * rho,
        }
    }

    pub fn ball_area(self, rho: f64) -> f64 {
        match self {
            Self::Sphere => 4.0 * PI * (0.5 * rho).sin().powi(2),
            Self::Flat => PI * rho * rho,
        }
    }
}

/// Moments of the symmetrized Moser function on the radial model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MoserMoments {
    /// `∫|∇M̃_k|²`.
    pub energy: f64,
    /// `∫M̃_k`.
    pub integral: f64,
    /// `∫M̃_k²`.
    pub integral_sq: f64,
    /// `‖M̃_k − mean‖²_{1,α}`.
    pub norm_sq: f64,
}

fn ring<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    integrate(f, a, b, 1e-15, 1e-13, 2000).value
}

/// Semi-analytic moments of `M̃_k` on `ℓ` disjoint model balls.
pub fn moser_moments(ell: usize, radius: f64, k: f64, model: RadialModel, total_area: f64, alpha: f64) -> MoserMoments {
    let l = ell as f64;
    let a = radius * k.powf(-0.25);
    let lk = k.ln();
    let prof = |rho: f64| 4.0 * (radius / rho).ln();
    let energy = l * ring(|p| 16.0 / (p * p) * model.area_density(p), a, radius);
    let integral = l * (lk * model.ball_area(a) + ring(|p| prof(p) * model.area_density(p), a, radius));
    let integral_sq = l * (lk * lk * model.ball_area(a) + ring(|p| prof(p).powi(2) * model.area_density(p), a, radius));
    let norm_sq = energy - alpha * (integral_sq - integral * integral / total_area);
    MoserMoments {
        energy,
        integral,
        integral_sq,
        norm_sq,
    }
}

/// `∫e^{β u²}` at the normalized Moser function, by radial quadrature on the
/// model metric. The region outside the balls carries the constant `−mean/norm`.
pub fn moser_exp_functional(
    ell: usize,
    radius: f64,
    k: f64,
    model: RadialModel,
    total_area: f64,
    alpha: f64,
    beta: f64,
) -> Result<ExpValue> {
    let mom = moser_moments(ell, radius, k, model, total_area, alpha);
    if !(mom.norm_sq > 0.0) {
        return Err(Error::NegativeNorm { value: mom.norm_sq });
    }
    let l = ell as f64;
    let n = mom.norm_sq.sqrt();
    let m = mom.integral / total_area;
    let a = radius * k.powf(-0.25);
    let top = beta * ((k.ln() - m) / n).powi(2);
    let bottom = beta * (m / n).powi(2);
    let shift = top.max(bottom);
    let u = |rho: f64| (4.0 * (radius / rho).ln() - m) / n;
    let mut parts = vec![
        l * model.ball_area(a) * (top - shift).exp(),
        l * ring(
            |p| (beta * u(p).powi(2) - shift).exp() * model.area_density(p),
            a,
            radius,
        ),
        (total_area - l * model.ball_area(radius)) * (bottom - shift).exp(),
    ];
    let sum = sorted_sum(&mut parts);
    Ok(ExpValue::from_log(shift + sum.ln()))
}

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{MaximizerState, Problem};
use crate::constructions::BubbleProfile;
use crate::discretization::triangle_energies;
use crate::error::{Error, Result};
use crate::geometry::geodesic_distance;
use crate::linalg::sorted_sum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupOptions {
    /// Smallest `c_ε` for which the asymptotic comparison is attempted.
    pub threshold: f64,
    /// Ball radii for the local energies.
    pub radii: Vec<f64>,
    /// Radius of the sampled disk in rescaled coordinates.
    pub profile_radius: f64,
    pub profile_rings: usize,
    pub profile_angles: usize,
}

impl Default for BlowupOptions {
    fn default() -> Self {
        Self {
            threshold: 3.0,
            radii: vec![0.1, 0.2],
            profile_radius: 5.0,
            profile_rings: 10,
            profile_angles: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalEnergies {
    pub radius: f64,
    /// `∫_{B_r(σx_ε)}|∇u|²` for each point of the orbit of `x_ε`.
    pub energies: Vec<f64>,
    pub sum: f64,
    /// `sum / (1 + α∫u²)`, the share of the energy budget.
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupDiagnostics {
    /// `r_ε = √λ_ε/c_ε · e^{−(2πℓ−ε/2)c_ε²}` and its logarithm.
    pub r_eps: f64,
    pub log_r_eps: f64,
    pub centers: Vec<usize>,
    pub local_energies: Vec<LocalEnergies>,
    pub total_energy: f64,
    /// Sup distance between `c_ε(u(exp_{x_ε}(r_ε y)) − c_ε)` and the bubble on
    /// `|y| ≤ profile_radius`; `None` when not resolvable.
    pub profile_error: Option<f64>,
    pub warnings: Vec<String>,
}

pub fn blowup_diagnostics(
    state: &MaximizerState,
    problem: &Problem,
    bubble: &BubbleProfile,
    opts: &BlowupOptions,
) -> Result<BlowupDiagnostics> {
    let mesh = problem.mesh;
    let u = &state.u;
    if u.len() != mesh.n_vertices() {
        return Err(Error::InvalidParameter("state does not belong to this mesh".into()));
    }
    let l = problem.ell as f64;
    let c = state.c_eps;
    let log_r_eps = 0.5 * state.lambda_eps.ln() - c.ln() - (2.0 * PI * l - 0.5 * state.epsilon) * c * c;
    let mut warnings = Vec::new();
    if c < opts.threshold {
        warnings.push(format!(
            "c_ε = {c:.4} is below the blow-up threshold {}; asymptotic comparisons are indicative only",
            opts.threshold
        ));
    }
    let energies = triangle_energies(mesh, u);
    let mut all = energies.clone();
    let total_energy = sorted_sum(&mut all);
    let budget = 1.0 + state.alpha * problem.ops.l2_squared(u);
    let centers = problem.action.orbit(state.x_eps);
    let distances: Vec<Vec<f64>> = centers
        .iter()
        .map(|&p| geodesic_distance(mesh, p).map(|g| g.distances))
        .collect::<Result<_>>()?;
    let local_energies = opts
        .radii
        .iter()
        .map(|&r| {
            let per_center: Vec<f64> = distances
                .iter()
                .map(|d| {
                    let mut inside: Vec<f64> = mesh
                        .triangles()
                        .iter()
                        .zip(&energies)
                        .filter(|(t, _)| t.iter().all(|&v| d[v] <= r))
                        .map(|(_, e)| *e)
                        .collect();
                    sorted_sum(&mut inside)
                })
                .collect();
            let mut s = per_center.clone();
            let sum = sorted_sum(&mut s);
            LocalEnergies {
                radius: r,
                energies: per_center,
                sum,
                share: sum / budget,
            }
        })
        .collect();

    let h = mesh.mean_edge_length();
    let r_eps = log_r_eps.exp();
    let profile_error = if r_eps * opts.profile_radius < 2.0 * h {
        warnings.push(format!(
            "r_ε = {r_eps:.3e} is below the mesh resolution h = {h:.3e}; profile comparison skipped"
        ));
        None
    } else {
        let sign = if u[state.x_eps] < 0.0 { -1.0 } else { 1.0 };
        let mut worst: f64 = 0.0;
        for i in 0..=opts.profile_rings {
            let rad = opts.profile_radius * i as f64 / opts.profile_rings as f64;
            let angles = if i == 0 { 1 } else { opts.profile_angles };
            for k in 0..angles {
                let th = 2.0 * PI * k as f64 / angles as f64;
                let y = [rad * th.cos(), rad * th.sin()];
                let p = mesh.exp_map(state.x_eps, [r_eps * y[0], r_eps * y[1]])?;
                let (t, w) = mesh.locate(p, state.x_eps)?;
                let tri = mesh.triangles()[t];
                let val = sign * (w[0] * u[tri[0]] + w[1] * u[tri[1]] + w[2] * u[tri[2]]);
                worst = worst.max((c * (val - c) - bubble.phi_at(y)).abs());
            }
        }
        Some(worst)
    };
    Ok(BlowupDiagnostics {
        r_eps,
        log_r_eps,
        centers,
        local_energies,
        total_energy,
        profile_error,
        warnings,
    })
}

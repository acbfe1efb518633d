use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::SurfaceSpec;
use crate::constructions::{
    build_test_family, extract_a, green_solve_on, test_family_lower_bound, upper_bound_value, AFitOptions,
    GreenDecomposition, GreenSummary,
};
use crate::discretization::{ExpValue, FemOperators, ShiftedSolver};
use crate::error::{Error, Result};
use crate::geometry::io::{read_group_json, read_off};
use crate::geometry::{
    build_flat_torus_mesh, build_sphere_mesh, sphere_group_action, GroupAction, GroupKind, SurfaceKind, SurfaceMesh,
};
use crate::maximizer::{
    multiplier_report, solve_multistart, MaximizerState, MultiplierReport, Problem, ProblemSpec, RunSummary, Seed,
    SolveOptions,
};
use crate::spectrum::{complement_projector, InvariantSpectrum};

pub struct Surface {
    pub mesh: SurfaceMesh,
    pub action: GroupAction,
}

impl Surface {
    /// Lowest-index vertex of a minimal orbit.
    pub fn default_center(&self) -> usize {
        let ell = self.action.min_orbit();
        self.action
            .orbit_size()
            .iter()
            .position(|&s| s == ell)
            .expect("some orbit is minimal")
    }
}

pub fn build_surface(spec: &SurfaceSpec) -> Result<Surface> {
    let (mesh, action) = match spec {
        SurfaceSpec::Sphere { level, group } => build_sphere_mesh(*level, *group)?,
        SurfaceSpec::Torus {
            nx,
            ny,
            width,
            height,
            translations,
        } => build_flat_torus_mesh(*nx, *ny, *width, *height, translations)?,
        SurfaceSpec::Mesh { path, group } => return load_surface(path, group),
    };
    Ok(Surface { mesh, action })
}

/// Reads an OFF mesh; `group` is a group name for unit-sphere meshes or the
/// path of a JSON permutation list.
pub fn load_surface(path: &Path, group: &str) -> Result<Surface> {
    let file = std::fs::File::open(path).map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    let mut mesh = read_off(std::io::BufReader::new(file))?;
    let action = match group.parse::<GroupKind>() {
        Ok(GroupKind::Trivial) => GroupAction::trivial(mesh.n_vertices()),
        Ok(kind) => {
            if mesh.kind() != SurfaceKind::UnitSphere {
                return Err(Error::Config(format!(
                    "group `{kind}` needs a unit-sphere mesh; pass a permutation file instead"
                )));
            }
            sphere_group_action(&mesh, kind)?
        }
        Err(_) => {
            let f = std::fs::File::open(group)
                .map_err(|e| Error::Config(format!("`{group}` is neither a group name nor a readable file: {e}")))?;
            read_group_json(&mesh, std::io::BufReader::new(f))?
        }
    };
    mesh.symmetrize(&action)?;
    Ok(Surface { mesh, action })
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshReport {
    pub kind: SurfaceKind,
    pub vertices: usize,
    pub triangles: usize,
    pub total_area: f64,
    pub mean_edge_length: f64,
    pub group_order: usize,
    /// `ℓ`, the smallest orbit size.
    pub ell: usize,
    pub default_center: usize,
}

impl MeshReport {
    pub fn new(s: &Surface) -> Self {
        Self {
            kind: s.mesh.kind(),
            vertices: s.mesh.n_vertices(),
            triangles: s.mesh.triangles().len(),
            total_area: s.mesh.total_area(),
            mean_edge_length: s.mesh.mean_edge_length(),
            group_order: s.action.group_order(),
            ell: s.action.min_orbit(),
            default_center: s.default_center(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<usize>,
    /// `λ_1^G < λ_2^G < …`.
    pub distinct: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

impl SpectrumReport {
    pub fn new(s: &InvariantSpectrum) -> Self {
        Self {
            eigenvalues: s.eigenvalues.clone(),
            multiplicities: s.multiplicities.clone(),
            distinct: s.distinct(),
            residuals: s.residuals.clone(),
            iterations: s.iterations,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GreenReport {
    pub alpha: f64,
    pub level: usize,
    pub ell: usize,
    pub source_orbit: Vec<usize>,
    pub residual: f64,
    pub a: f64,
    pub fit_inner_radius: f64,
    pub fit_outer_radius: f64,
    pub fit_points: usize,
    pub fit_residual_rms: f64,
    pub fit_coefficients: Vec<f64>,
    /// `Vol + πℓe^{1+4πℓA}`.
    pub upper_bound: ExpValue,
    pub l2_squared: f64,
    pub mean: f64,
    pub warnings: Vec<String>,
    pub values: Vec<f64>,
}

pub struct GreenOutcome {
    pub report: GreenReport,
    pub decomposition: GreenDecomposition,
    pub summary: GreenSummary,
}

/// Green function on `E_{level−1}^⊥` with its `A` fit and upper bound.
pub fn green_stage(
    surface: &Surface,
    ops: &FemOperators,
    spectrum: &InvariantSpectrum,
    level: usize,
    alpha: f64,
    center: usize,
    fit: &AFitOptions,
) -> Result<GreenOutcome> {
    if center >= surface.mesh.n_vertices() {
        return Err(Error::InvalidParameter(format!("orbit vertex {center} out of range")));
    }
    let space = complement_projector(spectrum, level)?;
    if !(alpha < space.lambda) {
        return Err(Error::AlphaNotAdmissible {
            alpha,
            lambda: space.lambda,
        });
    }
    let solver = ShiftedSolver::new(ops, alpha)?;
    let orbit = surface.action.orbit(center);
    let mut dec = green_solve_on(ops, &space, &solver, &orbit)?;
    if orbit.len() > surface.action.min_orbit() {
        dec.warnings.push(format!(
            "source orbit has {} points but the minimal orbit size is {}",
            orbit.len(),
            surface.action.min_orbit()
        ));
    }
    let a_fit = extract_a(&dec, &surface.mesh, fit)?;
    let summary = GreenSummary::from_decomposition(&dec, &surface.mesh, fit)?;
    let report = GreenReport {
        alpha,
        level,
        ell: dec.ell(),
        source_orbit: dec.source_orbit.clone(),
        residual: dec.residual,
        a: a_fit.a,
        fit_inner_radius: a_fit.inner_radius,
        fit_outer_radius: a_fit.outer_radius,
        fit_points: a_fit.points,
        fit_residual_rms: a_fit.residual_rms,
        fit_coefficients: a_fit.coefficients.clone(),
        upper_bound: upper_bound_value(a_fit.a, ops.total_area, dec.ell()),
        l2_squared: summary.l2_squared,
        mean: ops.integral(&dec.values) / ops.total_area,
        warnings: dec.warnings.clone(),
        values: dec.values.clone(),
    };
    Ok(GreenOutcome {
        report,
        decomposition: dec,
        summary,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsRow {
    pub epsilon: f64,
    pub big_r: f64,
    pub c2: f64,
    pub b: f64,
    /// `1/(4πℓ)`, the limit of `b`.
    pub b_limit: f64,
    pub value: ExpValue,
    pub inner: f64,
    pub outer: f64,
    pub bound: ExpValue,
    pub margin: f64,
    /// `margin · (−log ε)`.
    pub scaled_margin: f64,
    /// `4πℓ‖G‖₂²`.
    pub leading_term: f64,
    pub inner_excess: f64,
    pub norm_error: f64,
    pub continuity_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub a: f64,
    pub upper_bound: ExpValue,
    pub rows: Vec<BoundsRow>,
}

pub fn bounds_stage(summary: &GreenSummary, epsilons: &[f64]) -> Result<BoundsReport> {
    let rows = epsilons
        .par_iter()
        .map(|&eps| {
            let fam = build_test_family(summary, eps)?;
            let r = test_family_lower_bound(&fam);
            let l = fam.ell();
            Ok(BoundsRow {
                epsilon: eps,
                big_r: fam.big_r,
                c2: fam.c2,
                b: fam.b,
                b_limit: 1.0 / (4.0 * PI * l),
                value: ExpValue::from_log(r.value.ln()),
                inner: r.inner,
                outer: r.outer,
                bound: r.bound,
                margin: r.margin,
                scaled_margin: r.margin * (-eps.ln()),
                leading_term: 4.0 * PI * l * summary.l2_squared,
                inner_excess: r.inner_excess,
                norm_error: fam.norm_error,
                continuity_error: fam.continuity_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundsReport {
        a: summary.a,
        upper_bound: upper_bound_value(summary.a, summary.total_area, summary.ell),
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MaximizeReport {
    pub level: usize,
    pub alpha: f64,
    pub lambda_level: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub value: ExpValue,
    pub c_eps: f64,
    pub x_eps: usize,
    pub lambda_eps: f64,
    pub mu_eps: f64,
    pub gammas: Vec<f64>,
    pub el_residual: f64,
    pub converged: bool,
    pub iterations: usize,
    pub seed: String,
    pub identities: MultiplierReport,
    pub runs: Vec<RunSummary>,
}

pub fn maximize_one(
    problem: &Problem,
    seeds: &[Seed],
    opts: &SolveOptions,
) -> Result<(MaximizeReport, MaximizerState)> {
    let ms = solve_multistart(problem, seeds, opts)?;
    let st = ms.best;
    let identities = multiplier_report(&st, problem)?;
    let report = MaximizeReport {
        level: problem.spec.level,
        alpha: problem.spec.alpha,
        lambda_level: problem.lambda,
        epsilon: problem.spec.epsilon,
        beta: problem.beta(),
        value: st.value,
        c_eps: st.c_eps,
        x_eps: st.x_eps,
        lambda_eps: st.lambda_eps,
        mu_eps: st.mu_eps,
        gammas: st.gammas.clone(),
        el_residual: st.el_residual,
        converged: st.converged,
        iterations: st.iterations,
        seed: st.seed.clone(),
        identities,
        runs: ms.runs,
    };
    Ok((report, st))
}

/// Builds the maximization problems of an `ε` sweep.
pub fn problems<'a>(
    surface: &'a Surface,
    ops: &'a FemOperators,
    spectrum: &InvariantSpectrum,
    level: usize,
    alpha: f64,
    epsilons: &[f64],
) -> Result<Vec<Problem<'a>>> {
    epsilons
        .iter()
        .map(|&epsilon| {
            Problem::new(
                &surface.mesh,
                ops,
                &surface.action,
                spectrum,
                ProblemSpec { level, alpha, epsilon },
            )
        })
        .collect()
}

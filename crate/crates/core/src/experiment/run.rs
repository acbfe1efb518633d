use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, Stage, SCHEMA_VERSION};
use super::reports::{
    bounds_stage, build_surface, green_stage, maximize_one, problems, GreenOutcome, MaximizeReport, MeshReport,
    SpectrumReport, Surface,
};
use crate::constructions::{BubbleProfile, RadialModel};
use crate::discretization::{assemble, FemOperators};
use crate::error::{Error, Result};
use crate::geometry::io::{off_string, write_group_json};
use crate::maximizer::{
    blowup_diagnostics, eigen_scaling_probe, sharpness_probe, MaximizerState, MeshContext, Seed, SharpnessTable,
};
use crate::spectrum::{complement_projector, invariant_spectrum_with, EigenOptions, InvariantSpectrum};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Thread pool for parameter sweeps, capped by `TM_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("TM_THREADS") {
        let n = v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("TM_THREADS must be a positive integer, got `{v}`")))?;
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

/// Writes files below a root directory and records their hashes.
pub struct ArtifactWriter {
    root: PathBuf,
    pub records: Vec<Artifact>,
}

impl ArtifactWriter {
    pub fn new(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            records: Vec::new(),
        })
    }

    pub fn bytes(&mut self, rel: &str, data: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, data)?;
        self.records.push(Artifact {
            path: rel.to_string(),
            sha256: sha256_hex(data),
        });
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> Result<()> {
        self.bytes(rel, &to_json_bytes(value)?)
    }

    pub fn csv(&mut self, rel: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        self.bytes(rel, &csv_bytes(header, rows)?)
    }
}

pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

/// Shortest round-trip text of a float for CSV cells.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub status: String,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub name: String,
    /// Hash of the canonical config with `output_dir` cleared.
    pub config_sha256: String,
    /// Hash of the OFF text of the mesh, when one was built.
    pub mesh_sha256: Option<String>,
    pub stages: Vec<StageRecord>,
    pub artifacts: Vec<Artifact>,
    /// Scalar results by name, the input of `compare`.
    pub summary: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let file = if path.is_dir() {
            path.join("manifest.json")
        } else {
            path.to_path_buf()
        };
        let text = std::fs::read_to_string(&file)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", file.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::Schema(format!(
                    "{} has schema {v}, expected {SCHEMA_VERSION}",
                    file.display()
                )))
            }
            None => return Err(Error::Schema(format!("{} has no schema_version", file.display()))),
        }
        Ok(serde_json::from_value(value)?)
    }
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.output_dir = PathBuf::new();
    sha256_hex(c.to_canonical_json().as_bytes())
}

fn eps_key(eps: f64) -> String {
    format!("{eps:e}")
}

struct Run<'c> {
    cfg: &'c ExperimentConfig,
    out: ArtifactWriter,
    stages: Vec<StageRecord>,
    summary: BTreeMap<String, f64>,
    mesh_sha256: Option<String>,
}

struct Context {
    surface: Surface,
    ops: FemOperators,
    spectrum: Option<InvariantSpectrum>,
    alpha: Option<f64>,
    green: Option<GreenOutcome>,
    states: Option<Vec<(MaximizeReport, MaximizerState)>>,
}

/// Runs the requested stages in pipeline order and writes the artifacts and
/// `manifest.json` into `cfg.output_dir`. On a stage failure the manifest
/// and everything written so far are kept.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Manifest> {
    cfg.validate()?;
    let pool = thread_pool()?;
    let mut run = Run {
        cfg,
        out: ArtifactWriter::new(&cfg.output_dir)?,
        stages: Vec::new(),
        summary: BTreeMap::new(),
        mesh_sha256: None,
    };
    let result = pool.install(|| run.execute());
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        name: cfg.name.clone(),
        config_sha256: config_hash(cfg),
        mesh_sha256: run.mesh_sha256.clone(),
        stages: run.stages.clone(),
        artifacts: run.out.records.clone(),
        summary: run.summary.clone(),
    };
    std::fs::write(cfg.output_dir.join("manifest.json"), to_json_bytes(&manifest)?)?;
    result.map(|_| manifest)
}

impl Run<'_> {
    fn execute(&mut self) -> Result<()> {
        let stages = self.cfg.stages();
        if stages.is_empty() {
            return Ok(());
        }
        let mut ctx = self.stage("mesh", |_| {
            let surface = build_surface(&self.cfg.surface)?;
            let ops = assemble(&surface.mesh)?;
            Ok(Context {
                surface,
                ops,
                spectrum: None,
                alpha: None,
                green: None,
                states: None,
            })
        })?;
        let off = off_string(&ctx.surface.mesh);
        self.mesh_sha256 = Some(sha256_hex(off.as_bytes()));
        let report = MeshReport::new(&ctx.surface);
        self.summary.insert("mesh.vertices".into(), report.vertices as f64);
        self.summary.insert("mesh.h".into(), report.mean_edge_length);
        self.summary.insert("mesh.area".into(), report.total_area);
        self.summary.insert("ell".into(), report.ell as f64);
        for stage in stages {
            let name = stage.name();
            self.stage(name, |run| run.execute_stage(stage, &mut ctx, &off, &report))?;
        }
        Ok(())
    }

    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        match f(self) {
            Ok(v) => {
                if !self.stages.iter().any(|s| s.stage == name) {
                    self.stages.push(StageRecord {
                        stage: name.into(),
                        status: "ok".into(),
                        error: None,
                    });
                }
                Ok(v)
            }
            Err(e) => {
                self.stages.retain(|s| s.stage != name);
                self.stages.push(StageRecord {
                    stage: name.into(),
                    status: "failed".into(),
                    error: Some(e.to_string()),
                });
                Err(Error::Stage {
                    stage: name.into(),
                    source: Box::new(e),
                })
            }
        }
    }

    fn spectrum<'x>(&self, ctx: &'x mut Context) -> Result<&'x InvariantSpectrum> {
        if ctx.spectrum.is_none() {
            let opts = EigenOptions {
                tol: self.cfg.eigen_tol,
                seed: self.cfg.random_seed,
                ..EigenOptions::default()
            };
            let count = self.cfg.eigen_count.max(self.cfg.level + 1);
            let s = invariant_spectrum_with(&ctx.ops, &ctx.surface.action, count, &opts)?;
            ctx.alpha = Some(self.cfg.alpha.resolve(&s, self.cfg.level)?);
            ctx.spectrum = Some(s);
        }
        Ok(ctx.spectrum.as_ref().expect("just computed"))
    }

    fn green(&self, ctx: &mut Context) -> Result<()> {
        if ctx.green.is_none() {
            self.spectrum(ctx)?;
            let center = ctx.surface.default_center();
            let g = green_stage(
                &ctx.surface,
                &ctx.ops,
                ctx.spectrum.as_ref().expect("computed"),
                self.cfg.level,
                ctx.alpha.expect("resolved with the spectrum"),
                center,
                &self.cfg.fit,
            )?;
            ctx.green = Some(g);
        }
        Ok(())
    }

    fn maximize(&self, ctx: &mut Context) -> Result<()> {
        if ctx.states.is_none() {
            if self.cfg.epsilons.is_empty() {
                return Err(Error::Config("maximize needs a non-empty `epsilons` grid".into()));
            }
            self.spectrum(ctx)?;
            let spectrum = ctx.spectrum.as_ref().expect("computed");
            let alpha = ctx.alpha.expect("resolved");
            let probs = problems(
                &ctx.surface,
                &ctx.ops,
                spectrum,
                self.cfg.level,
                alpha,
                &self.cfg.epsilons,
            )?;
            let seeds = self
                .cfg
                .seeds
                .clone()
                .unwrap_or_else(|| Seed::default_set(self.cfg.random_seed));
            let states = probs
                .par_iter()
                .map(|p| maximize_one(p, &seeds, &self.cfg.solver))
                .collect::<Result<Vec<_>>>()?;
            ctx.states = Some(states);
        }
        Ok(())
    }

    fn execute_stage(&mut self, stage: Stage, ctx: &mut Context, off: &str, mesh: &MeshReport) -> Result<()> {
        match stage {
            Stage::Mesh => {
                self.out.bytes("mesh.off", off.as_bytes())?;
                let mut g = Vec::new();
                write_group_json(&ctx.surface.action, &mut g)?;
                self.out.bytes("group.json", &g)?;
                self.out.json("mesh.json", mesh)?;
                let dir = self.cfg.output_dir.join("matrices");
                ctx.ops.export(&dir)?;
                for name in ["stiffness.mtx", "mass.mtx"] {
                    let data = std::fs::read(dir.join(name))?;
                    self.out.records.push(super::run::Artifact {
                        path: format!("matrices/{name}"),
                        sha256: sha256_hex(&data),
                    });
                }
            }
            Stage::Spectrum => {
                let report = SpectrumReport::new(self.spectrum(ctx)?);
                for (j, l) in report.distinct.iter().enumerate() {
                    self.summary.insert(format!("lambda[{}]", j + 1), *l);
                }
                self.out.json("spectrum.json", &report)?;
            }
            Stage::Green => {
                self.green(ctx)?;
                let g = &ctx.green.as_ref().expect("computed").report;
                self.summary.insert("alpha".into(), g.alpha);
                self.summary.insert("green.a".into(), g.a);
                self.summary
                    .insert("green.log_upper_bound".into(), g.upper_bound.log_value);
                self.summary.insert("green.l2_squared".into(), g.l2_squared);
                self.out.json("green.json", g)?;
            }
            Stage::Bounds => {
                if self.cfg.bounds_epsilons.is_empty() {
                    return Err(Error::Config("bounds needs a non-empty `bounds_epsilons` grid".into()));
                }
                self.green(ctx)?;
                let report = bounds_stage(
                    &ctx.green.as_ref().expect("computed").summary,
                    &self.cfg.bounds_epsilons,
                )?;
                let mut rows = Vec::new();
                for r in &report.rows {
                    let k = eps_key(r.epsilon);
                    self.summary.insert(format!("bounds.margin[{k}]"), r.margin);
                    self.summary.insert(format!("bounds.b[{k}]"), r.b);
                    rows.push(vec![
                        num(r.epsilon),
                        num(r.margin),
                        num(r.scaled_margin),
                        num(r.leading_term),
                        num(r.value.log_value),
                        num(r.bound.log_value),
                        num(r.b),
                        num(r.b_limit),
                        num(r.c2),
                    ]);
                }
                self.out.json("bounds.json", &report)?;
                self.out.csv(
                    "bounds.csv",
                    &[
                        "epsilon",
                        "margin",
                        "scaled_margin",
                        "leading_term",
                        "log_value",
                        "log_bound",
                        "b",
                        "b_limit",
                        "c2",
                    ],
                    &rows,
                )?;
            }
            Stage::Maximize => {
                self.maximize(ctx)?;
                let mut rows = Vec::new();
                for (i, (rep, st)) in ctx.states.as_ref().expect("computed").iter().enumerate() {
                    let k = eps_key(rep.epsilon);
                    self.summary
                        .insert(format!("maximize.log_value[{k}]"), rep.value.log_value);
                    self.summary.insert(format!("maximize.c_eps[{k}]"), rep.c_eps);
                    self.summary.insert(format!("maximize.lambda_eps[{k}]"), rep.lambda_eps);
                    let dir = format!("maximize/eps-{i:03}");
                    self.out.json(&format!("{dir}/report.json"), rep)?;
                    self.out.json(&format!("{dir}/state.json"), st)?;
                    rows.push(vec![
                        num(rep.epsilon),
                        num(rep.beta),
                        num(rep.value.log_value),
                        num(rep.c_eps),
                        num(rep.lambda_eps),
                        num(rep.mu_eps),
                        num(rep.el_residual),
                        rep.converged.to_string(),
                        rep.seed.clone(),
                    ]);
                }
                self.out.csv(
                    "maximize.csv",
                    &[
                        "epsilon",
                        "beta",
                        "log_value",
                        "c_eps",
                        "lambda_eps",
                        "mu_eps",
                        "el_residual",
                        "converged",
                        "seed",
                    ],
                    &rows,
                )?;
            }
            Stage::Diagnostics => {
                self.maximize(ctx)?;
                let spectrum = ctx.spectrum.as_ref().expect("computed");
                let alpha = ctx.alpha.expect("resolved");
                let probs = problems(
                    &ctx.surface,
                    &ctx.ops,
                    spectrum,
                    self.cfg.level,
                    alpha,
                    &self.cfg.epsilons,
                )?;
                let bubble = BubbleProfile::new(ctx.surface.action.min_orbit())?;
                let states = ctx.states.as_ref().expect("computed");
                for (i, (p, (rep, st))) in probs.iter().zip(states).enumerate() {
                    let d = blowup_diagnostics(st, p, &bubble, &self.cfg.blowup)?;
                    let k = eps_key(rep.epsilon);
                    self.summary.insert(format!("diagnostics.log_r_eps[{k}]"), d.log_r_eps);
                    for le in &d.local_energies {
                        self.summary
                            .insert(format!("diagnostics.share[{k},r={}]", le.radius), le.share);
                    }
                    self.out.json(&format!("maximize/eps-{i:03}/diagnostics.json"), &d)?;
                }
            }
            Stage::Sharpness => {
                self.spectrum(ctx)?;
                let table = self.sharpness(ctx)?;
                let rows: Vec<Vec<String>> = table
                    .rows
                    .iter()
                    .map(|r| {
                        vec![
                            num(r.beta),
                            num(r.k),
                            num(r.log_value),
                            r.mesh_log_value.map(num).unwrap_or_default(),
                        ]
                    })
                    .collect();
                for (beta, slope) in &table.slopes {
                    self.summary
                        .insert(format!("sharpness.slope[beta={}]", eps_key(*beta)), *slope);
                }
                self.out.json("sharpness.json", &table)?;
                self.out
                    .csv("sharpness.csv", &["beta", "k", "log_value", "mesh_log_value"], &rows)?;
                let spectrum = ctx.spectrum.as_ref().expect("computed");
                let lam = spectrum
                    .lambda(self.cfg.level)
                    .ok_or_else(|| Error::Config("eigen_count too small for the level".into()))?;
                let start: usize = spectrum.multiplicities[..self.cfg.level - 1].iter().sum();
                let beta = 4.0 * PI * mesh.ell as f64;
                let scaling = eigen_scaling_probe(
                    &ctx.ops,
                    spectrum.eigenvectors[start].as_slice(),
                    lam,
                    beta,
                    &[1.0, 2.0, 4.0, 8.0],
                );
                self.out.json("eigen_scaling.json", &scaling)?;
            }
        }
        Ok(())
    }

    fn sharpness(&self, ctx: &Context) -> Result<SharpnessTable> {
        let s = &self.cfg.sharpness;
        let ell = ctx.surface.action.min_orbit();
        let crit = 4.0 * PI * ell as f64;
        let betas: Vec<f64> = s.beta_fractions.iter().map(|f| f * crit).collect();
        let model = RadialModel::for_surface(ctx.surface.mesh.kind())?;
        let alpha = ctx.alpha.expect("resolved");
        let area = ctx.surface.mesh.total_area();
        if s.on_mesh {
            let space = complement_projector(ctx.spectrum.as_ref().expect("computed"), self.cfg.level)?;
            let mc = MeshContext {
                mesh: &ctx.surface.mesh,
                ops: &ctx.ops,
                action: &ctx.surface.action,
                space: &space,
                center: ctx.surface.default_center(),
            };
            sharpness_probe(model, area, ell, alpha, s.radius, &betas, &s.k_grid, Some(&mc))
        } else {
            sharpness_probe::<crate::spectrum::ComplementSpace>(
                model, area, ell, alpha, s.radius, &betas, &s.k_grid, None,
            )
        }
    }
}

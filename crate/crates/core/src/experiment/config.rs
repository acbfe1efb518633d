use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constructions::AFitOptions;
use crate::error::{Error, Result};
use crate::geometry::GroupKind;
use crate::maximizer::{BlowupOptions, Seed, SolveOptions};
use crate::spectrum::InvariantSpectrum;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SurfaceSpec {
    Sphere {
        level: u32,
        group: GroupKind,
    },
    /// Flat torus; the group is generated by the listed grid translations.
    Torus {
        nx: usize,
        ny: usize,
        width: f64,
        height: f64,
        #[serde(default)]
        translations: Vec<(usize, usize)>,
    },
    /// An OFF file with either a group name (unit-sphere meshes only) or a
    /// JSON permutation file. Relative paths resolve against the config file.
    Mesh {
        path: PathBuf,
        group: String,
    },
}

/// `α` either as a number or as a fraction of `λ_j^G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Absolute(f64),
    Relative { fraction_of_lambda: f64 },
}

impl AlphaSpec {
    pub fn resolve(&self, spectrum: &InvariantSpectrum, level: usize) -> Result<f64> {
        match *self {
            AlphaSpec::Absolute(a) => Ok(a),
            AlphaSpec::Relative { fraction_of_lambda } => spectrum
                .lambda(level)
                .map(|l| fraction_of_lambda * l)
                .ok_or_else(|| Error::Config(format!("eigen_count too small to resolve λ_{level}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Mesh,
    Spectrum,
    Green,
    Bounds,
    Maximize,
    Diagnostics,
    Sharpness,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Mesh => "mesh",
            Stage::Spectrum => "spectrum",
            Stage::Green => "green",
            Stage::Bounds => "bounds",
            Stage::Maximize => "maximize",
            Stage::Diagnostics => "diagnostics",
            Stage::Sharpness => "sharpness",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharpnessSpec {
    /// `β` in units of `4πℓ`.
    pub beta_fractions: Vec<f64>,
    pub k_grid: Vec<f64>,
    pub radius: f64,
    /// Also evaluate the normalized Moser functions on the mesh.
    pub on_mesh: bool,
}

impl Default for SharpnessSpec {
    fn default() -> Self {
        Self {
            beta_fractions: vec![0.9, 1.1],
            k_grid: vec![1e2, 1e3, 1e4, 1e5],
            radius: 0.05,
            on_mesh: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub surface: SurfaceSpec,
    /// Working level `j`: the problem lives on `E_{j−1}^⊥`.
    pub level: usize,
    pub alpha: AlphaSpec,
    pub eigen_count: usize,
    pub eigen_tol: f64,
    /// Subcritical deficits `ε` for the maximizer, `β = 4πℓ − ε`.
    pub epsilons: Vec<f64>,
    /// `ε` grid of the test-function family.
    pub bounds_epsilons: Vec<f64>,
    pub fit: AFitOptions,
    pub solver: SolveOptions,
    /// Multi-start seeds; `None` uses the default set.
    pub seeds: Option<Vec<Seed>>,
    pub random_seed: u64,
    pub blowup: BlowupOptions,
    pub sharpness: SharpnessSpec,
    pub pipeline: Vec<Stage>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: "experiment".into(),
            surface: SurfaceSpec::Sphere {
                level: 4,
                group: GroupKind::Antipodal,
            },
            level: 1,
            alpha: AlphaSpec::Relative {
                fraction_of_lambda: 0.25,
            },
            eigen_count: 10,
            eigen_tol: 1e-10,
            epsilons: vec![],
            bounds_epsilons: vec![],
            fit: AFitOptions::default(),
            solver: SolveOptions::default(),
            seeds: None,
            random_seed: 1,
            blowup: BlowupOptions::default(),
            sharpness: SharpnessSpec::default(),
            pipeline: vec![],
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "config schema {} but this build reads {SCHEMA_VERSION}",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    /// Pretty JSON with every field present; parsing it back and re-emitting
    /// reproduces the same bytes.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config is serializable");
        s.push('\n');
        s
    }

    /// Reads a config file and resolves relative paths, including
    /// `output_dir`, against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        if let SurfaceSpec::Mesh { path, group } = &mut cfg.surface {
            if path.is_relative() {
                *path = base.join(&*path);
            }
            if group.parse::<GroupKind>().is_err() && Path::new(group).is_relative() {
                *group = base.join(&*group).to_string_lossy().into_owned();
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.level == 0 {
            return bad("level is 1-based".into());
        }
        if self.eigen_count == 0 {
            return bad("eigen_count must be positive".into());
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return bad("epsilons must be positive".into());
        }
        if self.bounds_epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return bad("bounds_epsilons must lie in (0, 1)".into());
        }
        if self.sharpness.k_grid.iter().any(|k| !(*k >= 1.0)) || !(self.sharpness.radius > 0.0) {
            return bad("sharpness needs k ≥ 1 and a positive radius".into());
        }
        match &self.surface {
            SurfaceSpec::Sphere { level, .. } if *level > 9 => bad(format!("sphere level {level} is too large")),
            SurfaceSpec::Torus { width, height, .. } if !(*width > 0.0 && *height > 0.0) => {
                bad("torus periods must be positive".into())
            }
            SurfaceSpec::Mesh { path, group } => {
                if !path.is_file() {
                    return bad(format!("mesh file {} does not exist", path.display()));
                }
                if group.parse::<GroupKind>().is_err() && !Path::new(group).is_file() {
                    return bad(format!("`{group}` is neither a group name nor an existing file"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Requested stages in execution order.
    pub fn stages(&self) -> Vec<Stage> {
        let mut s = self.pipeline.clone();
        s.sort();
        s.dedup();
        s
    }
}

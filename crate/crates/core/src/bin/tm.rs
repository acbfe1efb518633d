use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tm_core::constructions::{AFitOptions, RadialModel};
use tm_core::discretization::assemble;
use tm_core::experiment::{
    bounds_stage, build_surface, compare_report, csv_bytes, green_stage, load_surface, maximize_one, num, problems,
    run_experiment, thread_pool, to_json_bytes, ExperimentConfig, SpectrumReport, Surface, SurfaceSpec,
};
use tm_core::geometry::io::write_group_json;
use tm_core::geometry::GroupKind;
use tm_core::maximizer::{sharpness_probe, MeshContext, Seed, SolveOptions};
use tm_core::spectrum::{
    complement_projector, invariant_spectrum_with, ComplementSpace, EigenOptions, InvariantSpectrum,
};
use tm_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "tm",
    version,
    about = "Group-invariant Trudinger-Moser experiments on closed surfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a sphere or torus mesh with its group action.
    Mesh(MeshCmd),
    /// Invariant eigenvalues with multiplicities and residuals.
    Spectrum(SpectrumCmd),
    /// Green function, its regular constant A and the upper bound.
    Green(GreenCmd),
    /// Test-function lower bounds against the upper bound over an ε grid.
    Bounds(BoundsCmd),
    /// Subcritical maximizer at β = 4πℓ − ε.
    Maximize(MaximizeCmd),
    /// Exponential functional at normalized Moser functions over β × k.
    Sharpness(SharpnessCmd),
    /// Run an experiment described by a JSON config.
    Run(RunCmd),
    /// Per-quantity differences between two runs.
    Compare(CompareCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum SurfaceArg {
    Sphere,
    Torus,
}

#[derive(Args)]
struct MeshCmd {
    #[arg(long, value_enum, default_value = "sphere")]
    surface: SurfaceArg,
    /// Subdivision level of the sphere.
    #[arg(long, default_value_t = 4)]
    level: u32,
    /// trivial, antipodal, cyclic(m) or dihedral(m).
    #[arg(long, default_value = "trivial")]
    group: String,
    /// Torus grid size along each axis.
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    width: f64,
    #[arg(long, default_value_t = 1.0)]
    height: f64,
    /// Torus grid translation `sx,sy` generating the group; repeatable.
    #[arg(long = "translate")]
    translations: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    /// Group permutations; defaults to `<out>.group.json`.
    #[arg(long)]
    group_out: Option<PathBuf>,
    /// Also write stiffness and mass matrices in MatrixMarket format here.
    #[arg(long)]
    matrices: Option<PathBuf>,
}

#[derive(Args)]
struct MeshInput {
    #[arg(long)]
    mesh: PathBuf,
    /// Group name (unit-sphere meshes) or JSON permutation file.
    #[arg(long, default_value = "trivial")]
    group: String,
}

#[derive(Args)]
struct EigenArgs {
    /// Number of invariant eigenpairs.
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 1e-10)]
    eigen_tol: f64,
}

#[derive(Args)]
struct AlphaArgs {
    #[arg(long, conflicts_with = "alpha_fraction")]
    alpha: Option<f64>,
    /// α as a fraction of λ_j^G.
    #[arg(long)]
    alpha_fraction: Option<f64>,
    /// Working level j.
    #[arg(long, default_value_t = 1)]
    level: usize,
}

#[derive(Args)]
struct SpectrumCmd {
    #[command(flatten)]
    input: MeshInput,
    #[command(flatten)]
    eigen: EigenArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GreenCmd {
    #[command(flatten)]
    input: MeshInput,
    #[command(flatten)]
    eigen: EigenArgs,
    #[command(flatten)]
    alpha: AlphaArgs,
    /// Source vertex, or `auto` for the lowest-index vertex of a minimal orbit.
    #[arg(long, default_value = "auto")]
    orbit: String,
    #[arg(long, default_value_t = AFitOptions::default().inner)]
    fit_inner: f64,
    #[arg(long, default_value_t = AFitOptions::default().outer)]
    fit_outer: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BoundsCmd {
    #[command(flatten)]
    input: MeshInput,
    #[command(flatten)]
    eigen: EigenArgs,
    #[command(flatten)]
    alpha: AlphaArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    eps: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Margin against ε as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SeedKind {
    /// Moser function with k = 10 at a minimal orbit.
    Moser,
    Random,
    Symmetric,
    /// The default multi-start set.
    Multi,
    /// Start from `--seed-file`.
    File,
}

#[derive(Args)]
struct MaximizeCmd {
    #[command(flatten)]
    input: MeshInput,
    #[command(flatten)]
    eigen: EigenArgs,
    #[command(flatten)]
    alpha: AlphaArgs,
    #[arg(long)]
    eps: f64,
    #[arg(long, value_enum, default_value = "moser")]
    seed: SeedKind,
    /// A state.json or a JSON array of vertex values.
    #[arg(long)]
    seed_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    random_seed: u64,
    #[arg(long, default_value_t = SolveOptions::default().max_iters)]
    max_iters: usize,
    #[arg(long, default_value_t = SolveOptions::default().tol)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
    /// Multiplier identities and per-seed runs as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SharpnessCmd {
    #[command(flatten)]
    input: MeshInput,
    #[command(flatten)]
    eigen: EigenArgs,
    #[command(flatten)]
    alpha: AlphaArgs,
    /// β values in units of 4πℓ unless `--absolute-beta`.
    #[arg(long, value_delimiter = ',', default_values_t = [0.9, 1.1])]
    beta_grid: Vec<f64>,
    #[arg(long)]
    absolute_beta: bool,
    #[arg(long, value_delimiter = ',', default_values_t = [1e2, 1e3, 1e4, 1e5])]
    k_grid: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    radius: f64,
    /// Also evaluate on the mesh.
    #[arg(long)]
    on_mesh: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunCmd {
    config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareCmd {
    run_a: PathBuf,
    run_b: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = thread_pool().and_then(|pool| pool.install(|| dispatch(cli.command)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tm: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Mesh(c) => mesh(c),
        Command::Spectrum(c) => spectrum(c),
        Command::Green(c) => green(c),
        Command::Bounds(c) => bounds(c),
        Command::Maximize(c) => maximize(c),
        Command::Sharpness(c) => sharpness(c),
        Command::Run(c) => {
            let mut cfg = ExperimentConfig::load(&c.config)?;
            if let Some(out) = c.out {
                cfg.output_dir = out;
            }
            let m = run_experiment(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&m.summary)?);
            Ok(())
        }
        Command::Compare(c) => {
            let r = compare_report(&c.run_a, &c.run_b)?;
            let json = to_json_bytes(&r)?;
            match &c.out {
                Some(p) => write(p, &json)?,
                None => print!("{}", String::from_utf8_lossy(&json)),
            }
            if let Some(p) = c.csv {
                let rows: Vec<Vec<String>> = r
                    .rows
                    .iter()
                    .map(|d| vec![d.quantity.clone(), num(d.a), num(d.b), num(d.abs_diff), num(d.rel_diff)])
                    .collect();
                write(&p, &csv_bytes(&["quantity", "a", "b", "abs_diff", "rel_diff"], &rows)?)?;
            }
            Ok(())
        }
    }
}

fn write(path: &Path, data: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, data)?;
    Ok(())
}

fn mesh(c: MeshCmd) -> Result<()> {
    let spec = match c.surface {
        SurfaceArg::Sphere => SurfaceSpec::Sphere {
            level: c.level,
            group: c.group.parse::<GroupKind>().map_err(|e| Error::Config(e.to_string()))?,
        },
        SurfaceArg::Torus => {
            let translations = c
                .translations
                .iter()
                .map(|t| {
                    let parts: Vec<&str> = t.split(',').collect();
                    match parts.as_slice() {
                        [a, b] => Ok((
                            a.trim()
                                .parse()
                                .map_err(|_| Error::Config(format!("bad translation `{t}`")))?,
                            b.trim()
                                .parse()
                                .map_err(|_| Error::Config(format!("bad translation `{t}`")))?,
                        )),
                        _ => Err(Error::Config(format!("translation `{t}` must be `sx,sy`"))),
                    }
                })
                .collect::<Result<Vec<(usize, usize)>>>()?;
            SurfaceSpec::Torus {
                nx: c.n,
                ny: c.n,
                width: c.width,
                height: c.height,
                translations,
            }
        }
    };
    let s = build_surface(&spec)?;
    write(&c.out, tm_core::geometry::io::off_string(&s.mesh).as_bytes())?;
    let group_out = c.group_out.unwrap_or_else(|| c.out.with_extension("group.json"));
    let mut g = Vec::new();
    write_group_json(&s.action, &mut g)?;
    write(&group_out, &g)?;
    if let Some(dir) = c.matrices {
        assemble(&s.mesh)?.export(&dir)?;
    }
    Ok(())
}

fn load(input: &MeshInput) -> Result<Surface> {
    load_surface(&input.mesh, &input.group)
}

fn spectrum_of(
    s: &Surface,
    eigen: &EigenArgs,
    level: usize,
) -> Result<(tm_core::discretization::FemOperators, InvariantSpectrum)> {
    let ops = assemble(&s.mesh)?;
    let opts = EigenOptions {
        tol: eigen.eigen_tol,
        ..EigenOptions::default()
    };
    let spec = invariant_spectrum_with(&ops, &s.action, eigen.count.max(level + 1), &opts)?;
    Ok((ops, spec))
}

fn resolve_alpha(a: &AlphaArgs, spec: &InvariantSpectrum) -> Result<f64> {
    match (a.alpha, a.alpha_fraction) {
        (Some(x), _) => Ok(x),
        (None, Some(f)) => spec
            .lambda(a.level)
            .map(|l| f * l)
            .ok_or_else(|| Error::Config(format!("--count too small to resolve λ_{}", a.level))),
        (None, None) => Ok(0.0),
    }
}

fn spectrum(c: SpectrumCmd) -> Result<()> {
    let s = load(&c.input)?;
    let (_, spec) = spectrum_of(&s, &c.eigen, 1)?;
    write(&c.out, &to_json_bytes(&SpectrumReport::new(&spec))?)
}

fn green(c: GreenCmd) -> Result<()> {
    let s = load(&c.input)?;
    let (ops, spec) = spectrum_of(&s, &c.eigen, c.alpha.level)?;
    let alpha = resolve_alpha(&c.alpha, &spec)?;
    let center = if c.orbit == "auto" {
        s.default_center()
    } else {
        c.orbit
            .parse()
            .map_err(|_| Error::Config(format!("--orbit must be `auto` or a vertex index, got `{}`", c.orbit)))?
    };
    let fit = AFitOptions {
        inner: c.fit_inner,
        outer: c.fit_outer,
        ..AFitOptions::default()
    };
    let g = green_stage(&s, &ops, &spec, c.alpha.level, alpha, center, &fit)?;
    write(&c.out, &to_json_bytes(&g.report)?)
}

fn bounds(c: BoundsCmd) -> Result<()> {
    let s = load(&c.input)?;
    let (ops, spec) = spectrum_of(&s, &c.eigen, c.alpha.level)?;
    let alpha = resolve_alpha(&c.alpha, &spec)?;
    let g = green_stage(
        &s,
        &ops,
        &spec,
        c.alpha.level,
        alpha,
        s.default_center(),
        &AFitOptions::default(),
    )?;
    let report = bounds_stage(&g.summary, &c.eps)?;
    write(&c.out, &to_json_bytes(&report)?)?;
    if let Some(p) = c.csv {
        let rows: Vec<Vec<String>> = report
            .rows
            .iter()
            .map(|r| {
                vec![
                    num(r.epsilon),
                    num(r.margin),
                    num(r.value.log_value),
                    num(r.bound.log_value),
                ]
            })
            .collect();
        write(&p, &csv_bytes(&["epsilon", "margin", "log_value", "log_bound"], &rows)?)?;
    }
    Ok(())
}

fn maximize(c: MaximizeCmd) -> Result<()> {
    let s = load(&c.input)?;
    let (ops, spec) = spectrum_of(&s, &c.eigen, c.alpha.level)?;
    let alpha = resolve_alpha(&c.alpha, &spec)?;
    let seeds = match c.seed {
        SeedKind::Moser => vec![Seed::Moser { k: 10.0, radius: None }],
        SeedKind::Random => vec![Seed::Random { seed: c.random_seed }],
        SeedKind::Symmetric => vec![Seed::Symmetric],
        SeedKind::Multi => Seed::default_set(c.random_seed),
        SeedKind::File => {
            let path = c
                .seed_file
                .as_ref()
                .ok_or_else(|| Error::Config("--seed file needs --seed-file".into()))?;
            let text = std::fs::read_to_string(path)?;
            let v: serde_json::Value = serde_json::from_str(&text)?;
            let values: Vec<f64> = serde_json::from_value(v.get("u").cloned().unwrap_or(v))?;
            vec![Seed::Vector { values }]
        }
    };
    let opts = SolveOptions {
        max_iters: c.max_iters,
        tol: c.tol,
        ..SolveOptions::default()
    };
    let probs = problems(&s, &ops, &spec, c.alpha.level, alpha, &[c.eps])?;
    let (report, state) = maximize_one(&probs[0], &seeds, &opts)?;
    write(&c.out, &to_json_bytes(&state)?)?;
    if let Some(p) = c.report {
        write(&p, &to_json_bytes(&report)?)?;
    }
    Ok(())
}

fn sharpness(c: SharpnessCmd) -> Result<()> {
    let s = load(&c.input)?;
    let (ops, spec) = spectrum_of(&s, &c.eigen, c.alpha.level)?;
    let alpha = resolve_alpha(&c.alpha, &spec)?;
    let ell = s.action.min_orbit();
    let scale = if c.absolute_beta { 1.0 } else { 4.0 * PI * ell as f64 };
    let betas: Vec<f64> = c.beta_grid.iter().map(|b| b * scale).collect();
    let model = RadialModel::for_surface(s.mesh.kind())?;
    let area = s.mesh.total_area();
    let table = if c.on_mesh {
        let space = complement_projector(&spec, c.alpha.level)?;
        let ctx = MeshContext {
            mesh: &s.mesh,
            ops: &ops,
            action: &s.action,
            space: &space,
            center: s.default_center(),
        };
        sharpness_probe(model, area, ell, alpha, c.radius, &betas, &c.k_grid, Some(&ctx))?
    } else {
        sharpness_probe::<ComplementSpace>(model, area, ell, alpha, c.radius, &betas, &c.k_grid, None)?
    };
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
    write(
        &c.out,
        &csv_bytes(&["beta", "k", "log_value", "mesh_log_value"], &rows)?,
    )
}

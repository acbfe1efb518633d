use std::path::Path;

use proptest::prelude::*;
use tm_core::experiment::*;
use tm_core::geometry::GroupKind;
use tm_core::maximizer::Seed;
use tm_core::Error;

fn small(dir: &Path, pipeline: Vec<Stage>) -> ExperimentConfig {
    ExperimentConfig {
        name: "small".into(),
        surface: SurfaceSpec::Sphere {
            level: 3,
            group: GroupKind::Antipodal,
        },
        eigen_count: 8,
        epsilons: vec![6.0],
        bounds_epsilons: vec![1e-3, 1e-4],
        seeds: Some(vec![Seed::Moser { k: 10.0, radius: None }, Seed::Random { seed: 3 }]),
        pipeline,
        output_dir: dir.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

fn all_stages() -> Vec<Stage> {
    vec![
        Stage::Sharpness,
        Stage::Mesh,
        Stage::Spectrum,
        Stage::Green,
        Stage::Bounds,
        Stage::Maximize,
        Stage::Diagnostics,
    ]
}

#[test]
fn config_round_trip_is_byte_identical() {
    let text = r#"{"schema_version":1,"surface":{"kind":"torus","nx":16,"ny":16,"width":1.0,"height":1.0,"translations":[[8,0]]},"alpha":0.5,"epsilons":[0.1,3.0000000000000004],"pipeline":["spectrum"]}"#;
    let cfg = ExperimentConfig::from_json(text).unwrap();
    assert_eq!(cfg.alpha, AlphaSpec::Absolute(0.5));
    let canon = cfg.to_canonical_json();
    let again = ExperimentConfig::from_json(&canon).unwrap();
    assert_eq!(again, cfg);
    assert_eq!(again.to_canonical_json(), canon);
}

#[test]
fn config_errors() {
    assert!(matches!(
        ExperimentConfig::from_json(r#"{"surfac": {}}"#),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        ExperimentConfig::from_json(r#"{"schema_version": 99}"#),
        Err(Error::Schema(_))
    ));
    let cfg = ExperimentConfig {
        surface: SurfaceSpec::Mesh {
            path: "/nonexistent/mesh.off".into(),
            group: "antipodal".into(),
        },
        ..ExperimentConfig::default()
    };
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    let cfg = ExperimentConfig {
        bounds_epsilons: vec![2.0],
        ..ExperimentConfig::default()
    };
    assert!(cfg.validate().unwrap_err().is_config_error());
}

#[test]
fn config_paths_resolve_against_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("cfg");
    std::fs::create_dir(&sub).unwrap();
    std::fs::write(sub.join("mesh.off"), "OFF\n").unwrap();
    let path = sub.join("c.json");
    std::fs::write(
        &path,
        r#"{"surface":{"kind":"mesh","path":"mesh.off","group":"antipodal"},"output_dir":"out"}"#,
    )
    .unwrap();
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.output_dir, sub.join("out"));
    match cfg.surface {
        SurfaceSpec::Mesh { path, group } => {
            assert_eq!(path, sub.join("mesh.off"));
            assert_eq!(group, "antipodal");
        }
        _ => panic!(),
    }
}

#[test]
fn empty_pipeline_writes_only_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), vec![]);
    let m = run_experiment(&cfg).unwrap();
    assert!(m.artifacts.is_empty() && m.stages.is_empty() && m.mesh_sha256.is_none());
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 1);
    assert_eq!(Manifest::load(dir.path()).unwrap(), m);
}

#[test]
fn full_pipeline_is_deterministic_and_traceable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = run_experiment(&small(a.path(), all_stages())).unwrap();
    let mb = run_experiment(&small(b.path(), all_stages())).unwrap();
    assert_eq!(ma, mb);
    assert_eq!(ma.config_sha256, config_hash(&small(b.path(), all_stages())));
    let names: Vec<&str> = ma.stages.iter().map(|s| s.stage.as_str()).collect();
    assert_eq!(
        names,
        [
            "mesh",
            "spectrum",
            "green",
            "bounds",
            "maximize",
            "diagnostics",
            "sharpness"
        ]
    );
    for art in &ma.artifacts {
        let x = std::fs::read(a.path().join(&art.path)).unwrap();
        let y = std::fs::read(b.path().join(&art.path)).unwrap();
        assert_eq!(x, y, "{}", art.path);
        assert_eq!(sha256_hex(&x), art.sha256);
    }
    let mesh_off = std::fs::read(a.path().join("mesh.off")).unwrap();
    assert_eq!(ma.mesh_sha256.as_deref(), Some(sha256_hex(&mesh_off).as_str()));
    assert!(ma.summary["lambda[1]"] > 5.0 && ma.summary["lambda[1]"] < 7.0);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.path().join("maximize/eps-000/report.json")).unwrap()).unwrap();
    assert!(report["value"]["log_value"].as_f64().unwrap().is_finite());
    let csv = std::fs::read_to_string(a.path().join("bounds.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("epsilon,margin,"));
}

#[test]
fn stage_failure_keeps_partial_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path(), vec![Stage::Mesh, Stage::Spectrum, Stage::Maximize]);
    cfg.alpha = AlphaSpec::Relative {
        fraction_of_lambda: 1.5,
    };
    let err = run_experiment(&cfg).unwrap_err();
    match &err {
        Error::Stage { stage, source } => {
            assert_eq!(stage, "maximize");
            assert!(matches!(**source, Error::AlphaNotAdmissible { .. }));
        }
        e => panic!("{e}"),
    }
    assert!(err.is_config_error());
    let m = Manifest::load(dir.path()).unwrap();
    let last = m.stages.last().unwrap();
    assert_eq!((last.stage.as_str(), last.status.as_str()), ("maximize", "failed"));
    assert!(dir.path().join("spectrum.json").is_file());
    assert!(dir.path().join("mesh.off").is_file());
}

#[test]
fn compare_identical_and_refined_runs() {
    let dirs: Vec<_> = (0..4).map(|_| tempfile::tempdir().unwrap()).collect();
    let mut manifests = Vec::new();
    for (i, level) in [2u32, 3, 4, 4].into_iter().enumerate() {
        let mut cfg = small(dirs[i].path(), vec![Stage::Spectrum, Stage::Green]);
        cfg.surface = SurfaceSpec::Sphere {
            level,
            group: GroupKind::Antipodal,
        };
        cfg.fit.inner = 2.0;
        cfg.fit.outer = 5.0;
        manifests.push(run_experiment(&cfg).unwrap());
    }
    let same = compare_report(dirs[2].path(), dirs[3].path()).unwrap();
    assert!(same.rows.iter().all(|r| r.abs_diff == 0.0));
    assert!(same.only_in_a.is_empty() && same.only_in_b.is_empty());
    let lam = |r: &CompareReport| r.rows.iter().find(|d| d.quantity == "lambda[1]").unwrap().abs_diff;
    let d23 = compare_manifests(&manifests[0], &manifests[1]);
    let d34 = compare_manifests(&manifests[1], &manifests[2]);
    assert!(lam(&d34) < lam(&d23));
    let r = d34.a_richardson.unwrap();
    let f = (r.h_coarse / r.h_fine).powi(2);
    assert!((r.estimate - (f * r.fine - r.coarse) / (f - 1.0)).abs() < 1e-15);
    assert!(r.h_coarse > r.h_fine);
}

#[test]
fn compare_rejects_schema_mismatch() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&small(a.path(), vec![])).unwrap();
    std::fs::write(
        b.path().join("manifest.json"),
        r#"{"schema_version": 2, "summary": {}}"#,
    )
    .unwrap();
    assert!(matches!(compare_report(a.path(), b.path()), Err(Error::Schema(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn canonical_config_is_a_fixed_point(
        level in 0u32..6,
        frac in 0.0f64..1.0,
        eps in proptest::collection::vec(1e-6f64..10.0, 0..4),
        seed in any::<u64>(),
    ) {
        let cfg = ExperimentConfig {
            surface: SurfaceSpec::Sphere { level, group: GroupKind::Cyclic(3) },
            alpha: AlphaSpec::Relative { fraction_of_lambda: frac },
            epsilons: eps,
            random_seed: seed,
            ..ExperimentConfig::default()
        };
        let canon = cfg.to_canonical_json();
        let back = ExperimentConfig::from_json(&canon).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_canonical_json(), canon);
    }
}

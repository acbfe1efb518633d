mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use tm_core::constructions::*;
use tm_core::discretization::{assemble, exp_functional, norm_one_alpha, InvariantProjector, NormParams};
use tm_core::geometry::{build_flat_torus_mesh, build_sphere_mesh, geodesic_distance, GroupKind};
use tm_core::Error;

#[test]
fn bubble_closed_form_examples() {
    assert_eq!(bubble_integral(3, 0.0), 0.0);
    assert!((bubble_integral(1, 1.0) - (1.0 - 1.0 / (1.0 + PI))).abs() < 1e-15);
    assert!((bubble_integral(1, 1.0) - 0.758546).abs() < 1e-6);
    assert!((bubble_integral(2, 1e8) - 0.5).abs() < 1e-15);
}

#[test]
fn bubble_quadrature_agrees() {
    for ell in [1, 2, 4] {
        for r in [1.0, 10.0, 1e3] {
            let q = bubble_integral_quadrature(ell, r);
            assert!((q.value - bubble_integral(ell, r)).abs() < 1e-9, "ℓ={ell} R={r}: {q:?}");
        }
        assert!((bubble_integral(ell, 1e3) - 1.0 / ell as f64).abs() < 1e-3);
    }
}

proptest! {
    #[test]
    fn bubble_profile_peaks_at_origin(ell in 1usize..8, r in 0.0f64..100.0, dr in 1e-6f64..10.0) {
        let b = BubbleProfile::new(ell).unwrap();
        prop_assert_eq!(b.phi(0.0), 0.0);
        prop_assert!(b.phi(r + dr) < b.phi(r));
        prop_assert!(b.phi(r) <= 0.0);
    }

    #[test]
    fn bubble_integral_monotone(ell in 1usize..8, r in 0.0f64..1e3, dr in 1e-3f64..10.0) {
        prop_assert!(bubble_integral(ell, r + dr) > bubble_integral(ell, r));
        prop_assert!(bubble_integral(ell, r + dr) < 1.0 / ell as f64);
    }
}

#[test]
fn moser_k_one_is_zero() {
    let (mesh, action) = build_sphere_mesh(3, GroupKind::Antipodal).unwrap();
    let seq = MoserSequence::new(&mesh, &action, 0, 0.3, 1.0).unwrap();
    let ev = moser_evaluate(&seq, &mesh).unwrap();
    assert!(ev.values.iter().all(|&v| v == 0.0));
    assert_eq!(ev.mesh_energy, 0.0);
    assert_eq!(ev.flat_energy, 0.0);
}

#[test]
fn moser_profile_is_continuous() {
    let (mesh, action) = build_sphere_mesh(2, GroupKind::Trivial).unwrap();
    let seq = MoserSequence::new(&mesh, &action, 0, 0.2, 1e4).unwrap();
    let a = seq.plateau_radius();
    assert!((seq.profile(a * (1.0 + 1e-12)) - 1e4f64.ln()).abs() < 1e-9);
    assert!(seq.profile(0.2 * (1.0 - 1e-12)).abs() < 1e-9);
    assert_eq!(seq.profile(0.21), 0.0);
}

#[test]
fn moser_rejects_overlapping_balls() {
    let (mesh, action) = build_sphere_mesh(2, GroupKind::Antipodal).unwrap();
    // Antipodal points are π apart, so r₀ = π/4.
    let err = MoserSequence::new(&mesh, &action, 0, 0.8, 10.0).unwrap_err();
    assert!(matches!(err, Error::OverlappingBalls { .. }));
    assert!(MoserSequence::new(&mesh, &action, 0, 0.78, 10.0).is_ok());
}

#[test]
fn moser_is_invariant() {
    let (mesh, action) = build_sphere_mesh(3, GroupKind::Dihedral(3)).unwrap();
    let ell = action.min_orbit();
    let v = (0..mesh.n_vertices()).find(|&v| action.orbit(v).len() == ell).unwrap();
    let seq = MoserSequence::new(&mesh, &action, v, 0.2, 100.0).unwrap();
    let ev = moser_evaluate(&seq, &mesh).unwrap();
    for g in 0..action.group_order() {
        assert_eq!(action.pull_back(g, &ev.values), ev.values);
    }
}

#[test]
fn moser_flat_torus_energy() {
    let (mesh, action) = build_flat_torus_mesh(512, 512, 1.0, 1.0, &[]).unwrap();
    let seq = MoserSequence::new(&mesh, &action, 256 * 512 + 256, 0.45, 10.0).unwrap();
    let ev = moser_evaluate(&seq, &mesh).unwrap();
    let ratio = ev.mesh_energy / ev.flat_energy;
    assert!((ev.flat_energy - 8.0 * PI * 10f64.ln()).abs() < 1e-12);
    assert!((ratio - 1.0).abs() < 5e-3, "ratio {ratio}");
}

#[test]
fn moser_sphere_energy_close_to_flat() {
    let (mesh, action) = build_sphere_mesh(7, GroupKind::Antipodal).unwrap();
    let seq = MoserSequence::new(&mesh, &action, 0, 0.1, 1e3).unwrap();
    let ev = moser_evaluate(&seq, &mesh).unwrap();
    let ratio = ev.mesh_energy / ev.flat_energy;
    eprintln!("sphere Moser energy ratio {ratio}");
    assert!((0.95..=1.05).contains(&ratio), "ratio {ratio}");
}

#[test]
fn moser_semi_analytic_energy() {
    for model in [RadialModel::Flat, RadialModel::Sphere] {
        let m = moser_moments(2, 0.1, 1e3, model, 4.0 * PI, 0.0);
        let flat = 16.0 * PI * 1e3f64.ln();
        let tol = if model == RadialModel::Flat { 1e-10 } else { 0.01 };
        assert!((m.energy / flat - 1.0).abs() < tol, "{model:?} {}", m.energy / flat);
    }
}

#[test]
fn moser_normalized_has_unit_norm() {
    let (mesh, action) = build_sphere_mesh(4, GroupKind::Antipodal).unwrap();
    let ops = assemble(&mesh).unwrap();
    let space = InvariantProjector::new(&action, &ops);
    let p = NormParams::new(1.5, 1.0, 6.0).unwrap();
    for k in [10.0, 1e3] {
        let seq = MoserSequence::new(&mesh, &action, 0, 0.3, k).unwrap();
        let ev = moser_evaluate(&seq, &mesh).unwrap();
        let u = moser_normalized(&ev.values, &ops, &space, &p).unwrap();
        assert!((norm_one_alpha(&u, &ops, &p).unwrap() - 1.0).abs() < 1e-10);
        assert!(ops.integral(&u).abs() < 1e-12);
    }
}

#[test]
fn moser_semi_analytic_dichotomy() {
    let ell = 2;
    let crit = 4.0 * PI * ell as f64;
    let ks = [1e2, 1e3, 1e4, 1e5];
    let logs = |fac: f64| -> Vec<f64> {
        ks.iter()
            .map(|&k| {
                moser_exp_functional(ell, 0.05, k, RadialModel::Sphere, 4.0 * PI, 1.5, fac * crit)
                    .unwrap()
                    .log_value
            })
            .collect()
    };
    let above = logs(1.1);
    assert!(above.windows(2).all(|w| w[1] > w[0]), "{above:?}");
    let below = logs(0.9);
    let (lo, hi) = below
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    assert!((hi - lo) / lo.abs() < 0.05, "{below:?}");
}

#[test]
fn moser_semi_analytic_matches_mesh_at_moderate_k() {
    let (mesh, action) = build_sphere_mesh(6, GroupKind::Antipodal).unwrap();
    let ops = assemble(&mesh).unwrap();
    let space = InvariantProjector::new(&action, &ops);
    let p = NormParams::new(1.5, 4.0 * PI, 6.0).unwrap();
    let seq = MoserSequence::new(&mesh, &action, 0, 0.4, 10.0).unwrap();
    let ev = moser_evaluate(&seq, &mesh).unwrap();
    let u = moser_normalized(&ev.values, &ops, &space, &p).unwrap();
    let mesh_log = exp_functional(&u, p.beta, &ops).log_value;
    let semi = moser_exp_functional(2, 0.4, 10.0, RadialModel::Sphere, 4.0 * PI, 1.5, p.beta).unwrap();
    assert!(
        (mesh_log - semi.log_value).abs() < 0.02,
        "{mesh_log} vs {}",
        semi.log_value
    );
}

fn antipodal_green(level: u32, alpha: f64) -> (tm_core::geometry::SurfaceMesh, GreenDecomposition) {
    let (mesh, action) = build_sphere_mesh(level, GroupKind::Antipodal).unwrap();
    let ops = assemble(&mesh).unwrap();
    let p = NormParams::new(alpha, 1.0, 6.0).unwrap();
    let dec = green_solve(&ops, &action, &action.orbit(0), &p).unwrap();
    (mesh, dec)
}

#[test]
fn green_is_mean_zero_and_symmetric() {
    let (mesh, action) = build_sphere_mesh(4, GroupKind::Antipodal).unwrap();
    let ops = assemble(&mesh).unwrap();
    let p = NormParams::new(0.0, 1.0, 6.0).unwrap();
    let dec = green_solve(&ops, &action, &action.orbit(0), &p).unwrap();
    assert!(dec.warnings.is_empty());
    assert!(dec.residual <= 1e-10);
    assert!(ops.integral(&dec.values).abs() <= 1e-8);
    for g in 0..action.group_order() {
        assert_eq!(action.pull_back(g, &dec.values), dec.values);
    }
}

#[test]
fn green_warns_on_non_minimal_orbit() {
    let (mesh, action) = build_sphere_mesh(2, GroupKind::Cyclic(3)).unwrap();
    let ops = assemble(&mesh).unwrap();
    let p = NormParams::new(0.0, 1.0, 1.0).unwrap();
    let v = (0..mesh.n_vertices())
        .find(|&v| action.orbit(v).len() > action.min_orbit())
        .unwrap();
    let dec = green_solve(&ops, &action, &action.orbit(v), &p).unwrap();
    assert_eq!(dec.warnings.len(), 1);
}

#[test]
fn green_matches_antipodal_closed_form() {
    let (mesh, dec) = antipodal_green(5, 0.0);
    let d = geodesic_distance(&mesh, 0).unwrap().distances;
    let mut worst: f64 = 0.0;
    for v in 0..mesh.n_vertices() {
        if d[v] >= 0.2 && d[v] <= PI - 0.2 {
            worst = worst.max((dec.values[v] - common::antipodal_green(d[v])).abs());
        }
    }
    assert!(worst < 1e-3, "max error {worst}");
}

#[test]
fn green_matches_torus_oracle() {
    let n = 128;
    let (mesh, action) = build_flat_torus_mesh(n, n, 1.0, 1.0, &[]).unwrap();
    let ops = assemble(&mesh).unwrap();
    let p = NormParams::new(0.0, 1.0, 4.0 * PI * PI).unwrap();
    let dec = green_solve(&ops, &action, &[0], &p).unwrap();
    let mut scale: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for v in 0..mesh.n_vertices() {
        let e = mesh.edge_vector(0, v);
        if e[0].hypot(e[1]) < 0.1 {
            continue;
        }
        let g = common::torus_green(e[0], e[1]);
        scale = scale.max(g.abs());
        worst = worst.max((dec.values[v] - g).abs());
    }
    eprintln!("torus Green: max abs error {worst:.3e}, max |G| {scale:.3e}");
    assert!(worst / scale <= 1e-3);
    // The Ewald oracle itself agrees with the truncated Fourier series.
    for (x, y) in [(0.3, 0.1), (0.5, 0.5), (0.2, 0.35)] {
        assert!((common::torus_green(x, y) - common::torus_green_fourier(x, y, 64)).abs() < 1e-4);
    }
    let fit = extract_a(&dec, &mesh, &AFitOptions::default()).unwrap();
    assert!((fit.a - common::torus_green_constant()).abs() < 1e-2, "A = {}", fit.a);
}

#[test]
fn a_matches_antipodal_closed_form() {
    let (mesh, dec) = antipodal_green(5, 0.0);
    let fit = extract_a(&dec, &mesh, &AFitOptions::default()).unwrap();
    assert!(
        (fit.a - common::antipodal_green_constant()).abs() < 1e-4,
        "A = {}",
        fit.a
    );
    assert!(fit.residual_rms < 1e-4);
    assert!(fit.remainder.iter().all(|&(_, r)| r.abs() < 1e-2));
}

#[test]
fn a_self_converges() {
    let mut a = vec![];
    for level in 4..=6 {
        let (mesh, dec) = antipodal_green(level, 3.0);
        a.push(extract_a(&dec, &mesh, &AFitOptions::default()).unwrap().a);
    }
    assert!((a[1] - a[2]).abs() < (a[0] - a[1]).abs(), "{a:?}");
}

#[test]
fn a_unchanged_by_projected_shift() {
    let (mesh, action) = build_sphere_mesh(4, GroupKind::Antipodal).unwrap();
    let ops = assemble(&mesh).unwrap();
    let space = InvariantProjector::new(&action, &ops);
    let p = NormParams::new(0.0, 1.0, 6.0).unwrap();
    let dec = green_solve(&ops, &action, &action.orbit(0), &p).unwrap();
    let mut shifted = dec.clone();
    shifted.values = dec.values.iter().map(|g| g + 0.37).collect();
    use tm_core::discretization::Subspace;
    shifted.values = space.project(&shifted.values);
    let a0 = extract_a(&dec, &mesh, &AFitOptions::default()).unwrap().a;
    let a1 = extract_a(&shifted, &mesh, &AFitOptions::default()).unwrap().a;
    assert!((a0 - a1).abs() < 1e-12);
}

#[test]
fn a_fit_rejects_annulus_reaching_orbit() {
    let (mesh, dec) = antipodal_green(3, 0.0);
    let opts = AFitOptions {
        outer: 25.0,
        ..AFitOptions::default()
    };
    let err = extract_a(&dec, &mesh, &opts).unwrap_err();
    assert!(matches!(err, Error::Geometry(_)));
}

#[test]
fn richardson_removes_leading_error() {
    let exact = 1.25;
    let coarse = exact + 0.4 * 0.1f64.powi(2);
    let fine = exact + 0.4 * 0.05f64.powi(2);
    assert!((richardson(coarse, fine, 2.0) - exact).abs() < 1e-14);
}

#[test]
fn upper_bound_examples() {
    let b = upper_bound_value(0.0, 4.0 * PI, 2);
    assert!((b.value - (4.0 * PI + 2.0 * PI * 1f64.exp())).abs() < 1e-12);
    assert!((b.value - 29.65).abs() < 0.01);
    assert!(upper_bound_value(500.0, 4.0 * PI, 2).log_value.is_finite());
}

proptest! {
    #[test]
    fn upper_bound_monotone_in_a(a in -1.0f64..1.0, da in 1e-6f64..0.5) {
        prop_assert!(upper_bound_value(a + da, 4.0 * PI, 2).value > upper_bound_value(a, 4.0 * PI, 2).value);
    }

    #[test]
    fn disk_moment_matches_quadrature(a in -0.5f64..0.5, rho in 1e-6f64..0.1, n in 0u32..3) {
        let k = 1.0 / (4.0 * PI);
        let q = tm_core::linalg::quadrature::integrate(
            |r: f64| 2.0 * PI * r * (a - k * r.ln()).powi(n as i32), 0.0, rho, 1e-18, 1e-12, 2000);
        let exact = log_model_disk_moment(a, 2.0, rho, n);
        prop_assert!((q.value - exact).abs() <= 1e-9 * exact.abs().max(rho * rho));
    }
}

#[test]
fn green_l2_matches_closed_form() {
    let (mesh, dec) = antipodal_green(5, 0.0);
    let q = tm_core::linalg::quadrature::integrate(
        |d: f64| 2.0 * 2.0 * PI * common::antipodal_green(d).powi(2) * d.sin(),
        0.0,
        PI / 2.0,
        1e-14,
        1e-12,
        2000,
    );
    let g2 = green_l2_squared(&dec, &mesh, common::antipodal_green_constant(), 2);
    assert!((g2 / q.value - 1.0).abs() < 1e-2, "{g2} vs {}", q.value);
}

fn family_summary() -> GreenSummary {
    let (mesh, dec) = antipodal_green(5, 1.5);
    GreenSummary::from_decomposition(&dec, &mesh, &AFitOptions::default()).unwrap()
}

#[test]
fn test_family_properties() {
    let s = family_summary();
    let l = s.ell as f64;
    let mut prev: Option<TestFunctionFamily> = None;
    for eps in [1e-3, 1e-4, 1e-5, 1e-6] {
        let fam = build_test_family(&s, eps).unwrap();
        assert!(fam.norm_error < 1e-12, "{}", fam.norm_error);
        assert!(fam.continuity_error < 1e-8, "{}", fam.continuity_error);
        let report = test_family_lower_bound(&fam);
        assert!(report.margin > 0.0, "ε={eps}: {report:?}");
        assert!(report.inner_excess > 0.0);
        if let Some(p) = prev {
            assert!(fam.c2 > p.c2);
            assert!((fam.b - 1.0 / (4.0 * PI * l)).abs() < (p.b - 1.0 / (4.0 * PI * l)).abs());
            assert!((fam.mean * fam.c()).abs() < (p.mean * p.c()).abs());
        }
        prev = Some(fam);
    }
}

#[test]
fn test_family_rejects_large_epsilon() {
    let mut s = family_summary();
    assert!(build_test_family(&s, 0.2).is_ok());
    s.r0 = 0.01;
    assert!(matches!(build_test_family(&s, 1e-3), Err(Error::Geometry(_))));
    assert!(build_test_family(&s, 1e-4).is_ok());
    assert!(build_test_family(&s, 1.5).is_err());
}

#[test]
fn test_family_outer_linearization_is_lower() {
    let (mesh, dec) = antipodal_green(4, 1.5);
    let s = GreenSummary::from_decomposition(&dec, &mesh, &AFitOptions::default()).unwrap();
    let fam = build_test_family(&s, 1e-3).unwrap();
    let (full, linear) = outer_mesh_check(&fam, &dec, &mesh).unwrap();
    assert!(linear <= full);
    let phi = fam.sample_on_mesh(&dec, &mesh).unwrap();
    assert!(phi.iter().all(|x| x.is_finite()));
}

#[test]
fn test_family_cutoff_shape() {
    let s = family_summary();
    let fam = build_test_family(&s, 1e-4).unwrap();
    let r = fam.gluing_radius();
    assert_eq!(fam.cutoff(0.5 * r), 1.0);
    assert_eq!(fam.cutoff(r), 1.0);
    assert_eq!(fam.cutoff(2.0 * r), 0.0);
    assert!((fam.cutoff(1.5 * r) - 0.5).abs() < 1e-15);
    let g = s.local_model(r);
    assert!((fam.eta(r * (1.0 + 1e-12), g) - fam.eta(r, g)).abs() < 1e-8);
}

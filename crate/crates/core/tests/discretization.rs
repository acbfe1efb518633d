use std::f64::consts::PI;

use proptest::prelude::*;
use tm_core::discretization::{
    assemble, dirichlet_energy, exp_functional, norm_one_alpha, project_invariant_meanzero, FemOperators,
    InvariantProjector, NormParams, ShiftedSolver, Subspace,
};
use tm_core::geometry::{build_flat_torus_mesh, build_sphere_mesh, GroupKind, SurfaceKind, SurfaceMesh};
use tm_core::Error;

fn sphere(level: u32, kind: GroupKind) -> (SurfaceMesh, tm_core::geometry::GroupAction, FemOperators) {
    let (mesh, action) = build_sphere_mesh(level, kind).unwrap();
    let ops = assemble(&mesh).unwrap();
    (mesh, action, ops)
}

#[test]
fn stiffness_annihilates_constants() {
    let (_, _, ops) = sphere(3, GroupKind::Trivial);
    let k1 = ops.stiffness.mul_vec(&vec![1.0; ops.n()]);
    assert!(k1.iter().all(|v| v.abs() < 1e-10));
    assert!(ops.stiffness.is_symmetric(0.0));
    assert!(ops.mass.is_symmetric(0.0));
    let m1 = ops.mass.quad_form(&vec![1.0; ops.n()]);
    assert!((m1 - ops.total_area).abs() < 1e-10 * ops.total_area);
    let rows = ops.mass.row_sums();
    for (r, a) in rows.iter().zip(&ops.lumped_mass) {
        assert!((r - a).abs() < 1e-14);
    }
}

#[test]
fn sphere_rayleigh_quotient_of_z_tends_to_two() {
    let mut prev = f64::INFINITY;
    for level in 2..6 {
        let (mesh, _, ops) = sphere(level, GroupKind::Trivial);
        let z: Vec<f64> = mesh.vertices().iter().map(|p| p[2]).collect();
        let q = ops.energy(&z) / ops.l2_squared(&z);
        let err = (q - 2.0).abs();
        assert!(err < prev);
        prev = err;
    }
    assert!(prev < 2e-3, "{prev}");
}

#[test]
fn torus_rayleigh_quotient_of_sine() {
    let (mesh, _) = build_flat_torus_mesh(64, 64, 1.0, 1.0, &[]).unwrap();
    let ops = assemble(&mesh).unwrap();
    let u: Vec<f64> = mesh.vertices().iter().map(|p| (2.0 * PI * p[0]).sin()).collect();
    let q = ops.energy(&u) / ops.l2_squared(&u);
    assert!((q / (4.0 * PI * PI) - 1.0).abs() < 2e-3, "{q}");
}

#[test]
fn operators_commute_with_group() {
    for kind in [GroupKind::Antipodal, GroupKind::Dihedral(3), GroupKind::Cyclic(5)] {
        let (_, action, ops) = sphere(3, kind);
        for p in action.permutations() {
            for i in 0..ops.n() {
                for (j, v) in ops.stiffness.row(i) {
                    assert_eq!(ops.stiffness.get(p[i], p[j]), v);
                }
                for (j, v) in ops.mass.row(i) {
                    assert_eq!(ops.mass.get(p[i], p[j]), v);
                }
            }
        }
    }
}

#[test]
fn assembly_is_deterministic() {
    let (_, _, a) = sphere(3, GroupKind::Antipodal);
    let (_, _, b) = sphere(3, GroupKind::Antipodal);
    assert_eq!(a.stiffness, b.stiffness);
    assert_eq!(a.mass, b.mass);
}

#[test]
fn degenerate_triangle_is_reported() {
    let (mesh, _) = build_sphere_mesh(0, GroupKind::Trivial).unwrap();
    let mut vertices = mesh.vertices().to_vec();
    // Collapse vertex 5 onto vertex 0.
    vertices[5] = vertices[0];
    let squashed = SurfaceMesh::new(vertices, mesh.triangles().to_vec(), SurfaceKind::Imported).unwrap();
    match assemble(&squashed) {
        Err(Error::DegenerateTriangle { index, .. }) => assert!(mesh.triangles()[index].contains(&5)),
        other => panic!("expected a degenerate triangle error, got {other:?}"),
    }
}

#[test]
fn projection_examples() {
    let (mesh, action, ops) = sphere(3, GroupKind::Antipodal);
    let z: Vec<f64> = mesh.vertices().iter().map(|p| p[2]).collect();
    assert!(project_invariant_meanzero(&z, &action, &ops).iter().all(|&v| v == 0.0));
    let c = project_invariant_meanzero(&vec![3.5; ops.n()], &action, &ops);
    assert!(c.iter().all(|&v| v.abs() < 1e-14));
    let zz: Vec<f64> = mesh.vertices().iter().map(|p| p[2] * p[2] + p[0]).collect();
    let once = project_invariant_meanzero(&zz, &action, &ops);
    let twice = project_invariant_meanzero(&once, &action, &ops);
    for (a, b) in once.iter().zip(twice.iter()) {
        assert!((a - b).abs() < 1e-14);
    }
    assert!(ops.mass_mean(&once).abs() < 1e-12);
    for p in action.permutations() {
        for v in 0..ops.n() {
            assert_eq!(once[p[v]], once[v]);
        }
    }
}

#[test]
fn projection_is_mass_self_adjoint() {
    let (mesh, action, ops) = sphere(2, GroupKind::Dihedral(3));
    let proj = InvariantProjector::new(&action, &ops);
    let u: Vec<f64> = mesh.vertices().iter().map(|p| p[0] + 2.0 * p[1] * p[2]).collect();
    let w: Vec<f64> = mesh.vertices().iter().map(|p| (3.0 * p[0]).sin() + p[2]).collect();
    let lhs = ops.mass.bilinear(&proj.project(&u), &w);
    let rhs = ops.mass.bilinear(&u, &proj.project(&w));
    assert!((lhs - rhs).abs() < 1e-12);
    // The dual projection is the Euclidean transpose.
    let a: f64 = proj.project(&u).iter().zip(&w).map(|(x, y)| x * y).sum();
    let b: f64 = u.iter().zip(&proj.project_dual(&w)).map(|(x, y)| x * y).sum();
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn norm_examples() {
    let (mesh, action, ops) = sphere(3, GroupKind::Antipodal);
    let zero = vec![0.0; ops.n()];
    let p = NormParams::new(0.0, 1.0, 6.0).unwrap();
    assert_eq!(norm_one_alpha(&zero, &ops, &p).unwrap(), 0.0);
    let u = project_invariant_meanzero(
        &mesh.vertices().iter().map(|q| q[2] * q[2]).collect::<Vec<_>>(),
        &action,
        &ops,
    );
    let n0 = norm_one_alpha(&u, &ops, &p).unwrap();
    assert!((n0 - ops.energy(&u).sqrt()).abs() < 1e-14);
    let p2 = NormParams::new(2.5, 1.0, 6.0).unwrap();
    let n2 = norm_one_alpha(&u, &ops, &p2).unwrap();
    assert!((n2 * n2 + 2.5 * ops.l2_squared(&u) - ops.energy(&u)).abs() < 1e-12);
    assert!(matches!(
        NormParams::new(6.0, 1.0, 6.0),
        Err(Error::AlphaNotAdmissible { .. })
    ));
    assert!(NormParams::new(1.0, 0.0, 6.0).is_err());
    let bad = NormParams {
        alpha: 100.0,
        beta: 1.0,
        eigen_gap_check: 6.0,
    };
    assert!(matches!(
        norm_one_alpha(&u, &ops, &bad),
        Err(Error::NegativeNorm { .. })
    ));
}

#[test]
fn exp_functional_examples() {
    let (mesh, action, ops) = sphere(3, GroupKind::Antipodal);
    let zero = vec![0.0; ops.n()];
    let f0 = exp_functional(&zero, 5.0, &ops);
    assert!((f0.value - ops.total_area).abs() < 1e-12 * ops.total_area);
    assert!((4.0 * PI - f0.value).abs() < 2e-2 * 4.0 * PI);

    let u = project_invariant_meanzero(
        &mesh.vertices().iter().map(|q| q[2] * q[2]).collect::<Vec<_>>(),
        &action,
        &ops,
    );
    let lumped_l2: f64 = ops.lumped_mass.iter().zip(u.iter()).map(|(a, x)| a * x * x).sum();
    for beta in [1e-3, 1e-4, 1e-5] {
        let f = exp_functional(&u, beta, &ops).value;
        let expansion = ops.total_area + beta * lumped_l2;
        assert!((f - expansion).abs() < 2.0 * beta * beta * lumped_l2, "beta {beta}");
    }

    let mut spike = vec![0.0; ops.n()];
    spike[7] = 10.0;
    let f = exp_functional(&spike, 100.0, &ops);
    assert!(f.value.is_infinite());
    let dominant = ops.lumped_mass[7].ln() + 1.0e4;
    assert!((f.log_value - dominant).abs() < 1e-9);
}

#[test]
fn exp_functional_is_exactly_equivariant() {
    let (mesh, action, ops) = sphere(3, GroupKind::Dihedral(3));
    let u: Vec<f64> = mesh
        .vertices()
        .iter()
        .map(|p| 2.0 * p[0] + p[1] * p[2] - p[2])
        .collect();
    let base = exp_functional(&u, 3.0, &ops);
    for g in 0..action.group_order() {
        let moved = action.pull_back(g, &u);
        assert_eq!(
            exp_functional(&moved, 3.0, &ops).log_value.to_bits(),
            base.log_value.to_bits()
        );
    }
}

#[test]
fn dirichlet_energy_matches_matrix_form() {
    let (mesh, _, ops) = sphere(3, GroupKind::Trivial);
    let u: Vec<f64> = mesh.vertices().iter().map(|p| p[0] * p[1] + p[2]).collect();
    assert!((dirichlet_energy(&mesh, &u) - ops.energy(&u)).abs() < 1e-12);
}

#[test]
fn shifted_solver_inverts_on_the_invariant_space() {
    let (mesh, action, ops) = sphere(3, GroupKind::Antipodal);
    let space = InvariantProjector::new(&action, &ops);
    let solver = ShiftedSolver::new(&ops, 3.0).unwrap();
    let x_true = space.project(
        &mesh
            .vertices()
            .iter()
            .map(|p| p[0] * p[1] + p[2].powi(4))
            .collect::<Vec<_>>(),
    );
    let b = solver.operator().mul_vec(&x_true);
    let x = solver.solve(&space, &b, 1e-13).unwrap();
    for (a, e) in x.iter().zip(&x_true) {
        assert!((a - e).abs() < 1e-10);
    }
    let too_big = solver.with_alpha(&ops, 40.0);
    assert!(too_big.solve(&space, &b, 1e-12).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn stiffness_is_positive_semidefinite(seed in prop::collection::vec(-1.0f64..1.0, 42)) {
        let (_, _, ops) = sphere(1, GroupKind::Trivial);
        prop_assert!(ops.energy(&seed) >= -1e-14);
    }

    #[test]
    fn exp_functional_monotone_in_beta(seed in prop::collection::vec(-1.0f64..1.0, 42), b in 0.1f64..10.0) {
        let (_, _, ops) = sphere(1, GroupKind::Trivial);
        prop_assume!(seed.iter().any(|&x| x != 0.0));
        let lo = exp_functional(&seed, b, &ops).log_value;
        let hi = exp_functional(&seed, b * 1.1, &ops).log_value;
        prop_assert!(hi > lo);
    }

    #[test]
    fn norm_identity(seed in prop::collection::vec(-1.0f64..1.0, 162), alpha in 0.0f64..5.0) {
        let (_, action, ops) = sphere(2, GroupKind::Antipodal);
        let u = project_invariant_meanzero(&seed, &action, &ops);
        let p = NormParams::new(alpha, 1.0, 5.5).unwrap();
        let n = norm_one_alpha(&u, &ops, &p).unwrap();
        prop_assert!((n * n + alpha * ops.l2_squared(&u) - ops.energy(&u)).abs() < 1e-12 * ops.energy(&u).max(1.0));
    }

    #[test]
    fn projection_idempotent(seed in prop::collection::vec(-10.0f64..10.0, 66)) {
        let (_, action, ops) = sphere(2, GroupKind::Dihedral(2));
        let once = project_invariant_meanzero(&seed, &action, &ops);
        let twice = project_invariant_meanzero(&once, &action, &ops);
        for (a, b) in once.iter().zip(twice.iter()) {
            prop_assert!((a - b).abs() < 1e-13, "{} vs {}", a, b);
        }
    }
}

//! Solver agreement and time stepping on agglomerated polygonal meshes.

use nalgebra::DVector;
use psdg::assembly::{assemble_load, SystemMatrices};
use psdg::bench::{default_problem, random_rhs};
use psdg::krylov::{DofLayout, PreparedSolver, SolverConfig, SolverKind};
use psdg::mesh::{agglomerate, build_cartesian_mesh, parse_mesh, write_mesh, PolyMesh, Rect};
use psdg::problem::{Manufactured, SeparableField, TimeProfile};
use psdg::space::DgSpace;
use psdg::timestep::{energy_error, implicit_euler_run, TimeConfig};

fn polygons() -> PolyMesh {
    let fine = build_cartesian_mesh(6, 6, Rect::unit()).unwrap();
    agglomerate(&fine, 9, 4).unwrap().mesh.classify_boundary(|x| x[1] == 0.0 || x[0] == 1.0)
}

#[test]
fn all_solvers_match_dense_solution() {
    let space = DgSpace::new(polygons(), 2).unwrap();
    let sys = SystemMatrices::assemble(&space, 1.0, 10.0).unwrap();
    let cfg = SolverConfig::new(1e-12, 50_000).unwrap();
    for dt in [1e-1, 1e-4] {
        let a = sys.system(dt).unwrap();
        let b = random_rhs(&sys, &assemble_load(&space, &default_problem(1.0), dt, 10.0), dt, 3, 0);
        let exact = a.to_dense().cholesky().unwrap().solve(&DVector::from_column_slice(&b));
        for kind in SolverKind::ALL {
            let (x, rep) = PreparedSolver::new(kind, &a, DofLayout::of(&space)).unwrap().solve(&a, &b, &cfg);
            assert!(rep.converged, "{kind}");
            let err = (DVector::from_column_slice(&x) - &exact).norm() / exact.norm();
            assert!(err < 1e-6, "{kind} dt={dt:e}: {err:e}");
        }
    }
}

#[test]
fn mesh_survives_file_round_trip() {
    let mesh = polygons();
    let back = parse_mesh(&write_mesh(&mesh)).unwrap();
    assert_eq!(back.num_elements(), mesh.num_elements());
    assert_eq!(back.boundary_tags(), mesh.boundary_tags());
    let s1 = SystemMatrices::assemble(&DgSpace::new(mesh, 1).unwrap(), 1.0, 10.0).unwrap();
    let s2 = SystemMatrices::assemble(&DgSpace::new(back, 1).unwrap(), 1.0, 10.0).unwrap();
    assert!(s1.a.max_abs_diff(&s2.a) <= 1e-12 * s1.a.max_abs());
}

#[test]
fn solvers_give_the_same_trajectory() {
    let space = DgSpace::new(polygons(), 2).unwrap();
    let sys = SystemMatrices::assemble(&space, 1.0, 10.0).unwrap();
    let exact = SeparableField::trigonometric(TimeProfile::OnePlusSin(3.0));
    let data = Manufactured::new(exact.clone(), 1.0);
    let time = TimeConfig::new(0.02, 0.1).unwrap();
    let cfg = SolverConfig::new(1e-11, 50_000).unwrap();
    let runs: Vec<_> = SolverKind::ALL
        .iter()
        .map(|&k| implicit_euler_run(&space, &sys, &data, time, k, &cfg).unwrap())
        .collect();
    let e0 = energy_error(&space, &runs[0].solution, &exact, 0.1, 10.0);
    for r in &runs[1..] {
        assert_eq!(r.reports.len(), 5);
        let e = energy_error(&space, &r.solution, &exact, 0.1, 10.0);
        assert!((e - e0).abs() <= 1e-6 * e0);
    }
}

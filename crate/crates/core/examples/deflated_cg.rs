//! Plain CG against CG deflated by the kernel of the mass matrix as the
//! time step shrinks.

use psdg::assembly::{assemble_load, SystemMatrices};
use psdg::bench::{default_problem, random_rhs};
use psdg::krylov::{build_deflator, cg, deflated_cg, SolverConfig};
use psdg::mesh::{agglomerate, build_cartesian_mesh, Rect};
use psdg::space::DgSpace;

fn main() -> psdg::Result<()> {
    let fine = build_cartesian_mesh(10, 10, Rect::unit())?;
    let mesh = agglomerate(&fine, 30, 1)?.mesh.classify_boundary(|x| (x[0] - 1.0).abs() < 1e-12);
    let space = DgSpace::new(mesh, 2)?;
    let sys = SystemMatrices::assemble(&space, 1.0, 10.0)?;
    let data = default_problem(1.0);
    let cfg = SolverConfig::new(1e-8, 100_000)?;

    println!("{:>8} {:>6} {:>6} {:>12}", "dt", "cg", "dcg", "|x_cg-x_dcg|");
    for dt in [1e-3, 1e-5, 1e-7, 1e-9] {
        let a = sys.system(dt)?;
        let b = random_rhs(&sys, &assemble_load(&space, &data, dt, 10.0), dt, 42, 0);
        let (x1, r1) = cg(&a, &b, &cfg);
        let (x2, r2) = deflated_cg(&a, &b, &build_deflator(&a)?, &cfg);
        let diff = x1.iter().zip(&x2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("{dt:>8.0e} {:>6} {:>6} {diff:>12.2e}", r1.iterations, r2.iterations);
    }
    Ok(())
}

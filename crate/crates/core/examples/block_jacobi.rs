//! Component-wise against collective Block-Jacobi preconditioning.

use psdg::assembly::{assemble_load, SystemMatrices};
use psdg::bench::{default_problem, random_rhs};
use psdg::krylov::{build_block_jacobi, pcg, BlockLayout, DofLayout, SolverConfig};
use psdg::mesh::{agglomerate, build_cartesian_mesh, Rect};
use psdg::space::DgSpace;

fn main() -> psdg::Result<()> {
    let fine = build_cartesian_mesh(10, 10, Rect::unit())?;
    let mesh = agglomerate(&fine, 30, 1)?.mesh.classify_boundary(|x| (x[0] - 1.0).abs() < 1e-12);
    let space = DgSpace::new(mesh, 2)?;
    let sys = SystemMatrices::assemble(&space, 1.0, 10.0)?;
    let data = default_problem(1.0);
    let cfg = SolverConfig::new(1e-8, 100_000)?;
    let dofs = DofLayout::of(&space);

    println!("{:>8} {:>10} {:>10}", "dt", "bj", "cbj");
    for dt in [1e-3, 1e-5, 1e-7, 1e-9] {
        let a = sys.system(dt)?;
        let b = random_rhs(&sys, &assemble_load(&space, &data, dt, 10.0), dt, 42, 0);
        let mut its = Vec::new();
        for layout in [BlockLayout::ComponentWise, BlockLayout::Collective] {
            let p = build_block_jacobi(&a, dofs, layout)?;
            its.push(pcg(&a, &b, &p, &cfg).1.iterations);
        }
        println!("{dt:>8.0e} {:>10} {:>10}", its[0], its[1]);
    }
    Ok(())
}

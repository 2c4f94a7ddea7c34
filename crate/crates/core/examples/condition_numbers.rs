//! Condition numbers of `A*` with and without collective Block-Jacobi.

use psdg::assembly::SystemMatrices;
use psdg::krylov::{build_block_jacobi, estimate_condition_number, BlockLayout, ConditionOptions, DofLayout};
use psdg::mesh::{agglomerate, build_cartesian_mesh, Rect};
use psdg::space::DgSpace;

fn main() -> psdg::Result<()> {
    let fine = build_cartesian_mesh(8, 8, Rect::unit())?;
    let mesh = agglomerate(&fine, 20, 3)?.mesh.classify_boundary(|x| (x[0] - 1.0).abs() < 1e-12);
    let space = DgSpace::new(mesh, 2)?;
    let sys = SystemMatrices::assemble(&space, 1.0, 10.0)?;
    // Force the Lanczos path even though the problem is small.
    let opts = ConditionOptions {
        dense_threshold: 0,
        ..Default::default()
    };

    println!("{:>8} {:>12} {:>12} {:>6}", "dt", "kappa(A*)", "kappa(cbj)", "steps");
    for dt in [1e-2, 1e-4, 1e-6, 1e-8, 1e-10] {
        let a = sys.system(dt)?;
        let raw = estimate_condition_number(&a, None, &opts)?;
        let p = build_block_jacobi(&a, DofLayout::of(&space), BlockLayout::Collective)?;
        let pre = estimate_condition_number(&a, Some(&p), &opts)?;
        println!("{dt:>8.0e} {:>12.3e} {:>12.3e} {:>6}", raw.kappa, pre.kappa, raw.steps + pre.steps);
    }
    Ok(())
}

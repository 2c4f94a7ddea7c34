//! Assembles the DG matrices and checks their Kronecker structure and the
//! coarse deflation matrix.

use psdg::assembly::{kron_structure_check, SystemMatrices};
use psdg::bench::{cartesian_space, Side};
use psdg::krylov::Deflator;

fn main() -> psdg::Result<()> {
    let dt = 1e-6;
    for p in 1..=3 {
        let space = cartesian_space(4, p, &[Side::Right])?;
        let sys = SystemMatrices::assemble(&space, 1.0, 10.0)?;
        let dev = kron_structure_check(&sys);

        let d = Deflator::from_system(&sys, dt)?;
        let mut expected = sys.b1.add_scaled(1.0, &sys.b3);
        expected.scale(dt / 2.0);
        let w_dev = d.coarse_matrix().max_abs_diff(&expected) / expected.max_abs();

        println!(
            "p={p} n={:5} nnz(A*)={:7} |M-K(x)M1|/|M|={:.1e} |A-blocks|/|A|={:.1e} |W-dt/2(B1+B3)|/|W|={:.1e}",
            sys.total_dofs(),
            sys.system(dt)?.nnz(),
            dev.mass / sys.m.max_abs(),
            dev.stiffness / sys.a.max_abs(),
            w_dev
        );
    }
    Ok(())
}

//! Implicit Euler integration of a manufactured problem, printing the
//! per-step solver log and the final energy error.

use psdg::assembly::SystemMatrices;
use psdg::bench::{cartesian_space, Side};
use psdg::krylov::{SolverConfig, SolverKind};
use psdg::problem::{Manufactured, SeparableField, TimeProfile};
use psdg::timestep::{energy_error, implicit_euler_run, TimeConfig};

fn main() -> psdg::Result<()> {
    let space = cartesian_space(6, 2, &[Side::Right, Side::Top])?;
    let sys = SystemMatrices::assemble(&space, 1.0, 10.0)?;
    let exact = SeparableField::trigonometric(TimeProfile::OnePlusSin(2.0));
    let data = Manufactured::new(exact.clone(), 1.0);
    let time = TimeConfig::new(0.01, 0.1)?;

    for solver in [SolverKind::DeflatedCg, SolverKind::CollectiveBlockJacobi] {
        let out = implicit_euler_run(&space, &sys, &data, time, solver, &SolverConfig::new(1e-10, 10_000)?)?;
        println!("{solver}:");
        print!("{}", out.step_log_csv());
        let err = energy_error(&space, &out.solution, &exact, time.final_time, 10.0);
        println!("energy error at T = {}: {err:.4e}\n", time.final_time);
    }
    Ok(())
}

//! Spatial and temporal convergence in the energy norm against
//! manufactured solutions.

use psdg::bench::{run_convergence, ExperimentConfig, Study};
use psdg::krylov::SolverKind;

fn main() -> psdg::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let dt = args.first().copied().unwrap_or(1e-6);
    for p in [1, 2, 3] {
        let mut cfg = ExperimentConfig::default();
        cfg.degree = p;
        cfg.solvers = vec![SolverKind::DeflatedCg];
        cfg.convergence.refinements = vec![2, 4, 8, 16];
        cfg.convergence.dt = dt;
        print!("{}", run_convergence(&cfg)?.to_markdown());
    }

    let mut cfg = ExperimentConfig::default();
    cfg.degree = 2;
    cfg.solvers = vec![SolverKind::DeflatedCg];
    cfg.dt_list = vec![0.1, 0.05, 0.025, 0.0125];
    cfg.convergence.study = Study::Temporal;
    cfg.convergence.refinements = vec![3];
    print!("{}", run_convergence(&cfg)?.to_markdown());
    Ok(())
}

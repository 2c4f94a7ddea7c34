//! Experiment drivers behind the `psdg` command line: iteration tables,
//! condition-number tables, convergence studies, single runs and matrix
//! export.

mod config;
mod table;

pub use config::{ConvergenceSpec, ExperimentConfig, MeshSource, MeshSpec, Overrides, Side, Study};
pub use table::{Cell, ConvergenceRow, ConvergenceTable, MeshColumn, Quantity, Table, TableHeader};

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::assembly::{assemble_load, SystemMatrices};
use crate::error::Result;
use crate::krylov::{
    build_block_jacobi, estimate_condition_number, BlockLayout, ConditionOptions, DofLayout, PreparedSolver,
    SolverConfig, SolverKind,
};
use crate::mesh::{build_cartesian_mesh, PolyMesh, Rect};
use crate::mmio::save_matrix_market;
use crate::problem::{Manufactured, SeparableField, TimeProfile};
use crate::space::DgSpace;
use crate::timestep::{energy_error, implicit_euler_run, observed_slope, TimeConfig};

/// Manufactured problem whose load vector enters the randomised right-hand
/// sides.
pub fn default_problem(mu: f64) -> Manufactured<SeparableField> {
    Manufactured::new(SeparableField::trigonometric(TimeProfile::Exp(1.0)), mu)
}

/// `Δt` and `h^p` within one order of magnitude.
pub fn is_balanced(dt: f64, h: f64, p: usize) -> bool {
    (dt.log10() - p as f64 * h.log10()).abs() <= 1.0
}

/// Right-hand sides `M σ_rand + Δt f` with σ_rand uniform on [0, 1); the
/// repetition index selects the generator stream.
pub fn random_rhs(sys: &SystemMatrices, load: &[f64], dt: f64, seed: u64, repetition: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(repetition as u64);
    let sigma: Vec<f64> = (0..load.len()).map(|_| rng.random::<f64>()).collect();
    let mut b = sys.m.mul_vec(&sigma);
    crate::sparse::axpy(dt, load, &mut b);
    b
}

fn header(cfg: &ExperimentConfig, title: &str) -> TableHeader {
    TableHeader {
        title: title.into(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        tol: cfg.tol,
        maxit: cfg.maxit,
        repetitions: cfg.repetitions,
        degree: cfg.degree,
    }
}

struct Column {
    space: DgSpace,
    sys: SystemMatrices,
    info: MeshColumn,
}

fn columns(cfg: &ExperimentConfig, meshes: Vec<PolyMesh>) -> Result<Vec<Column>> {
    meshes
        .into_iter()
        .enumerate()
        .map(|(i, mesh)| {
            let info = MeshColumn {
                label: format!("h{i}"),
                elements: mesh.num_elements(),
                h: mesh.mesh_size(),
            };
            let space = DgSpace::new(mesh, cfg.degree)?;
            let sys = SystemMatrices::assemble(&space, cfg.mu, cfg.alpha)?;
            Ok(Column { space, sys, info })
        })
        .collect()
}

fn order_cells(cells: &mut [Cell], series: &[String], dts: &[f64]) {
    let key = |c: &Cell| {
        (
            series.iter().position(|s| *s == c.series).unwrap_or(usize::MAX),
            dts.iter().position(|&d| d == c.dt).unwrap_or(usize::MAX),
            c.column,
        )
    };
    cells.sort_by_key(key);
}

/// Mean iteration counts over `repetitions` random right-hand sides for each
/// solver, Δt and mesh. Runs that hit `maxit` count as `maxit` and flag the
/// cell.
pub fn run_iteration_table(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let cols = columns(cfg, cfg.mesh.build()?)?;
    let data = default_problem(cfg.mu);
    let solver_cfg = SolverConfig::new(cfg.tol, cfg.maxit)?;
    let mut cells = Vec::new();
    for (ci, col) in cols.iter().enumerate() {
        let dofs = DofLayout::of(&col.space);
        for &dt in &cfg.dt_list {
            let a = col.sys.system(dt)?;
            let load = assemble_load(&col.space, &data, dt, cfg.alpha);
            let rhs: Vec<Vec<f64>> = (0..cfg.repetitions)
                .into_par_iter()
                .map(|r| random_rhs(&col.sys, &load, dt, cfg.seed, r))
                .collect();
            for &kind in &cfg.solvers {
                let solver = PreparedSolver::new(kind, &a, dofs)?;
                let reports: Vec<_> = rhs.par_iter().map(|b| solver.solve(&a, b, &solver_cfg).1).collect();
                let flagged = reports.iter().any(|r| !r.converged);
                let total: usize =
                    reports.iter().map(|r| if r.converged { r.iterations } else { cfg.maxit }).sum();
                let value = total as f64 / cfg.repetitions as f64;
                log::info!("{kind} dt={dt:e} {}: {value:.1}", col.info.label);
                cells.push(Cell {
                    series: kind.name().into(),
                    dt,
                    column: ci,
                    value,
                    flagged,
                    balanced: is_balanced(dt, col.info.h, cfg.degree),
                });
            }
        }
    }
    let series: Vec<String> = cfg.solvers.iter().map(|s| s.name().to_string()).collect();
    order_cells(&mut cells, &series, &cfg.dt_list);
    Ok(Table {
        header: header(cfg, "iter-table"),
        quantity: Quantity::MeanIterations,
        columns: cols.into_iter().map(|c| c.info).collect(),
        dt_list: cfg.dt_list.clone(),
        series,
        cells,
    })
}

/// Condition numbers of `A*` (series `raw`) and of `A*` preconditioned by
/// each Block-Jacobi solver in the configuration.
pub fn run_condition_table(cfg: &ExperimentConfig, opts: &ConditionOptions) -> Result<Table> {
    cfg.validate()?;
    let cols = columns(cfg, cfg.mesh.build()?)?;
    let mut series = vec![("raw".to_string(), None)];
    for &kind in &cfg.solvers {
        match kind {
            SolverKind::BlockJacobi => series.push((kind.name().into(), Some(BlockLayout::ComponentWise))),
            SolverKind::CollectiveBlockJacobi => series.push((kind.name().into(), Some(BlockLayout::Collective))),
            _ => {}
        }
    }
    let mut cells = Vec::new();
    for (ci, col) in cols.iter().enumerate() {
        for &dt in &cfg.dt_list {
            let a = col.sys.system(dt)?;
            for (name, layout) in &series {
                let est = match layout {
                    None => estimate_condition_number(&a, None, opts)?,
                    Some(l) => {
                        let p = build_block_jacobi(&a, DofLayout::of(&col.space), *l)?;
                        estimate_condition_number(&a, Some(&p), opts)?
                    }
                };
                log::info!("{name} dt={dt:e} {}: {:.3e}", col.info.label, est.kappa);
                cells.push(Cell {
                    series: name.clone(),
                    dt,
                    column: ci,
                    value: est.kappa,
                    flagged: !est.converged,
                    balanced: is_balanced(dt, col.info.h, cfg.degree),
                });
            }
        }
    }
    let series: Vec<String> = series.into_iter().map(|s| s.0).collect();
    order_cells(&mut cells, &series, &cfg.dt_list);
    Ok(Table {
        header: header(cfg, "cond-table"),
        quantity: Quantity::ConditionNumber,
        columns: cols.into_iter().map(|c| c.info).collect(),
        dt_list: cfg.dt_list.clone(),
        series,
        cells,
    })
}

/// Solver tolerance used by convergence studies, tight enough that
/// algebraic errors stay below discretisation errors.
pub const CONVERGENCE_TOL: f64 = 1e-10;

fn unit_square(cfg: &ExperimentConfig, n: usize) -> Result<PolyMesh> {
    let spec = MeshSpec {
        source: MeshSource::Cartesian { nx: n, ny: n },
        targets: Vec::new(),
        seed: cfg.mesh.seed,
        neumann: cfg.mesh.neumann.clone(),
    };
    Ok(spec.build()?.remove(0))
}

/// Energy errors against a manufactured solution.
///
/// The spatial study refines `n × n` Cartesian meshes at a fixed small Δt
/// with a smooth trigonometric solution. The temporal study uses the
/// configured Δt list on the first refinement with a solution polynomial in
/// space, so only the time discretisation contributes.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceTable> {
    cfg.validate()?;
    let cv = &cfg.convergence;
    let kind = cfg.solvers[0];
    let solver_cfg = SolverConfig::new(cfg.tol.min(CONVERGENCE_TOL), cfg.maxit)?;
    let p = cfg.degree;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut run = |mesh: PolyMesh, exact: SeparableField, time: TimeConfig| -> Result<()> {
        let elements = mesh.num_elements();
        let h = mesh.mesh_size();
        let space = DgSpace::new(mesh, p)?;
        let sys = SystemMatrices::assemble(&space, cfg.mu, cfg.alpha)?;
        let data = Manufactured::new(exact.clone(), cfg.mu);
        let out = implicit_euler_run(&space, &sys, &data, time, kind, &solver_cfg)?;
        let error = energy_error(&space, &out.solution, &exact, time.final_time, cfg.alpha);
        rows.push(ConvergenceRow {
            elements,
            h,
            dt: time.dt,
            steps: time.steps,
            error,
            slope: None,
        });
        Ok(())
    };
    match cv.study {
        Study::Spatial => {
            for &n in &cv.refinements {
                let time = TimeConfig::with_steps(cv.dt, cv.steps)?;
                run(unit_square(cfg, n)?, SeparableField::trigonometric(TimeProfile::Exp(1.0)), time)?;
            }
        }
        Study::Temporal => {
            let degree = p.min(3) as u32;
            for &dt in &cfg.dt_list {
                let time = TimeConfig::new(dt, cv.final_time)?;
                let exact = SeparableField::polynomial(degree, TimeProfile::Exp(1.0));
                run(unit_square(cfg, cv.refinements[0])?, exact, time)?;
            }
        }
    }
    let abscissa = |r: &ConvergenceRow| match cv.study {
        Study::Spatial => r.h,
        Study::Temporal => r.dt,
    };
    for k in 1..rows.len() {
        let s = (rows[k - 1].error / rows[k].error).ln() / (abscissa(&rows[k - 1]) / abscissa(&rows[k])).ln();
        rows[k].slope = Some(s);
    }
    let xs: Vec<f64> = rows.iter().map(abscissa).collect();
    let es: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let fitted_slope = if rows.len() > 1 { observed_slope(&xs, &es) } else { f64::NAN };
    Ok(ConvergenceTable {
        header: header(cfg, "convergence"),
        study: cv.study,
        rows,
        fitted_slope,
    })
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub solver: SolverKind,
    pub elements: usize,
    pub dofs: usize,
    pub time: TimeConfig,
    pub step_log: String,
    pub energy_error: f64,
}

/// Integrates the default manufactured problem for `steps` steps of the
/// first configured Δt on the first configured mesh.
pub fn run_solve(cfg: &ExperimentConfig, steps: usize) -> Result<SolveOutcome> {
    cfg.validate()?;
    let mesh = cfg.mesh.build()?.remove(0);
    let elements = mesh.num_elements();
    let space = DgSpace::new(mesh, cfg.degree)?;
    let sys = SystemMatrices::assemble(&space, cfg.mu, cfg.alpha)?;
    let data = default_problem(cfg.mu);
    let time = TimeConfig::with_steps(cfg.dt_list[0], steps)?;
    let kind = cfg.solvers[0];
    let out = implicit_euler_run(&space, &sys, &data, time, kind, &SolverConfig::new(cfg.tol, cfg.maxit)?)?;
    Ok(SolveOutcome {
        solver: kind,
        elements,
        dofs: space.total_dofs(),
        time,
        step_log: out.step_log_csv(),
        energy_error: energy_error(&space, &out.solution, &data.exact, time.final_time, cfg.alpha),
    })
}

/// Writes `M1, B1, B2, B3, M, A, A*` of the first configured mesh and Δt
/// as Matrix Market files into `dir`.
pub fn export_matrices(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let mesh = cfg.mesh.build()?.remove(0);
    let space = DgSpace::new(mesh, cfg.degree)?;
    let sys = SystemMatrices::assemble(&space, cfg.mu, cfg.alpha)?;
    let a_star = sys.system(cfg.dt_list[0])?;
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, m) in [
        ("M1", &sys.m1),
        ("B1", &sys.b1),
        ("B2", &sys.b2),
        ("B3", &sys.b3),
        ("M", &sys.m),
        ("A", &sys.a),
        ("Astar", &a_star),
    ] {
        let path = dir.join(format!("{name}.mtx"));
        save_matrix_market(m, &path)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes `<stem>.csv` and `<stem>.md`.
pub fn write_outputs(stem: &Path, csv: &str, markdown: &str) -> Result<()> {
    if let Some(parent) = stem.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(stem.with_extension("csv"), csv)?;
    std::fs::write(stem.with_extension("md"), markdown)?;
    Ok(())
}

/// DG space on an `n × n` Cartesian unit square with the given Neumann
/// sides.
pub fn cartesian_space(n: usize, p: usize, neumann: &[Side]) -> Result<DgSpace> {
    let sides = neumann.to_vec();
    let mesh = build_cartesian_mesh(n, n, Rect::unit())?
        .classify_boundary(move |x| sides.iter().any(|s| s.contains(x, 1e-12)));
    DgSpace::new(mesh, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let text = "[mesh]\nnx = 4\nny = 4\ntargets = 8, 16\n[discretisation]\ndegree = 1\n\
                    [experiment]\ndt = 1e-3, 1e-5\nrepetitions = 3\nmaxit = 5000\n";
        ExperimentConfig::parse(text, Path::new(".")).unwrap()
    }

    #[test]
    fn balanced_rule() {
        assert!(is_balanced(1e-3, 0.1, 3));
        assert!(is_balanced(1e-2, 0.1, 3));
        assert!(!is_balanced(1e-5, 0.1, 3));
        assert!(!is_balanced(1e-1, 0.1, 3));
    }

    #[test]
    fn iteration_table_is_deterministic() {
        let cfg = small();
        let t1 = run_iteration_table(&cfg).unwrap();
        let t2 = run_iteration_table(&cfg).unwrap();
        assert_eq!(t1.to_csv(), t2.to_csv());
        assert_eq!(t1.cells.len(), 2 * 2 * 4);
        assert_eq!(t1.flagged_count(), 0);
        let csv = t1.to_csv();
        assert!(csv.starts_with("# psdg iter-table\n# config_hash="));
        assert!(csv.contains("\nseries,dt,column,elements,h,mean_iterations,flagged,balanced\ncg,1e-3,h0,8,"));
        let md = t1.to_markdown();
        assert!(md.contains("### pcg-cbj"));
    }

    #[test]
    fn non_convergence_is_flagged_not_fatal() {
        let mut cfg = small();
        cfg.maxit = 2;
        cfg.solvers = vec![SolverKind::Cg];
        let t = run_iteration_table(&cfg).unwrap();
        assert!(t.cells.iter().all(|c| c.flagged && c.value == 2.0));
        assert!(t.to_markdown().contains("2.0!"));
    }

    #[test]
    fn condition_table_series() {
        let mut cfg = small();
        cfg.solvers = vec![SolverKind::CollectiveBlockJacobi];
        let t = run_condition_table(&cfg, &ConditionOptions::default()).unwrap();
        assert_eq!(t.series, vec!["raw", "pcg-cbj"]);
        let raw = t.column_values("raw", 0);
        assert!(raw[1] > raw[0]);
    }

    #[test]
    fn single_element_collective_is_exact() {
        let mut cfg = small();
        cfg.mesh.targets = vec![1];
        cfg.solvers = vec![SolverKind::CollectiveBlockJacobi];
        let t = run_condition_table(&cfg, &ConditionOptions::default()).unwrap();
        for v in t.column_values("pcg-cbj", 0) {
            assert!((v - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn random_rhs_streams_differ() {
        let space = cartesian_space(2, 1, &[Side::Right]).unwrap();
        let sys = SystemMatrices::assemble(&space, 1.0, 10.0).unwrap();
        let load = vec![0.0; space.total_dofs()];
        let b0 = random_rhs(&sys, &load, 1e-3, 7, 0);
        assert_eq!(b0, random_rhs(&sys, &load, 1e-3, 7, 0));
        assert_ne!(b0, random_rhs(&sys, &load, 1e-3, 7, 1));
    }

    #[test]
    fn export_writes_seven_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small();
        cfg.mesh.targets = vec![4];
        let files = export_matrices(&cfg, dir.path()).unwrap();
        assert_eq!(files.len(), 7);
        let m = crate::mmio::load_matrix_market(&files[6]).unwrap();
        assert_eq!(m.nrows(), 4 * 4 * 3);
    }
}

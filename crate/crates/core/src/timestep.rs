//! Implicit Euler time stepping and error measurement against exact fields.

use crate::assembly::{assemble_rhs, penalty, SystemMatrices};
use crate::error::{Error, Result};
use crate::krylov::{DofLayout, PreparedSolver, SolverConfig, SolverKind, SolverReport};
use crate::mesh::FaceKind;
use crate::problem::{dev, tensor_normal, ExactSolution, ProblemData, Tensor, Vector};
use crate::quadrature::face_quadrature;
use crate::space::DgSpace;
use crate::sparse::CsrMatrix;

use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConfig {
    pub dt: f64,
    pub final_time: f64,
    pub steps: usize,
}

impl TimeConfig {
    /// Uses `round(T/Δt)` steps; `T` must be a whole number of steps.
    pub fn new(dt: f64, final_time: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if !(final_time >= 0.0) || !final_time.is_finite() {
            return Err(Error::InvalidArgument(format!("final time must be non-negative, got {final_time}")));
        }
        let steps = (final_time / dt).round() as usize;
        if (steps as f64 * dt - final_time).abs() > 1e-12 * final_time.max(dt) {
            return Err(Error::InvalidArgument(format!(
                "final time {final_time} is not a multiple of dt = {dt}"
            )));
        }
        Ok(Self { dt, final_time, steps })
    }

    pub fn with_steps(dt: f64, steps: usize) -> Result<Self> {
        Self::new(dt, dt * steps as f64).map(|mut c| {
            c.steps = steps;
            c
        })
    }

    /// `tⁿ = n Δt`.
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

/// Implicit Euler integrator with `A* = M + Δt A` and its solver set up
/// once.
#[derive(Debug, Clone)]
pub struct ImplicitEuler {
    a_star: CsrMatrix,
    solver: PreparedSolver,
    time: TimeConfig,
    config: SolverConfig,
}

impl ImplicitEuler {
    pub fn new(
        space: &DgSpace,
        sys: &SystemMatrices,
        time: TimeConfig,
        solver: SolverKind,
        config: SolverConfig,
    ) -> Result<Self> {
        config.validate()?;
        let a_star = sys.system(time.dt)?;
        let solver = PreparedSolver::new(solver, &a_star, DofLayout::of(space))?;
        Ok(Self {
            a_star,
            solver,
            time,
            config,
        })
    }

    pub fn system_matrix(&self) -> &CsrMatrix {
        &self.a_star
    }

    pub fn prepared_solver(&self) -> &PreparedSolver {
        &self.solver
    }

    /// Advances `sigma` from step `n` to `n + 1`.
    pub fn step(
        &self,
        space: &DgSpace,
        sys: &SystemMatrices,
        data: &dyn ProblemData,
        n: usize,
        sigma: &[f64],
    ) -> Result<(Vec<f64>, SolverReport)> {
        let rhs = assemble_rhs(space, sys, data, self.time.time(n + 1), sigma, self.time.dt);
        let (x, report) = self.solver.solve(&self.a_star, &rhs, &self.config);
        if !report.converged {
            return Err(Error::StepNotConverged {
                step: n + 1,
                iterations: report.iterations,
                residual: report.relative_residual,
            });
        }
        Ok((x, report))
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub solution: Vec<f64>,
    pub reports: Vec<SolverReport>,
    pub time: TimeConfig,
}

impl RunOutput {
    /// `step,time,iterations,residual` lines, one per step.
    pub fn step_log_csv(&self) -> String {
        let mut s = String::from("step,time,iterations,residual\n");
        for (k, r) in self.reports.iter().enumerate() {
            s.push_str(&format!(
                "{},{:e},{},{:e}\n",
                k + 1,
                self.time.time(k + 1),
                r.iterations,
                r.relative_residual
            ));
        }
        s
    }
}

/// Runs `N_T` implicit Euler steps from the L² projection of `σ_0`.
pub fn implicit_euler_run(
    space: &DgSpace,
    sys: &SystemMatrices,
    data: &dyn ProblemData,
    time: TimeConfig,
    solver: SolverKind,
    config: &SolverConfig,
) -> Result<RunOutput> {
    let stepper = ImplicitEuler::new(space, sys, time, solver, *config)?;
    let mut sigma = space.l2_project(|x| data.initial(x));
    let mut reports = Vec::with_capacity(time.steps);
    for n in 0..time.steps {
        let (next, report) = stepper.step(space, sys, data, n, &sigma)?;
        log::debug!("step {} iterations {}", n + 1, report.iterations);
        sigma = next;
        reports.push(report);
    }
    Ok(RunOutput {
        solution: sigma,
        reports,
        time,
    })
}

type Exact<'a> = Option<(&'a dyn ExactSolution, f64)>;

/// `‖σ_h − σ(t)‖_E` with
/// `‖τ‖²_E = ‖dev τ‖² + ‖∇_h·τ‖² + Σ_{F ∈ I ∪ N} γ_F ‖[[τ]]‖²_F`,
/// integrated with rules two degrees above the assembly rules.
pub fn energy_error(space: &DgSpace, dofs: &[f64], exact: &dyn ExactSolution, t: f64, alpha: f64) -> f64 {
    energy(space, dofs, Some((exact, t)), alpha)
}

/// `‖σ_h‖_E`.
pub fn energy_norm(space: &DgSpace, dofs: &[f64], alpha: f64) -> f64 {
    energy(space, dofs, None, alpha)
}

fn energy(space: &DgSpace, dofs: &[f64], exact: Exact<'_>, alpha: f64) -> f64 {
    let p = space.degree();
    let qdeg = 2 * p + 3;
    let mesh = space.mesh();
    let exact_at = |x, with_div: bool| -> (Tensor, Vector) {
        match exact {
            Some((s, t)) => (s.value(x, t), if with_div { s.divergence(x, t) } else { [0.0; 2] }),
            None => ([0.0; 4], [0.0; 2]),
        }
    };
    let volume: f64 = (0..space.num_elements())
        .into_par_iter()
        .map(|e| {
            let rule = space.element_rule_of_degree(e, qdeg);
            let mut acc = 0.0;
            for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                let (v, d) = space.evaluate_with_div(dofs, e, x);
                let (ve, de) = exact_at(x, true);
                let dv = dev(std::array::from_fn(|c| v[c] - ve[c]));
                let dd = [d[0] - de[0], d[1] - de[1]];
                acc += w * (dv.iter().map(|a| a * a).sum::<f64>() + dd[0] * dd[0] + dd[1] * dd[1]);
            }
            acc
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let faces: f64 = mesh
        .faces()
        .par_iter()
        .enumerate()
        .filter(|(_, f)| f.kind != FaceKind::Dirichlet)
        .map(|(fi, f)| {
            let gamma = penalty(mesh, fi, alpha, p).expect("non-Dirichlet face");
            let verts = mesh.vertices();
            let rule = face_quadrature(verts[f.vertices[0]], verts[f.vertices[1]], qdeg)
                .expect("faces have positive length");
            let mut acc = 0.0;
            for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                let jp = tensor_normal(space.evaluate(dofs, f.plus, x), f.normal);
                let other = match f.minus {
                    Some(m) => space.evaluate(dofs, m, x),
                    None => exact_at(x, false).0,
                };
                let jm = tensor_normal(other, f.normal);
                acc += w * ((jp[0] - jm[0]).powi(2) + (jp[1] - jm[1]).powi(2));
            }
            gamma * acc
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    (volume + faces).sqrt()
}

/// Least-squares slope of `log e` against `log h`.
pub fn observed_slope(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = h.iter().zip(e).map(|(h, e)| (h.ln(), e.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_cartesian_mesh, Rect};
    use crate::problem::{Manufactured, SeparableField, TimeProfile, ZeroData};
    use crate::sparse::dot;

    fn space(n: usize, p: usize) -> DgSpace {
        let mesh = build_cartesian_mesh(n, n, Rect::unit())
            .unwrap()
            .classify_boundary(|x| (x[0] - 1.0).abs() < 1e-12);
        DgSpace::new(mesh, p).unwrap()
    }

    fn tight() -> SolverConfig {
        SolverConfig::new(1e-12, 100_000).unwrap()
    }

    #[test]
    fn time_config_rounds() {
        let c = TimeConfig::new(0.1, 1.0).unwrap();
        assert_eq!(c.steps, 10);
        assert!((c.steps as f64 * c.dt - 1.0).abs() < 1e-12);
        assert!(TimeConfig::new(0.3, 1.0).is_err());
        assert!(TimeConfig::new(0.0, 1.0).is_err());
        assert!(TimeConfig::new(-1e-3, 1.0).is_err());
    }

    #[test]
    fn steady_solution_is_a_fixed_point() {
        let s = space(3, 2);
        let sys = SystemMatrices::assemble(&s, 1.0, 10.0).unwrap();
        let data = Manufactured::new(SeparableField::polynomial(2, TimeProfile::Constant), 1.0);
        let time = TimeConfig::with_steps(1e-2, 10).unwrap();
        let stepper = ImplicitEuler::new(&s, &sys, time, SolverKind::DeflatedCg, tight()).unwrap();
        let start = s.l2_project(|x| data.initial(x));
        let mut sigma = start.clone();
        for n in 0..10 {
            sigma = stepper.step(&s, &sys, &data, n, &sigma).unwrap().0;
            let dev = sigma.iter().zip(&start).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(dev < 1e-8, "step {n}: {dev:e}");
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let s = space(2, 1);
        let sys = SystemMatrices::assemble(&s, 1.0, 10.0).unwrap();
        let out = implicit_euler_run(
            &s,
            &sys,
            &ZeroData { mu: 1.0 },
            TimeConfig::with_steps(0.1, 5).unwrap(),
            SolverKind::Cg,
            &tight(),
        )
        .unwrap();
        assert!(out.solution.iter().all(|&v| v == 0.0));
        assert_eq!(out.reports.len(), 5);
        assert!(out.step_log_csv().starts_with("step,time,iterations,residual\n1,1e-1,0,"));
    }

    #[test]
    fn temporal_error_is_first_order() {
        let s = space(2, 2);
        let sys = SystemMatrices::assemble(&s, 1.0, 10.0).unwrap();
        let exact = SeparableField::polynomial(2, TimeProfile::Exp(1.0));
        let data = Manufactured::new(exact.clone(), 1.0);
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&dt| {
                let out = implicit_euler_run(&s, &sys, &data, TimeConfig::new(dt, 0.5).unwrap(), SolverKind::Cg, &tight())
                    .unwrap();
                energy_error(&s, &out.solution, &exact, 0.5, 10.0)
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.6..=2.4).contains(&ratio), "{errs:?}");
        }
    }

    #[test]
    fn energy_is_non_increasing_without_data() {
        let s = space(3, 1);
        let sys = SystemMatrices::assemble(&s, 1.0, 10.0).unwrap();
        let data = ZeroData { mu: 1.0 };
        let time = TimeConfig::with_steps(1e-2, 8).unwrap();
        let cfg = tight();
        let stepper = ImplicitEuler::new(&s, &sys, time, SolverKind::CollectiveBlockJacobi, cfg).unwrap();
        let mut sigma: Vec<f64> = (0..s.total_dofs()).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut energy = dot(&sys.m.mul_vec(&sigma), &sigma);
        for n in 0..8 {
            sigma = stepper.step(&s, &sys, &data, n, &sigma).unwrap().0;
            let next = dot(&sys.m.mul_vec(&sigma), &sigma);
            assert!(next <= energy + 10.0 * cfg.tol * energy.max(1.0));
            energy = next;
        }
    }

    #[test]
    fn energy_error_basics() {
        let s = space(2, 2);
        let exact = SeparableField::polynomial(2, TimeProfile::Constant);
        let pi = s.l2_project(|x| exact.value(x, 0.0));
        assert!(energy_error(&s, &pi, &exact, 0.0, 10.0) <= 1e-10);
        let u: Vec<f64> = (0..s.total_dofs()).map(|i| (i as f64).cos()).collect();
        let u2: Vec<f64> = u.iter().map(|v| 2.0 * v).collect();
        let (a, b) = (energy_norm(&s, &u, 10.0), energy_norm(&s, &u2, 10.0));
        assert!((b - 2.0 * a).abs() <= 1e-12 * b);
    }

    #[test]
    fn steps_fail_loudly() {
        let s = space(2, 1);
        let sys = SystemMatrices::assemble(&s, 1.0, 10.0).unwrap();
        let data = Manufactured::new(SeparableField::trigonometric(TimeProfile::Constant), 1.0);
        let err = implicit_euler_run(
            &s,
            &sys,
            &data,
            TimeConfig::with_steps(1e-6, 2).unwrap(),
            SolverKind::Cg,
            &SolverConfig::new(1e-12, 2).unwrap(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::StepNotConverged { step: 1, .. }));
    }

    #[test]
    fn slope_of_exact_power_law() {
        let h = [0.5, 0.25, 0.125];
        let e: Vec<f64> = h.iter().map(|h: &f64| 3.0 * h.powi(2)).collect();
        assert!((observed_slope(&h, &e) - 2.0).abs() < 1e-12);
    }
}

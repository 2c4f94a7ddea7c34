use std::time::Instant;

use super::{Preconditioner, SolverConfig, SolverReport};
use crate::sparse::{axpy, dot, norm2, LinearOperator};

fn residual(a: &dyn LinearOperator, b: &[f64], x: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; b.len()];
    a.apply(x, &mut r);
    r.iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
    r
}

fn zero_rhs_report(n: usize) -> (Vec<f64>, SolverReport) {
    (
        vec![0.0; n],
        SolverReport {
            iterations: 0,
            relative_residual: 0.0,
            true_relative_residual: 0.0,
            converged: true,
            history: Vec::new(),
            wall_time: Default::default(),
        },
    )
}

/// Conjugate gradient from a zero initial guess.
///
/// Stops when ‖r‖ ≤ tol‖b‖. The recursive residual is checked against the
/// true residual before declaring convergence; on disagreement the
/// iteration restarts from the true residual.
pub fn cg(a: &dyn LinearOperator, b: &[f64], config: &SolverConfig) -> (Vec<f64>, SolverReport) {
    cg_relative_to(a, b, norm2(b), config)
}

/// CG with residuals measured relative to `bnorm` instead of ‖b‖.
pub(super) fn cg_relative_to(
    a: &dyn LinearOperator,
    b: &[f64],
    bnorm: f64,
    config: &SolverConfig,
) -> (Vec<f64>, SolverReport) {
    let start = Instant::now();
    let n = b.len();
    if bnorm == 0.0 {
        return zero_rhs_report(n);
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut q = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut history = Vec::new();
    if config.record_history {
        history.push(rr.sqrt() / bnorm);
    }
    let mut res = rr.sqrt() / bnorm;
    let mut iterations = 0;
    let mut converged = res <= config.tol;
    while !converged && iterations < config.maxit {
        a.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            break;
        }
        let alpha = rr / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        iterations += 1;
        let rr_new = dot(&r, &r);
        res = rr_new.sqrt() / bnorm;
        if config.record_history {
            history.push(res);
        }
        if res <= config.tol {
            let rt = residual(a, b, &x);
            let true_res = norm2(&rt) / bnorm;
            if true_res <= config.tol {
                converged = true;
                break;
            }
            r = rt;
            rr = dot(&r, &r);
            p.copy_from_slice(&r);
            continue;
        }
        let beta = rr_new / rr;
        p.iter_mut().zip(&r).for_each(|(p, r)| *p = r + beta * *p);
        rr = rr_new;
    }
    let true_res = norm2(&residual(a, b, &x)) / bnorm;
    let report = SolverReport {
        iterations,
        relative_residual: res,
        true_relative_residual: true_res,
        converged,
        history,
        wall_time: start.elapsed(),
    };
    (x, report)
}

/// Preconditioned conjugate gradient from a zero initial guess.
///
/// Stops when the preconditioned residual satisfies ‖P⁻¹r‖ ≤ tol‖P⁻¹b‖.
/// With the identity preconditioner the iterates coincide with [`cg`].
pub fn pcg(
    a: &dyn LinearOperator,
    b: &[f64],
    precond: &dyn Preconditioner,
    config: &SolverConfig,
) -> (Vec<f64>, SolverReport) {
    let start = Instant::now();
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return zero_rhs_report(n);
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let znorm0 = norm2(&z);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut history = Vec::new();
    let mut res = norm2(&z) / znorm0;
    if config.record_history {
        history.push(res);
    }
    let mut iterations = 0;
    let mut converged = res <= config.tol;
    while !converged && iterations < config.maxit {
        a.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            break;
        }
        let alpha = rz / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        iterations += 1;
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        res = norm2(&z) / znorm0;
        if config.record_history {
            history.push(res);
        }
        if res <= config.tol {
            let rt = residual(a, b, &x);
            let mut zt = vec![0.0; n];
            precond.apply(&rt, &mut zt);
            if norm2(&zt) / znorm0 <= config.tol {
                converged = true;
                break;
            }
            r = rt;
            z = zt;
            rz = dot(&r, &z);
            p.copy_from_slice(&z);
            continue;
        }
        let beta = rz_new / rz;
        p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
        rz = rz_new;
    }
    let true_res = norm2(&residual(a, b, &x)) / bnorm;
    let report = SolverReport {
        iterations,
        relative_residual: res,
        true_relative_residual: true_res,
        converged,
        history,
        wall_time: start.elapsed(),
    };
    (x, report)
}

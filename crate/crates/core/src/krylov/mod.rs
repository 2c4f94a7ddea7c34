//! Krylov solvers, preconditioners and spectral estimates for `A*`.

mod block_jacobi;
mod cg;
mod cholesky;
mod deflation;
mod lanczos;
mod solver;

pub use block_jacobi::{build_block_jacobi, BlockJacobi, BlockLayout, DofLayout};
pub use cg::{cg, pcg};
pub use cholesky::{reverse_cuthill_mckee, SparseCholesky};
pub use deflation::{build_deflator, deflated_cg, Deflator};
pub use solver::{PreparedSolver, SolverKind};
pub use lanczos::{
    dense_condition_number, estimate_condition_number, ConditionEstimate, ConditionOptions,
    EstimateMethod,
};

use std::time::Duration;

use crate::error::{Error, Result};

/// Stopping rule shared by all solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative residual tolerance, in (0, 1).
    pub tol: f64,
    pub maxit: usize,
    pub record_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            maxit: 50_000,
            record_history: false,
        }
    }
}

impl SolverConfig {
    pub fn new(tol: f64, maxit: usize) -> Result<Self> {
        let c = Self {
            tol,
            maxit,
            record_history: false,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_history(mut self) -> Self {
        self.record_history = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidArgument(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if self.maxit == 0 {
            return Err(Error::InvalidArgument("maxit must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    /// Residual measured by the stopping rule: ‖r‖/‖b‖ for CG and deflated
    /// CG, ‖P⁻¹r‖/‖P⁻¹b‖ for preconditioned CG.
    pub relative_residual: f64,
    /// ‖b − A x‖/‖b‖ of the returned iterate.
    pub true_relative_residual: f64,
    pub converged: bool,
    /// Stopping-rule residual after every iteration (when recorded),
    /// starting with the initial one.
    pub history: Vec<f64>,
    pub wall_time: Duration,
}

impl SolverReport {
    /// Residual history as `iteration,residual` CSV.
    pub fn history_csv(&self) -> String {
        let mut s = String::from("iteration,residual\n");
        for (k, r) in self.history.iter().enumerate() {
            s.push_str(&format!("{k},{r:e}\n"));
        }
        s
    }
}

/// `z = P⁻¹ r` for a symmetric positive definite `P`.
pub trait Preconditioner: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

/// A preconditioner that can also apply `P` itself, needed by the
/// inverse-iteration branch of the condition estimator.
pub trait InvertiblePreconditioner: Preconditioner {
    fn apply_forward(&self, x: &[f64], y: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityPreconditioner(pub usize);

impl Preconditioner for IdentityPreconditioner {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

impl InvertiblePreconditioner for IdentityPreconditioner {
    fn apply_forward(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

/// Exact inverse of a small dense SPD matrix, for tests and baselines.
#[derive(Debug, Clone)]
pub struct DensePreconditioner {
    matrix: nalgebra::DMatrix<f64>,
    chol: nalgebra::linalg::Cholesky<f64, nalgebra::Dyn>,
}

impl DensePreconditioner {
    pub fn new(matrix: nalgebra::DMatrix<f64>) -> Result<Self> {
        let chol = nalgebra::linalg::Cholesky::new(matrix.clone())
            .ok_or_else(|| Error::Factorisation("dense preconditioner is not SPD".into()))?;
        Ok(Self { matrix, chol })
    }
}

impl Preconditioner for DensePreconditioner {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let x = self.chol.solve(&nalgebra::DVector::from_column_slice(r));
        z.copy_from_slice(x.as_slice());
    }
}

impl InvertiblePreconditioner for DensePreconditioner {
    fn apply_forward(&self, x: &[f64], y: &mut [f64]) {
        let v = &self.matrix * nalgebra::DVector::from_column_slice(x);
        y.copy_from_slice(v.as_slice());
    }
}

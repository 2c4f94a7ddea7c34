//! Solvers for the pseudo-stress formulation of the unsteady Stokes problem,
//! discretised with discontinuous Galerkin on polygonal meshes and implicit
//! Euler in time.
//!
//! The per-step system `A* = M + Δt A` becomes ill-conditioned as Δt → 0
//! because `M` is singular. Two time-step-robust solvers are provided:
//! conjugate gradient deflated by `ker(M)` and CG preconditioned by a
//! collective Block-Jacobi that groups the four tensor components of each
//! element.

pub mod assembly;
pub mod bench;
pub mod error;
pub mod krylov;
pub mod mesh;
pub mod mmio;
pub mod problem;
pub mod quadrature;
pub mod space;
pub mod timestep;
pub mod sparse;

pub use error::{Error, Result};

use std::fmt;
use std::str::FromStr;

use super::{
    build_block_jacobi, build_deflator, cg, deflated_cg, pcg, BlockJacobi, BlockLayout, Deflator, DofLayout,
    SolverConfig, SolverReport,
};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Cg,
    DeflatedCg,
    BlockJacobi,
    CollectiveBlockJacobi,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [Self::Cg, Self::DeflatedCg, Self::BlockJacobi, Self::CollectiveBlockJacobi];

    pub fn name(self) -> &'static str {
        match self {
            Self::Cg => "cg",
            Self::DeflatedCg => "dcg",
            Self::BlockJacobi => "pcg-bj",
            Self::CollectiveBlockJacobi => "pcg-cbj",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown solver '{s}' (expected cg, dcg, pcg-bj or pcg-cbj)")))
    }
}

/// A solver whose setup (deflation space or block factorisations) has been
/// computed once for a fixed `A*`.
#[derive(Debug, Clone)]
pub enum PreparedSolver {
    Cg,
    DeflatedCg(Deflator),
    Pcg(BlockJacobi),
}

impl PreparedSolver {
    pub fn new(kind: SolverKind, a_star: &CsrMatrix, dofs: DofLayout) -> Result<Self> {
        Ok(match kind {
            SolverKind::Cg => Self::Cg,
            SolverKind::DeflatedCg => Self::DeflatedCg(build_deflator(a_star)?),
            SolverKind::BlockJacobi => Self::Pcg(build_block_jacobi(a_star, dofs, BlockLayout::ComponentWise)?),
            SolverKind::CollectiveBlockJacobi => {
                Self::Pcg(build_block_jacobi(a_star, dofs, BlockLayout::Collective)?)
            }
        })
    }

    pub fn solve(&self, a_star: &CsrMatrix, b: &[f64], config: &SolverConfig) -> (Vec<f64>, SolverReport) {
        match self {
            Self::Cg => cg(a_star, b, config),
            Self::DeflatedCg(d) => deflated_cg(a_star, b, d, config),
            Self::Pcg(p) => pcg(a_star, b, p, config),
        }
    }
}

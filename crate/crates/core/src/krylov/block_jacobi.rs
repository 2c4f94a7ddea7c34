//! Block-Jacobi preconditioners for `A*`.
//!
//! The component-wise layout inverts one `L × L` block per tensor component
//! and element. The collective layout inverts one `4L × 4L` block per
//! element, coupling all four components, which makes it robust as Δt → 0.

use nalgebra::{DMatrix, DVector, Dyn};
use rayon::prelude::*;

use super::{InvertiblePreconditioner, Preconditioner};
use crate::error::{Error, Result};
use crate::space::DgSpace;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockLayout {
    ComponentWise,
    Collective,
}

impl BlockLayout {
    pub fn name(self) -> &'static str {
        match self {
            Self::ComponentWise => "component-wise",
            Self::Collective => "collective",
        }
    }
}

/// Shape of the component-major dof numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofLayout {
    pub num_elements: usize,
    pub local_dim: usize,
}

impl DofLayout {
    pub fn of(space: &DgSpace) -> Self {
        Self {
            num_elements: space.num_elements(),
            local_dim: space.local_dim(),
        }
    }

    pub fn scalar_dofs(&self) -> usize {
        self.num_elements * self.local_dim
    }

    pub fn total_dofs(&self) -> usize {
        4 * self.scalar_dofs()
    }

    /// Collective ordering as `perm[new] = old`, mapping `(c, e, i)` to
    /// `(e, c, i)`.
    pub fn collective_permutation(&self) -> Vec<usize> {
        let (l, s) = (self.local_dim, self.scalar_dofs());
        let mut perm = Vec::with_capacity(4 * s);
        for e in 0..self.num_elements {
            for c in 0..4 {
                for i in 0..l {
                    perm.push(c * s + e * l + i);
                }
            }
        }
        perm
    }
}

#[derive(Debug, Clone)]
struct Block {
    indices: Vec<usize>,
    matrix: DMatrix<f64>,
    chol: nalgebra::linalg::Cholesky<f64, Dyn>,
}

#[derive(Debug, Clone)]
pub struct BlockJacobi {
    layout: BlockLayout,
    dofs: DofLayout,
    blocks: Vec<Block>,
}

/// Extracts and factorises the diagonal blocks of `a_star`.
///
/// Fails with [`Error::BlockNotSpd`] naming the first block whose Cholesky
/// factorisation breaks down.
pub fn build_block_jacobi(
    a_star: &CsrMatrix,
    dofs: DofLayout,
    layout: BlockLayout,
) -> Result<BlockJacobi> {
    let n = dofs.total_dofs();
    if a_star.nrows() != n || a_star.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "matrix is {}x{}, layout expects {n}",
            a_star.nrows(),
            a_star.ncols()
        )));
    }
    let (l, s) = (dofs.local_dim, dofs.scalar_dofs());
    let index_sets: Vec<(usize, Vec<usize>)> = match layout {
        BlockLayout::ComponentWise => (0..4)
            .flat_map(|c| (0..dofs.num_elements).map(move |e| (e, (c * s + e * l..c * s + (e + 1) * l).collect())))
            .collect(),
        BlockLayout::Collective => {
            let perm = dofs.collective_permutation();
            perm.chunks(4 * l).enumerate().map(|(e, ch)| (e, ch.to_vec())).collect()
        }
    };
    let blocks: Vec<Result<Block>> = index_sets
        .into_par_iter()
        .enumerate()
        .map(|(b, (e, indices))| {
            let matrix = a_star.dense_block(&indices, &indices);
            let chol = nalgebra::linalg::Cholesky::new(matrix.clone())
                .ok_or(Error::BlockNotSpd { block: b, element: e })?;
            Ok(Block { indices, matrix, chol })
        })
        .collect();
    let blocks = blocks.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(BlockJacobi { layout, dofs, blocks })
}

impl BlockJacobi {
    pub fn layout(&self) -> BlockLayout {
        self.layout
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_size(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.indices.len())
    }

    pub fn block_indices(&self, b: usize) -> &[usize] {
        &self.blocks[b].indices
    }

    /// The assembled block-diagonal matrix `P`.
    pub fn to_csr(&self) -> CsrMatrix {
        let n = self.dofs.total_dofs();
        let mut t = Vec::new();
        for b in &self.blocks {
            for (a, &i) in b.indices.iter().enumerate() {
                for (c, &j) in b.indices.iter().enumerate() {
                    t.push((i, j, b.matrix[(a, c)]));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, t, 0.0)
    }

    /// Largest block-row ratio `‖A_ii⁻¹‖₂ Σ_{j≠i} ‖A_ij‖₂`. Values below one
    /// mean `A*` is block diagonally dominant for this partition.
    pub fn dominance_indicator(&self, a_star: &CsrMatrix) -> f64 {
        let n = self.dofs.total_dofs();
        let mut owner = vec![0usize; n];
        for (b, blk) in self.blocks.iter().enumerate() {
            for &i in &blk.indices {
                owner[i] = b;
            }
        }
        self.blocks
            .par_iter()
            .enumerate()
            .map(|(b, blk)| {
                let mut nbrs: Vec<usize> = blk
                    .indices
                    .iter()
                    .flat_map(|&i| a_star.row(i).0.iter().map(|&j| owner[j]))
                    .filter(|&o| o != b)
                    .collect();
                nbrs.sort_unstable();
                nbrs.dedup();
                let off: f64 = nbrs
                    .iter()
                    .map(|&o| spectral_norm(a_star.dense_block(&blk.indices, &self.blocks[o].indices)))
                    .sum();
                let lmin = blk.matrix.clone().symmetric_eigenvalues().min();
                off / lmin
            })
            .reduce(|| 0.0, f64::max)
    }
}

fn spectral_norm(m: DMatrix<f64>) -> f64 {
    m.singular_values().max()
}

impl Preconditioner for BlockJacobi {
    fn dim(&self) -> usize {
        self.dofs.total_dofs()
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let parts: Vec<DVector<f64>> = self
            .blocks
            .par_iter()
            .map(|b| b.chol.solve(&DVector::from_iterator(b.indices.len(), b.indices.iter().map(|&i| r[i]))))
            .collect();
        for (b, x) in self.blocks.iter().zip(parts) {
            for (&i, v) in b.indices.iter().zip(x.iter()) {
                z[i] = *v;
            }
        }
    }
}

impl InvertiblePreconditioner for BlockJacobi {
    fn apply_forward(&self, x: &[f64], y: &mut [f64]) {
        let parts: Vec<DVector<f64>> = self
            .blocks
            .par_iter()
            .map(|b| &b.matrix * DVector::from_iterator(b.indices.len(), b.indices.iter().map(|&i| x[i])))
            .collect();
        for (b, v) in self.blocks.iter().zip(parts) {
            for (&i, w) in b.indices.iter().zip(v.iter()) {
                y[i] = *w;
            }
        }
    }
}

//! Deflation of `A*` by the kernel of the mass matrix.
//!
//! `ker M` is spanned by `V = v ⊗ I` with `v = (e₁ + e₄)/√2`, i.e. the
//! identity-tensor direction in every scalar dof. Since `VᵀMV = 0`, the
//! coarse matrix `W = VᵀA*V = (Δt/2)(B1 + B3)` carries no mass part.

use std::time::Instant;

use super::cg::cg_relative_to;
use super::cholesky::SparseCholesky;
use super::{SolverConfig, SolverReport};
use crate::assembly::SystemMatrices;
use crate::error::{Error, Result};
use crate::sparse::{norm2, CsrMatrix, LinearOperator};

const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Coarse-space data for deflated CG.
#[derive(Debug, Clone)]
pub struct Deflator {
    scalar_dofs: usize,
    /// `Z = A* V`, of size `n × S`.
    z: CsrMatrix,
    zt: CsrMatrix,
    /// `W = Vᵀ A* V`.
    w: CsrMatrix,
    w_factor: SparseCholesky,
}

/// Builds the coarse space for `a_star`, whose size must be a multiple of
/// four in the component-major layout.
pub fn build_deflator(a_star: &CsrMatrix) -> Result<Deflator> {
    let n = a_star.nrows();
    if !n.is_multiple_of(4) || a_star.ncols() != n {
        return Err(Error::InvalidArgument(format!("cannot deflate a {n}x{} matrix", a_star.ncols())));
    }
    let s = n / 4;
    let z_trip: Vec<_> = a_star
        .triplets()
        .filter_map(|(i, j, v)| match j / s {
            0 => Some((i, j, v * INV_SQRT2)),
            3 => Some((i, j - 3 * s, v * INV_SQRT2)),
            _ => None,
        })
        .collect();
    let z = CsrMatrix::from_triplets(n, s, z_trip, 0.0);
    let w_trip: Vec<_> = z
        .triplets()
        .filter_map(|(i, j, v)| match i / s {
            0 => Some((i, j, v * INV_SQRT2)),
            3 => Some((i - 3 * s, j, v * INV_SQRT2)),
            _ => None,
        })
        .collect();
    let w = CsrMatrix::from_triplets(s, s, w_trip, 0.0);
    let w_factor = SparseCholesky::factor(&w).map_err(|e| {
        Error::Factorisation(format!("coarse matrix W: {e}; is there a Neumann face?"))
    })?;
    let zt = z.transpose();
    Ok(Deflator {
        scalar_dofs: s,
        z,
        zt,
        w,
        w_factor,
    })
}

impl Deflator {
    pub fn from_system(sys: &SystemMatrices, dt: f64) -> Result<Self> {
        build_deflator(&sys.system(dt)?)
    }

    pub fn dim(&self) -> usize {
        4 * self.scalar_dofs
    }

    pub fn coarse_dim(&self) -> usize {
        self.scalar_dofs
    }

    pub fn coarse_matrix(&self) -> &CsrMatrix {
        &self.w
    }

    /// `y = V c`.
    pub fn prolong(&self, c: &[f64], y: &mut [f64]) {
        let s = self.scalar_dofs;
        y.fill(0.0);
        for (i, &ci) in c.iter().enumerate() {
            y[i] = ci * INV_SQRT2;
            y[3 * s + i] = ci * INV_SQRT2;
        }
    }

    /// `Vᵀ x`.
    pub fn restrict(&self, x: &[f64]) -> Vec<f64> {
        let s = self.scalar_dofs;
        (0..s).map(|i| (x[i] + x[3 * s + i]) * INV_SQRT2).collect()
    }

    fn coarse_solve(&self, c: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.scalar_dofs];
        self.w_factor.solve(c, &mut y);
        y
    }

    /// `P x = x − V W⁻¹ Zᵀ x`, the A*-orthogonal projection onto the
    /// complement of `range V`.
    pub fn project(&self, x: &[f64], y: &mut [f64]) {
        let c = self.coarse_solve(&self.zt.mul_vec(x));
        self.prolong(&c, y);
        y.iter_mut().zip(x).for_each(|(y, x)| *y = x - *y);
    }

    /// `Pᵀ x = x − Z W⁻¹ Vᵀ x`.
    pub fn project_transpose(&self, x: &[f64], y: &mut [f64]) {
        let c = self.coarse_solve(&self.restrict(x));
        self.z.apply(&c, y);
        y.iter_mut().zip(x).for_each(|(y, x)| *y = x - *y);
    }

    /// The coarse part `V W⁻¹ Vᵀ b` of the solution.
    pub fn coarse_correction(&self, b: &[f64]) -> Vec<f64> {
        let c = self.coarse_solve(&self.restrict(b));
        let mut y = vec![0.0; self.dim()];
        self.prolong(&c, &mut y);
        y
    }
}

/// `A* P`, applied as `A* x − Z W⁻¹ Zᵀ x`.
struct DeflatedOperator<'a> {
    a: &'a CsrMatrix,
    d: &'a Deflator,
}

impl LinearOperator for DeflatedOperator<'_> {
    fn nrows(&self) -> usize {
        self.a.nrows()
    }

    fn ncols(&self) -> usize {
        self.a.ncols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.a.apply(x, y);
        let c = self.d.coarse_solve(&self.d.zt.mul_vec(x));
        let zc = self.d.z.mul_vec(&c);
        y.iter_mut().zip(zc).for_each(|(y, v)| *y -= v);
    }
}

/// CG on the deflated system `A* P x̂ = Pᵀ b`, followed by the recovery
/// `x = P x̂ + V W⁻¹ Vᵀ b`.
///
/// The deflated residual equals the true residual `b − A* x`, so the
/// stopping rule is ‖r‖ ≤ tol‖b‖ as for plain CG.
pub fn deflated_cg(
    a_star: &CsrMatrix,
    b: &[f64],
    deflator: &Deflator,
    config: &SolverConfig,
) -> (Vec<f64>, SolverReport) {
    let start = Instant::now();
    let n = b.len();
    let bnorm = norm2(b);
    let mut rhs = vec![0.0; n];
    deflator.project_transpose(b, &mut rhs);
    let op = DeflatedOperator { a: a_star, d: deflator };
    let (xh, mut report) = cg_relative_to(&op, &rhs, bnorm, config);
    let mut x = vec![0.0; n];
    deflator.project(&xh, &mut x);
    let coarse = deflator.coarse_correction(b);
    x.iter_mut().zip(coarse).for_each(|(x, c)| *x += c);
    if bnorm > 0.0 {
        let ax = a_star.mul_vec(&x);
        let r: f64 = ax.iter().zip(b).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
        report.true_relative_residual = r / bnorm;
    }
    report.wall_time = start.elapsed();
    (x, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::SystemMatrices;
    use crate::krylov::cg;
    use crate::mesh::{build_cartesian_mesh, Rect};
    use crate::space::DgSpace;
    use crate::sparse::dot;

    fn system(p: usize) -> SystemMatrices {
        let mesh = build_cartesian_mesh(3, 3, Rect::unit())
            .unwrap()
            .classify_boundary(|x| (x[0] - 1.0).abs() < 1e-12);
        let space = DgSpace::new(mesh, p).unwrap();
        SystemMatrices::assemble(&space, 1.0, 10.0).unwrap()
    }

    fn vecs(n: usize) -> (Vec<f64>, Vec<f64>) {
        (
            (0..n).map(|i| (i as f64 * 0.71).sin()).collect(),
            (0..n).map(|i| (i as f64 * 0.13).cos() + 0.2).collect(),
        )
    }

    #[test]
    fn coarse_matrix_is_scalar_stiffness() {
        let sys = system(2);
        let dt = 1e-3;
        let d = Deflator::from_system(&sys, dt).unwrap();
        let mut expected = sys.b1.add_scaled(1.0, &sys.b3);
        expected.scale(dt / 2.0);
        assert!(d.coarse_matrix().max_abs_diff(&expected) < 1e-12 * expected.max_abs());
    }

    #[test]
    fn projection_properties() {
        let sys = system(1);
        let a = sys.system(1e-4).unwrap();
        let d = build_deflator(&a).unwrap();
        let n = a.nrows();
        let (u, w) = vecs(n);
        let (mut pu, mut ppu) = (vec![0.0; n], vec![0.0; n]);
        d.project(&u, &mut pu);
        d.project(&pu, &mut ppu);
        let scale = norm2(&pu);
        for (x, y) in pu.iter().zip(&ppu) {
            assert!((x - y).abs() < 1e-9 * scale);
        }
        // Range of P is A*-orthogonal to range V.
        let av = a.mul_vec(&pu);
        let vt = d.restrict(&av);
        assert!(norm2(&vt) < 1e-9 * norm2(&av));
        // A* P is symmetric and positive semidefinite.
        let mut pw = vec![0.0; n];
        d.project(&w, &mut pw);
        let lhs = dot(&a.mul_vec(&pu), &w);
        let rhs = dot(&u, &a.mul_vec(&pw));
        assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
        assert!(dot(&a.mul_vec(&pu), &u) >= -1e-10);
    }

    #[test]
    fn agrees_with_cg_and_dense_solve() {
        let sys = system(1);
        let a = sys.system(1e-3).unwrap();
        let n = a.nrows();
        let (b, _) = vecs(n);
        let cfg = SolverConfig::new(1e-10, 10_000).unwrap();
        let d = build_deflator(&a).unwrap();
        let (x1, r1) = deflated_cg(&a, &b, &d, &cfg);
        let (x2, r2) = cg(&a, &b, &cfg);
        assert!(r1.converged && r2.converged);
        assert!(r1.true_relative_residual <= 1e-9);
        let exact = a.to_dense().cholesky().unwrap().solve(&nalgebra::DVector::from_column_slice(&b));
        let en = exact.norm();
        for i in 0..n {
            assert!((x1[i] - exact[i]).abs() < 1e-6 * en);
            assert!((x2[i] - exact[i]).abs() < 1e-6 * en);
        }
    }

    #[test]
    fn coarse_solution_needs_no_iterations() {
        let sys = system(1);
        let a = sys.system(1e-6).unwrap();
        let d = build_deflator(&a).unwrap();
        let c: Vec<f64> = (0..d.coarse_dim()).map(|i| 1.0 + i as f64).collect();
        let mut xs = vec![0.0; a.nrows()];
        d.prolong(&c, &mut xs);
        let b = a.mul_vec(&xs);
        let (x, rep) = deflated_cg(&a, &b, &d, &SolverConfig::new(1e-8, 100).unwrap());
        assert!(rep.iterations <= 1);
        let err: f64 = x.iter().zip(&xs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8 * c.len() as f64);
    }

    #[test]
    fn all_dirichlet_has_singular_coarse_matrix() {
        let mesh = build_cartesian_mesh(2, 2, Rect::unit()).unwrap();
        let space = DgSpace::new(mesh, 1).unwrap();
        let sys = SystemMatrices::assemble(&space, 1.0, 10.0).unwrap();
        assert!(Deflator::from_system(&sys, 1e-3).is_err());
    }
}

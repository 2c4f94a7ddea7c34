//! Extreme eigenvalues and condition numbers of (preconditioned) SPD
//! operators.
//!
//! `λ_max` comes from Lanczos on `A P⁻¹`, self-adjoint in the `P⁻¹` inner
//! product. At condition numbers near 1e10 the smallest Ritz value of that
//! run is unreliable, so `λ_min` comes from Lanczos on `P A⁻¹` using a sparse
//! Cholesky factor of `A`. Small problems are solved densely instead.

use nalgebra::{DMatrix, DVector};

use super::cholesky::SparseCholesky;
use super::InvertiblePreconditioner;
use crate::error::{Error, Result};
use crate::sparse::{dot, CsrMatrix, LinearOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionOptions {
    /// Relative residual bound on the extreme Ritz pairs.
    pub tol: f64,
    pub max_steps: usize,
    /// Problems of at most this size are solved with a dense eigensolver.
    pub dense_threshold: usize,
}

impl Default for ConditionOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_steps: 400,
            dense_threshold: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMethod {
    Dense,
    /// Lanczos on the operator and on its inverse.
    Lanczos,
    /// Single Lanczos run; `λ_min` is the smallest Ritz value.
    ShiftFreeLanczos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionEstimate {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    /// False when an extreme Ritz value did not meet the tolerance.
    pub converged: bool,
    pub steps: usize,
    pub method: EstimateMethod,
}

struct LanczosRun {
    min: f64,
    max: f64,
    min_converged: bool,
    max_converged: bool,
    steps: usize,
}

/// Lanczos with full reorthogonalisation in the inner product `⟨u, w⟩ =
/// uᵀ B w`. `t(u, bu, out)` writes `T u` and may reuse `bu = B u`.
fn lanczos(
    n: usize,
    b: &dyn Fn(&[f64], &mut [f64]),
    t: &dyn Fn(&[f64], &[f64], &mut [f64]),
    need_min: bool,
    opts: &ConditionOptions,
) -> LanczosRun {
    let mut u: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_7).sin()).collect();
    let mut bu = vec![0.0; n];
    b(&u, &mut bu);
    let nrm = dot(&u, &bu).sqrt();
    u.iter_mut().for_each(|x| *x /= nrm);
    bu.iter_mut().for_each(|x| *x /= nrm);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut bbasis: Vec<Vec<f64>> = Vec::new();
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut bw = vec![0.0; n];
    let max_steps = opts.max_steps.min(n).max(1);
    let mut run = LanczosRun {
        min: f64::NAN,
        max: f64::NAN,
        min_converged: false,
        max_converged: false,
        steps: 0,
    };
    for k in 0..max_steps {
        t(&u, &bu, &mut w);
        let alpha = dot(&bu, &w);
        alphas.push(alpha);
        basis.push(u.clone());
        bbasis.push(bu.clone());
        for _ in 0..2 {
            for (v, bv) in basis.iter().zip(&bbasis) {
                let h = dot(bv, &w);
                w.iter_mut().zip(v).for_each(|(w, v)| *w -= h * v);
            }
        }
        b(&w, &mut bw);
        let beta = dot(&w, &bw).max(0.0).sqrt();
        let steps = k + 1;
        let scale = alphas.iter().map(|a| a.abs()).fold(0.0, f64::max);
        let exhausted = beta <= 1e-13 * scale || steps == max_steps;
        if exhausted || steps % 8 == 0 || steps < 8 {
            let m = alphas.len();
            let tri = DMatrix::from_fn(m, m, |i, j| {
                if i == j {
                    alphas[i]
                } else if i + 1 == j {
                    betas[i]
                } else if j + 1 == i {
                    betas[j]
                } else {
                    0.0
                }
            });
            let eig = tri.symmetric_eigen();
            let (mut imin, mut imax) = (0, 0);
            for i in 0..m {
                if eig.eigenvalues[i] < eig.eigenvalues[imin] {
                    imin = i;
                }
                if eig.eigenvalues[i] > eig.eigenvalues[imax] {
                    imax = i;
                }
            }
            let bound = |i: usize| beta * eig.eigenvectors[(m - 1, i)].abs();
            run.min = eig.eigenvalues[imin];
            run.max = eig.eigenvalues[imax];
            run.steps = steps;
            let invariant = beta <= 1e-13 * scale;
            run.max_converged = invariant || bound(imax) <= opts.tol * run.max.abs();
            run.min_converged = invariant || bound(imin) <= opts.tol * run.min.abs();
            if run.max_converged && (!need_min || run.min_converged) || exhausted {
                return run;
            }
        }
        betas.push(beta);
        u.iter_mut().zip(&w).for_each(|(u, w)| *u = w / beta);
        bu.iter_mut().zip(&bw).for_each(|(u, w)| *u = w / beta);
    }
    run
}

/// Exact extreme eigenvalues of `P⁻¹ A` (or `A`) for small dense problems.
pub fn dense_condition_number(a: &DMatrix<f64>, p: Option<&DMatrix<f64>>) -> Result<ConditionEstimate> {
    let c = match p {
        None => a.clone(),
        Some(p) => {
            let l = p
                .clone()
                .cholesky()
                .ok_or_else(|| Error::Factorisation("preconditioner is not SPD".into()))?
                .l();
            let li = l
                .try_inverse()
                .ok_or_else(|| Error::Factorisation("singular preconditioner factor".into()))?;
            let c = &li * a * li.transpose();
            (&c + c.transpose()) * 0.5
        }
    };
    let ev = c.symmetric_eigenvalues();
    let (lmin, lmax) = (ev.min(), ev.max());
    if !(lmin > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "operator is not positive definite (smallest eigenvalue {lmin:e})"
        )));
    }
    Ok(ConditionEstimate {
        lambda_min: lmin,
        lambda_max: lmax,
        kappa: lmax / lmin,
        converged: true,
        steps: 0,
        method: EstimateMethod::Dense,
    })
}

fn dense_from(n: usize, f: impl Fn(&[f64], &mut [f64])) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        f(&e, &mut col);
        m.column_mut(j).copy_from(&DVector::from_column_slice(&col));
        e[j] = 0.0;
    }
    m
}

/// Estimates `κ(P⁻¹A) = λ_max/λ_min` for SPD `A` and an optional SPD
/// preconditioner `P`.
pub fn estimate_condition_number(
    a: &CsrMatrix,
    precond: Option<&dyn InvertiblePreconditioner>,
    opts: &ConditionOptions,
) -> Result<ConditionEstimate> {
    let n = a.nrows();
    if a.ncols() != n || n == 0 {
        return Err(Error::InvalidArgument("condition number needs a non-empty square matrix".into()));
    }
    if let Some(p) = precond {
        if p.dim() != n {
            return Err(Error::InvalidArgument("preconditioner size mismatch".into()));
        }
    }
    if n <= opts.dense_threshold {
        let pd = precond.map(|p| dense_from(n, |x, y| p.apply_forward(x, y)));
        return dense_condition_number(&a.to_dense(), pd.as_ref());
    }
    let identity = |x: &[f64], y: &mut [f64]| y.copy_from_slice(x);
    let p_inv = |x: &[f64], y: &mut [f64]| match precond {
        Some(p) => p.apply(x, y),
        None => y.copy_from_slice(x),
    };
    let b: &dyn Fn(&[f64], &mut [f64]) = if precond.is_some() { &p_inv } else { &identity };
    // T = A P⁻¹ with B = P⁻¹, so T u = A (B u).
    let forward = |_: &[f64], bu: &[f64], out: &mut [f64]| a.apply(bu, out);
    let factor = SparseCholesky::factor(a);
    let hi = lanczos(n, b, &forward, factor.is_err(), opts);
    let Ok(factor) = factor else {
        if !(hi.min > 0.0) {
            return Err(Error::InvalidArgument("operator is not positive definite".into()));
        }
        return Ok(ConditionEstimate {
            lambda_min: hi.min,
            lambda_max: hi.max,
            kappa: hi.max / hi.min,
            converged: hi.min_converged && hi.max_converged,
            steps: hi.steps,
            method: EstimateMethod::ShiftFreeLanczos,
        });
    };
    // T = P A⁻¹ with B = P⁻¹.
    let inverse = |u: &[f64], _: &[f64], out: &mut [f64]| {
        let mut y = vec![0.0; u.len()];
        factor.solve(u, &mut y);
        match precond {
            Some(p) => p.apply_forward(&y, out),
            None => out.copy_from_slice(&y),
        }
    };
    let lo = lanczos(n, b, &inverse, false, opts);
    let lambda_min = 1.0 / lo.max;
    Ok(ConditionEstimate {
        lambda_min,
        lambda_max: hi.max,
        kappa: hi.max / lambda_min,
        converged: hi.max_converged && lo.max_converged,
        steps: hi.steps + lo.steps,
        method: EstimateMethod::Lanczos,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::{build_block_jacobi, BlockLayout, DofLayout, IdentityPreconditioner};

    fn diag(d: &[f64]) -> CsrMatrix {
        CsrMatrix::from_triplets(d.len(), d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect(), 0.0)
    }

    fn lanczos_only() -> ConditionOptions {
        ConditionOptions {
            dense_threshold: 0,
            ..Default::default()
        }
    }

    #[test]
    fn diagonal_one_to_ten() {
        let d: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let a = diag(&d);
        for opts in [ConditionOptions::default(), lanczos_only()] {
            let est = estimate_condition_number(&a, None, &opts).unwrap();
            assert!((est.kappa - 10.0).abs() < 1e-6, "{est:?}");
            assert!(est.converged);
        }
    }

    #[test]
    fn wide_spectrum_via_inverse() {
        let n = 3000;
        let d: Vec<f64> = (0..n).map(|i| 10f64.powf(-10.0 + 10.0 * i as f64 / (n - 1) as f64)).collect();
        let est = estimate_condition_number(&diag(&d), None, &ConditionOptions::default()).unwrap();
        assert_eq!(est.method, EstimateMethod::Lanczos);
        assert!((est.kappa / 1e10 - 1.0).abs() < 1e-4, "{est:?}");
    }

    #[test]
    fn identity_preconditioner_matches_plain() {
        let d: Vec<f64> = (1..=50).map(|i| (i * i) as f64).collect();
        let a = diag(&d);
        let p = IdentityPreconditioner(50);
        let est = estimate_condition_number(&a, Some(&p), &lanczos_only()).unwrap();
        assert!((est.kappa - 2500.0).abs() < 1e-3);
    }

    #[test]
    fn exact_block_preconditioner_gives_one() {
        // A single element with collective blocks: P = A.
        let mut t = Vec::new();
        for i in 0..12 {
            t.push((i, i, 3.0 + i as f64));
            if i + 1 < 12 {
                t.push((i, i + 1, 1.0));
                t.push((i + 1, i, 1.0));
            }
        }
        let a = CsrMatrix::from_triplets(12, 12, t, 0.0);
        let p = build_block_jacobi(&a, DofLayout { num_elements: 1, local_dim: 3 }, BlockLayout::Collective).unwrap();
        for opts in [ConditionOptions::default(), lanczos_only()] {
            let est = estimate_condition_number(&a, Some(&p), &opts).unwrap();
            assert!((est.kappa - 1.0).abs() < 1e-8, "{est:?}");
        }
    }

    #[test]
    fn preconditioned_lanczos_matches_dense() {
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + (i % 7) as f64));
            if i + 1 < n {
                t.push((i, i + 1, -0.9));
                t.push((i + 1, i, -0.9));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, t, 0.0);
        let p = build_block_jacobi(&a, DofLayout { num_elements: 2, local_dim: 5 }, BlockLayout::ComponentWise).unwrap();
        let dense = estimate_condition_number(&a, Some(&p), &ConditionOptions::default()).unwrap();
        let lz = estimate_condition_number(&a, Some(&p), &lanczos_only()).unwrap();
        assert!((dense.kappa - lz.kappa).abs() < 1e-5 * dense.kappa);
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = diag(&[1.0, -1.0, 2.0]);
        assert!(estimate_condition_number(&a, None, &ConditionOptions::default()).is_err());
    }
}

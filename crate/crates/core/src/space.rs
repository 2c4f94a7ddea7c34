//! Discrete tensor-valued space `[P_p(T_h)]^{2x2}` with a per-element
//! orthonormal modal basis.
//!
//! Each element starts from tensor Legendre polynomials on its bounding box,
//! restricted to total degree ≤ p, and orthonormalises them in L²(κ) with two
//! passes of Cholesky–Gram.
//!
//! Global numbering is component-major: `c * scalar_dofs + e * local_dim + i`
//! with `c = 0..4` standing for σ11, σ12, σ21, σ22.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{Point, PolyMesh};
use crate::quadrature::{element_quadrature, QuadratureRule};

/// Tensor components in dof order: `(row, column)` of σ.
pub const COMPONENTS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// Values and first derivatives of Legendre polynomials P_0..=P_p at `t`.
fn legendre(p: usize, t: f64, val: &mut [f64], der: &mut [f64]) {
    val[0] = 1.0;
    der[0] = 0.0;
    if p == 0 {
        return;
    }
    val[1] = t;
    der[1] = 1.0;
    for k in 2..=p {
        let kf = k as f64;
        val[k] = ((2.0 * kf - 1.0) * t * val[k - 1] - (kf - 1.0) * val[k - 2]) / kf;
        der[k] = der[k - 2] + (2.0 * kf - 1.0) * val[k - 1];
    }
}

pub fn local_dim(p: usize) -> usize {
    (p + 1) * (p + 2) / 2
}

#[derive(Debug, Clone)]
struct ElementBasis {
    center: Point,
    half: [f64; 2],
    /// Lower-triangular map from raw Legendre modes to orthonormal modes,
    /// row-major `local_dim × local_dim`.
    coeffs: Vec<f64>,
    quad: QuadratureRule,
}

#[derive(Debug, Clone)]
pub struct DgSpace {
    mesh: PolyMesh,
    degree: usize,
    local_dim: usize,
    modes: Vec<(usize, usize)>,
    elements: Vec<ElementBasis>,
}

impl DgSpace {
    /// Builds the space of uniform degree `p ≥ 1` on `mesh`.
    pub fn new(mesh: PolyMesh, p: usize) -> Result<Self> {
        if p < 1 {
            return Err(Error::InvalidArgument(format!("degree must be ≥ 1, got {p}")));
        }
        let modes: Vec<(usize, usize)> = (0..=p)
            .flat_map(|k| (0..=k).rev().map(move |a| (a, k - a)))
            .collect();
        let ld = modes.len();
        debug_assert_eq!(ld, local_dim(p));
        let quad_degree = 2 * p + 1;

        let elements = (0..mesh.num_elements())
            .into_par_iter()
            .map(|e| -> Result<ElementBasis> {
                let poly = mesh.element_polygon(e);
                let quad = element_quadrature(&poly, quad_degree)?;
                let (lo, hi) = mesh.bounding_box(e);
                let mut basis = ElementBasis {
                    center: [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])],
                    half: [0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1])],
                    coeffs: identity(ld),
                    quad,
                };
                for _ in 0..2 {
                    let g = gram(&basis, p, &modes);
                    let chol = nalgebra::linalg::Cholesky::new(g).ok_or_else(|| {
                        Error::DegenerateGeometry(format!("element {e}: singular Gram matrix"))
                    })?;
                    let linv = chol
                        .l()
                        .solve_lower_triangular(&DMatrix::identity(ld, ld))
                        .expect("triangular factor is invertible");
                    let old = DMatrix::from_row_slice(ld, ld, &basis.coeffs);
                    let new = linv * old;
                    basis.coeffs = new.transpose().as_slice().to_vec();
                }
                Ok(basis)
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            mesh,
            degree: p,
            local_dim: ld,
            modes,
            elements,
        })
    }

    pub fn mesh(&self) -> &PolyMesh {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// (p+1)(p+2)/2.
    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn num_elements(&self) -> usize {
        self.mesh.num_elements()
    }

    /// Scalar dofs per tensor component.
    pub fn scalar_dofs(&self) -> usize {
        self.local_dim * self.num_elements()
    }

    /// N_h = 4 × scalar dofs.
    pub fn total_dofs(&self) -> usize {
        4 * self.scalar_dofs()
    }

    #[inline]
    pub fn dof(&self, component: usize, element: usize, i: usize) -> usize {
        component * self.scalar_dofs() + element * self.local_dim + i
    }

    /// Element rule of exactness 2p+1, used for assembly.
    pub fn element_rule(&self, e: usize) -> &QuadratureRule {
        &self.elements[e].quad
    }

    /// Element rule of arbitrary exactness.
    pub fn element_rule_of_degree(&self, e: usize, degree: usize) -> QuadratureRule {
        element_quadrature(&self.mesh.element_polygon(e), degree)
            .expect("element geometry was validated at construction")
    }

    /// Values of the orthonormal basis of element `e` at `x`.
    pub fn eval(&self, e: usize, x: Point, values: &mut [f64]) {
        self.eval_impl(e, x, values, None);
    }

    /// Values and gradients of the orthonormal basis of element `e` at `x`.
    pub fn eval_with_grad(&self, e: usize, x: Point, values: &mut [f64], grads: &mut [[f64; 2]]) {
        self.eval_impl(e, x, values, Some(grads));
    }

    fn eval_impl(&self, e: usize, x: Point, values: &mut [f64], grads: Option<&mut [[f64; 2]]>) {
        let b = &self.elements[e];
        let p = self.degree;
        let ld = self.local_dim;
        let mut raw = [0.0; 64];
        let mut raw_g = [[0.0; 2]; 64];
        raw_modes(b, p, &self.modes, x, &mut raw[..ld], &mut raw_g[..ld]);
        for i in 0..ld {
            let row = &b.coeffs[i * ld..i * ld + i + 1];
            values[i] = row.iter().zip(&raw).map(|(c, r)| c * r).sum();
        }
        if let Some(grads) = grads {
            for i in 0..ld {
                let row = &b.coeffs[i * ld..i * ld + i + 1];
                let mut g = [0.0; 2];
                for (c, rg) in row.iter().zip(&raw_g) {
                    g[0] += c * rg[0];
                    g[1] += c * rg[1];
                }
                grads[i] = g;
            }
        }
    }

    /// Elementwise L² projection of a tensor field `(σ11, σ12, σ21, σ22)`.
    pub fn l2_project(&self, field: impl Fn(Point) -> [f64; 4] + Sync) -> Vec<f64> {
        self.l2_project_with_degree(field, 2 * self.degree + 3)
    }

    pub fn l2_project_with_degree(
        &self,
        field: impl Fn(Point) -> [f64; 4] + Sync,
        quad_degree: usize,
    ) -> Vec<f64> {
        let ld = self.local_dim;
        let local: Vec<Vec<[f64; 4]>> = (0..self.num_elements())
            .into_par_iter()
            .map(|e| {
                let rule = self.element_rule_of_degree(e, quad_degree);
                let mut out = vec![[0.0; 4]; ld];
                let mut phi = vec![0.0; ld];
                for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                    let f = field(x);
                    self.eval(e, x, &mut phi);
                    for i in 0..ld {
                        for c in 0..4 {
                            out[i][c] += w * f[c] * phi[i];
                        }
                    }
                }
                out
            })
            .collect();
        let mut dofs = vec![0.0; self.total_dofs()];
        for (e, out) in local.iter().enumerate() {
            for (i, v) in out.iter().enumerate() {
                for c in 0..4 {
                    dofs[self.dof(c, e, i)] = v[c];
                }
            }
        }
        dofs
    }

    /// Value of the discrete field `dofs` at `x` inside element `e`.
    pub fn evaluate(&self, dofs: &[f64], e: usize, x: Point) -> [f64; 4] {
        let mut phi = vec![0.0; self.local_dim];
        self.eval(e, x, &mut phi);
        let mut out = [0.0; 4];
        for (c, o) in out.iter_mut().enumerate() {
            *o = (0..self.local_dim).map(|i| dofs[self.dof(c, e, i)] * phi[i]).sum();
        }
        out
    }

    /// Value and row-wise divergence of `dofs` at `x` inside element `e`.
    pub fn evaluate_with_div(&self, dofs: &[f64], e: usize, x: Point) -> ([f64; 4], [f64; 2]) {
        let ld = self.local_dim;
        let mut phi = vec![0.0; ld];
        let mut grad = vec![[0.0; 2]; ld];
        self.eval_with_grad(e, x, &mut phi, &mut grad);
        let mut val = [0.0; 4];
        let mut div = [0.0; 2];
        for (c, &(r, k)) in COMPONENTS.iter().enumerate() {
            for i in 0..ld {
                let d = dofs[self.dof(c, e, i)];
                val[c] += d * phi[i];
                div[r] += d * grad[i][k];
            }
        }
        (val, div)
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn raw_modes(
    b: &ElementBasis,
    p: usize,
    modes: &[(usize, usize)],
    x: Point,
    val: &mut [f64],
    grad: &mut [[f64; 2]],
) {
    let mut lx = [0.0; 16];
    let mut dx = [0.0; 16];
    let mut ly = [0.0; 16];
    let mut dy = [0.0; 16];
    let s = [(x[0] - b.center[0]) / b.half[0], (x[1] - b.center[1]) / b.half[1]];
    legendre(p, s[0], &mut lx, &mut dx);
    legendre(p, s[1], &mut ly, &mut dy);
    for (m, &(a, c)) in modes.iter().enumerate() {
        val[m] = lx[a] * ly[c];
        grad[m] = [dx[a] * ly[c] / b.half[0], lx[a] * dy[c] / b.half[1]];
    }
}

/// Gram matrix of the current basis of one element.
fn gram(b: &ElementBasis, p: usize, modes: &[(usize, usize)]) -> DMatrix<f64> {
    let ld = modes.len();
    let mut g = DMatrix::zeros(ld, ld);
    let mut raw = vec![0.0; ld];
    let mut raw_g = vec![[0.0; 2]; ld];
    let mut phi = vec![0.0; ld];
    for (&x, &w) in b.quad.points.iter().zip(&b.quad.weights) {
        raw_modes(b, p, modes, x, &mut raw, &mut raw_g);
        for i in 0..ld {
            phi[i] = (0..=i).map(|j| b.coeffs[i * ld + j] * raw[j]).sum();
        }
        for i in 0..ld {
            for j in 0..ld {
                g[(i, j)] += w * phi[i] * phi[j];
            }
        }
    }
    g
}

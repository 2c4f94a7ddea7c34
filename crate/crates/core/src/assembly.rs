//! Assembly of the mass form `M`, the DG divergence form `A`, the per-step
//! system `A* = M + Δt A` and the right-hand side `f*`.
//!
//! `M` and `A` are assembled directly from the tensor-valued forms. The
//! scalar factors `M1`, `B1`, `B2`, `B3` are assembled separately from
//! scalar forms, so [`kron_structure_check`] compares two independent
//! routes:
//!
//! ```text
//! M = μ⁻¹ K0 ⊗ M1,    A = 𝕀₂ ⊗ [B1 B2ᵀ; B2 B3]
//! ```
//!
//! with `B2(i, j) = ∫ ∂x φ_j ∂y φ_i + face terms`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{FaceKind, Point, PolyMesh};
use crate::problem::{dev, ProblemData, Tensor};
use crate::quadrature::face_quadrature;
use crate::space::{DgSpace, COMPONENTS};
use crate::sparse::{CsrMatrix, DROP_TOL};

pub const DEFAULT_ALPHA: f64 = 10.0;
pub const DEFAULT_MU: f64 = 1.0;

/// Deviatoric factor `K0` in component order (σ11, σ12, σ21, σ22).
pub const DEVIATORIC_FACTOR: [[f64; 4]; 4] = [
    [0.5, 0.0, 0.0, -0.5],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [-0.5, 0.0, 0.0, 0.5],
];

fn unit_tensor(c: usize) -> Tensor {
    let mut t = [0.0; 4];
    t[c] = 1.0;
    t
}

/// Penalty `γ_e` on an interior or Neumann face.
pub fn penalty(mesh: &PolyMesh, face: usize, alpha: f64, p: usize) -> Result<f64> {
    let f = &mesh.faces()[face];
    let p2 = (p * p) as f64;
    match f.kind {
        FaceKind::Interior => {
            let minus = f.minus.expect("interior face has two neighbours");
            Ok(alpha * (p2 / mesh.diameter(f.plus)).max(p2 / mesh.diameter(minus)))
        }
        FaceKind::Neumann => Ok(alpha * p2 / mesh.diameter(f.plus)),
        FaceKind::Dirichlet => Err(Error::ContractViolation(format!(
            "penalty requested on Dirichlet face {face}"
        ))),
    }
}

/// Selects the terms of the DG divergence form. Used to check that
/// dropping one consistency term breaks symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StiffnessTerms {
    pub volume: bool,
    /// −⟨{∇·σ}, [[τ]]⟩
    pub consistency: bool,
    /// −⟨{∇·τ}, [[σ]]⟩
    pub adjoint_consistency: bool,
    pub penalty: bool,
}

impl StiffnessTerms {
    pub const ALL: Self = Self {
        volume: true,
        consistency: true,
        adjoint_consistency: true,
        penalty: true,
    };
}

#[derive(Debug, Clone)]
pub struct MassMatrices {
    pub m1: CsrMatrix,
    /// `μ⁻¹ K0`.
    pub k: [[f64; 4]; 4],
    pub m: CsrMatrix,
}

#[derive(Debug, Clone)]
pub struct StiffnessMatrices {
    pub b1: CsrMatrix,
    pub b2: CsrMatrix,
    pub b3: CsrMatrix,
    pub a: CsrMatrix,
}

/// All operators of one discretisation.
#[derive(Debug, Clone)]
pub struct SystemMatrices {
    pub m1: CsrMatrix,
    pub b1: CsrMatrix,
    pub b2: CsrMatrix,
    pub b3: CsrMatrix,
    pub k: [[f64; 4]; 4],
    pub m: CsrMatrix,
    pub a: CsrMatrix,
    pub mu: f64,
    pub alpha: f64,
}

impl SystemMatrices {
    pub fn assemble(space: &DgSpace, mu: f64, alpha: f64) -> Result<Self> {
        let mass = assemble_mass(space, mu)?;
        let stiff = assemble_stiffness(space, alpha)?;
        Ok(Self {
            m1: mass.m1,
            b1: stiff.b1,
            b2: stiff.b2,
            b3: stiff.b3,
            k: mass.k,
            m: mass.m,
            a: stiff.a,
            mu,
            alpha,
        })
    }

    /// `A* = M + Δt A`.
    pub fn system(&self, dt: f64) -> Result<CsrMatrix> {
        build_system(&self.m, &self.a, dt)
    }

    pub fn total_dofs(&self) -> usize {
        crate::sparse::LinearOperator::nrows(&self.m)
    }
}

struct LocalBlock {
    test_elem: usize,
    trial_elem: usize,
    /// Row-major `(4L) × (4L)`, local index `c * L + i`.
    tensor: Vec<f64>,
    /// Scalar `L × L` blocks.
    scalar: Vec<Vec<f64>>,
}

fn scatter_tensor(
    space: &DgSpace,
    blocks: &[LocalBlock],
    triplets: &mut Vec<(usize, usize, f64)>,
) {
    let ld = space.local_dim();
    let n = 4 * ld;
    for b in blocks {
        for r in 0..n {
            let gi = space.dof(r / ld, b.test_elem, r % ld);
            for s in 0..n {
                let v = b.tensor[r * n + s];
                if v != 0.0 {
                    triplets.push((gi, space.dof(s / ld, b.trial_elem, s % ld), v));
                }
            }
        }
    }
}

fn scatter_scalar(
    space: &DgSpace,
    blocks: &[LocalBlock],
    which: usize,
    triplets: &mut Vec<(usize, usize, f64)>,
) {
    let ld = space.local_dim();
    for b in blocks {
        let m = &b.scalar[which];
        for i in 0..ld {
            for j in 0..ld {
                let v = m[i * ld + j];
                if v != 0.0 {
                    triplets.push((b.test_elem * ld + i, b.trial_elem * ld + j, v));
                }
            }
        }
    }
}

/// `M1(i, j) = ∫ φ_j φ_i` and `M(σ, τ) = (μ⁻¹ dev σ, dev τ)`.
pub fn assemble_mass(space: &DgSpace, mu: f64) -> Result<MassMatrices> {
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("viscosity must be positive, got {mu}")));
    }
    let ld = space.local_dim();
    let nl = 4 * ld;
    let devs: Vec<Tensor> = (0..4).map(|c| dev(unit_tensor(c))).collect();
    let blocks: Vec<LocalBlock> = (0..space.num_elements())
        .into_par_iter()
        .map(|e| {
            let mut tensor = vec![0.0; nl * nl];
            let mut m1 = vec![0.0; ld * ld];
            let mut phi = vec![0.0; ld];
            let rule = space.element_rule(e);
            for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                space.eval(e, x, &mut phi);
                for i in 0..ld {
                    for j in 0..ld {
                        m1[i * ld + j] += w * phi[i] * phi[j];
                    }
                }
                for c in 0..4 {
                    for i in 0..ld {
                        let test: Tensor = devs[c].map(|v| v * phi[i]);
                        for d in 0..4 {
                            for j in 0..ld {
                                let trial: Tensor = devs[d].map(|v| v * phi[j]);
                                let frob: f64 = (0..4).map(|m| test[m] * trial[m]).sum();
                                tensor[(c * ld + i) * nl + d * ld + j] += w * frob / mu;
                            }
                        }
                    }
                }
            }
            LocalBlock {
                test_elem: e,
                trial_elem: e,
                tensor,
                scalar: vec![m1],
            }
        })
        .collect();

    let n = space.total_dofs();
    let s = space.scalar_dofs();
    let mut t = Vec::new();
    scatter_tensor(space, &blocks, &mut t);
    let m = CsrMatrix::from_triplets(n, n, t, DROP_TOL);
    let mut t = Vec::new();
    scatter_scalar(space, &blocks, 0, &mut t);
    let m1 = CsrMatrix::from_triplets(s, s, t, DROP_TOL);
    let k = DEVIATORIC_FACTOR.map(|row| row.map(|v| v / mu));
    Ok(MassMatrices { m1, k, m })
}

/// Basis data of one side of a face at one quadrature point.
struct Side {
    elem: usize,
    /// Outward normal of this side.
    normal: [f64; 2],
    /// Weight of this side in the average.
    avg: f64,
}

/// Scalar direction pairs `(test, trial)` for B1, B2, B3.
const SCALAR_PAIRS: [(usize, usize); 3] = [(0, 0), (1, 0), (1, 1)];

pub fn assemble_stiffness(space: &DgSpace, alpha: f64) -> Result<StiffnessMatrices> {
    assemble_stiffness_with(space, alpha, StiffnessTerms::ALL)
}

/// Assembles the DG divergence form
/// `(∇·σ, ∇·τ) − ⟨{∇·σ}, [[τ]]⟩ − ⟨{∇·τ}, [[σ]]⟩ + ⟨γ [[σ]], [[τ]]⟩`
/// over interior and Neumann faces, both as the tensor operator `A` and as
/// the scalar blocks `B1`, `B2`, `B3`.
pub fn assemble_stiffness_with(
    space: &DgSpace,
    alpha: f64,
    terms: StiffnessTerms,
) -> Result<StiffnessMatrices> {
    if alpha < 0.0 {
        return Err(Error::InvalidArgument(format!("penalty must be non-negative, got {alpha}")));
    }
    let ld = space.local_dim();
    let nl = 4 * ld;
    let p = space.degree();
    let mesh = space.mesh();

    let volume: Vec<LocalBlock> = (0..space.num_elements())
        .into_par_iter()
        .map(|e| {
            let mut tensor = vec![0.0; nl * nl];
            let mut scalar = vec![vec![0.0; ld * ld]; 3];
            if terms.volume {
                let mut phi = vec![0.0; ld];
                let mut grad = vec![[0.0; 2]; ld];
                let mut div = vec![[0.0; 2]; nl];
                let rule = space.element_rule(e);
                for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                    space.eval_with_grad(e, x, &mut phi, &mut grad);
                    tensor_divergences(ld, &grad, &mut div);
                    for r in 0..nl {
                        for s in 0..nl {
                            let v = div[r][0] * div[s][0] + div[r][1] * div[s][1];
                            tensor[r * nl + s] += w * v;
                        }
                    }
                    for (b, &(ks, kt)) in SCALAR_PAIRS.iter().enumerate() {
                        for i in 0..ld {
                            for j in 0..ld {
                                scalar[b][i * ld + j] += w * grad[j][kt] * grad[i][ks];
                            }
                        }
                    }
                }
            }
            LocalBlock {
                test_elem: e,
                trial_elem: e,
                tensor,
                scalar,
            }
        })
        .collect();

    let face_ids: Vec<usize> = mesh
        .faces()
        .iter()
        .enumerate()
        .filter(|(_, f)| f.kind != FaceKind::Dirichlet)
        .map(|(i, _)| i)
        .collect();
    let face_blocks: Vec<Vec<LocalBlock>> = face_ids
        .par_iter()
        .map(|&fi| -> Result<Vec<LocalBlock>> {
            let f = &mesh.faces()[fi];
            let gamma = if terms.penalty { penalty(mesh, fi, alpha, p)? } else { 0.0 };
            let n = f.normal;
            let sides: Vec<Side> = match f.minus {
                Some(q) => vec![
                    Side { elem: f.plus, normal: n, avg: 0.5 },
                    Side { elem: q, normal: [-n[0], -n[1]], avg: 0.5 },
                ],
                None => vec![Side { elem: f.plus, normal: n, avg: 1.0 }],
            };
            let verts = mesh.vertices();
            let rule = face_quadrature(verts[f.vertices[0]], verts[f.vertices[1]], 2 * p + 1)?;
            face_blocks_at(space, &sides, &rule.points, &rule.weights, gamma, terms)
        })
        .collect::<Result<_>>()?;

    let n = space.total_dofs();
    let sd = space.scalar_dofs();
    let mut t = Vec::new();
    scatter_tensor(space, &volume, &mut t);
    for fb in &face_blocks {
        scatter_tensor(space, fb, &mut t);
    }
    let a = CsrMatrix::from_triplets(n, n, t, DROP_TOL);
    let mut bs = Vec::with_capacity(3);
    for which in 0..3 {
        let mut t = Vec::new();
        scatter_scalar(space, &volume, which, &mut t);
        for fb in &face_blocks {
            scatter_scalar(space, fb, which, &mut t);
        }
        bs.push(CsrMatrix::from_triplets(sd, sd, t, DROP_TOL));
    }
    let b3 = bs.pop().unwrap();
    let b2 = bs.pop().unwrap();
    let b1 = bs.pop().unwrap();
    Ok(StiffnessMatrices { b1, b2, b3, a })
}

/// Row-wise divergence of every tensor basis function `φ_i E_c`.
fn tensor_divergences(ld: usize, grad: &[[f64; 2]], div: &mut [[f64; 2]]) {
    for (c, &(r, k)) in COMPONENTS.iter().enumerate() {
        for i in 0..ld {
            let mut d = [0.0; 2];
            d[r] = grad[i][k];
            div[c * ld + i] = d;
        }
    }
}

/// Normal trace `(φ_i E_c) n` of every tensor basis function.
fn tensor_normal_traces(ld: usize, phi: &[f64], n: [f64; 2], out: &mut [[f64; 2]]) {
    for (c, &(r, k)) in COMPONENTS.iter().enumerate() {
        for i in 0..ld {
            let mut v = [0.0; 2];
            v[r] = phi[i] * n[k];
            out[c * ld + i] = v;
        }
    }
}

fn face_blocks_at(
    space: &DgSpace,
    sides: &[Side],
    points: &[Point],
    weights: &[f64],
    gamma: f64,
    terms: StiffnessTerms,
) -> Result<Vec<LocalBlock>> {
    let ld = space.local_dim();
    let nl = 4 * ld;
    let ns = sides.len();
    let mut blocks: Vec<LocalBlock> = Vec::with_capacity(ns * ns);
    for s in sides {
        for t in sides {
            blocks.push(LocalBlock {
                test_elem: s.elem,
                trial_elem: t.elem,
                tensor: vec![0.0; nl * nl],
                scalar: vec![vec![0.0; ld * ld]; 3],
            });
        }
    }
    let mut phi = vec![vec![0.0; ld]; ns];
    let mut grad = vec![vec![[0.0; 2]; ld]; ns];
    let mut div = vec![vec![[0.0; 2]; nl]; ns];
    let mut jump = vec![vec![[0.0; 2]; nl]; ns];
    for (&x, &w) in points.iter().zip(weights) {
        for (k, side) in sides.iter().enumerate() {
            space.eval_with_grad(side.elem, x, &mut phi[k], &mut grad[k]);
            tensor_divergences(ld, &grad[k], &mut div[k]);
            tensor_normal_traces(ld, &phi[k], side.normal, &mut jump[k]);
        }
        for (si, s) in sides.iter().enumerate() {
            for (ti, t) in sides.iter().enumerate() {
                let blk = &mut blocks[si * ns + ti];
                let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
                for r in 0..nl {
                    for q in 0..nl {
                        let mut v = 0.0;
                        if terms.consistency {
                            v -= t.avg * dot(div[ti][q], jump[si][r]);
                        }
                        if terms.adjoint_consistency {
                            v -= s.avg * dot(div[si][r], jump[ti][q]);
                        }
                        v += gamma * dot(jump[ti][q], jump[si][r]);
                        blk.tensor[r * nl + q] += w * v;
                    }
                }
                for (b, &(ks, kt)) in SCALAR_PAIRS.iter().enumerate() {
                    let (ns_, nt_) = (s.normal[ks], t.normal[kt]);
                    for i in 0..ld {
                        for j in 0..ld {
                            let mut v = 0.0;
                            if terms.consistency {
                                v -= t.avg * grad[ti][j][kt] * phi[si][i] * ns_;
                            }
                            if terms.adjoint_consistency {
                                v -= s.avg * grad[si][i][ks] * phi[ti][j] * nt_;
                            }
                            v += gamma * phi[ti][j] * nt_ * phi[si][i] * ns_;
                            blk.scalar[b][i * ld + j] += w * v;
                        }
                    }
                }
            }
        }
    }
    Ok(blocks)
}

/// `A* = M + Δt A`.
pub fn build_system(m: &CsrMatrix, a: &CsrMatrix, dt: f64) -> Result<CsrMatrix> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive (explicit stepping gives a singular system), got {dt}"
        )));
    }
    Ok(m.add_scaled(dt, a))
}

/// Load vector of `F(τ) = (F, τ) + ⟨g_D, τ n⟩_D + ⟨g_N, γ τ n − ∇·τ⟩_N`.
pub fn assemble_load(space: &DgSpace, data: &dyn ProblemData, t: f64, alpha: f64) -> Vec<f64> {
    let ld = space.local_dim();
    let nl = 4 * ld;
    let p = space.degree();
    let qdeg = 2 * p + 3;
    let mesh = space.mesh();

    let mut local: Vec<Vec<f64>> = (0..space.num_elements())
        .into_par_iter()
        .map(|e| {
            let mut out = vec![0.0; nl];
            let mut phi = vec![0.0; ld];
            let rule = space.element_rule_of_degree(e, qdeg);
            for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                let f = data.source(x, t);
                space.eval(e, x, &mut phi);
                for c in 0..4 {
                    for i in 0..ld {
                        out[c * ld + i] += w * f[c] * phi[i];
                    }
                }
            }
            out
        })
        .collect();

    let boundary: Vec<(usize, Vec<f64>)> = mesh
        .faces()
        .par_iter()
        .enumerate()
        .filter(|(_, f)| f.kind.is_boundary())
        .map(|(fi, f)| {
            let e = f.plus;
            let verts = mesh.vertices();
            let rule = face_quadrature(verts[f.vertices[0]], verts[f.vertices[1]], qdeg)
                .expect("faces have positive length");
            let mut out = vec![0.0; nl];
            let mut phi = vec![0.0; ld];
            let mut grad = vec![[0.0; 2]; ld];
            let mut div = vec![[0.0; 2]; nl];
            let mut tn = vec![[0.0; 2]; nl];
            let gamma = if f.kind == FaceKind::Neumann {
                penalty(mesh, fi, alpha, p).expect("Neumann face")
            } else {
                0.0
            };
            for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                space.eval_with_grad(e, x, &mut phi, &mut grad);
                tensor_divergences(ld, &grad, &mut div);
                tensor_normal_traces(ld, &phi, f.normal, &mut tn);
                match f.kind {
                    FaceKind::Dirichlet => {
                        let g = data.dirichlet(x, t);
                        for r in 0..nl {
                            out[r] += w * (g[0] * tn[r][0] + g[1] * tn[r][1]);
                        }
                    }
                    FaceKind::Neumann => {
                        let g = data.neumann(x, f.normal, t);
                        for r in 0..nl {
                            let v = gamma * (g[0] * tn[r][0] + g[1] * tn[r][1])
                                - (g[0] * div[r][0] + g[1] * div[r][1]);
                            out[r] += w * v;
                        }
                    }
                    FaceKind::Interior => unreachable!(),
                }
            }
            (e, out)
        })
        .collect();
    for (e, out) in boundary {
        for (a, b) in local[e].iter_mut().zip(&out) {
            *a += b;
        }
    }

    let mut f = vec![0.0; space.total_dofs()];
    for (e, out) in local.iter().enumerate() {
        for c in 0..4 {
            for i in 0..ld {
                f[space.dof(c, e, i)] = out[c * ld + i];
            }
        }
    }
    f
}

/// `f* = M σⁿ + Δt f(tⁿ⁺¹)`.
pub fn assemble_rhs(
    space: &DgSpace,
    sys: &SystemMatrices,
    data: &dyn ProblemData,
    t: f64,
    sigma_prev: &[f64],
    dt: f64,
) -> Vec<f64> {
    let mut rhs = sys.m.mul_vec(sigma_prev);
    let f = assemble_load(space, data, t, sys.alpha);
    crate::sparse::axpy(dt, &f, &mut rhs);
    rhs
}

/// `K ⊗ M1` for a dense 4×4 factor.
pub fn kron4(k: &[[f64; 4]; 4], m1: &CsrMatrix) -> CsrMatrix {
    let s = crate::sparse::LinearOperator::nrows(m1);
    let mut t = Vec::new();
    for (c, row) in k.iter().enumerate() {
        for (d, &kv) in row.iter().enumerate() {
            if kv != 0.0 {
                t.extend(m1.triplets().map(|(i, j, v)| (c * s + i, d * s + j, kv * v)));
            }
        }
    }
    CsrMatrix::from_triplets(4 * s, 4 * s, t, 0.0)
}

/// `𝕀₂ ⊗ [B1 B2ᵀ; B2 B3]`.
pub fn stiffness_from_blocks(b1: &CsrMatrix, b2: &CsrMatrix, b3: &CsrMatrix) -> CsrMatrix {
    let s = crate::sparse::LinearOperator::nrows(b1);
    let b2t = b2.transpose();
    let mut t = Vec::new();
    for pair in 0..2 {
        let o = 2 * pair;
        let place = |blk: &CsrMatrix, bi: usize, bj: usize, t: &mut Vec<_>| {
            t.extend(blk.triplets().map(|(i, j, v)| ((o + bi) * s + i, (o + bj) * s + j, v)));
        };
        place(b1, 0, 0, &mut t);
        place(&b2t, 0, 1, &mut t);
        place(b2, 1, 0, &mut t);
        place(b3, 1, 1, &mut t);
    }
    CsrMatrix::from_triplets(4 * s, 4 * s, t, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureDeviation {
    /// max |M − K ⊗ M1|
    pub mass: f64,
    /// max |A − 𝕀₂ ⊗ [B1 B2ᵀ; B2 B3]|
    pub stiffness: f64,
}

pub fn kron_structure_check(sys: &SystemMatrices) -> StructureDeviation {
    StructureDeviation {
        mass: sys.m.max_abs_diff(&kron4(&sys.k, &sys.m1)),
        stiffness: sys.a.max_abs_diff(&stiffness_from_blocks(&sys.b1, &sys.b2, &sys.b3)),
    }
}

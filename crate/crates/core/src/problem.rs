//! Problem data `(F, g_D, g_N, σ_0, μ)` and manufactured solutions.
//!
//! Tensors are stored as `[σ11, σ12, σ21, σ22]`, vectors as `[v1, v2]`.

use crate::mesh::Point;

pub type Tensor = [f64; 4];
pub type Vector = [f64; 2];

/// Deviatoric part `τ − ½ tr(τ) 𝕀`.
pub fn dev(t: Tensor) -> Tensor {
    let h = 0.5 * (t[0] + t[3]);
    [t[0] - h, t[1], t[2], t[3] - h]
}

/// `τ n`.
pub fn tensor_normal(t: Tensor, n: Vector) -> Vector {
    [t[0] * n[0] + t[1] * n[1], t[2] * n[0] + t[3] * n[1]]
}

/// Source, boundary and initial data of the pseudo-stress problem.
pub trait ProblemData: Sync {
    fn mu(&self) -> f64;
    /// Volume source F(x, t).
    fn source(&self, x: Point, t: f64) -> Tensor;
    /// Dirichlet datum g_D = ∇·σ on Γ_D.
    fn dirichlet(&self, x: Point, t: f64) -> Vector;
    /// Neumann datum g_N = σ n on Γ_N; `normal` is the outward unit normal.
    fn neumann(&self, x: Point, normal: Vector, t: f64) -> Vector;
    fn initial(&self, x: Point) -> Tensor;
}

/// Homogeneous data.
#[derive(Debug, Clone, Copy)]
pub struct ZeroData {
    pub mu: f64,
}

impl ProblemData for ZeroData {
    fn mu(&self) -> f64 {
        self.mu
    }
    fn source(&self, _: Point, _: f64) -> Tensor {
        [0.0; 4]
    }
    fn dirichlet(&self, _: Point, _: f64) -> Vector {
        [0.0; 2]
    }
    fn neumann(&self, _: Point, _: Vector, _: f64) -> Vector {
        [0.0; 2]
    }
    fn initial(&self, _: Point) -> Tensor {
        [0.0; 4]
    }
}

/// A closed-form pseudo-stress field with the derivatives needed to build
/// consistent data.
pub trait ExactSolution: Sync {
    fn value(&self, x: Point, t: f64) -> Tensor;
    fn time_derivative(&self, x: Point, t: f64) -> Tensor;
    /// Row-wise divergence `(∂x σ11 + ∂y σ12, ∂x σ21 + ∂y σ22)`.
    fn divergence(&self, x: Point, t: f64) -> Vector;
    /// `∇(∇·σ)` with entry `(r, k) = ∂_k (∇·σ)_r`, stored like a tensor.
    fn grad_div(&self, x: Point, t: f64) -> Tensor;
}

/// Data manufactured from an exact solution:
/// `F = μ⁻¹ dev(∂t σ) − ∇(∇·σ)`, `g_D = ∇·σ`, `g_N = σ n`, `σ_0 = σ(·, 0)`.
#[derive(Debug, Clone)]
pub struct Manufactured<S> {
    pub exact: S,
    pub mu: f64,
}

impl<S: ExactSolution> Manufactured<S> {
    pub fn new(exact: S, mu: f64) -> Self {
        Self { exact, mu }
    }
}

impl<S: ExactSolution> ProblemData for Manufactured<S> {
    fn mu(&self) -> f64 {
        self.mu
    }

    fn source(&self, x: Point, t: f64) -> Tensor {
        let d = dev(self.exact.time_derivative(x, t));
        let g = self.exact.grad_div(x, t);
        std::array::from_fn(|c| d[c] / self.mu - g[c])
    }

    fn dirichlet(&self, x: Point, t: f64) -> Vector {
        self.exact.divergence(x, t)
    }

    fn neumann(&self, x: Point, normal: Vector, t: f64) -> Vector {
        tensor_normal(self.exact.value(x, t), normal)
    }

    fn initial(&self, x: Point) -> Tensor {
        self.exact.value(x, 0.0)
    }
}

/// One-dimensional factor of a separable term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Factor {
    /// `s^k`
    Pow(u32),
    /// `sin(ω s)`
    Sin(f64),
    /// `cos(ω s)`
    Cos(f64),
    /// `exp(ω s)`
    Exp(f64),
}

impl Factor {
    /// `order`-th derivative at `s`.
    pub fn eval(self, order: u32, s: f64) -> f64 {
        use std::f64::consts::FRAC_PI_2;
        match self {
            Factor::Pow(k) => {
                if order > k {
                    0.0
                } else {
                    let c: f64 = ((k - order + 1)..=k).map(f64::from).product();
                    c * s.powi((k - order) as i32)
                }
            }
            Factor::Sin(w) => w.powi(order as i32) * (w * s + order as f64 * FRAC_PI_2).sin(),
            Factor::Cos(w) => w.powi(order as i32) * (w * s + order as f64 * FRAC_PI_2).cos(),
            Factor::Exp(w) => w.powi(order as i32) * (w * s).exp(),
        }
    }
}

/// `coef · fx(x) · fy(y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub fx: Factor,
    pub fy: Factor,
}

impl Term {
    pub fn new(coef: f64, fx: Factor, fy: Factor) -> Self {
        Self { coef, fx, fy }
    }

    fn eval(&self, dx: u32, dy: u32, x: Point) -> f64 {
        self.coef * self.fx.eval(dx, x[0]) * self.fy.eval(dy, x[1])
    }
}

/// Time profile g(t) of a separable field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeProfile {
    Constant,
    /// `exp(rate · t)`
    Exp(f64),
    /// `1 + sin(ω t)`
    OnePlusSin(f64),
}

impl TimeProfile {
    pub fn value(self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Exp(r) => (r * t).exp(),
            TimeProfile::OnePlusSin(w) => 1.0 + (w * t).sin(),
        }
    }

    pub fn derivative(self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant => 0.0,
            TimeProfile::Exp(r) => r * (r * t).exp(),
            TimeProfile::OnePlusSin(w) => w * (w * t).cos(),
        }
    }
}

/// `σ(x, t) = g(t) S(x)` with each component of S a sum of separable terms.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableField {
    pub time: TimeProfile,
    pub components: [Vec<Term>; 4],
}

impl SeparableField {
    fn spatial(&self, c: usize, dx: u32, dy: u32, x: Point) -> f64 {
        self.components[c].iter().map(|t| t.eval(dx, dy, x)).sum()
    }

    fn spatial_value(&self, x: Point) -> Tensor {
        std::array::from_fn(|c| self.spatial(c, 0, 0, x))
    }

    /// Smooth, non-polynomial field used in spatial convergence studies.
    pub fn trigonometric(time: TimeProfile) -> Self {
        use std::f64::consts::PI;
        use Factor::*;
        Self {
            time,
            components: [
                vec![Term::new(1.0, Sin(PI), Cos(PI))],
                vec![Term::new(0.5, Exp(1.0), Sin(PI))],
                vec![Term::new(1.0, Cos(PI), Pow(2))],
                vec![Term::new(1.0, Pow(1), Sin(2.0 * PI)), Term::new(0.3, Pow(0), Pow(0))],
            ],
        }
    }

    /// A field whose components are polynomials of total degree `degree`
    /// (1 ≤ degree ≤ 3); exactly representable in V_h for p ≥ degree.
    pub fn polynomial(degree: u32, time: TimeProfile) -> Self {
        use Factor::Pow;
        let d = degree.clamp(1, 3);
        let t = Term::new;
        Self {
            time,
            components: [
                vec![t(1.0, Pow(d), Pow(0)), t(-0.5, Pow(0), Pow(d - 1)), t(0.2, Pow(0), Pow(0))],
                vec![t(0.7, Pow(d - 1), Pow(1)), t(1.0, Pow(0), Pow(d))],
                vec![t(-1.0, Pow(1), Pow(d - 1)), t(0.4, Pow(0), Pow(0))],
                vec![t(0.3, Pow(d), Pow(0)), t(1.0, Pow(1), Pow(0)), t(-0.6, Pow(0), Pow(d))],
            ],
        }
    }
}

impl ExactSolution for SeparableField {
    fn value(&self, x: Point, t: f64) -> Tensor {
        let g = self.time.value(t);
        self.spatial_value(x).map(|v| g * v)
    }

    fn time_derivative(&self, x: Point, t: f64) -> Tensor {
        let g = self.time.derivative(t);
        self.spatial_value(x).map(|v| g * v)
    }

    fn divergence(&self, x: Point, t: f64) -> Vector {
        let g = self.time.value(t);
        [
            g * (self.spatial(0, 1, 0, x) + self.spatial(1, 0, 1, x)),
            g * (self.spatial(2, 1, 0, x) + self.spatial(3, 0, 1, x)),
        ]
    }

    fn grad_div(&self, x: Point, t: f64) -> Tensor {
        let g = self.time.value(t);
        // ∂x d1, ∂y d1, ∂x d2, ∂y d2
        [
            g * (self.spatial(0, 2, 0, x) + self.spatial(1, 1, 1, x)),
            g * (self.spatial(0, 1, 1, x) + self.spatial(1, 0, 2, x)),
            g * (self.spatial(2, 2, 0, x) + self.spatial(3, 1, 1, x)),
            g * (self.spatial(2, 1, 1, x) + self.spatial(3, 0, 2, x)),
        ]
    }
}

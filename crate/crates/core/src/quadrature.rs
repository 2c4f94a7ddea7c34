//! Quadrature on polygons (centroid sub-triangulation) and on straight faces.

use crate::error::{Error, Result};
use crate::mesh::{polygon_centroid, signed_area, Point};

/// Points and strictly positive weights; the weights sum to the measure of
/// the integration domain.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], exact for degree 2n-1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, refined by Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            z = 0.0;
            dp = 1.0;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Collapsed-coordinate (Duffy) product rule on a triangle, exact for
/// polynomials of total degree `degree`.
pub fn triangle_rule(a: Point, b: Point, c: Point, degree: usize) -> QuadratureRule {
    let n = degree / 2 + 1 + 1;
    let (gx, gw) = gauss_legendre(n);
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let jac = det.abs();
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&xi, &wxi) in gx.iter().zip(&gw) {
        let xi = 0.5 * (xi + 1.0);
        for (&eta, &weta) in gx.iter().zip(&gw) {
            let eta = 0.5 * (eta + 1.0);
            let u = xi * (1.0 - eta);
            let v = eta;
            points.push([
                a[0] + u * (b[0] - a[0]) + v * (c[0] - a[0]),
                a[1] + u * (b[1] - a[1]) + v * (c[1] - a[1]),
            ]);
            weights.push(0.25 * wxi * weta * (1.0 - eta) * jac);
        }
    }
    QuadratureRule { points, weights }
}

/// Rule of exactness `degree` on a polygon, built by splitting it into
/// triangles (centroid, v_i, v_{i+1}). The polygon must be star-shaped with
/// respect to its centroid.
pub fn element_quadrature(poly: &[Point], degree: usize) -> Result<QuadratureRule> {
    if poly.len() < 3 {
        return Err(Error::DegenerateGeometry("polygon with fewer than 3 vertices".into()));
    }
    let area = signed_area(poly);
    if !(area > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "polygon has non-positive area {area:e}"
        )));
    }
    let c = polygon_centroid(poly);
    let mut rule = QuadratureRule {
        points: Vec::new(),
        weights: Vec::new(),
    };
    let n = poly.len();
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let t = (p[0] - c[0]) * (q[1] - c[1]) - (q[0] - c[0]) * (p[1] - c[1]);
        if t <= 1e-14 * area {
            return Err(Error::DegenerateGeometry(format!(
                "polygon is not star-shaped with respect to its centroid (edge {i})"
            )));
        }
        let sub = triangle_rule(c, p, q, degree);
        rule.points.extend(sub.points);
        rule.weights.extend(sub.weights);
    }
    Ok(rule)
}

/// Gauss rule of exactness `degree` on the segment from `a` to `b`.
pub fn face_quadrature(a: Point, b: Point, degree: usize) -> Result<QuadratureRule> {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    if len == 0.0 {
        return Err(Error::DegenerateGeometry("zero-length face".into()));
    }
    let (gx, gw) = gauss_legendre(degree / 2 + 1);
    let points = gx
        .iter()
        .map(|&s| {
            let t = 0.5 * (s + 1.0);
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
        })
        .collect();
    let weights = gw.iter().map(|&w| 0.5 * w * len).collect();
    Ok(QuadratureRule { points, weights })
}

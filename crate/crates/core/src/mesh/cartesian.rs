use super::{PolyMesh, Point};
use crate::error::{Error, Result};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn unit() -> Self {
        Self::new(0.0, 1.0, 0.0, 1.0)
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Tiles `domain` with `nx × ny` rectangles. Boundary faces are Dirichlet.
pub fn build_cartesian_mesh(nx: usize, ny: usize, domain: Rect) -> Result<PolyMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument(format!(
            "element counts must be positive, got {nx}×{ny}"
        )));
    }
    if !(domain.x1 > domain.x0 && domain.y1 > domain.y0) {
        return Err(Error::InvalidArgument(format!("degenerate domain {domain:?}")));
    }
    let mut vertices: Vec<Point> = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        // Pin the last coordinate so boundary predicates can use exact tests.
        let y = if j == ny {
            domain.y1
        } else {
            domain.y0 + (domain.y1 - domain.y0) * j as f64 / ny as f64
        };
        for i in 0..=nx {
            let x = if i == nx {
                domain.x1
            } else {
                domain.x0 + (domain.x1 - domain.x0) * i as f64 / nx as f64
            };
            vertices.push([x, y]);
        }
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut elements = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            elements.push(vec![vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
        }
    }
    PolyMesh::from_polygons(vertices, elements, &[])
}

//! Polygonal meshes of planar domains.
//!
//! A [`PolyMesh`] stores straight-sided, counter-clockwise polygons together
//! with the face connectivity needed by the DG assembly: every face knows its
//! `plus` element (the one whose outward normal is stored) and, for interior
//! faces, its `minus` neighbour.

mod agglomerate;
mod cartesian;
mod io;

pub use agglomerate::{agglomerate, Agglomeration};
pub use cartesian::{build_cartesian_mesh, Rect};
pub use io::{parse_mesh, read_mesh, write_mesh};

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceKind {
    Interior,
    Dirichlet,
    Neumann,
}

impl FaceKind {
    pub fn is_boundary(self) -> bool {
        !matches!(self, FaceKind::Interior)
    }
}

/// A straight face between two mesh vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    /// Endpoints, ordered counter-clockwise with respect to `plus`.
    pub vertices: [usize; 2],
    pub kind: FaceKind,
    pub plus: usize,
    pub minus: Option<usize>,
    /// Unit outward normal of the plus element.
    pub normal: [f64; 2],
    pub length: f64,
}

/// Immutable polygonal mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMesh {
    vertices: Vec<Point>,
    elements: Vec<Vec<usize>>,
    faces: Vec<Face>,
    element_faces: Vec<Vec<usize>>,
    areas: Vec<f64>,
    centroids: Vec<Point>,
    diameters: Vec<f64>,
    mesh_size: f64,
}

pub(crate) fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut a = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        a += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a
}

pub(crate) fn polygon_centroid(poly: &[Point]) -> Point {
    let n = poly.len();
    // Shift to the first vertex to limit cancellation on small elements.
    let o = poly[0];
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = [poly[i][0] - o[0], poly[i][1] - o[1]];
        let q = [poly[(i + 1) % n][0] - o[0], poly[(i + 1) % n][1] - o[1]];
        let cross = p[0] * q[1] - q[0] * p[1];
        a += cross;
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    [o[0] + cx / (3.0 * a), o[1] + cy / (3.0 * a)]
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on_segment = |a: Point, b: Point, p: Point| {
        p[0] >= a[0].min(b[0])
            && p[0] <= a[0].max(b[0])
            && p[1] >= a[1].min(b[1])
            && p[1] <= a[1].max(b[1])
    };
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// True when no two non-adjacent edges of the closed loop touch and no
/// vertex repeats.
pub(crate) fn is_simple(poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in i + 1..n {
            if poly[i] == poly[j] {
                return false;
            }
        }
    }
    for i in 0..n {
        let (a1, a2) = (poly[i], poly[(i + 1) % n]);
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (b1, b2) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

/// Star-shapedness with respect to the area centroid: every sub-triangle
/// (centroid, v_i, v_{i+1}) has positive area.
pub(crate) fn is_centroid_star_shaped(poly: &[Point]) -> bool {
    let area = signed_area(poly);
    if area <= 0.0 {
        return false;
    }
    let c = polygon_centroid(poly);
    let n = poly.len();
    (0..n).all(|i| cross(c, poly[i], poly[(i + 1) % n]) > 1e-10 * area)
}

fn diameter(poly: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, p) in poly.iter().enumerate() {
        for q in &poly[i + 1..] {
            d = d.max(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
        }
    }
    d
}

impl PolyMesh {
    /// Builds a mesh from vertex coordinates and counter-clockwise element
    /// loops. Every boundary face starts out as [`FaceKind::Dirichlet`];
    /// `boundary_tags` overrides the kind of the listed boundary faces
    /// (matched by unordered endpoint pair).
    pub fn from_polygons(
        vertices: Vec<Point>,
        elements: Vec<Vec<usize>>,
        boundary_tags: &[(usize, usize, FaceKind)],
    ) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidArgument("mesh has no elements".into()));
        }
        let mut areas = Vec::with_capacity(elements.len());
        let mut centroids = Vec::with_capacity(elements.len());
        let mut diameters = Vec::with_capacity(elements.len());
        for (e, lp) in elements.iter().enumerate() {
            if lp.len() < 3 {
                return Err(Error::DegenerateGeometry(format!(
                    "element {e} has fewer than three vertices"
                )));
            }
            if let Some(&v) = lp.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidArgument(format!(
                    "element {e} references missing vertex {v}"
                )));
            }
            let poly: Vec<Point> = lp.iter().map(|&v| vertices[v]).collect();
            let a = signed_area(&poly);
            if a <= 0.0 {
                return Err(Error::DegenerateGeometry(format!(
                    "element {e} is not counter-clockwise with positive area (area {a:e})"
                )));
            }
            if !is_simple(&poly) {
                return Err(Error::DegenerateGeometry(format!(
                    "element {e} is not a simple polygon"
                )));
            }
            areas.push(a);
            centroids.push(polygon_centroid(&poly));
            diameters.push(diameter(&poly));
        }

        let mut tags: HashMap<(usize, usize), FaceKind> = HashMap::new();
        for &(a, b, k) in boundary_tags {
            tags.insert((a.min(b), a.max(b)), k);
        }

        let mut faces: Vec<Face> = Vec::new();
        let mut element_faces = vec![Vec::new(); elements.len()];
        let mut by_edge: HashMap<(usize, usize), usize> = HashMap::new();
        for (e, lp) in elements.iter().enumerate() {
            let k = lp.len();
            for l in 0..k {
                let (a, b) = (lp[l], lp[(l + 1) % k]);
                let key = (a.min(b), a.max(b));
                match by_edge.get(&key) {
                    None => {
                        let (pa, pb) = (vertices[a], vertices[b]);
                        let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
                        let length = (dx * dx + dy * dy).sqrt();
                        if length == 0.0 {
                            return Err(Error::DegenerateGeometry(format!(
                                "zero-length face between vertices {a} and {b}"
                            )));
                        }
                        by_edge.insert(key, faces.len());
                        element_faces[e].push(faces.len());
                        faces.push(Face {
                            vertices: [a, b],
                            kind: FaceKind::Dirichlet,
                            plus: e,
                            minus: None,
                            normal: [dy / length, -dx / length],
                            length,
                        });
                    }
                    Some(&f) => {
                        let face = &mut faces[f];
                        if face.minus.is_some() || face.vertices != [b, a] {
                            return Err(Error::DegenerateGeometry(format!(
                                "edge ({a}, {b}) is shared inconsistently"
                            )));
                        }
                        face.minus = Some(e);
                        face.kind = FaceKind::Interior;
                        element_faces[e].push(f);
                    }
                }
            }
        }
        for face in faces.iter_mut().filter(|f| f.minus.is_none()) {
            let [a, b] = face.vertices;
            if let Some(&k) = tags.get(&(a.min(b), a.max(b))) {
                if k == FaceKind::Interior {
                    return Err(Error::InvalidArgument(format!(
                        "boundary face ({a}, {b}) tagged as interior"
                    )));
                }
                face.kind = k;
            }
        }

        let mesh_size = diameters.iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            vertices,
            elements,
            faces,
            element_faces,
            areas,
            centroids,
            diameters,
            mesh_size,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Indices of the faces bounding element `e`, in loop order.
    pub fn element_faces(&self, e: usize) -> &[usize] {
        &self.element_faces[e]
    }

    pub fn element_polygon(&self, e: usize) -> Vec<Point> {
        self.elements[e].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn area(&self, e: usize) -> f64 {
        self.areas[e]
    }

    pub fn centroid(&self, e: usize) -> Point {
        self.centroids[e]
    }

    /// Element diameter h_κ.
    pub fn diameter(&self, e: usize) -> f64 {
        self.diameters[e]
    }

    pub fn element_diameters(&self) -> &[f64] {
        &self.diameters
    }

    /// h = max h_κ.
    pub fn mesh_size(&self) -> f64 {
        self.mesh_size
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Axis-aligned bounding box of element `e` as `(min, max)`.
    pub fn bounding_box(&self, e: usize) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for &v in &self.elements[e] {
            let p = self.vertices[v];
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    pub fn face_midpoint(&self, f: usize) -> Point {
        let [a, b] = self.faces[f].vertices;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    pub fn count_faces(&self, kind: FaceKind) -> usize {
        self.faces.iter().filter(|f| f.kind == kind).count()
    }

    /// Retags every boundary face: Neumann where `neumann` holds at the face
    /// midpoint, Dirichlet elsewhere. Interior faces are untouched.
    pub fn classify_boundary(mut self, neumann: impl Fn(Point) -> bool) -> Self {
        for f in 0..self.faces.len() {
            if self.faces[f].kind.is_boundary() {
                let m = self.face_midpoint(f);
                self.faces[f].kind = if neumann(m) {
                    FaceKind::Neumann
                } else {
                    FaceKind::Dirichlet
                };
            }
        }
        self
    }

    /// Boundary tags of the current mesh, suitable for [`PolyMesh::from_polygons`].
    pub fn boundary_tags(&self) -> Vec<(usize, usize, FaceKind)> {
        self.faces
            .iter()
            .filter(|f| f.kind.is_boundary())
            .map(|f| (f.vertices[0], f.vertices[1], f.kind))
            .collect()
    }
}

/// Free-function form of [`PolyMesh::classify_boundary`].
pub fn classify_boundary(mesh: PolyMesh, neumann: impl Fn(Point) -> bool) -> PolyMesh {
    mesh.classify_boundary(neumann)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l_shaped_hexagon_is_accepted() {
        let v = vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 0.5],
            [0.5, 0.5],
            [0.5, 1.0],
            [0.0, 1.0],
        ];
        let m = PolyMesh::from_polygons(v, vec![vec![0, 1, 2, 3, 4, 5]], &[]).unwrap();
        assert!((m.area(0) - 0.75).abs() < 1e-15);
        assert_eq!(m.faces().len(), 6);
        assert_eq!(m.count_faces(FaceKind::Dirichlet), 6);
        assert!((m.diameter(0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn clockwise_element_is_rejected() {
        let v = vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]];
        let err = PolyMesh::from_polygons(v, vec![vec![0, 1, 2, 3]], &[]).unwrap_err();
        assert!(matches!(err, Error::DegenerateGeometry(_)));
    }

    #[test]
    fn bow_tie_is_not_simple() {
        let p = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(!is_simple(&p));
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(is_simple(&sq));
    }

    #[test]
    fn normals_are_unit_and_outward() {
        let m = build_cartesian_mesh(3, 2, Rect::unit()).unwrap();
        for (f, face) in m.faces().iter().enumerate() {
            let n = face.normal;
            assert!(((n[0] * n[0] + n[1] * n[1]).sqrt() - 1.0).abs() < 1e-14);
            let c = m.centroid(face.plus);
            let mid = m.face_midpoint(f);
            let out = (mid[0] - c[0]) * n[0] + (mid[1] - c[1]) * n[1];
            assert!(out > 0.0, "face {f} normal points inward");
        }
    }

    #[test]
    fn interior_faces_are_shared_by_two_elements() {
        let m = build_cartesian_mesh(4, 3, Rect::unit()).unwrap();
        let mut count = vec![0usize; m.faces().len()];
        for e in 0..m.num_elements() {
            for &f in m.element_faces(e) {
                count[f] += 1;
            }
        }
        for (f, face) in m.faces().iter().enumerate() {
            let expected = if face.kind == FaceKind::Interior { 2 } else { 1 };
            assert_eq!(count[f], expected);
        }
    }

    #[test]
    fn classify_boundary_examples() {
        let m = build_cartesian_mesh(2, 2, Rect::unit()).unwrap();
        let right = m.clone().classify_boundary(|p| (p[0] - 1.0).abs() < 1e-12);
        assert_eq!(right.count_faces(FaceKind::Neumann), 2);
        assert_eq!(right.count_faces(FaceKind::Dirichlet), 6);
        assert_eq!(right.count_faces(FaceKind::Interior), 4);

        let none = m.clone().classify_boundary(|_| false);
        assert_eq!(none.count_faces(FaceKind::Neumann), 0);
        assert_eq!(none.count_faces(FaceKind::Dirichlet), 8);

        let all = classify_boundary(m, |_| true);
        assert_eq!(all.count_faces(FaceKind::Neumann), 8);
        assert_eq!(all.count_faces(FaceKind::Dirichlet), 0);
    }
}

//! Plain-text mesh format:
//!
//! ```text
//! NV NE
//! x y            (NV lines)
//! k i1 ... ik    (NE lines, counter-clockwise vertex loop, 0-based)
//! a b D|N        (optional boundary tags, any number of lines)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{FaceKind, PolyMesh, Point};
use crate::error::{Error, Result};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line, format!("bad {what}")))
}

pub fn parse_mesh(text: &str) -> Result<PolyMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty mesh file"))?;
    let mut tok = header.split_whitespace();
    let nv: usize = field(tok.next(), ln, "vertex count")?;
    let ne: usize = field(tok.next(), ln, "element count")?;

    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(ln, "unexpected end of vertices"))?;
        let mut tok = l.split_whitespace();
        vertices.push([field(tok.next(), ln, "x")?, field(tok.next(), ln, "y")?]);
    }
    let mut elements = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(ln, "unexpected end of elements"))?;
        let mut tok = l.split_whitespace();
        let k: usize = field(tok.next(), ln, "loop length")?;
        let lp = (0..k)
            .map(|_| field(tok.next(), ln, "vertex index"))
            .collect::<Result<Vec<usize>>>()?;
        if tok.next().is_some() {
            return Err(parse_err(ln, "trailing tokens after vertex loop"));
        }
        elements.push(lp);
    }
    let mut tags = Vec::new();
    for (ln, l) in lines {
        let mut tok = l.split_whitespace();
        let a: usize = field(tok.next(), ln, "face vertex")?;
        let b: usize = field(tok.next(), ln, "face vertex")?;
        let kind = match tok.next() {
            Some("D") => FaceKind::Dirichlet,
            Some("N") => FaceKind::Neumann,
            _ => return Err(parse_err(ln, "boundary tag must be D or N")),
        };
        tags.push((a, b, kind));
    }
    PolyMesh::from_polygons(vertices, elements, &tags)
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<PolyMesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

/// Serialises `mesh`, including a tag line for every boundary face.
pub fn write_mesh(mesh: &PolyMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {}", mesh.vertices().len(), mesh.num_elements());
    for p in mesh.vertices() {
        // {:?} round-trips f64 exactly
        let _ = writeln!(s, "{:?} {:?}", p[0], p[1]);
    }
    for lp in mesh.elements() {
        let _ = write!(s, "{}", lp.len());
        for v in lp {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    for (a, b, k) in mesh.boundary_tags() {
        let c = if k == FaceKind::Neumann { 'N' } else { 'D' };
        let _ = writeln!(s, "{a} {b} {c}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{agglomerate, build_cartesian_mesh, Rect};

    #[test]
    fn round_trip_agglomerated() {
        let m = build_cartesian_mesh(5, 4, Rect::unit())
            .unwrap()
            .classify_boundary(|p| p[1] == 0.0);
        let m = agglomerate(&m, 9, 1).unwrap().mesh;
        let back = parse_mesh(&write_mesh(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn parses_minimal_file() {
        let txt = "4 1\n0 0\n1 0\n1 1\n0 1\n4 0 1 2 3\n1 2 N\n";
        let m = parse_mesh(txt).unwrap();
        assert_eq!(m.count_faces(FaceKind::Neumann), 1);
        assert_eq!(m.count_faces(FaceKind::Dirichlet), 3);
    }

    #[test]
    fn reports_bad_lines() {
        let err = parse_mesh("4 1\n0 0\n1 0\n1 x\n0 1\n4 0 1 2 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }));
        let err = parse_mesh("4 1\n0 0\n1 0\n1 1\n0 1\n4 0 1 2 3\n1 2 Q\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 7, .. }));
    }
}

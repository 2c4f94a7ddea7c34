//! Matrix Market coordinate format (`real`, `general` or `symmetric`).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub fn write_matrix_market(m: &CsrMatrix) -> String {
    let mut s = String::new();
    s.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", crate::sparse::LinearOperator::nrows(m), crate::sparse::LinearOperator::ncols(m), m.nnz());
    for (i, j, v) in m.triplets() {
        let _ = writeln!(s, "{} {} {:?}", i + 1, j + 1, v);
    }
    s
}

pub fn save_matrix_market(m: &CsrMatrix, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_matrix_market(m))?;
    Ok(())
}

pub fn parse_matrix_market(text: &str) -> Result<CsrMatrix> {
    let err = |line: usize, msg: &str| Error::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, banner) = lines.next().ok_or_else(|| err(1, "empty file"))?;
    let banner: Vec<String> = banner.split_whitespace().map(str::to_lowercase).collect();
    if banner.len() < 5 || banner[0] != "%%matrixmarket" || banner[1] != "matrix" {
        return Err(err(1, "missing %%MatrixMarket matrix banner"));
    }
    if banner[2] != "coordinate" {
        return Err(err(1, "only coordinate format is supported"));
    }
    if banner[3] != "real" && banner[3] != "integer" {
        return Err(err(1, "only real or integer fields are supported"));
    }
    let symmetric = match banner[4].as_str() {
        "general" => false,
        "symmetric" => true,
        _ => return Err(err(1, "only general or symmetric matrices are supported")),
    };
    let mut body = lines.filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('%'));
    let (ln, size) = body.next().ok_or_else(|| err(1, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| err(ln, "bad size line")))
        .collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(err(ln, "size line must have three integers"));
    }
    let (nr, nc, nnz) = (dims[0], dims[1], dims[2]);
    let mut t = Vec::with_capacity(if symmetric { 2 * nnz } else { nnz });
    for _ in 0..nnz {
        let (ln, l) = body.next().ok_or_else(|| err(ln, "fewer entries than declared"))?;
        let mut tok = l.split_whitespace();
        let i: usize = tok.next().and_then(|x| x.parse().ok()).ok_or_else(|| err(ln, "bad row"))?;
        let j: usize = tok.next().and_then(|x| x.parse().ok()).ok_or_else(|| err(ln, "bad column"))?;
        let v: f64 = tok.next().and_then(|x| x.parse().ok()).ok_or_else(|| err(ln, "bad value"))?;
        if i == 0 || j == 0 || i > nr || j > nc {
            return Err(err(ln, "index out of range"));
        }
        t.push((i - 1, j - 1, v));
        if symmetric && i != j {
            t.push((j - 1, i - 1, v));
        }
    }
    Ok(CsrMatrix::from_triplets(nr, nc, t, 0.0))
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    parse_matrix_market(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_symmetric_storage() {
        let txt = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 3\n1 1 2.0\n2 1 -1.0\n3 3 4\n";
        let m = parse_matrix_market(txt).unwrap();
        assert_eq!(m.get(0, 1), -1.0);
        assert_eq!(m.get(1, 0), -1.0);
        assert_eq!(m.nnz(), 4);
    }

    #[test]
    fn rejects_array_format() {
        assert!(parse_matrix_market("%%MatrixMarket matrix array real general\n1 1\n1.0\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trip(entries in proptest::collection::vec((0usize..6, 0usize..5, -1e3f64..1e3), 0..30)) {
            let m = CsrMatrix::from_triplets(6, 5, entries, 0.0);
            let back = parse_matrix_market(&write_matrix_market(&m)).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}

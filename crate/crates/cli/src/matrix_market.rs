//! Matrix Market coordinate files (`real general`, 1-based indices).

use std::io::{self, Write};

use geofem_core::sparse::{SparseOperator, Symmetry};

pub const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

pub fn write_matrix_market(op: &SparseOperator, comment: &str, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for line in comment.lines() {
        writeln!(out, "% {line}")?;
    }
    writeln!(out, "{} {} {}", op.nrows(), op.ncols(), op.nnz())?;
    for (i, j, v) in op.triplets() {
        writeln!(out, "{} {} {:?}", i + 1, j + 1, v)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct MatrixMarketError {
    pub line: usize,
    pub message: String,
}

/// Reads a coordinate `real general` file; the result is tagged `General`.
pub fn read_matrix_market(text: &str) -> Result<SparseOperator, MatrixMarketError> {
    let err = |line: usize, message: &str| MatrixMarketError {
        line,
        message: message.into(),
    };
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| err(1, "empty file"))?;
    let banner: Vec<String> = first.split_whitespace().map(str::to_ascii_lowercase).collect();
    if banner != ["%%matrixmarket", "matrix", "coordinate", "real", "general"] {
        return Err(err(1, "expected a `matrix coordinate real general` banner"));
    }
    let mut body = lines.filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('%'));
    let (ln, size) = body.next().ok_or_else(|| err(2, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| err(ln + 1, "bad size line"))?;
    let [nrows, ncols, nnz] = dims[..] else {
        return Err(err(ln + 1, "size line needs three integers"));
    };
    let mut triplets = Vec::with_capacity(nnz);
    for (ln, l) in body {
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(err(ln + 1, "expected `row col value`"));
        }
        let i: usize = parts[0].parse().map_err(|_| err(ln + 1, "bad row index"))?;
        let j: usize = parts[1].parse().map_err(|_| err(ln + 1, "bad column index"))?;
        let v: f64 = parts[2].parse().map_err(|_| err(ln + 1, "bad value"))?;
        if i == 0 || j == 0 || i > nrows || j > ncols {
            return Err(err(ln + 1, "index out of range"));
        }
        triplets.push((i - 1, j - 1, v));
    }
    if triplets.len() != nnz {
        return Err(err(text.lines().count(), "entry count does not match the size line"));
    }
    SparseOperator::from_triplets(nrows, ncols, &triplets, Symmetry::General).map_err(|e| err(0, &e.to_string()))
}

//! Plain-text mesh format.
//!
//! ```text
//! # optional comments
//! nodes 4
//! 0 0
//! 1 0
//! 1 1
//! 0 1
//! triangles 2
//! 0 1 2
//! 0 2 3
//! ```
//!
//! Node indices are 0-based. The boundary is derived from the topology.

use std::fmt::Write as _;

use geofem_core::mesh::Mesh;
use geofem_core::Error as CoreError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct MeshFileError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> MeshFileError {
    MeshFileError {
        line,
        message: message.into(),
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next non-comment, non-blank line with its 1-based number.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            self.last = i + 1;
            let t = l.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Some((i + 1, t));
            }
        }
        None
    }

    fn header(&mut self, word: &str) -> Result<usize, MeshFileError> {
        let (ln, l) = self.next().ok_or_else(|| err(self.last + 1, format!("missing `{word} <count>` header")))?;
        let mut it = l.split_whitespace();
        match (it.next(), it.next().map(str::parse::<usize>), it.next()) {
            (Some(w), Some(Ok(n)), None) if w == word => Ok(n),
            _ => Err(err(ln, format!("expected `{word} <count>`, found `{l}`"))),
        }
    }

    fn record<T: std::str::FromStr, const N: usize>(&mut self, what: &str) -> Result<(usize, [T; N]), MeshFileError> {
        let (ln, l) = self.next().ok_or_else(|| err(self.last + 1, format!("unexpected end of file while reading {what}")))?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != N {
            return Err(err(ln, format!("expected {N} values for {what}, found {}", parts.len())));
        }
        let mut out = Vec::with_capacity(N);
        for p in parts {
            out.push(p.parse::<T>().map_err(|_| err(ln, format!("cannot parse `{p}` in {what}")))?);
        }
        match out.try_into() {
            Ok(a) => Ok((ln, a)),
            Err(_) => unreachable!(),
        }
    }
}

pub fn load_mesh(text: &str) -> Result<Mesh, MeshFileError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let nn = lines.header("nodes")?;
    let mut nodes = Vec::with_capacity(nn);
    for _ in 0..nn {
        let (ln, p) = lines.record::<f64, 2>("a node")?;
        if !p.iter().all(|v| v.is_finite()) {
            return Err(err(ln, "non-finite coordinate"));
        }
        nodes.push(p);
    }
    let nt = lines.header("triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    let mut triangle_lines = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, t) = lines.record::<usize, 3>("a triangle")?;
        triangles.push(t);
        triangle_lines.push(ln);
    }
    if let Some((ln, l)) = lines.next() {
        return Err(err(ln, format!("trailing content `{l}`")));
    }
    Mesh::new(nodes, triangles).map_err(|e| match e {
        CoreError::NodeOutOfRange { triangle, node, count } => {
            err(triangle_lines[triangle], format!("node index {node} out of range ({count} nodes)"))
        }
        CoreError::DegenerateTriangle(t) => err(triangle_lines[t], "zero-area triangle"),
        other => err(lines.last, other.to_string()),
    })
}

/// Writes a mesh so that [`load_mesh`] reproduces it exactly.
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "nodes {}", mesh.num_nodes());
    for p in mesh.nodes() {
        let _ = writeln!(s, "{:?} {:?}", p[0], p[1]);
    }
    let _ = writeln!(s, "triangles {}", mesh.num_triangles());
    for t in mesh.triangles() {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    s
}

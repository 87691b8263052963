//! Conforming triangular meshes of polygonal domains.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub type Point = [f64; 2];

/// Upper bound on the interior-node perturbation, as a fraction of the local
/// edge length. Larger offsets can invert triangles.
pub const MAX_PERTURB: f64 = 0.3;

/// Topological edge: global id plus the one or two triangles sharing it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeInfo {
    pub id: usize,
    pub triangles: [usize; 2],
    pub count: usize,
}

impl EdgeInfo {
    pub fn is_boundary(&self) -> bool {
        self.count == 1
    }
}

/// An edge on the domain boundary, oriented as in its triangle so the outward
/// normal points to the right of `start -> end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub start: usize,
    pub end: usize,
    pub triangle: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edge_table: BTreeMap<(usize, usize), EdgeInfo>,
    /// Global edge ids of each triangle's local edges (0-1, 1-2, 2-0).
    triangle_edges: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
}

/// Affine map from the reference triangle `{(0,0), (1,0), (0,1)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub origin: Point,
    /// Row-major 2x2; columns are the two edge vectors leaving vertex 0.
    pub jacobian: [[f64; 2]; 2],
    pub det: f64,
    pub inv_transpose: [[f64; 2]; 2],
}

impl AffineMap {
    pub fn to_physical(&self, xi: Point) -> Point {
        let j = &self.jacobian;
        [
            self.origin[0] + j[0][0] * xi[0] + j[0][1] * xi[1],
            self.origin[1] + j[1][0] * xi[0] + j[1][1] * xi[1],
        ]
    }

    pub fn to_reference(&self, x: Point) -> Point {
        // J^{-1} = (J^{-T})^T
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        let it = &self.inv_transpose;
        [it[0][0] * d[0] + it[1][0] * d[1], it[0][1] * d[0] + it[1][1] * d[1]]
    }

    /// Maps a reference gradient to the physical one.
    pub fn push_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        let it = &self.inv_transpose;
        [it[0][0] * g[0] + it[0][1] * g[1], it[1][0] * g[0] + it[1][1] * g[1]]
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det
    }
}

fn signed_double_area(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
}

impl Mesh {
    /// Builds a mesh from raw connectivity. Clockwise triangles are reordered
    /// to counterclockwise; boundary edges are derived from the topology.
    pub fn new(nodes: Vec<Point>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        let count = nodes.len();
        for (t, tri) in triangles.iter_mut().enumerate() {
            if let Some(&node) = tri.iter().find(|&&v| v >= count) {
                return Err(Error::NodeOutOfRange {
                    triangle: t,
                    node,
                    count,
                });
            }
            let a = signed_double_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            let scale = tri
                .iter()
                .map(|&v| libm::fabs(nodes[v][0]) + libm::fabs(nodes[v][1]))
                .fold(1.0, f64::max);
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] || libm::fabs(a) <= 1e-14 * scale * scale {
                return Err(Error::DegenerateTriangle(t));
            }
            if a < 0.0 {
                tri.swap(1, 2);
            }
        }

        let mut edge_table: BTreeMap<(usize, usize), EdgeInfo> = BTreeMap::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut ids = [0usize; 3];
            for (l, id) in ids.iter_mut().enumerate() {
                let (a, b) = (tri[l], tri[(l + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let next_id = edge_table.len();
                let entry = edge_table.entry(key).or_insert(EdgeInfo {
                    id: next_id,
                    triangles: [t, usize::MAX],
                    count: 0,
                });
                match entry.count {
                    0 => {}
                    1 => entry.triangles[1] = t,
                    _ => return Err(Error::NonManifoldEdge(key.0, key.1)),
                }
                entry.count += 1;
                *id = entry.id;
            }
            triangle_edges.push(ids);
        }

        let mut boundary_edges = Vec::new();
        for tri in triangles.iter() {
            for l in 0..3 {
                let (a, b) = (tri[l], tri[(l + 1) % 3]);
                let info = edge_table[&(a.min(b), a.max(b))];
                if info.is_boundary() {
                    boundary_edges.push(BoundaryEdge {
                        start: a,
                        end: b,
                        triangle: info.triangles[0],
                    });
                }
            }
        }

        Ok(Self {
            nodes,
            triangles,
            edge_table,
            triangle_edges,
            boundary_edges,
        })
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_table.len()
    }

    pub fn edge_table(&self) -> &BTreeMap<(usize, usize), EdgeInfo> {
        &self.edge_table
    }

    pub fn edge(&self, a: usize, b: usize) -> Option<&EdgeInfo> {
        self.edge_table.get(&(a.min(b), a.max(b)))
    }

    /// Global edge ids of triangle `t` in local order (0-1, 1-2, 2-0).
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        let mut flags = alloc::vec![false; self.nodes.len()];
        for e in &self.boundary_edges {
            flags[e.start] = true;
            flags[e.end] = true;
        }
        (0..self.nodes.len()).filter(|&i| flags[i]).collect()
    }

    pub fn affine_map(&self, elem: usize) -> Result<AffineMap> {
        let tri = self.triangles.get(elem).ok_or(Error::IndexOutOfRange {
            index: elem,
            len: self.triangles.len(),
        })?;
        Ok(self.map_unchecked(*tri))
    }

    pub(crate) fn map(&self, elem: usize) -> AffineMap {
        self.map_unchecked(self.triangles[elem])
    }

    fn map_unchecked(&self, tri: [usize; 3]) -> AffineMap {
        let [p0, p1, p2] = tri.map(|v| self.nodes[v]);
        let jacobian = [[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]];
        let det = jacobian[0][0] * jacobian[1][1] - jacobian[0][1] * jacobian[1][0];
        let inv_transpose = [
            [jacobian[1][1] / det, -jacobian[1][0] / det],
            [-jacobian[0][1] / det, jacobian[0][0] / det],
        ];
        AffineMap {
            origin: p0,
            jacobian,
            det,
            inv_transpose,
        }
    }

    pub fn triangle_area(&self, elem: usize) -> f64 {
        let [a, b, c] = self.triangles[elem].map(|v| self.nodes[v]);
        0.5 * signed_double_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Characteristic length: the longest edge in the mesh.
    pub fn max_edge_length(&self) -> f64 {
        self.edge_table
            .keys()
            .map(|&(a, b)| dist(self.nodes[a], self.nodes[b]))
            .fold(0.0, f64::max)
    }

    /// Distance from `p` to the nearest boundary edge.
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        self.boundary_edges
            .iter()
            .map(|e| segment_distance(p, self.nodes[e.start], self.nodes[e.end]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Renumbers nodes by `perm` (new index of old node `i` is `perm[i]`).
    pub fn renumbered(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.nodes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.nodes.len(),
                got: perm.len(),
            });
        }
        let mut nodes = alloc::vec![[0.0; 2]; self.nodes.len()];
        for (old, &new) in perm.iter().enumerate() {
            nodes[new] = self.nodes[old];
        }
        let triangles = self.triangles.iter().map(|t| t.map(|v| perm[v])).collect();
        Self::new(nodes, triangles)
    }
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    libm::hypot(a[0] - b[0], a[1] - b[1])
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * d[0], a[1] + t * d[1]])
}

/// Structured triangulation of the unit square with `n` subdivisions per side,
/// each cell split along its rising diagonal, with interior nodes displaced by
/// seeded uniform random offsets of length at most `perturb / n`.
pub fn generate_square_mesh(n: usize, perturb: f64, seed: u64) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::NoSubdivisions);
    }
    if !(0.0..=MAX_PERTURB).contains(&perturb) {
        return Err(Error::PerturbOutOfRange(perturb));
    }
    let h = 1.0 / n as f64;
    // componentwise bound so that the offset length stays below perturb * h
    let amp = perturb * h * core::f64::consts::FRAC_1_SQRT_2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let mut p = [i as f64 * h, j as f64 * h];
            if i == n {
                p[0] = 1.0;
            }
            if j == n {
                p[1] = 1.0;
            }
            if i > 0 && i < n && j > 0 && j < n && perturb > 0.0 {
                p[0] += amp * (2.0 * rng.random::<f64>() - 1.0);
                p[1] += amp * (2.0 * rng.random::<f64>() - 1.0);
            }
            nodes.push(p);
        }
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Mesh::new(nodes, triangles)
}

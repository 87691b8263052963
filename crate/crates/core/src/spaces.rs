//! Global function spaces and the element pairs built from them.
//!
//! Continuous spaces number their DOFs vertices first (global DOF = node
//! index), then edge DOFs (`num_nodes + edge_id * (k-1) + m`, with `m` running
//! from the lower to the higher node index of the edge), then element-interior
//! DOFs. Discontinuous spaces use `element * local_count + local_index`.
//!
//! Vector spaces interleave components: scalar DOF `s` carries vector DOFs
//! `2s` (x component) and `2s + 1` (y component).

use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::elements::{lagrange_basis, quadrature, ReferenceBasis};
use crate::mesh::{Mesh, Point};
use crate::{Error, Result};

/// Tolerance of the point-on-boundary test for boundary DOFs.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Continuity {
    Continuous,
    Discontinuous,
}

#[derive(Debug, Clone)]
pub struct ScalarSpace {
    mesh: Arc<Mesh>,
    basis: ReferenceBasis,
    continuity: Continuity,
    dof_map: Vec<usize>,
    dof_coords: Vec<Point>,
    boundary_dofs: Vec<usize>,
    on_boundary: Vec<bool>,
}

impl ScalarSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize, continuity: Continuity) -> Result<Self> {
        if continuity == Continuity::Continuous && degree == 0 {
            return Err(Error::ContinuousDegreeZero);
        }
        let basis = lagrange_basis(degree)?;
        let nloc = basis.node_count();
        let nelem = mesh.num_triangles();
        let mut dof_map = Vec::with_capacity(nelem * nloc);
        let ndof = match continuity {
            Continuity::Discontinuous => {
                dof_map.extend(0..nelem * nloc);
                nelem * nloc
            }
            Continuity::Continuous => {
                let per_edge = degree - 1;
                let nint = basis.interior_dofs().len();
                let edge_base = mesh.num_nodes();
                let int_base = edge_base + mesh.num_edges() * per_edge;
                for (e, tri) in mesh.triangles().iter().enumerate() {
                    dof_map.extend_from_slice(tri);
                    let edges = mesh.triangle_edges(e);
                    for l in 0..3 {
                        let (a, b) = (tri[l], tri[(l + 1) % 3]);
                        for m in 0..per_edge {
                            let g = if a < b { m } else { per_edge - 1 - m };
                            dof_map.push(edge_base + edges[l] * per_edge + g);
                        }
                    }
                    dof_map.extend((0..nint).map(|m| int_base + e * nint + m));
                }
                int_base + nelem * nint
            }
        };

        let mut dof_coords = alloc::vec![[0.0; 2]; ndof];
        for e in 0..nelem {
            let map = mesh.map(e);
            for (i, xi) in basis.dof_points().iter().enumerate() {
                dof_coords[dof_map[e * nloc + i]] = map.to_physical(*xi);
            }
        }
        let on_boundary: Vec<bool> = dof_coords
            .iter()
            .map(|&p| mesh.distance_to_boundary(p) < BOUNDARY_TOL)
            .collect();
        let boundary_dofs = (0..ndof).filter(|&i| on_boundary[i]).collect();

        Ok(Self {
            mesh,
            basis,
            continuity,
            dof_map,
            dof_coords,
            boundary_dofs,
            on_boundary,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn basis(&self) -> &ReferenceBasis {
        &self.basis
    }

    pub fn degree(&self) -> usize {
        self.basis.order()
    }

    pub fn continuity(&self) -> Continuity {
        self.continuity
    }

    pub fn ndof(&self) -> usize {
        self.dof_coords.len()
    }

    pub fn local_count(&self) -> usize {
        self.basis.node_count()
    }

    /// Global DOFs of element `e`, in local order.
    pub fn element_dofs(&self, e: usize) -> &[usize] {
        let n = self.local_count();
        &self.dof_map[e * n..(e + 1) * n]
    }

    pub fn dof_coords(&self) -> &[Point] {
        &self.dof_coords
    }

    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    pub fn is_boundary_dof(&self, dof: usize) -> bool {
        self.on_boundary[dof]
    }

    /// Lagrange interpolation of a global function.
    pub fn interpolate(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.dof_coords.iter().map(|&p| f(p)).collect()
    }

    /// Interpolation of an elementwise-defined function `f(element, xi, x)`.
    /// For continuous spaces a shared DOF takes the value from the last
    /// element visiting it.
    pub fn interpolate_elementwise(&self, mut f: impl FnMut(usize, Point, Point) -> f64) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.ndof()];
        for e in 0..self.mesh.num_triangles() {
            for (i, xi) in self.basis.dof_points().iter().enumerate() {
                let dof = self.dof_map[e * self.local_count() + i];
                out[dof] = f(e, *xi, self.dof_coords[dof]);
            }
        }
        out
    }

    pub fn evaluate(&self, coeffs: &[f64], elem: usize, xi: Point) -> f64 {
        let phi = self.basis.eval(xi);
        self.element_dofs(elem).iter().zip(&phi).map(|(&d, p)| coeffs[d] * p).sum()
    }

    /// Physical gradient of the field inside `elem`.
    pub fn gradient(&self, coeffs: &[f64], elem: usize, xi: Point) -> [f64; 2] {
        let map = self.mesh.map(elem);
        let mut g = [0.0; 2];
        for (&d, rg) in self.element_dofs(elem).iter().zip(self.basis.grad(xi)) {
            let pg = map.push_gradient(rg);
            g[0] += coeffs[d] * pg[0];
            g[1] += coeffs[d] * pg[1];
        }
        g
    }
}

#[derive(Debug, Clone)]
pub struct VectorSpace {
    scalar: ScalarSpace,
}

impl VectorSpace {
    pub fn new(scalar: ScalarSpace) -> Self {
        Self { scalar }
    }

    pub fn scalar(&self) -> &ScalarSpace {
        &self.scalar
    }

    pub fn ndof(&self) -> usize {
        2 * self.scalar.ndof()
    }

    pub fn degree(&self) -> usize {
        self.scalar.degree()
    }

    pub fn continuity(&self) -> Continuity {
        self.scalar.continuity()
    }

    pub fn index(scalar_dof: usize, component: usize) -> usize {
        2 * scalar_dof + component
    }

    pub fn interpolate(&self, f: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
        self.scalar.dof_coords().iter().flat_map(|&p| f(p)).collect()
    }

    pub fn interpolate_elementwise(&self, mut f: impl FnMut(usize, Point, Point) -> [f64; 2]) -> Vec<f64> {
        let s = &self.scalar;
        let mut out = alloc::vec![0.0; self.ndof()];
        for e in 0..s.mesh().num_triangles() {
            for (i, xi) in s.basis().dof_points().iter().enumerate() {
                let dof = s.element_dofs(e)[i];
                let v = f(e, *xi, s.dof_coords()[dof]);
                out[2 * dof] = v[0];
                out[2 * dof + 1] = v[1];
            }
        }
        out
    }

    pub fn evaluate(&self, coeffs: &[f64], elem: usize, xi: Point) -> [f64; 2] {
        let phi = self.scalar.basis().eval(xi);
        let mut v = [0.0; 2];
        for (&d, p) in self.scalar.element_dofs(elem).iter().zip(&phi) {
            v[0] += coeffs[2 * d] * p;
            v[1] += coeffs[2 * d + 1] * p;
        }
        v
    }

    /// Coefficients of the pointwise rotation `u -> u_perp = (-u_y, u_x)`.
    pub fn perp(coeffs: &[f64]) -> Vec<f64> {
        coeffs
            .chunks_exact(2)
            .flat_map(|c| [-c[1], c[0]])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairKind {
    P0P1,
    P1DgP2,
    P2DgP3,
    /// Equal-order continuous pair; violates the gradient embedding.
    P1P1,
}

impl PairKind {
    pub const ALL: [PairKind; 4] = [PairKind::P0P1, PairKind::P1DgP2, PairKind::P2DgP3, PairKind::P1P1];

    pub fn name(self) -> &'static str {
        match self {
            PairKind::P0P1 => "P0-P1",
            PairKind::P1DgP2 => "P1DG-P2",
            PairKind::P2DgP3 => "P2DG-P3",
            PairKind::P1P1 => "P1-P1",
        }
    }

    /// `(velocity degree, velocity continuity, elevation degree)`.
    fn layout(self) -> (usize, Continuity, usize) {
        match self {
            PairKind::P0P1 => (0, Continuity::Discontinuous, 1),
            PairKind::P1DgP2 => (1, Continuity::Discontinuous, 2),
            PairKind::P2DgP3 => (2, Continuity::Discontinuous, 3),
            PairKind::P1P1 => (1, Continuity::Continuous, 1),
        }
    }

    /// Member `PnDG-P(n+1)` of the embedding family.
    pub fn family(n: usize) -> Option<Self> {
        match n {
            0 => Some(PairKind::P0P1),
            1 => Some(PairKind::P1DgP2),
            2 => Some(PairKind::P2DgP3),
            _ => None,
        }
    }
}

impl fmt::Display for PairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PairKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PairKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownPair(s.to_string()))
    }
}

/// A mixed pair `(H, V)`: continuous elevation space and vector velocity space.
#[derive(Debug, Clone)]
pub struct ElementPair {
    pub kind: PairKind,
    pub h: ScalarSpace,
    pub v: VectorSpace,
    /// Pointwise gradients of `H` lie in `V`.
    pub embeds_gradient: bool,
    /// `V` is closed under the pointwise 90 degree rotation.
    pub closed_under_perp: bool,
}

impl ElementPair {
    pub fn new(kind: PairKind, mesh: Arc<Mesh>) -> Result<Self> {
        let (vdeg, vcont, hdeg) = kind.layout();
        let h = ScalarSpace::new(mesh.clone(), hdeg, Continuity::Continuous)?;
        let v = VectorSpace::new(ScalarSpace::new(mesh, vdeg, vcont)?);
        let embeds_gradient = vcont == Continuity::Discontinuous && vdeg + 1 >= hdeg;
        Ok(Self {
            kind,
            h,
            v,
            embeds_gradient,
            // componentwise spaces share one continuity rule for both components
            closed_under_perp: true,
        })
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.h.mesh()
    }

    pub fn is_embedding(&self) -> bool {
        self.embeds_gradient && self.closed_under_perp
    }

    /// Quadrature degree integrating every bilinear form of the pair exactly.
    pub fn quadrature_degree(&self) -> usize {
        2 * self.h.degree().max(self.v.degree())
    }
}

pub fn make_pair(name: &str, mesh: Arc<Mesh>) -> Result<ElementPair> {
    ElementPair::new(name.parse()?, mesh)
}

/// Integrates an elementwise-defined `f(element, xi, x)` over the mesh.
pub fn integrate(mesh: &Mesh, degree: usize, mut f: impl FnMut(usize, Point, Point) -> f64) -> Result<f64> {
    let rule = quadrature(degree)?;
    let mut total = 0.0;
    for e in 0..mesh.num_triangles() {
        let map = mesh.map(e);
        let mut local = 0.0;
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            local += w * f(e, *xi, map.to_physical(*xi));
        }
        total += local * map.det;
    }
    Ok(total)
}

/// L2 distance between a discrete scalar field and `exact`.
pub fn l2_error(space: &ScalarSpace, coeffs: &[f64], exact: impl Fn(Point) -> f64) -> Result<f64> {
    let s = integrate(space.mesh(), 8, |e, xi, x| {
        let d = space.evaluate(coeffs, e, xi) - exact(x);
        d * d
    })?;
    Ok(libm::sqrt(s))
}

/// L2 distance between a discrete vector field and `exact`.
pub fn l2_error_vector(space: &VectorSpace, coeffs: &[f64], exact: impl Fn(Point) -> [f64; 2]) -> Result<f64> {
    let s = integrate(space.scalar().mesh(), 8, |e, xi, x| {
        let v = space.evaluate(coeffs, e, xi);
        let w = exact(x);
        (v[0] - w[0]) * (v[0] - w[0]) + (v[1] - w[1]) * (v[1] - w[1])
    })?;
    Ok(libm::sqrt(s))
}

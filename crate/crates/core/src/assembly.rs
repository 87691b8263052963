//! Global operators of the mixed discretisation.
//!
//! With `w_i` the vector basis of `V` and `phi_j` the basis of `H`:
//!
//! | operator | entry | tag |
//! |---|---|---|
//! | `M_u` | `∫ w_i · w_j` | symmetric |
//! | `M_η` | `∫ phi_i phi_j` | symmetric |
//! | `G`   | `∫ w_i · ∇phi_j` | general, `V × H` |
//! | `C`   | `∫ w_i · w_j⊥` | skew |
//! | `K`   | `∫ ∇phi_i · ∇phi_j` | symmetric |
//!
//! The divergence form `∫ ∇phi · u` is `Gᵀ`; there is no separate matrix.

use alloc::vec::Vec;

use crate::elements::quadrature;
use crate::linalg::BlockDiagonalInverse;
use crate::spaces::{Continuity, ElementPair, ScalarSpace};
use crate::sparse::{SparseOperator, Symmetry, TripletBuilder};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceTag {
    Velocity,
    Elevation,
}

/// Coefficients of a discrete field, tagged with the space they live in.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVector {
    pub space: SpaceTag,
    pub coeffs: Vec<f64>,
}

impl FieldVector {
    pub fn new(pair: &ElementPair, space: SpaceTag, coeffs: Vec<f64>) -> Result<Self> {
        let expected = match space {
            SpaceTag::Velocity => pair.v.ndof(),
            SpaceTag::Elevation => pair.h.ndof(),
        };
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: coeffs.len(),
            });
        }
        Ok(Self { space, coeffs })
    }

    pub fn zeros(pair: &ElementPair, space: SpaceTag) -> Self {
        let n = match space {
            SpaceTag::Velocity => pair.v.ndof(),
            SpaceTag::Elevation => pair.h.ndof(),
        };
        Self {
            space,
            coeffs: alloc::vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.coeffs)
    }
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(libm::fabs(*x)))
}

/// Scalar mass matrix of any scalar space.
pub fn scalar_mass(space: &ScalarSpace, degree: usize) -> Result<SparseOperator> {
    let rule = quadrature(degree)?;
    let basis = space.basis();
    let n = basis.node_count();
    let tab: Vec<Vec<f64>> = rule.points.iter().map(|p| basis.eval(*p)).collect();
    let mesh = space.mesh();
    let mut t = TripletBuilder::with_capacity(space.ndof(), space.ndof(), mesh.num_triangles() * n * n);
    let mut local = alloc::vec![0.0; n * n];
    for e in 0..mesh.num_triangles() {
        let det = mesh.map(e).det;
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, w) in rule.weights.iter().enumerate() {
            let phi = &tab[q];
            for i in 0..n {
                for j in 0..n {
                    local[i * n + j] += w * det * phi[i] * phi[j];
                }
            }
        }
        let dofs = space.element_dofs(e);
        for i in 0..n {
            for j in 0..n {
                t.push(dofs[i], dofs[j], local[i * n + j]);
            }
        }
    }
    Ok(t.build(Symmetry::Symmetric))
}

/// Stiffness matrix `∫ ∇phi_i · ∇phi_j` of a scalar space.
pub fn scalar_stiffness(space: &ScalarSpace, degree: usize) -> Result<SparseOperator> {
    let rule = quadrature(degree)?;
    let basis = space.basis();
    let n = basis.node_count();
    let tab: Vec<Vec<[f64; 2]>> = rule.points.iter().map(|p| basis.grad(*p)).collect();
    let mesh = space.mesh();
    let mut t = TripletBuilder::with_capacity(space.ndof(), space.ndof(), mesh.num_triangles() * n * n);
    let mut local = alloc::vec![0.0; n * n];
    let mut grads = alloc::vec![[0.0; 2]; n];
    for e in 0..mesh.num_triangles() {
        let map = mesh.map(e);
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, w) in rule.weights.iter().enumerate() {
            for (g, rg) in grads.iter_mut().zip(&tab[q]) {
                *g = map.push_gradient(*rg);
            }
            for i in 0..n {
                for j in 0..n {
                    local[i * n + j] += w * map.det * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                }
            }
        }
        let dofs = space.element_dofs(e);
        for i in 0..n {
            for j in 0..n {
                t.push(dofs[i], dofs[j], local[i * n + j]);
            }
        }
    }
    Ok(t.build(Symmetry::Symmetric))
}

/// Lifts a scalar mass matrix to the interleaved vector space (`M_u`) or to
/// the rotation form (`C`).
fn lift_vector(scalar: &SparseOperator, perp: bool) -> SparseOperator {
    let n = 2 * scalar.nrows();
    let mut t = TripletBuilder::with_capacity(n, n, 2 * scalar.nnz());
    for (a, b, m) in scalar.triplets() {
        if perp {
            // w_a^x · (w_b^y)⊥ = -m, w_a^y · (w_b^x)⊥ = m
            t.push(2 * a, 2 * b + 1, -m);
            t.push(2 * a + 1, 2 * b, m);
        } else {
            t.push(2 * a, 2 * b, m);
            t.push(2 * a + 1, 2 * b + 1, m);
        }
    }
    t.build(if perp { Symmetry::Skew } else { Symmetry::Symmetric })
}

pub fn velocity_mass(pair: &ElementPair) -> Result<SparseOperator> {
    velocity_mass_with(pair, pair.quadrature_degree())
}

pub fn velocity_mass_with(pair: &ElementPair, degree: usize) -> Result<SparseOperator> {
    Ok(lift_vector(&scalar_mass(pair.v.scalar(), degree)?, false))
}

pub fn pressure_mass(pair: &ElementPair) -> Result<SparseOperator> {
    scalar_mass(&pair.h, pair.quadrature_degree())
}

pub fn coriolis_op(pair: &ElementPair) -> Result<SparseOperator> {
    coriolis_op_with(pair, pair.quadrature_degree())
}

pub fn coriolis_op_with(pair: &ElementPair, degree: usize) -> Result<SparseOperator> {
    Ok(lift_vector(&scalar_mass(pair.v.scalar(), degree)?, true))
}

pub fn stiffness(pair: &ElementPair) -> Result<SparseOperator> {
    scalar_stiffness(&pair.h, pair.quadrature_degree())
}

pub fn gradient_op(pair: &ElementPair) -> Result<SparseOperator> {
    gradient_op_with(pair, pair.quadrature_degree())
}

/// `G_ij = ∫ w_i · ∇phi_j`, rows in `V`, columns in `H`.
pub fn gradient_op_with(pair: &ElementPair, degree: usize) -> Result<SparseOperator> {
    let rule = quadrature(degree)?;
    let (vs, hs) = (pair.v.scalar(), &pair.h);
    let (nv, nh) = (vs.local_count(), hs.local_count());
    let vtab: Vec<Vec<f64>> = rule.points.iter().map(|p| vs.basis().eval(*p)).collect();
    let htab: Vec<Vec<[f64; 2]>> = rule.points.iter().map(|p| hs.basis().grad(*p)).collect();
    let mesh = pair.mesh();
    let mut t = TripletBuilder::with_capacity(pair.v.ndof(), hs.ndof(), mesh.num_triangles() * 2 * nv * nh);
    let mut local = alloc::vec![[0.0; 2]; nv * nh];
    let mut grads = alloc::vec![[0.0; 2]; nh];
    for e in 0..mesh.num_triangles() {
        let map = mesh.map(e);
        local.iter_mut().for_each(|v| *v = [0.0; 2]);
        for (q, w) in rule.weights.iter().enumerate() {
            for (g, rg) in grads.iter_mut().zip(&htab[q]) {
                *g = map.push_gradient(*rg);
            }
            for a in 0..nv {
                let s = w * map.det * vtab[q][a];
                for j in 0..nh {
                    local[a * nh + j][0] += s * grads[j][0];
                    local[a * nh + j][1] += s * grads[j][1];
                }
            }
        }
        let (vd, hd) = (vs.element_dofs(e), hs.element_dofs(e));
        for a in 0..nv {
            for j in 0..nh {
                for c in 0..2 {
                    t.push(2 * vd[a] + c, hd[j], local[a * nh + j][c]);
                }
            }
        }
    }
    Ok(t.build(Symmetry::General))
}

/// Vector DOFs of each element: the blocks of `M_u` and `C` when `V` is
/// discontinuous.
pub fn velocity_element_blocks(pair: &ElementPair) -> Vec<Vec<usize>> {
    let vs = pair.v.scalar();
    (0..pair.mesh().num_triangles())
        .map(|e| vs.element_dofs(e).iter().flat_map(|&d| [2 * d, 2 * d + 1]).collect())
        .collect()
}

/// All operators of a pair, assembled once.
#[derive(Debug, Clone)]
pub struct Operators {
    pub mass_u: SparseOperator,
    pub mass_eta: SparseOperator,
    pub gradient: SparseOperator,
    pub coriolis: SparseOperator,
    pub stiffness: SparseOperator,
    /// Scalar mass of the velocity template space.
    pub mass_v_scalar: SparseOperator,
}

impl Operators {
    pub fn assemble(pair: &ElementPair) -> Result<Self> {
        let deg = pair.quadrature_degree();
        let mass_v_scalar = scalar_mass(pair.v.scalar(), deg)?;
        Ok(Self {
            mass_u: lift_vector(&mass_v_scalar, false),
            mass_eta: scalar_mass(&pair.h, deg)?,
            gradient: gradient_op_with(pair, deg)?,
            coriolis: lift_vector(&mass_v_scalar, true),
            stiffness: scalar_stiffness(&pair.h, deg)?,
            mass_v_scalar,
        })
    }
}

/// Solver for `M_u x = b`: blockwise inverse for discontinuous `V`, banded
/// factorization of the scalar mass otherwise.
#[derive(Debug, Clone)]
pub enum VelocityMassSolver {
    Blocks(BlockDiagonalInverse),
    Banded(crate::linalg::BandedLu),
}

impl VelocityMassSolver {
    pub fn new(pair: &ElementPair, ops: &Operators) -> Result<Self> {
        match pair.v.continuity() {
            Continuity::Discontinuous => Ok(Self::Blocks(BlockDiagonalInverse::new(&ops.mass_u, velocity_element_blocks(pair))?)),
            Continuity::Continuous => Ok(Self::Banded(crate::linalg::BandedLu::factor(&ops.mass_v_scalar)?)),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Self::Blocks(inv) => inv.apply(b),
            Self::Banded(lu) => {
                let bx: Vec<f64> = b.iter().step_by(2).copied().collect();
                let by: Vec<f64> = b.iter().skip(1).step_by(2).copied().collect();
                let (x, y) = (lu.solve(&bx), lu.solve(&by));
                x.into_iter().zip(y).flat_map(|(p, q)| [p, q]).collect()
            }
        }
    }
}

//! Mixed finite elements for the linear rotating shallow-water equations on
//! unstructured triangular meshes.
//!
//! The crate covers the whole numerical pipeline: mesh construction, reference
//! Lagrange bases and quadrature, continuous and discontinuous function spaces
//! packaged as element pairs, sparse operator assembly, implicit-midpoint time
//! stepping with geostrophically balanced initial states, and the numerical
//! checks (pointwise gradient, inf-sup, pressure-Poisson identity, spectrum,
//! convergence) that make the properties of the `PnDG-P(n+1)` family visible.
//!
//! The crate is `no_std` and only needs an allocator. File formats, the CLI
//! and everything touching the filesystem live in the companion `geofem`
//! crate.

#![no_std]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

extern crate alloc;

pub mod analysis;
pub mod assembly;
pub mod elements;
mod error;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod spaces;
pub mod sparse;

pub use error::{Error, Result};

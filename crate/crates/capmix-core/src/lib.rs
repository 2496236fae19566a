//! Numerical core for anisotropic capillary convex bodies in the upper half-space.
//!
//! Bodies are described by Euclidean support fields on the unit sphere. Their
//! capillary counterparts live on a translated Wulff cap `C`, where the mixed
//! discriminant of the tensors `tau[f]` gives mixed volumes and the
//! Alexandrov-Fenchel family of inequalities can be checked numerically.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod body;
pub mod capgeom;
pub mod chart;
pub mod error;
pub mod fmath;
pub mod functionals;
pub mod linalg;
pub mod mixdisc;
pub mod norm;
pub mod sphere;

pub use body::{CapFunction, CapillaryBody, SupportField};
pub use capgeom::{CapConfig, CapMesh, MeshKind, NodeTag};
pub use error::{CoreError, Result};
pub use linalg::{Matrix, Vector};
pub use norm::{NormModel, TermKind, ZonalTerm};

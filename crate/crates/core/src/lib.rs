//! Core numerics for boundary vortices of a thin-film Ginzburg-Landau energy
//! with weak tangential anchoring.
//!
//! Everything here is `no_std` + `alloc`; file formats, the CLI and thread pools
//! live in the `bvlab` companion crate.
#![no_std]

extern crate alloc;

pub mod error;
pub mod field;
pub mod geometry;
pub mod jacobian;
pub mod lbfgs;
pub mod lifting;
pub mod linalg;
pub mod mesh;
pub mod num;
pub mod onedim;
pub mod optimizer;
pub mod projector;
pub mod renorm;

pub use error::{Error, Result};
pub use field::{EnergyBreakdown, VectorField2D};
pub use geometry::{BoundaryCurve, Domain};
pub use jacobian::{JacobianPairing, TestDictionary, Vortex, VortexSet};
pub use mesh::TriMesh;

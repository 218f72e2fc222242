//! Quadratic Lagrange finite elements for the Poisson problem on uniform
//! tetrahedral (Kuhn) meshes of the unit cube.

pub mod analysis;
pub mod error;
pub mod exactmath;
pub mod fem;
pub mod lift;
pub mod mesh;
pub mod orthogonality;
pub mod report;
pub mod system;

pub use error::{Error, Result};

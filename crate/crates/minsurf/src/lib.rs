//! Triply periodic minimal hypersurfaces in R^n built from exact polyhedral
//! data: rational symmetry verification, minimal-surface-equation solves on
//! sliced domains, catenoid profiles, and assembled periodic meshes.

pub mod catenoid;
pub mod error;
pub mod exact;
pub mod exec;
pub mod grid;
pub mod linalg;
pub mod mesh;
pub mod mse;
pub mod isometry;
pub mod polytope;
pub mod report;
pub mod scherk;
pub mod surfaces;

pub use error::{Error, Result};

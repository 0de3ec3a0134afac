//! Primal-dual weak Galerkin finite elements for second-order elliptic Cauchy
//! problems on uniform triangulations of the unit square.

pub mod cases;
pub mod error;
pub mod fespace;
pub mod linalg;
pub mod mesh;
pub mod norms;
pub mod quadrature;
pub mod study;
pub mod system;
pub mod weakops;

pub use error::{Error, Result};

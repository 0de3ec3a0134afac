//! Polynomial bases, degree-of-freedom layout and L2 projections for the weak
//! finite element space.

mod basis;
mod dofs;
mod projection;

pub use basis::{
    edge_quadrature, exponents, poly_dim, triangle_quadrature, EdgeBasis, ElementBasis,
};
pub use dofs::{DofMap, Field, FieldLayout, WeakFunction};
pub use projection::{project_cal_qh, project_q0, project_qb, project_qh};

/// Degrees supported by the bases and quadrature.
pub const SUPPORTED_DEGREES: [usize; 3] = [1, 2, 3];

pub fn check_degree(k: usize) -> crate::error::Result<()> {
    if SUPPORTED_DEGREES.contains(&k) {
        Ok(())
    } else {
        Err(crate::error::Error::UnsupportedDegree(k))
    }
}

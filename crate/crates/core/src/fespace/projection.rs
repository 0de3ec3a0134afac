//! L2 projections onto element, edge and weak spaces.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::quadrature::Quadrature;

use super::basis::{edge_quadrature, poly_dim, triangle_quadrature, EdgeBasis, ElementBasis};
use super::dofs::{FieldLayout, WeakFunction};

fn solve_spd(mass: DMatrix<f64>, rhs: DVector<f64>, what: &'static str, index: usize) -> Result<Vec<f64>> {
    let chol = mass
        .cholesky()
        .ok_or(Error::SingularLocalMatrix { what, index })?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

/// Coefficients of the L2 projection of `f` onto P_k(T) in the scaled
/// monomial basis of triangle `t`.
pub fn project_q0<F>(f: F, mesh: &Mesh, t: usize, k: usize, quad: &Quadrature) -> Result<Vec<f64>>
where
    F: Fn(Point) -> f64,
{
    project_element(f, mesh, t, poly_dim(k), k, quad)
}

fn project_element<F>(f: F, mesh: &Mesh, t: usize, dim: usize, k: usize, quad: &Quadrature) -> Result<Vec<f64>>
where
    F: Fn(Point) -> f64,
{
    let basis = ElementBasis::new(mesh, t, k);
    let mut mass = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    for (p, w) in triangle_quadrature(mesh, t, &quad.triangle) {
        let v = basis.values(&p);
        let fv = f(p);
        for i in 0..dim {
            rhs[i] += w * fv * v[i];
            for j in 0..dim {
                mass[(i, j)] += w * v[i] * v[j];
            }
        }
    }
    solve_spd(mass, rhs, "element mass", t)
}

/// Coefficients of the L2 projection of `f` onto P_k(e).
pub fn project_qb<F>(f: F, mesh: &Mesh, e: usize, k: usize, quad: &Quadrature) -> Result<Vec<f64>>
where
    F: Fn(Point) -> f64,
{
    let basis = EdgeBasis::new(k);
    let dim = basis.dim();
    let mut mass = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    for (s, p, w) in edge_quadrature(mesh, e, &quad.segment) {
        let v = basis.values_at(s);
        let fv = f(p);
        for i in 0..dim {
            rhs[i] += w * fv * v[i];
            for j in 0..dim {
                mass[(i, j)] += w * v[i] * v[j];
            }
        }
    }
    solve_spd(mass, rhs, "edge mass", e)
}

/// Q_h u = {Q_0 u, Q_b u}.
pub fn project_qh<F>(u: F, mesh: &Mesh, k: usize, quad: &Quadrature) -> Result<WeakFunction>
where
    F: Fn(Point) -> f64 + Sync,
{
    let layout = FieldLayout::new(mesh, k);
    let interiors: Vec<Vec<f64>> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| project_q0(&u, mesh, t, k, quad))
        .collect::<Result<_>>()?;
    let edges: Vec<Vec<f64>> = (0..mesh.num_edges())
        .into_par_iter()
        .map(|e| project_qb(&u, mesh, e, k, quad))
        .collect::<Result<_>>()?;
    let mut w = WeakFunction::zeros(layout);
    for (t, c) in interiors.iter().enumerate() {
        w.interior_mut(t).copy_from_slice(c);
    }
    for (e, c) in edges.iter().enumerate() {
        w.edge_mut(e).copy_from_slice(c);
    }
    Ok(w)
}

/// Componentwise L2 projection of a vector field onto [P_{k-1}(T)]^2, per
/// triangle. Each block holds the x-coefficients followed by the
/// y-coefficients in the leading `poly_dim(k - 1)` functions of the element
/// basis.
pub fn project_cal_qh<F>(q: F, mesh: &Mesh, k: usize, quad: &Quadrature) -> Result<Vec<Vec<f64>>>
where
    F: Fn(Point) -> Point + Sync,
{
    let m = poly_dim(k - 1);
    (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let cx = project_element(|p| q(p).x, mesh, t, m, k, quad)?;
            let cy = project_element(|p| q(p).y, mesh, t, m, k, quad)?;
            Ok([cx, cy].concat())
        })
        .collect()
}

//! Discrete weak gradient and the local matrices of the stabilizer s(.,.) and
//! the diffusion form b(.,.).
//!
//! Local dof vectors follow [`FieldLayout::local_dofs`]: the interior block of
//! the triangle, then one block per local edge. Weak gradients live in
//! [P_{k-1}(T)]^2, stored as x-coefficients followed by y-coefficients in the
//! leading functions of the element basis.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fespace::{
    edge_quadrature, poly_dim, triangle_quadrature, EdgeBasis, ElementBasis, WeakFunction,
};
use crate::mesh::{Mesh, Point};
use crate::quadrature::Quadrature;

type MatrixFn = dyn Fn(Point) -> Matrix2<f64> + Send + Sync;
type VectorFn = dyn Fn(Point) -> Point + Send + Sync;

/// Diffusion coefficient, scalar or 2x2 symmetric, with its divergence
/// (column-wise for tensors) used by the residual norms.
#[derive(Clone)]
pub struct Diffusion {
    value: Arc<MatrixFn>,
    divergence: Arc<VectorFn>,
    identity: bool,
}

impl std::fmt::Debug for Diffusion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Diffusion").field("identity", &self.identity).finish()
    }
}

impl Default for Diffusion {
    fn default() -> Self {
        Self::identity()
    }
}

impl Diffusion {
    pub fn identity() -> Self {
        Diffusion {
            value: Arc::new(|_| Matrix2::identity()),
            divergence: Arc::new(|_| Point::zeros()),
            identity: true,
        }
    }

    pub fn scalar<A, G>(a: A, grad_a: G) -> Self
    where
        A: Fn(Point) -> f64 + Send + Sync + 'static,
        G: Fn(Point) -> Point + Send + Sync + 'static,
    {
        Diffusion {
            value: Arc::new(move |p| Matrix2::identity() * a(p)),
            divergence: Arc::new(grad_a),
            identity: false,
        }
    }

    /// `div` returns (d_x a_11 + d_y a_21, d_x a_12 + d_y a_22).
    pub fn tensor<A, D>(a: A, div: D) -> Self
    where
        A: Fn(Point) -> Matrix2<f64> + Send + Sync + 'static,
        D: Fn(Point) -> Point + Send + Sync + 'static,
    {
        Diffusion {
            value: Arc::new(a),
            divergence: Arc::new(div),
            identity: false,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn at(&self, p: Point) -> Matrix2<f64> {
        (self.value)(p)
    }

    pub fn divergence_at(&self, p: Point) -> Point {
        (self.divergence)(p)
    }

    fn check_spd(&self, p: Point) -> Result<Matrix2<f64>> {
        let a = self.at(p);
        let sym = (a[(0, 1)] - a[(1, 0)]).abs() <= 1e-12 * a.abs().max();
        if !sym || a[(0, 0)] <= 0.0 || a.determinant() <= 0.0 {
            return Err(Error::DiffusionNotPositiveDefinite { x: p.x, y: p.y });
        }
        Ok(a)
    }
}

/// Number of coefficients of a weak gradient for degree `k`.
pub fn gradient_dim(k: usize) -> usize {
    2 * poly_dim(k - 1)
}

/// Matrix mapping local dofs of triangle `t` to the weak gradient coefficients.
pub fn weak_gradient_matrix(mesh: &Mesh, t: usize, k: usize, quad: &Quadrature) -> Result<DMatrix<f64>> {
    let layout_local = poly_dim(k) + 3 * (k + 1);
    let nk = poly_dim(k);
    let m = poly_dim(k - 1);
    let basis = ElementBasis::new(mesh, t, k);
    let edge_basis = EdgeBasis::new(k);

    let mut mass = DMatrix::zeros(m, m);
    let mut rhs = DMatrix::zeros(2 * m, layout_local);
    for (p, w) in triangle_quadrature(mesh, t, &quad.triangle) {
        let v = basis.values(&p);
        let g = basis.gradients(&p);
        for j in 0..m {
            for jj in 0..m {
                mass[(j, jj)] += w * v[j] * v[jj];
            }
            // -(v_0, div psi) with psi = phi_j e_c
            for i in 0..nk {
                rhs[(j, i)] -= w * v[i] * g[j].x;
                rhs[(m + j, i)] -= w * v[i] * g[j].y;
            }
        }
    }
    for l in 0..3 {
        let e = mesh.triangles[t].edges[l];
        let n = mesh.outward_normal(t, l);
        let offset = nk + l * (k + 1);
        for (s, p, w) in edge_quadrature(mesh, e, &quad.segment) {
            let v = basis.values(&p);
            let theta = edge_basis.values_at(s);
            for j in 0..m {
                for (q, th) in theta.iter().enumerate() {
                    rhs[(j, offset + q)] += w * th * v[j] * n.x;
                    rhs[(m + j, offset + q)] += w * th * v[j] * n.y;
                }
            }
        }
    }
    let chol = mass
        .cholesky()
        .ok_or(Error::SingularLocalMatrix { what: "vector mass", index: t })?;
    let mut out = DMatrix::zeros(2 * m, layout_local);
    let top = chol.solve(&rhs.rows(0, m).into_owned());
    let bottom = chol.solve(&rhs.rows(m, m).into_owned());
    out.rows_mut(0, m).copy_from(&top);
    out.rows_mut(m, m).copy_from(&bottom);
    Ok(out)
}

/// Weak gradient coefficients of a local dof vector.
pub fn weak_gradient(mesh: &Mesh, t: usize, k: usize, quad: &Quadrature, local: &[f64]) -> Result<Vec<f64>> {
    let g = weak_gradient_matrix(mesh, t, k, quad)?;
    if local.len() != g.ncols() {
        return Err(Error::LayoutMismatch {
            expected: g.ncols(),
            got: local.len(),
        });
    }
    Ok((g * DVector::from_column_slice(local)).iter().copied().collect())
}

/// Stabilizer matrix h_T^{-1} sum_e <v_0 - v_b, w_0 - w_b>_e on triangle `t`.
pub fn local_stabilizer(mesh: &Mesh, t: usize, k: usize, quad: &Quadrature) -> DMatrix<f64> {
    let nk = poly_dim(k);
    let nloc = nk + 3 * (k + 1);
    let basis = ElementBasis::new(mesh, t, k);
    let edge_basis = EdgeBasis::new(k);
    let inv_h = 1.0 / mesh.triangles[t].diameter;
    let mut s = DMatrix::zeros(nloc, nloc);
    let mut r = DVector::zeros(nloc);
    for l in 0..3 {
        let e = mesh.triangles[t].edges[l];
        let offset = nk + l * (k + 1);
        for (sc, p, w) in edge_quadrature(mesh, e, &quad.segment) {
            r.fill(0.0);
            for (i, v) in basis.values(&p).into_iter().enumerate() {
                r[i] = v;
            }
            for (q, th) in edge_basis.values_at(sc).into_iter().enumerate() {
                r[offset + q] = -th;
            }
            s.ger(w * inv_h, &r, &r, 1.0);
        }
    }
    s
}

/// b_T = G^T M_a G with G the weak gradient matrix of triangle `t`.
pub fn local_b(
    mesh: &Mesh,
    t: usize,
    k: usize,
    quad: &Quadrature,
    a: &Diffusion,
    gradient: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let m = poly_dim(k - 1);
    let basis = ElementBasis::new(mesh, t, k);
    let mut ma = DMatrix::zeros(2 * m, 2 * m);
    for (p, w) in triangle_quadrature(mesh, t, &quad.triangle) {
        let av = a.check_spd(p)?;
        let v = basis.values(&p);
        for c in 0..2 {
            for cc in 0..2 {
                let acc = av[(c, cc)];
                if acc == 0.0 {
                    continue;
                }
                for j in 0..m {
                    for jj in 0..m {
                        ma[(c * m + j, cc * m + jj)] += w * acc * v[j] * v[jj];
                    }
                }
            }
        }
    }
    let b = gradient.transpose() * ma * gradient;
    // Symmetrise away rounding in the triple product.
    Ok((&b + b.transpose()) * 0.5)
}

/// Per-triangle weak gradient matrices, computed once and shared by assembly
/// and the residual norms.
#[derive(Debug, Clone)]
pub struct WeakGradients {
    pub degree: usize,
    matrices: Vec<DMatrix<f64>>,
}

impl WeakGradients {
    pub fn new(mesh: &Mesh, k: usize, quad: &Quadrature) -> Result<Self> {
        let matrices = (0..mesh.num_triangles())
            .into_par_iter()
            .map(|t| weak_gradient_matrix(mesh, t, k, quad))
            .collect::<Result<Vec<_>>>()?;
        Ok(WeakGradients { degree: k, matrices })
    }

    pub fn matrix(&self, t: usize) -> &DMatrix<f64> {
        &self.matrices[t]
    }

    /// Weak gradient coefficients of `v` on every triangle.
    pub fn apply(&self, mesh: &Mesh, v: &WeakFunction) -> Vec<Vec<f64>> {
        (0..mesh.num_triangles())
            .map(|t| {
                let local = DVector::from_vec(v.local(mesh, t));
                (&self.matrices[t] * local).iter().copied().collect()
            })
            .collect()
    }
}

/// Evaluates a [P_{k-1}]^2 coefficient block at `p`.
pub fn eval_vector(basis: &ElementBasis, coeffs: &[f64], p: &Point) -> Point {
    let m = coeffs.len() / 2;
    let v = basis.values(p);
    let x: f64 = (0..m).map(|j| coeffs[j] * v[j]).sum();
    let y: f64 = (0..m).map(|j| coeffs[m + j] * v[j]).sum();
    Point::new(x, y)
}

/// Jacobian rows (d_x q, d_y q) of both components of a [P_{k-1}]^2 block.
pub fn eval_vector_jacobian(basis: &ElementBasis, coeffs: &[f64], p: &Point) -> [Point; 2] {
    let m = coeffs.len() / 2;
    let g = basis.gradients(p);
    let gx = (0..m).fold(Point::zeros(), |acc, j| acc + g[j] * coeffs[j]);
    let gy = (0..m).fold(Point::zeros(), |acc, j| acc + g[j] * coeffs[m + j]);
    [gx, gy]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::{project_cal_qh, project_qb, project_qh};
    use crate::mesh::build_uniform_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_right_triangle() -> Mesh {
        let verts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        Mesh::from_triangles(verts, &[[0, 1, 2]])
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let mesh = build_uniform_mesh(2).unwrap();
        for k in 1..=3 {
            let quad = Quadrature::for_degree(k);
            let c = project_qh(|_| 1.0, &mesh, k, &quad).unwrap();
            for t in 0..mesh.num_triangles() {
                let g = weak_gradient(&mesh, t, k, &quad, &c.local(&mesh, t)).unwrap();
                assert!(g.iter().all(|v| v.abs() < 1e-12), "{g:?}");
            }
        }
    }

    #[test]
    fn k1_reduces_to_boundary_average() {
        let mesh = build_uniform_mesh(3).unwrap();
        let quad = Quadrature::for_degree(1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for t in 0..mesh.num_triangles() {
            let local: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g = weak_gradient(&mesh, t, 1, &quad, &local).unwrap();
            // |T|^{-1} <v_b, n>_{dT}; the mean of a linear v_b is its t^0 coefficient.
            let mut expected = Point::zeros();
            for l in 0..3 {
                let e = mesh.triangles[t].edges[l];
                expected += mesh.outward_normal(t, l) * (local[3 + 2 * l] * mesh.edges[e].length);
            }
            expected /= mesh.triangles[t].area;
            assert!((g[0] - expected.x).abs() < 1e-12 && (g[1] - expected.y).abs() < 1e-12);
        }
    }

    #[test]
    fn arclength_on_hypotenuse() {
        let mesh = unit_right_triangle();
        let quad = Quadrature::for_degree(1);
        let hyp = mesh.triangles[0].edges[1];
        let mut local = vec![0.0; 9];
        let s = project_qb(|p| (p - Point::new(1.0, 0.0)).norm(), &mesh, hyp, 1, &quad).unwrap();
        local[5..7].copy_from_slice(&s);
        let g = weak_gradient(&mesh, 0, 1, &quad, &local).unwrap();
        // Closed form: |T|^{-1} int_0^{sqrt2} s ds * (1,1)/sqrt2 = (sqrt2, sqrt2).
        let r2 = 2f64.sqrt();
        assert!((g[0] - r2).abs() < 1e-12 && (g[1] - r2).abs() < 1e-12, "{g:?}");
    }

    #[test]
    fn commutes_with_projections_for_linear() {
        let mesh = build_uniform_mesh(4).unwrap();
        let quad = Quadrature::for_degree(1);
        let v = project_qh(|p| 1.0 + p.x + p.y, &mesh, 1, &quad).unwrap();
        let grads = WeakGradients::new(&mesh, 1, &quad).unwrap();
        for g in grads.apply(&mesh, &v) {
            assert!((g[0] - 1.0).abs() < 1e-12 && (g[1] - 1.0).abs() < 1e-12);
        }
        let q = project_cal_qh(|_| Point::new(1.0, 1.0), &mesh, 1, &quad).unwrap();
        assert!(q.iter().all(|b| (b[0] - 1.0).abs() < 1e-14));
    }

    #[test]
    fn stabilizer_kernel_and_single_edge_value() {
        let mesh = build_uniform_mesh(2).unwrap();
        for k in 1..=3 {
            let quad = Quadrature::for_degree(k);
            let smooth = project_qh(|p| 1.0 - p.x + 2.0 * p.y, &mesh, k, &quad).unwrap();
            for t in 0..mesh.num_triangles() {
                let s = local_stabilizer(&mesh, t, k, &quad);
                assert!((&s - s.transpose()).abs().max() < 1e-14);
                let v = DVector::from_vec(smooth.local(&mesh, t));
                assert!((v.transpose() * &s * &v)[(0, 0)].abs() < 1e-12);
                assert!(s.symmetric_eigenvalues().min() > -1e-12);
            }
        }
        let quad = Quadrature::for_degree(1);
        let s = local_stabilizer(&mesh, 0, 1, &quad);
        for l in 0..3 {
            let mut v = DVector::zeros(9);
            v[3 + 2 * l] = 1.0;
            let e = mesh.triangles[0].edges[l];
            let expected = mesh.edges[e].length / mesh.triangles[0].diameter;
            assert!(((v.transpose() * &s * &v)[(0, 0)] - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn b_form_values() {
        let mesh = build_uniform_mesh(4).unwrap();
        let quad = Quadrature::for_degree(1);
        let a = Diffusion::identity();
        let lin = project_qh(|p| 1.0 + p.x + p.y, &mesh, 1, &quad).unwrap();
        let one = project_qh(|_| 3.0, &mesh, 1, &quad).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for t in 0..mesh.num_triangles() {
            let g = weak_gradient_matrix(&mesh, t, 1, &quad).unwrap();
            let b = local_b(&mesh, t, 1, &quad, &a, &g).unwrap();
            let v = DVector::from_vec(lin.local(&mesh, t));
            let bv = (v.transpose() * &b * &v)[(0, 0)];
            assert!((bv - 2.0 * mesh.triangles[t].area).abs() < 1e-13);
            let c = DVector::from_vec(one.local(&mesh, t));
            assert!((c.transpose() * &b * &c)[(0, 0)].abs() < 1e-13);
            let r = DVector::from_fn(9, |_, _| rng.random_range(-1.0..1.0));
            let asym = (r.transpose() * &b * &r)[(0, 0)] - (r.transpose() * b.transpose() * &r)[(0, 0)];
            assert!(asym.abs() < 1e-13);
            assert!((&b - b.transpose()).abs().max() <= 1e-13);
        }
    }

    #[test]
    fn indefinite_diffusion_rejected() {
        let mesh = build_uniform_mesh(1).unwrap();
        let quad = Quadrature::for_degree(1);
        let g = weak_gradient_matrix(&mesh, 0, 1, &quad).unwrap();
        let bad = Diffusion::scalar(|p| p.x - 0.5, |_| Point::new(1.0, 0.0));
        assert!(matches!(
            local_b(&mesh, 0, 1, &quad, &bad, &g),
            Err(Error::DiffusionNotPositiveDefinite { .. })
        ));
    }
}

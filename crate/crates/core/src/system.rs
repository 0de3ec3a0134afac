//! Assembly and direct solution of the coupled primal-dual system.
//!
//! With S the stabilizer matrix and B the diffusion-form matrix over all
//! dofs, the scheme reads s(u, v) - b(v, lambda) = 0 and
//! s(lambda, w) + b(u, w) = (f, w_0) + <g_2, w_b> on the Neumann part.
//! Negating the first equation gives the symmetric block matrix
//! [[-S, B], [B, S]] over (free u | free lambda).

use std::io;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fespace::{edge_quadrature, project_qb, triangle_quadrature, DofMap, EdgeBasis, ElementBasis, Field, WeakFunction};
use crate::linalg::{inverse_norm_one_estimate, SparseLu, SparseMatrix};
use crate::mesh::{BoundaryConfig, Mesh, Point};
use crate::quadrature::Quadrature;
use crate::weakops::{local_b, local_stabilizer, Diffusion, WeakGradients};

/// Data of an elliptic Cauchy problem.
pub trait ProblemData: Sync {
    fn diffusion(&self) -> Diffusion;
    /// Right-hand side f.
    fn source(&self, p: Point) -> f64;
    /// Dirichlet data g_1.
    fn dirichlet(&self, p: Point) -> f64;
    /// Neumann data g_2 for the outward unit normal `normal`, if available.
    fn neumann(&self, p: Point, normal: Point) -> Option<f64>;
}

/// Assembled system over free dofs.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Full u coefficient vector holding Q_b g_1 on Dirichlet edges and zero
    /// elsewhere. Fixed multiplier dofs are always zero.
    pub lift: WeakFunction,
    pub dofs: DofMap,
    /// The first block row holds the negated primal equation.
    pub primal_rows_negated: bool,
}

/// Discrete solution and solver diagnostics.
#[derive(Debug, Clone)]
pub struct Solution {
    pub primal: WeakFunction,
    pub multiplier: WeakFunction,
    pub diagnostics: SolveDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveDiagnostics {
    /// ||A x - b|| / (||b|| + ||A|| ||x||) in the max norm.
    pub relative_residual: f64,
    /// Largest observed ||A^{-1} r|| ||A|| / ||r|| over the random probes.
    pub amplification: f64,
    /// Dimension of the detected null space; it is confined to the
    /// multiplier, and the returned multiplier is orthogonal to it.
    pub multiplier_kernel_dim: usize,
    /// Relative size of the right-hand side component along the null space,
    /// removed before solving. Nonzero only through quadrature error in the
    /// data.
    pub rhs_kernel_component: f64,
}

/// Probes with amplification above this are treated as hitting a null space.
/// Nonsingular systems of the supported sizes stay below 1e9.
const SINGULAR_AMPLIFICATION: f64 = 1e12;
const PROBES: usize = 3;
const PROBE_SEED: u64 = 0x5eed;

pub fn assemble<P: ProblemData + ?Sized>(mesh: &Mesh, config: &BoundaryConfig, data: &P, k: usize) -> Result<SaddleSystem> {
    crate::fespace::check_degree(k)?;
    let dofs = DofMap::new(mesh, config, k)?;
    let layout = dofs.layout;
    let quad = Quadrature::for_degree(k);
    let grads = WeakGradients::new(mesh, k, &quad)?;
    let a = data.diffusion();

    let locals: Vec<(DMatrix<f64>, DMatrix<f64>, Vec<f64>)> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let s = local_stabilizer(mesh, t, k, &quad);
            let b = local_b(mesh, t, k, &quad, &a, grads.matrix(t))?;
            let basis = ElementBasis::new(mesh, t, k);
            let mut load = vec![0.0; basis.dim()];
            for (p, w) in triangle_quadrature(mesh, t, &quad.triangle) {
                let f = data.source(p);
                for (li, v) in load.iter_mut().zip(basis.values(&p)) {
                    *li += w * f * v;
                }
            }
            Ok((s, b, load))
        })
        .collect::<Result<_>>()?;

    let mut lift = WeakFunction::zeros(layout);
    let mut neumann = vec![0.0; layout.len()];
    let edge_basis = EdgeBasis::new(k);
    for e in 0..mesh.num_edges() {
        if config.in_gamma_d(e) {
            let c = project_qb(|p| data.dirichlet(p), mesh, e, k, &quad)?;
            lift.edge_mut(e).copy_from_slice(&c);
        }
        if config.in_gamma_n(e) {
            let t = mesh.edges[e].adjacent[0];
            let l = mesh.triangles[t].edges.iter().position(|&x| x == e).unwrap();
            let n = mesh.outward_normal(t, l);
            let range = layout.edge_range(e);
            for (s, p, w) in edge_quadrature(mesh, e, &quad.segment) {
                let g = data.neumann(p, n).ok_or(Error::MissingNeumannData(e))?;
                for (i, th) in range.clone().zip(edge_basis.values_at(s)) {
                    neumann[i] += w * g * th;
                }
            }
        }
    }

    let nu = dofs.num_free(Field::Primal);
    let dim = dofs.system_dim();
    let mut rhs = vec![0.0; dim];
    let mut triplets = Vec::new();
    for (t, (s, b, load)) in locals.iter().enumerate() {
        let ids = layout.local_dofs(mesh, t);
        for (li, &gi) in ids.iter().enumerate() {
            let row_u = dofs.system_index(Field::Primal, gi);
            let row_l = dofs.system_index(Field::Multiplier, gi);
            if let Some(r) = row_l {
                if li < load.len() {
                    rhs[r] += load[li];
                }
            }
            for (lj, &gj) in ids.iter().enumerate() {
                let (sij, bij) = (s[(li, lj)], b[(li, lj)]);
                let col_u = dofs.system_index(Field::Primal, gj);
                let col_l = dofs.system_index(Field::Multiplier, gj);
                let g = lift.coeffs[gj];
                if let Some(r) = row_u {
                    match col_u {
                        Some(c) => triplets.push((r, c, -sij)),
                        None => rhs[r] += sij * g,
                    }
                    if let Some(c) = col_l {
                        triplets.push((r, c, bij));
                    }
                }
                if let Some(r) = row_l {
                    match col_u {
                        Some(c) => triplets.push((r, c, bij)),
                        None => rhs[r] -= bij * g,
                    }
                    if let Some(c) = col_l {
                        triplets.push((r, c, sij));
                    }
                }
            }
        }
    }
    for (i, v) in neumann.iter().enumerate() {
        if let Some(r) = dofs.system_index(Field::Multiplier, i) {
            rhs[r] += v;
        }
    }
    debug_assert!(rhs.len() == dim && nu <= dim);

    Ok(SaddleSystem {
        matrix: SparseMatrix::from_triplets(dim, dim, triplets),
        rhs,
        lift,
        dofs,
        primal_rows_negated: true,
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn relative_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r = max_abs(&ax.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>());
    let scale = max_abs(b) + a.norm_inf() * max_abs(x);
    if scale == 0.0 {
        r
    } else {
        r / scale
    }
}

/// Orthonormal basis of the directions that the random probes amplify beyond
/// the singularity threshold.
fn probe_kernel(a: &SparseMatrix, lu: &SparseLu) -> Result<(Vec<Vec<f64>>, f64)> {
    let n = a.nrows();
    let norm_a = a.norm_inf();
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let mut z = Vec::with_capacity(PROBES);
    let mut amplification: f64 = 0.0;
    for _ in 0..PROBES {
        let r: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = lu.solve(&r);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("factorization produced non-finite values".into()));
        }
        amplification = amplification.max(max_abs(&y) * norm_a / max_abs(&r));
        z.push(y);
    }
    if amplification < SINGULAR_AMPLIFICATION {
        return Ok((Vec::new(), amplification));
    }
    // Directions of Z with large singular values span the near null space.
    let p = z.len();
    let gram = DMatrix::from_fn(p, p, |i, j| z[i].iter().zip(&z[j]).map(|(x, y)| x * y).sum::<f64>());
    let eig = SymmetricEigen::new(gram);
    let mut kernel = Vec::new();
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        // sqrt(lambda) is a singular value of Z; each probe has ||r|| ~ sqrt(n).
        let sigma = lambda.max(0.0).sqrt();
        if sigma * norm_a / (n as f64).sqrt() < SINGULAR_AMPLIFICATION {
            continue;
        }
        let c = eig.eigenvectors.column(idx);
        let mut q = vec![0.0; n];
        for (i, zi) in z.iter().enumerate() {
            for (qj, v) in q.iter_mut().zip(zi) {
                *qj += c[i] * v;
            }
        }
        let nrm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        q.iter_mut().for_each(|v| *v /= nrm);
        kernel.push(q);
    }
    Ok((kernel, amplification))
}

fn deflate(x: &mut [f64], kernel: &[Vec<f64>]) {
    for q in kernel {
        let d: f64 = q.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        x.iter_mut().zip(q).for_each(|(xi, qi)| *xi -= d * qi);
    }
}

/// Solves the system by sparse LU. A null space touching the primal unknowns
/// is reported as [`Error::Singular`]; one confined to the multiplier is
/// projected out of the returned multiplier.
pub fn solve(sys: &SaddleSystem) -> Result<Solution> {
    let a = &sys.matrix;
    let lu = SparseLu::factor(a)?;
    let (kernel, amplification) = probe_kernel(a, &lu)?;
    let nu = sys.dofs.num_free(Field::Primal);
    for q in &kernel {
        let primal = max_abs(&q[..nu]);
        if primal > 1e-6 {
            return Err(Error::Singular(format!(
                "the primal unknowns are not determined (null vector with primal part {primal:.3e})"
            )));
        }
    }

    // The matrix is symmetric, so its range is orthogonal to the null space.
    let mut rhs = sys.rhs.clone();
    deflate(&mut rhs, &kernel);
    let rhs_norm = sys.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let removed = sys.rhs.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let rhs_kernel_component = if rhs_norm > 0.0 { removed / rhs_norm } else { 0.0 };

    let mut x = lu.solve(&rhs);
    deflate(&mut x, &kernel);
    if !kernel.is_empty() {
        // One refinement step cleans up what the deflation left behind.
        let ax = a.matvec(&x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, v)| b - v).collect();
        let mut dx = lu.solve(&r);
        deflate(&mut dx, &kernel);
        x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("solution is not finite".into()));
    }
    let relative_residual = relative_residual(a, &x, &rhs);
    if relative_residual > 1e-9 {
        return Err(Error::Singular(format!("relative residual {relative_residual:.3e} exceeds 1e-9")));
    }

    let mut primal = sys.lift.clone();
    let mut multiplier = WeakFunction::zeros(sys.dofs.layout);
    for i in 0..sys.dofs.layout.len() {
        if let Some(r) = sys.dofs.system_index(Field::Primal, i) {
            primal.coeffs[i] = x[r];
        }
        if let Some(r) = sys.dofs.system_index(Field::Multiplier, i) {
            multiplier.coeffs[i] = x[r];
        }
    }
    Ok(Solution {
        primal,
        multiplier,
        diagnostics: SolveDiagnostics {
            relative_residual,
            amplification,
            multiplier_kernel_dim: kernel.len(),
            rhs_kernel_component,
        },
    })
}

impl SaddleSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// Free-dof vector of a solution, in system ordering.
    pub fn pack(&self, primal: &WeakFunction, multiplier: &WeakFunction) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for i in 0..self.dofs.layout.len() {
            if let Some(r) = self.dofs.system_index(Field::Primal, i) {
                x[r] = primal.coeffs[i];
            }
            if let Some(r) = self.dofs.system_index(Field::Multiplier, i) {
                x[r] = multiplier.coeffs[i];
            }
        }
        x
    }

    /// Residual of the scheme's equations as written, undoing the sign flip
    /// of the primal rows.
    pub fn equation_residual(&self, x: &[f64]) -> Vec<f64> {
        let nu = self.dofs.num_free(Field::Primal);
        let ax = self.matrix.matvec(x);
        ax.iter()
            .zip(&self.rhs)
            .enumerate()
            .map(|(i, (v, b))| if self.primal_rows_negated && i < nu { b - v } else { v - b })
            .collect()
    }

    pub fn write_coordinate<W: io::Write>(&self, out: W) -> io::Result<()> {
        self.matrix.write_coordinate(out)
    }
}

/// Estimate of the 1-norm condition number; infinite for singular systems.
pub fn condition_estimate(sys: &SaddleSystem) -> f64 {
    let Ok(lu) = SparseLu::factor(&sys.matrix) else {
        return f64::INFINITY;
    };
    match probe_kernel(&sys.matrix, &lu) {
        Ok((kernel, _)) if kernel.is_empty() => sys.matrix.norm_one() * inverse_norm_one_estimate(&lu),
        _ => f64::INFINITY,
    }
}

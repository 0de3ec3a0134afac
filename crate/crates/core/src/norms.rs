//! Error functionals: L2 and broken H1 norms of the interior part, the
//! stabilizer seminorm and the scaled residual norms.
//!
//! A residual norm squared is
//!   sum_T h_T^2 ||div(a q)||_T^2 + sum_e w_e ||[a q . n]||_e^2 + s(v, v)
//! with q the weak gradient (or the gradient of v_0 for the strong variant)
//! and w_e the edge weight of the mesh. The primal norm sums over interior
//! and Neumann edges, the multiplier norm over interior and non-Dirichlet
//! boundary edges. On a boundary edge the jump is the one-sided trace.

use rayon::prelude::*;

use crate::error::Result;
use crate::fespace::{edge_quadrature, project_qh, triangle_quadrature, EdgeBasis, ElementBasis, WeakFunction};
use crate::mesh::{BoundaryConfig, Mesh, Point};
use crate::quadrature::Quadrature;
use crate::weakops::{eval_vector, eval_vector_jacobian, Diffusion, WeakGradients};

/// Which boundary edges carry a jump term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSet {
    /// Interior edges and the Neumann part.
    Primal,
    /// Interior edges and the boundary outside the Dirichlet part.
    Multiplier,
}

/// Which vector field plays the role of the gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flux {
    Weak,
    Strong,
}

/// Squared contributions of a residual norm.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualTerms {
    pub divergence: f64,
    pub jump: f64,
    pub stabilizer: f64,
}

impl ResidualTerms {
    pub fn norm(&self) -> f64 {
        (self.divergence + self.jump + self.stabilizer).sqrt()
    }
}

/// Errors of one discrete solution against its exact counterpart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub l2_e0: f64,
    pub h1_e0: f64,
    /// Scaled residual norm of e_h = u_h - Q_h u.
    pub resid_u: f64,
    /// Scaled residual norm of the multiplier.
    pub resid_lambda: f64,
    /// s(e_h, e_h)^(1/2).
    pub stab_u: f64,
    pub strong_resid_u: f64,
    pub strong_resid_lambda: f64,
}

/// Mesh, boundary data and cached weak gradients shared by all functionals.
pub struct NormContext<'a> {
    pub mesh: &'a Mesh,
    pub config: &'a BoundaryConfig,
    pub diffusion: Diffusion,
    pub degree: usize,
    pub quad: Quadrature,
    grads: WeakGradients,
}

impl<'a> NormContext<'a> {
    pub fn new(mesh: &'a Mesh, config: &'a BoundaryConfig, diffusion: Diffusion, k: usize) -> Result<Self> {
        crate::fespace::check_degree(k)?;
        let quad = Quadrature::for_degree(k);
        let grads = WeakGradients::new(mesh, k, &quad)?;
        Ok(NormContext {
            mesh,
            config,
            diffusion,
            degree: k,
            quad,
            grads,
        })
    }

    fn sum_over_triangles<F>(&self, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        // Collect first so the summation order is fixed.
        let parts: Vec<f64> = (0..self.mesh.num_triangles()).into_par_iter().map(f).collect();
        parts.iter().sum()
    }

    /// ||v_0||.
    pub fn l2(&self, v: &WeakFunction) -> f64 {
        self.sum_over_triangles(|t| {
            let basis = ElementBasis::new(self.mesh, t, self.degree);
            let c = v.interior(t);
            triangle_quadrature(self.mesh, t, &self.quad.triangle)
                .iter()
                .map(|(p, w)| w * basis.eval(c, p).powi(2))
                .sum()
        })
        .sqrt()
    }

    /// Broken H1 seminorm of v_0.
    pub fn broken_h1(&self, v: &WeakFunction) -> f64 {
        self.sum_over_triangles(|t| {
            let basis = ElementBasis::new(self.mesh, t, self.degree);
            let c = v.interior(t);
            triangle_quadrature(self.mesh, t, &self.quad.triangle)
                .iter()
                .map(|(p, w)| w * basis.eval_gradient(c, p).norm_squared())
                .sum()
        })
        .sqrt()
    }

    /// s(v, v), summed from pointwise differences v_0 - v_b rather than as a
    /// quadratic form, which would lose half the digits near zero.
    pub fn stabilizer(&self, v: &WeakFunction) -> f64 {
        let edge_basis = EdgeBasis::new(self.degree);
        self.sum_over_triangles(|t| {
            let tri = &self.mesh.triangles[t];
            let basis = ElementBasis::new(self.mesh, t, self.degree);
            let c = v.interior(t);
            let sum: f64 = tri
                .edges
                .iter()
                .map(|&e| {
                    edge_quadrature(self.mesh, e, &self.quad.segment)
                        .iter()
                        .map(|(sc, p, w)| w * (basis.eval(c, p) - edge_basis.eval_at(v.edge(e), *sc)).powi(2))
                        .sum::<f64>()
                })
                .sum();
            sum / tri.diameter
        })
    }

    /// a q at `p` on triangle `t`.
    fn flux(&self, t: usize, basis: &ElementBasis, v: &WeakFunction, gw: &[f64], flux: Flux, p: &Point) -> Point {
        let q = match flux {
            Flux::Weak => eval_vector(basis, gw, p),
            Flux::Strong => basis.eval_gradient(v.interior(t), p),
        };
        self.diffusion.at(*p) * q
    }

    /// div(a q) at `p`, by the product rule with the analytic divergence of a.
    fn flux_divergence(&self, t: usize, basis: &ElementBasis, v: &WeakFunction, gw: &[f64], flux: Flux, p: &Point) -> f64 {
        let (q, jac) = match flux {
            Flux::Weak => (eval_vector(basis, gw, p), eval_vector_jacobian(basis, gw, p)),
            Flux::Strong => {
                let c = v.interior(t);
                let h = basis
                    .hessians(p)
                    .iter()
                    .zip(c)
                    .fold([0.0; 3], |acc, (hb, ci)| [acc[0] + ci * hb[0], acc[1] + ci * hb[1], acc[2] + ci * hb[2]]);
                (basis.eval_gradient(c, p), [Point::new(h[0], h[1]), Point::new(h[1], h[2])])
            }
        };
        let a = self.diffusion.at(*p);
        let mut div = self.diffusion.divergence_at(*p).dot(&q);
        for i in 0..2 {
            for j in 0..2 {
                div += a[(i, j)] * jac[j][i];
            }
        }
        div
    }

    fn includes_edge(&self, e: usize, set: EdgeSet) -> bool {
        if !self.config.is_boundary(e) {
            return true;
        }
        match set {
            EdgeSet::Primal => self.config.in_gamma_n(e),
            EdgeSet::Multiplier => self.config.in_gamma_d_complement(e),
        }
    }

    pub fn residual_terms(&self, v: &WeakFunction, set: EdgeSet, flux: Flux) -> ResidualTerms {
        let mesh = self.mesh;
        let gw = match flux {
            Flux::Weak => self.grads.apply(mesh, v),
            Flux::Strong => vec![Vec::new(); mesh.num_triangles()],
        };
        let skip_divergence = flux == Flux::Weak && self.degree == 1 && self.diffusion.is_identity();
        let divergence = if skip_divergence {
            0.0
        } else {
            self.sum_over_triangles(|t| {
                let basis = ElementBasis::new(mesh, t, self.degree);
                let h = mesh.triangles[t].diameter;
                h * h * triangle_quadrature(mesh, t, &self.quad.triangle)
                    .iter()
                    .map(|(p, w)| w * self.flux_divergence(t, &basis, v, &gw[t], flux, p).powi(2))
                    .sum::<f64>()
            })
        };

        let parts: Vec<f64> = (0..mesh.num_edges())
            .into_par_iter()
            .map(|e| {
                if !self.includes_edge(e, set) {
                    return 0.0;
                }
                let edge = &mesh.edges[e];
                let bases: Vec<ElementBasis> =
                    edge.adjacent.iter().map(|&t| ElementBasis::new(mesh, t, self.degree)).collect();
                let n = edge.normal;
                let integral: f64 = edge_quadrature(mesh, e, &self.quad.segment)
                    .iter()
                    .map(|(_, p, w)| {
                        let mut jump = 0.0;
                        for (i, (basis, &t)) in bases.iter().zip(&edge.adjacent).enumerate() {
                            let sign = if i == 0 { 1.0 } else { -1.0 };
                            jump += sign * self.flux(t, basis, v, &gw[t], flux, p).dot(&n);
                        }
                        w * jump * jump
                    })
                    .sum();
                mesh.edge_weight(e) * integral
            })
            .collect();
        ResidualTerms {
            divergence,
            jump: parts.iter().sum(),
            stabilizer: self.stabilizer(v),
        }
    }

    /// |||v|||_{h, Gamma_d}.
    pub fn residual_norm_u(&self, v: &WeakFunction) -> f64 {
        self.residual_terms(v, EdgeSet::Primal, Flux::Weak).norm()
    }

    /// |||lambda|||_{h, Gamma_n^c}.
    pub fn residual_norm_lambda(&self, lambda: &WeakFunction) -> f64 {
        self.residual_terms(lambda, EdgeSet::Multiplier, Flux::Weak).norm()
    }

    /// Strong variants (|||v|||_{Gamma_d}, |||v|||_{Gamma_n^c}) built on the
    /// gradient of v_0.
    pub fn strong_residual_norms(&self, v: &WeakFunction) -> (f64, f64) {
        (
            self.residual_terms(v, EdgeSet::Primal, Flux::Strong).norm(),
            self.residual_terms(v, EdgeSet::Multiplier, Flux::Strong).norm(),
        )
    }

    /// e_h = u_h - Q_h u.
    pub fn error_field<F>(&self, u_h: &WeakFunction, exact: F) -> Result<WeakFunction>
    where
        F: Fn(Point) -> f64 + Sync,
    {
        let qh = project_qh(exact, self.mesh, self.degree, &self.quad)?;
        u_h.sub(&qh)
    }

    pub fn error_report<F>(&self, u_h: &WeakFunction, lambda_h: &WeakFunction, exact: F) -> Result<ErrorReport>
    where
        F: Fn(Point) -> f64 + Sync,
    {
        let e = self.error_field(u_h, exact)?;
        Ok(ErrorReport {
            l2_e0: self.l2(&e),
            h1_e0: self.broken_h1(&e),
            resid_u: self.residual_norm_u(&e),
            resid_lambda: self.residual_norm_lambda(lambda_h),
            stab_u: self.stabilizer(&e).max(0.0).sqrt(),
            strong_resid_u: self.residual_terms(&e, EdgeSet::Primal, Flux::Strong).norm(),
            strong_resid_lambda: self.residual_terms(lambda_h, EdgeSet::Multiplier, Flux::Strong).norm(),
        })
    }
}

use std::ops::Range;

use crate::error::{Error, Result};
use crate::mesh::{BoundaryConfig, Mesh};

use super::basis::poly_dim;

/// Coefficient layout of one weak field: all triangle blocks first, then all
/// edge blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldLayout {
    pub degree: usize,
    pub num_triangles: usize,
    pub num_edges: usize,
}

impl FieldLayout {
    pub fn new(mesh: &Mesh, degree: usize) -> Self {
        FieldLayout {
            degree,
            num_triangles: mesh.num_triangles(),
            num_edges: mesh.num_edges(),
        }
    }

    pub fn interior_dim(&self) -> usize {
        poly_dim(self.degree)
    }

    pub fn edge_dim(&self) -> usize {
        self.degree + 1
    }

    pub fn len(&self) -> usize {
        self.num_triangles * self.interior_dim() + self.num_edges * self.edge_dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn interior_range(&self, t: usize) -> Range<usize> {
        let d = self.interior_dim();
        t * d..(t + 1) * d
    }

    pub fn edge_range(&self, e: usize) -> Range<usize> {
        let d = self.edge_dim();
        let start = self.num_triangles * self.interior_dim() + e * d;
        start..start + d
    }

    /// Global indices of the local dofs of triangle `t`: the interior block
    /// followed by the blocks of its three local edges.
    pub fn local_dofs(&self, mesh: &Mesh, t: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.interior_range(t).collect();
        for &e in &mesh.triangles[t].edges {
            out.extend(self.edge_range(e));
        }
        out
    }

    pub fn local_len(&self) -> usize {
        self.interior_dim() + 3 * self.edge_dim()
    }
}

/// A discrete weak function {v_0, v_b}.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakFunction {
    pub layout: FieldLayout,
    pub coeffs: Vec<f64>,
}

impl WeakFunction {
    pub fn zeros(layout: FieldLayout) -> Self {
        WeakFunction {
            layout,
            coeffs: vec![0.0; layout.len()],
        }
    }

    pub fn from_coeffs(layout: FieldLayout, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != layout.len() {
            return Err(Error::LayoutMismatch {
                expected: layout.len(),
                got: coeffs.len(),
            });
        }
        Ok(WeakFunction { layout, coeffs })
    }

    pub fn interior(&self, t: usize) -> &[f64] {
        &self.coeffs[self.layout.interior_range(t)]
    }

    pub fn interior_mut(&mut self, t: usize) -> &mut [f64] {
        let r = self.layout.interior_range(t);
        &mut self.coeffs[r]
    }

    pub fn edge(&self, e: usize) -> &[f64] {
        &self.coeffs[self.layout.edge_range(e)]
    }

    pub fn edge_mut(&mut self, e: usize) -> &mut [f64] {
        let r = self.layout.edge_range(e);
        &mut self.coeffs[r]
    }

    /// Local dof vector of triangle `t` in `local_dofs` order.
    pub fn local(&self, mesh: &Mesh, t: usize) -> Vec<f64> {
        self.layout
            .local_dofs(mesh, t)
            .into_iter()
            .map(|i| self.coeffs[i])
            .collect()
    }

    pub fn sub(&self, other: &WeakFunction) -> Result<WeakFunction> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch {
                expected: self.layout.len(),
                got: other.layout.len(),
            });
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(WeakFunction {
            layout: self.layout,
            coeffs,
        })
    }

    pub fn scaled(&self, c: f64) -> WeakFunction {
        WeakFunction {
            layout: self.layout,
            coeffs: self.coeffs.iter().map(|v| c * v).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Which field a dof belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Primal,
    Multiplier,
}

/// Fixed/free status and system numbering for both fields.
///
/// Primal edge dofs on the Dirichlet part are fixed; multiplier edge dofs on
/// the complement of the Neumann part are fixed. Free dofs are numbered with
/// all primal unknowns first, then all multiplier unknowns, each in
/// increasing field index order.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub layout: FieldLayout,
    primal_fixed: Vec<bool>,
    multiplier_fixed: Vec<bool>,
    primal_index: Vec<Option<usize>>,
    multiplier_index: Vec<Option<usize>>,
    num_primal_free: usize,
    num_multiplier_free: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh, config: &BoundaryConfig, degree: usize) -> Result<Self> {
        if config.num_edges() != mesh.num_edges() {
            return Err(Error::ConfigMismatch {
                expected: mesh.num_edges(),
                got: config.num_edges(),
            });
        }
        let layout = FieldLayout::new(mesh, degree);
        let mut primal_fixed = vec![false; layout.len()];
        let mut multiplier_fixed = vec![false; layout.len()];
        for e in 0..mesh.num_edges() {
            for i in layout.edge_range(e) {
                primal_fixed[i] = config.in_gamma_d(e);
                multiplier_fixed[i] = config.in_gamma_n_complement(e);
            }
        }
        let number = |fixed: &[bool], offset: usize| -> (Vec<Option<usize>>, usize) {
            let mut next = offset;
            let idx = fixed
                .iter()
                .map(|&f| {
                    (!f).then(|| {
                        next += 1;
                        next - 1
                    })
                })
                .collect();
            (idx, next - offset)
        };
        let (primal_index, num_primal_free) = number(&primal_fixed, 0);
        let (multiplier_index, num_multiplier_free) = number(&multiplier_fixed, num_primal_free);
        Ok(DofMap {
            layout,
            primal_fixed,
            multiplier_fixed,
            primal_index,
            multiplier_index,
            num_primal_free,
            num_multiplier_free,
        })
    }

    pub fn is_fixed(&self, field: Field, i: usize) -> bool {
        match field {
            Field::Primal => self.primal_fixed[i],
            Field::Multiplier => self.multiplier_fixed[i],
        }
    }

    /// Row/column of a free dof in the coupled system.
    pub fn system_index(&self, field: Field, i: usize) -> Option<usize> {
        match field {
            Field::Primal => self.primal_index[i],
            Field::Multiplier => self.multiplier_index[i],
        }
    }

    pub fn num_free(&self, field: Field) -> usize {
        match field {
            Field::Primal => self.num_primal_free,
            Field::Multiplier => self.num_multiplier_free,
        }
    }

    pub fn system_dim(&self) -> usize {
        self.num_primal_free + self.num_multiplier_free
    }
}

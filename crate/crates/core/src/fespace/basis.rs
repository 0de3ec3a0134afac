use crate::mesh::{Edge, Mesh, Point};
use crate::quadrature::{SegmentRule, TriangleRule};

/// Number of monomials of total degree at most `k` in two variables.
pub fn poly_dim(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Exponent pairs ordered by total degree, so the first `poly_dim(r)`
/// entries span P_r for every r <= k.
pub fn exponents(k: usize) -> Vec<(i32, i32)> {
    let mut out = Vec::with_capacity(poly_dim(k));
    for d in 0..=k as i32 {
        for a in (0..=d).rev() {
            out.push((a, d - a));
        }
    }
    out
}

/// Scaled monomials ((x - x_c)/h)^a ((y - y_c)/h)^b on one triangle.
#[derive(Debug, Clone)]
pub struct ElementBasis {
    pub degree: usize,
    pub center: Point,
    pub scale: f64,
    exps: Vec<(i32, i32)>,
}

impl ElementBasis {
    pub fn new(mesh: &Mesh, t: usize, degree: usize) -> Self {
        let tri = &mesh.triangles[t];
        ElementBasis {
            degree,
            center: tri.centroid,
            scale: tri.diameter,
            exps: exponents(degree),
        }
    }

    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    fn local(&self, p: &Point) -> (f64, f64) {
        ((p.x - self.center.x) / self.scale, (p.y - self.center.y) / self.scale)
    }

    pub fn values(&self, p: &Point) -> Vec<f64> {
        let (x, y) = self.local(p);
        self.exps.iter().map(|&(a, b)| x.powi(a) * y.powi(b)).collect()
    }

    pub fn gradients(&self, p: &Point) -> Vec<Point> {
        let (x, y) = self.local(p);
        let s = 1.0 / self.scale;
        self.exps
            .iter()
            .map(|&(a, b)| {
                let dx = if a > 0 { a as f64 * x.powi(a - 1) * y.powi(b) } else { 0.0 };
                let dy = if b > 0 { b as f64 * x.powi(a) * y.powi(b - 1) } else { 0.0 };
                Point::new(dx * s, dy * s)
            })
            .collect()
    }

    /// Second derivatives (xx, xy, yy) of every basis function.
    pub fn hessians(&self, p: &Point) -> Vec<[f64; 3]> {
        let (x, y) = self.local(p);
        let s2 = 1.0 / (self.scale * self.scale);
        let mono = |a: i32, b: i32, c: f64| if a < 0 || b < 0 { 0.0 } else { c * x.powi(a) * y.powi(b) };
        self.exps
            .iter()
            .map(|&(a, b)| {
                let (af, bf) = (a as f64, b as f64);
                [
                    s2 * mono(a - 2, b, af * (af - 1.0)),
                    s2 * mono(a - 1, b - 1, af * bf),
                    s2 * mono(a, b - 2, bf * (bf - 1.0)),
                ]
            })
            .collect()
    }

    /// Evaluates sum_i c_i phi_i(p).
    pub fn eval(&self, coeffs: &[f64], p: &Point) -> f64 {
        self.values(p).iter().zip(coeffs).map(|(v, c)| v * c).sum()
    }

    pub fn eval_gradient(&self, coeffs: &[f64], p: &Point) -> Point {
        self.gradients(p)
            .iter()
            .zip(coeffs)
            .fold(Point::zeros(), |acc, (g, c)| acc + g * *c)
    }
}

/// Scaled monomials t^j on an edge, t the signed arclength from the midpoint
/// along the global tangent divided by the edge length.
#[derive(Debug, Clone, Copy)]
pub struct EdgeBasis {
    pub degree: usize,
}

impl EdgeBasis {
    pub fn new(degree: usize) -> Self {
        EdgeBasis { degree }
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    pub fn values_at(&self, t: f64) -> Vec<f64> {
        (0..=self.degree as i32).map(|j| t.powi(j)).collect()
    }

    /// Scaled coordinate of a point lying on `edge`.
    pub fn coordinate(edge: &Edge, p: &Point) -> f64 {
        (p - edge.midpoint).dot(&edge.tangent) / edge.length
    }

    pub fn eval_at(&self, coeffs: &[f64], t: f64) -> f64 {
        self.values_at(t).iter().zip(coeffs).map(|(v, c)| v * c).sum()
    }
}

/// Physical quadrature points and weights on triangle `t`.
pub fn triangle_quadrature(mesh: &Mesh, t: usize, rule: &TriangleRule) -> Vec<(Point, f64)> {
    let [p0, p1, p2] = mesh.triangle_points(t);
    let jac = 2.0 * mesh.triangles[t].area;
    rule.iter()
        .map(|([xi, eta], w)| (p0 + (p1 - p0) * xi + (p2 - p0) * eta, w * jac))
        .collect()
}

/// Quadrature on edge `e`: (scaled coordinate, physical point, weight).
pub fn edge_quadrature(mesh: &Mesh, e: usize, rule: &SegmentRule) -> Vec<(f64, Point, f64)> {
    let edge = &mesh.edges[e];
    rule.iter()
        .map(|(t, w)| (t, edge.point_at(t), w * edge.length))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_uniform_mesh;
    use crate::quadrature::Quadrature;
    use nalgebra::DMatrix;

    fn element_mass(mesh: &Mesh, t: usize, k: usize) -> DMatrix<f64> {
        let basis = ElementBasis::new(mesh, t, k);
        let quad = Quadrature::for_degree(k);
        let n = basis.dim();
        let mut m = DMatrix::zeros(n, n);
        for (p, w) in triangle_quadrature(mesh, t, &quad.triangle) {
            let v = basis.values(&p);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += w * v[i] * v[j];
                }
            }
        }
        m
    }

    #[test]
    fn dimensions() {
        assert_eq!(poly_dim(1), 3);
        assert_eq!(poly_dim(2), 6);
        assert_eq!(poly_dim(3), 10);
        assert_eq!(exponents(2), vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]);
    }

    #[test]
    fn mass_matrix_spd_and_conditioning_stable_under_refinement() {
        for k in 1..=3 {
            let mut conds = Vec::new();
            for n in [1, 4, 16, 64] {
                let mesh = build_uniform_mesh(n).unwrap();
                let m = element_mass(&mesh, 0, k) / mesh.triangles[0].area;
                assert!((&m - m.transpose()).abs().max() < 1e-15);
                let eig = m.symmetric_eigenvalues();
                assert!(eig.min() > 0.0);
                conds.push(eig.max() / eig.min());
            }
            for c in &conds {
                assert!((c / conds[0] - 1.0).abs() < 1e-6, "k={k}: {conds:?}");
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mesh = build_uniform_mesh(3).unwrap();
        let basis = ElementBasis::new(&mesh, 4, 3);
        let p = mesh.triangles[4].centroid + Point::new(0.01, -0.02);
        let hsz = 1e-6;
        let g = basis.gradients(&p);
        let hs = basis.hessians(&p);
        let vx = |d: f64| basis.values(&(p + Point::new(d, 0.0)));
        let vy = |d: f64| basis.values(&(p + Point::new(0.0, d)));
        let gx = |d: f64| basis.gradients(&(p + Point::new(d, 0.0)));
        let gy = |d: f64| basis.gradients(&(p + Point::new(0.0, d)));
        for i in 0..basis.dim() {
            let fdx = (vx(hsz)[i] - vx(-hsz)[i]) / (2.0 * hsz);
            let fdy = (vy(hsz)[i] - vy(-hsz)[i]) / (2.0 * hsz);
            assert!((fdx - g[i].x).abs() < 1e-5 * (1.0 + g[i].x.abs()));
            assert!((fdy - g[i].y).abs() < 1e-5 * (1.0 + g[i].y.abs()));
            let fxx = (gx(hsz)[i].x - gx(-hsz)[i].x) / (2.0 * hsz);
            let fxy = (gy(hsz)[i].x - gy(-hsz)[i].x) / (2.0 * hsz);
            let fyy = (gy(hsz)[i].y - gy(-hsz)[i].y) / (2.0 * hsz);
            assert!((fxx - hs[i][0]).abs() < 1e-3 * (1.0 + hs[i][0].abs()));
            assert!((fxy - hs[i][1]).abs() < 1e-3 * (1.0 + hs[i][1].abs()));
            assert!((fyy - hs[i][2]).abs() < 1e-3 * (1.0 + hs[i][2].abs()));
        }
    }

    #[test]
    fn edge_coordinate_roundtrip() {
        let mesh = build_uniform_mesh(2).unwrap();
        for edge in &mesh.edges {
            for t in [-0.5, -0.1, 0.0, 0.3, 0.5] {
                let p = edge.point_at(t);
                assert!((EdgeBasis::coordinate(edge, &p) - t).abs() < 1e-14);
            }
        }
    }
}

//! Gauss rules on the reference segment and the reference triangle.
//!
//! The triangle rule is a collapsed (Duffy) tensor product of Gauss-Legendre
//! rules, so it has positive weights and interior points for any degree.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_m.
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(m, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=m {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let p = if m == 0 { 1.0 } else { p1 };
    let d = m as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Rule on the scaled segment [-1/2, 1/2]; weights sum to 1.
#[derive(Debug, Clone)]
pub struct SegmentRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl SegmentRule {
    /// Gauss rule exact for polynomials up to `degree`.
    pub fn with_degree(degree: usize) -> Self {
        let m = degree / 2 + 1;
        let (x, w) = gauss_legendre(m);
        SegmentRule {
            points: x.iter().map(|x| 0.5 * x).collect(),
            weights: w.iter().map(|w| 0.5 * w).collect(),
            degree,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Rule on the reference triangle (0,0), (1,0), (0,1); weights sum to 1/2.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    pub fn with_degree(degree: usize) -> Self {
        // The collapse adds one degree in the second direction.
        let m = (degree + 2).div_ceil(2);
        let (x, w) = gauss_legendre(m);
        let mut points = Vec::with_capacity(m * m);
        let mut weights = Vec::with_capacity(m * m);
        for (&xb, &wb) in x.iter().zip(&w) {
            let b = 0.5 * (xb + 1.0);
            for (&xa, &wa) in x.iter().zip(&w) {
                let a = 0.5 * (xa + 1.0);
                points.push([a * (1.0 - b), b]);
                weights.push(0.25 * wa * wb * (1.0 - b));
            }
        }
        TriangleRule {
            points,
            weights,
            degree,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// The rule pair used throughout for polynomial degree `k`: triangle rule
/// exact to degree 2k+4, segment rule exact to 2k+5.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub triangle: TriangleRule,
    pub segment: SegmentRule,
}

impl Quadrature {
    pub fn for_degree(k: usize) -> Self {
        Quadrature {
            triangle: TriangleRule::with_degree(2 * k + 4),
            segment: SegmentRule::with_degree(2 * k + 5),
        }
    }
}

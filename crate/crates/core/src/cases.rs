//! Manufactured solutions with Cauchy data on parts of the unit square.
//!
//! Every case uses a = 1, so f = -Laplace(u) and g_2 = grad(u) . n with the
//! outward normal of the square.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::{classify_boundary, BoundaryConfig, Mesh, Point, Side};
use crate::system::ProblemData;
use crate::weakops::Diffusion;

use Side::{Bottom, Left, Right, Top};

#[derive(Debug, Clone)]
pub struct CaseSpec {
    pub id: &'static str,
    pub description: &'static str,
    pub exact: fn(Point) -> f64,
    pub gradient: fn(Point) -> Point,
    pub source: fn(Point) -> f64,
    pub dirichlet_sides: &'static [Side],
    pub neumann_sides: &'static [Side],
}

impl CaseSpec {
    pub fn dirichlet_set(&self) -> BTreeSet<Side> {
        self.dirichlet_sides.iter().copied().collect()
    }

    pub fn neumann_set(&self) -> BTreeSet<Side> {
        self.neumann_sides.iter().copied().collect()
    }

    pub fn boundary_config(&self, mesh: &Mesh) -> Result<BoundaryConfig> {
        classify_boundary(mesh, &self.dirichlet_set(), &self.neumann_set())
    }
}

impl ProblemData for CaseSpec {
    fn diffusion(&self) -> Diffusion {
        Diffusion::identity()
    }

    fn source(&self, p: Point) -> f64 {
        (self.source)(p)
    }

    fn dirichlet(&self, p: Point) -> f64 {
        (self.exact)(p)
    }

    fn neumann(&self, p: Point, normal: Point) -> Option<f64> {
        Some((self.gradient)(p).dot(&normal))
    }
}

fn linear(p: Point) -> f64 {
    1.0 + p.x + p.y
}

fn linear_grad(_: Point) -> Point {
    Point::new(1.0, 1.0)
}

fn zero(_: Point) -> f64 {
    0.0
}

fn cos_cos(p: Point) -> f64 {
    p.x.cos() * p.y.cos()
}

fn cos_cos_grad(p: Point) -> Point {
    Point::new(-p.x.sin() * p.y.cos(), -p.x.cos() * p.y.sin())
}

fn cos_cos_f(p: Point) -> f64 {
    2.0 * p.x.cos() * p.y.cos()
}

fn bubble(p: Point) -> f64 {
    30.0 * p.x * (1.0 - p.x) * p.y * (1.0 - p.y)
}

fn bubble_grad(p: Point) -> Point {
    Point::new(
        30.0 * (1.0 - 2.0 * p.x) * p.y * (1.0 - p.y),
        30.0 * p.x * (1.0 - p.x) * (1.0 - 2.0 * p.y),
    )
}

fn bubble_f(p: Point) -> f64 {
    60.0 * (p.x - p.x * p.x + p.y - p.y * p.y)
}

fn sinpi_cospi(p: Point) -> f64 {
    (PI * p.x).sin() * (PI * p.y).cos()
}

fn sinpi_cospi_grad(p: Point) -> Point {
    Point::new(
        PI * (PI * p.x).cos() * (PI * p.y).cos(),
        -PI * (PI * p.x).sin() * (PI * p.y).sin(),
    )
}

fn sinpi_cospi_f(p: Point) -> f64 {
    2.0 * PI * PI * sinpi_cospi(p)
}

fn sin_sin(p: Point) -> f64 {
    p.x.sin() * p.y.sin()
}

fn sin_sin_grad(p: Point) -> Point {
    Point::new(p.x.cos() * p.y.sin(), p.x.sin() * p.y.cos())
}

fn sin_sin_f(p: Point) -> f64 {
    2.0 * sin_sin(p)
}

fn product(p: Point) -> f64 {
    p.x * p.y
}

fn product_grad(p: Point) -> Point {
    Point::new(p.y, p.x)
}

fn cos_sin(p: Point) -> f64 {
    p.x.cos() * p.y.sin()
}

fn cos_sin_grad(p: Point) -> Point {
    Point::new(-p.x.sin() * p.y.sin(), p.x.cos() * p.y.cos())
}

fn cos_sin_f(p: Point) -> f64 {
    2.0 * cos_sin(p)
}

const BOTTOM: &[Side] = &[Bottom];
const LEFT: &[Side] = &[Left];
const THREE_D: &[Side] = &[Bottom, Right, Left];
const THREE_N: &[Side] = &[Bottom, Right, Top];
const BOTTOM_LEFT: &[Side] = &[Bottom, Left];
const RIGHT_TOP: &[Side] = &[Right, Top];
const HORIZONTAL: &[Side] = &[Bottom, Top];
const VERTICAL: &[Side] = &[Right, Left];

macro_rules! case {
    ($id:expr, $desc:expr, $u:ident, $g:ident, $f:ident, $d:expr, $n:expr) => {
        CaseSpec {
            id: $id,
            description: $desc,
            exact: $u,
            gradient: $g,
            source: $f,
            dirichlet_sides: $d,
            neumann_sides: $n,
        }
    };
}

/// All cases, addressable by id.
pub fn catalog() -> Vec<CaseSpec> {
    vec![
        case!("t1", "u = 1+x+y; D+N on bottom", linear, linear_grad, zero, BOTTOM, BOTTOM),
        case!("t2", "u = 1+x+y; D+N on left", linear, linear_grad, zero, LEFT, LEFT),
        case!("t3", "u = cos(x)cos(y); D+N on bottom and right, D on left, N on top", cos_cos, cos_cos_grad, cos_cos_f, THREE_D, THREE_N),
        case!("t4", "u = 30xy(1-x)(1-y); D+N on bottom and right, D on left, N on top", bubble, bubble_grad, bubble_f, THREE_D, THREE_N),
        case!("t5", "u = sin(pi x)cos(pi y); D+N on bottom and right, D on left, N on top", sinpi_cospi, sinpi_cospi_grad, sinpi_cospi_f, THREE_D, THREE_N),
        case!("t6", "u = cos(x)cos(y); D on bottom and left, N on right and top", cos_cos, cos_cos_grad, cos_cos_f, BOTTOM_LEFT, RIGHT_TOP),
        case!("t7", "u = sin(x)sin(y); D on bottom and left, N on right and top", sin_sin, sin_sin_grad, sin_sin_f, BOTTOM_LEFT, RIGHT_TOP),
        case!("t8", "u = 30xy(1-x)(1-y); D on bottom and left, N on right and top", bubble, bubble_grad, bubble_f, BOTTOM_LEFT, RIGHT_TOP),
        case!("t9", "u = cos(x)cos(y); D+N on bottom and top", cos_cos, cos_cos_grad, cos_cos_f, HORIZONTAL, HORIZONTAL),
        case!("t10", "u = 30xy(1-x)(1-y); D+N on bottom and top", bubble, bubble_grad, bubble_f, HORIZONTAL, HORIZONTAL),
        case!("t11", "u = xy; D+N on left and right", product, product_grad, zero, VERTICAL, VERTICAL),
        case!("t12", "u = cos(x)sin(y); D+N on left and right", cos_sin, cos_sin_grad, cos_sin_f, VERTICAL, VERTICAL),
        case!("t13", "u = cos(x)cos(y); D+N on bottom, D on top", cos_cos, cos_cos_grad, cos_cos_f, HORIZONTAL, BOTTOM),
        case!("t14a", "u = sin(x)sin(y); D+N on bottom", sin_sin, sin_sin_grad, sin_sin_f, BOTTOM, BOTTOM),
        case!("t14b", "u = cos(x)cos(y); D+N on bottom", cos_cos, cos_cos_grad, cos_cos_f, BOTTOM, BOTTOM),
        case!("t14c", "u = cos(x)sin(y); D+N on bottom", cos_sin, cos_sin_grad, cos_sin_f, BOTTOM, BOTTOM),
    ]
}

pub fn find_case(id: &str) -> Result<CaseSpec> {
    catalog()
        .into_iter()
        .find(|c| c.id == id)
        .ok_or_else(|| Error::UnknownCase(id.to_string()))
}

/// Largest deviations found by [`validate_case`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseDiagnostics {
    pub gradient: f64,
    pub source: f64,
    pub neumann: f64,
}

const FD_STEP: f64 = 1e-4;
const FD_TOL: f64 = 1e-5;
const SAMPLES: usize = 10;

/// Checks the closed forms of a case against finite differences of `exact`
/// at seeded random points: the gradient and f inside, g_1 and g_2 on the
/// data-carrying sides.
pub fn validate_case(c: &CaseSpec) -> Result<CaseDiagnostics> {
    let u = c.exact;
    let h = FD_STEP;
    let fd_grad = |p: Point| {
        Point::new(
            (u(p + Point::new(h, 0.0)) - u(p - Point::new(h, 0.0))) / (2.0 * h),
            (u(p + Point::new(0.0, h)) - u(p - Point::new(0.0, h))) / (2.0 * h),
        )
    };
    let fd_source = |p: Point| {
        let lap = u(p + Point::new(h, 0.0)) + u(p - Point::new(h, 0.0)) + u(p + Point::new(0.0, h))
            + u(p - Point::new(0.0, h))
            - 4.0 * u(p);
        -lap / (h * h)
    };
    let fail = |check, p: Point, expected: f64, got: f64| Error::CaseValidation {
        case: c.id.to_string(),
        check,
        x: p.x,
        y: p.y,
        expected,
        got,
    };
    let within = |expected: f64, got: f64| (expected - got).abs() <= FD_TOL * expected.abs().max(1.0);

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut diag = CaseDiagnostics {
        gradient: 0.0,
        source: 0.0,
        neumann: 0.0,
    };
    for _ in 0..SAMPLES {
        let p = Point::new(rng.random_range(0.05..0.95), rng.random_range(0.05..0.95));
        let (g, fg) = ((c.gradient)(p), fd_grad(p));
        for i in 0..2 {
            if !within(fg[i], g[i]) {
                return Err(fail("gradient", p, fg[i], g[i]));
            }
            diag.gradient = diag.gradient.max((fg[i] - g[i]).abs());
        }
        let (f, ff) = (c.source(p), fd_source(p));
        if !within(ff, f) {
            return Err(fail("source", p, ff, f));
        }
        diag.source = diag.source.max((ff - f).abs());
    }

    let on_side = |side: Side, s: f64| match side {
        Bottom => Point::new(s, 0.0),
        Right => Point::new(1.0, s),
        Top => Point::new(s, 1.0),
        Left => Point::new(0.0, s),
    };
    for &side in c.dirichlet_sides {
        for _ in 0..SAMPLES {
            let p = on_side(side, rng.random_range(0.0..1.0));
            if c.dirichlet(p) != u(p) {
                return Err(fail("dirichlet", p, u(p), c.dirichlet(p)));
            }
        }
    }
    for &side in c.neumann_sides {
        let n = side.outward_normal();
        for _ in 0..SAMPLES {
            let p = on_side(side, rng.random_range(0.0..1.0));
            let expected = fd_grad(p).dot(&n);
            let got = c.neumann(p, n).unwrap_or(f64::NAN);
            if !within(expected, got) {
                return Err(fail("neumann", p, expected, got));
            }
            diag.neumann = diag.neumann.max((expected - got).abs());
        }
    }
    Ok(diag)
}

use std::collections::BTreeSet;

use nalgebra::DVector;
use proptest::prelude::*;

use pdwg::fespace::{poly_dim, project_qh, FieldLayout, WeakFunction};
use pdwg::mesh::{build_uniform_mesh, classify_boundary, Point, Side};
use pdwg::norms::NormContext;
use pdwg::quadrature::Quadrature;
use pdwg::study::parse_levels;
use pdwg::system::{assemble, solve, ProblemData};
use pdwg::weakops::{local_stabilizer, weak_gradient, Diffusion, WeakGradients};

/// u = c0 + c1 x + c2 y with data on the given sides.
struct Affine([f64; 3]);

impl Affine {
    fn u(&self, p: Point) -> f64 {
        self.0[0] + self.0[1] * p.x + self.0[2] * p.y
    }
}

impl ProblemData for Affine {
    fn diffusion(&self) -> Diffusion {
        Diffusion::identity()
    }
    fn source(&self, _: Point) -> f64 {
        0.0
    }
    fn dirichlet(&self, p: Point) -> f64 {
        self.u(p)
    }
    fn neumann(&self, _: Point, n: Point) -> Option<f64> {
        Some(self.0[1] * n.x + self.0[2] * n.y)
    }
}

fn sides(mask: u8) -> BTreeSet<Side> {
    Side::ALL.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, s)| *s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mesh_counts_and_area(n in 1usize..12) {
        let m = build_uniform_mesh(n).unwrap();
        prop_assert_eq!(m.num_vertices(), (n + 1) * (n + 1));
        prop_assert_eq!(m.num_triangles(), 2 * n * n);
        prop_assert_eq!(m.num_edges(), 3 * n * n + 2 * n);
        prop_assert_eq!(m.boundary_edges().count(), 4 * n);
        let area: f64 = m.triangles.iter().map(|t| t.area).sum();
        prop_assert!((area - 1.0).abs() < 1e-12);
        for e in &m.edges {
            prop_assert_eq!(e.adjacent.len(), if e.is_boundary() { 1 } else { 2 });
        }
    }

    #[test]
    fn weak_gradient_of_affine_projection(c in prop::array::uniform3(-5.0f64..5.0), k in 1usize..=3, n in 1usize..5) {
        let mesh = build_uniform_mesh(n).unwrap();
        let quad = Quadrature::for_degree(k);
        let v = project_qh(|p: Point| c[0] + c[1] * p.x + c[2] * p.y, &mesh, k, &quad).unwrap();
        let grads = WeakGradients::new(&mesh, k, &quad).unwrap();
        let m = poly_dim(k - 1);
        for g in grads.apply(&mesh, &v) {
            prop_assert!((g[0] - c[1]).abs() < 1e-10 && (g[m] - c[2]).abs() < 1e-10);
            prop_assert!(g[1..m].iter().chain(&g[m + 1..]).all(|x| x.abs() < 1e-10));
        }
    }

    #[test]
    fn weak_gradient_is_linear(seed in any::<u64>(), k in 1usize..=3, a in -3.0f64..3.0) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mesh = build_uniform_mesh(2).unwrap();
        let quad = Quadrature::for_degree(k);
        let len = poly_dim(k) + 3 * (k + 1);
        let x: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let z: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + q).collect();
        let (gx, gy, gz) = (
            weak_gradient(&mesh, 3, k, &quad, &x).unwrap(),
            weak_gradient(&mesh, 3, k, &quad, &y).unwrap(),
            weak_gradient(&mesh, 3, k, &quad, &z).unwrap(),
        );
        for i in 0..gz.len() {
            prop_assert!((gz[i] - (a * gx[i] + gy[i])).abs() < 1e-10);
        }
    }

    #[test]
    fn stabilizer_symmetric_psd(seed in any::<u64>(), k in 1usize..=3, t in 0usize..8) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mesh = build_uniform_mesh(2).unwrap();
        let s = local_stabilizer(&mesh, t, k, &Quadrature::for_degree(k));
        prop_assert!((&s - s.transpose()).amax() <= 1e-13 * s.amax());
        let x = DVector::from_fn(s.nrows(), |_, _| rng.random_range(-1.0..1.0));
        prop_assert!(x.dot(&(&s * &x)) >= -1e-12 * s.amax());
    }

    #[test]
    fn residual_norm_is_homogeneous(seed in any::<u64>(), c in -10.0f64..10.0) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mesh = build_uniform_mesh(2).unwrap();
        let config = classify_boundary(&mesh, &sides(0b0011), &sides(0b0110)).unwrap();
        let ctx = NormContext::new(&mesh, &config, Diffusion::identity(), 2).unwrap();
        let layout = FieldLayout::new(&mesh, 2);
        let v = WeakFunction::from_coeffs(layout, (0..layout.len()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let (a, b) = (ctx.residual_norm_u(&v.scaled(c)), ctx.residual_norm_u(&v));
        prop_assert!((a - c.abs() * b).abs() <= 1e-12 * (1.0 + a));
    }

    /// Whenever the Cauchy data overlap on a whole side, affine solutions
    /// are reproduced exactly.
    #[test]
    fn affine_solutions_reproduced(
        c in prop::array::uniform3(-2.0f64..2.0),
        shared in 1u8..16,
        extra_d in 0u8..16,
        extra_n in 0u8..16,
        k in 1usize..=2,
    ) {
        let mesh = build_uniform_mesh(2).unwrap();
        let config = classify_boundary(&mesh, &sides(shared | extra_d), &sides(shared | extra_n)).unwrap();
        let data = Affine(c);
        let sys = assemble(&mesh, &config, &data, k).unwrap();
        let sol = solve(&sys).unwrap();
        let qh = project_qh(|p| data.u(p), &mesh, k, &Quadrature::for_degree(k)).unwrap();
        prop_assert!(sol.primal.sub(&qh).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn power_of_two_ladders_parse(base in 1usize..6, steps in prop::collection::vec(1u32..3, 0..4)) {
        let mut levels = vec![base];
        for s in steps {
            levels.push(levels.last().unwrap() << s);
        }
        let text = levels.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
        prop_assert_eq!(parse_levels(&text).unwrap(), levels);
    }
}

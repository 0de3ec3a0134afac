//! Uniform triangulations of the unit square with edge adjacency and
//! boundary classification.
//!
//! Every edge carries one global unit normal: the direction from its lower
//! to its higher vertex index, rotated by -90 degrees. Triangles store, per
//! local edge, the sign that turns this global normal into the outward one.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io;

use nalgebra::Vector2;

use crate::error::{Error, Result};

pub type Point = Vector2<f64>;

/// One side of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    /// (0,1) x 0
    Bottom,
    /// 1 x (0,1)
    Right,
    /// (0,1) x 1
    Top,
    /// 0 x (0,1)
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    /// Outward unit normal of the square on this side.
    pub fn outward_normal(self) -> Point {
        match self {
            Side::Bottom => Point::new(0.0, -1.0),
            Side::Right => Point::new(1.0, 0.0),
            Side::Top => Point::new(0.0, 1.0),
            Side::Left => Point::new(-1.0, 0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Bottom => "bottom",
            Side::Right => "right",
            Side::Top => "top",
            Side::Left => "left",
        }
    }

    fn of_segment(a: &Point, b: &Point) -> Option<Side> {
        const TOL: f64 = 1e-12;
        if a.y.abs() < TOL && b.y.abs() < TOL {
            Some(Side::Bottom)
        } else if (a.x - 1.0).abs() < TOL && (b.x - 1.0).abs() < TOL {
            Some(Side::Right)
        } else if (a.y - 1.0).abs() < TOL && (b.y - 1.0).abs() < TOL {
            Some(Side::Top)
        } else if a.x.abs() < TOL && b.x.abs() < TOL {
            Some(Side::Left)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone)]
pub struct Edge {
    /// Vertex indices, lower first.
    pub vertices: [usize; 2],
    pub length: f64,
    pub midpoint: Point,
    /// Unit tangent pointing from `vertices[0]` to `vertices[1]`.
    pub tangent: Point,
    /// Global unit normal, the tangent rotated by -90 degrees.
    pub normal: Point,
    /// Adjacent triangles (one on the boundary, two inside).
    pub adjacent: Vec<usize>,
    /// Side of the unit square containing a boundary edge, if any.
    pub boundary: Option<Side>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.adjacent.len() == 1
    }

    /// Point on the edge at scaled coordinate `t` in [-1/2, 1/2].
    pub fn point_at(&self, t: f64) -> Point {
        self.midpoint + self.tangent * (t * self.length)
    }
}

#[derive(Debug, Clone)]
pub struct Triangle {
    /// Vertex indices in counter-clockwise order.
    pub vertices: [usize; 3],
    /// Local edge `l` joins local vertices `l` and `(l + 1) % 3`.
    pub edges: [usize; 3],
    /// +1 when the global normal of local edge `l` points out of the triangle.
    pub signs: [f64; 3],
    pub area: f64,
    pub centroid: Point,
    /// Diameter, i.e. the longest edge.
    pub diameter: f64,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<Triangle>,
    pub edges: Vec<Edge>,
    /// Largest triangle diameter.
    pub h: f64,
}

impl Mesh {
    /// Builds a mesh from CCW triangles; edges are numbered in order of first
    /// appearance.
    pub fn from_triangles(vertices: Vec<Point>, tris: &[[usize; 3]]) -> Mesh {
        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut triangles = Vec::with_capacity(tris.len());

        for (t, tri) in tris.iter().enumerate() {
            let p = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
            let e1 = p[1] - p[0];
            let e2 = p[2] - p[0];
            let area = 0.5 * (e1.x * e2.y - e1.y * e2.x);
            let centroid = (p[0] + p[1] + p[2]) / 3.0;

            let mut local_edges = [0; 3];
            let mut signs = [0.0; 3];
            let mut diameter: f64 = 0.0;
            for l in 0..3 {
                let (a, b) = (tri[l], tri[(l + 1) % 3]);
                let key = [a.min(b), a.max(b)];
                let idx = *edge_index.entry(key).or_insert_with(|| {
                    let (pa, pb) = (vertices[key[0]], vertices[key[1]]);
                    let d = pb - pa;
                    let length = d.norm();
                    let tangent = d / length;
                    edges.push(Edge {
                        vertices: key,
                        length,
                        midpoint: (pa + pb) * 0.5,
                        tangent,
                        normal: Point::new(tangent.y, -tangent.x),
                        adjacent: Vec::with_capacity(2),
                        boundary: None,
                    });
                    edges.len() - 1
                });
                edges[idx].adjacent.push(t);
                local_edges[l] = idx;
                // Walking a CCW triangle from a to b, the outward normal is the
                // direction of travel rotated by -90 degrees.
                signs[l] = if a < b { 1.0 } else { -1.0 };
                diameter = diameter.max(edges[idx].length);
            }
            triangles.push(Triangle {
                vertices: *tri,
                edges: local_edges,
                signs,
                area,
                centroid,
                diameter,
            });
        }

        for e in edges.iter_mut() {
            if e.adjacent.len() == 1 {
                e.boundary =
                    Side::of_segment(&vertices[e.vertices[0]], &vertices[e.vertices[1]]);
            }
        }
        let h = triangles.iter().map(|t| t.diameter).fold(0.0, f64::max);
        Mesh {
            vertices,
            triangles,
            edges,
            h,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let v = self.triangles[t].vertices;
        [self.vertices[v[0]], self.vertices[v[1]], self.vertices[v[2]]]
    }

    /// Outward unit normal of local edge `l` of triangle `t`.
    pub fn outward_normal(&self, t: usize, l: usize) -> Point {
        let tri = &self.triangles[t];
        self.edges[tri.edges[l]].normal * tri.signs[l]
    }

    /// Weight used for edge terms in the residual norms: the largest diameter
    /// among the triangles sharing edge `e`.
    pub fn edge_weight(&self, e: usize) -> f64 {
        self.edges[e]
            .adjacent
            .iter()
            .map(|&t| self.triangles[t].diameter)
            .fold(0.0, f64::max)
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_boundary())
            .map(|(i, _)| i)
    }

    /// Writes the plain-text dump: vertices, triangles and edges with their
    /// boundary / Dirichlet / Neumann flags.
    pub fn write_dump<W: io::Write>(
        &self,
        config: Option<&BoundaryConfig>,
        mut out: W,
    ) -> io::Result<()> {
        out.write_all(self.dump_string(config).as_bytes())
    }

    pub fn dump_string(&self, config: Option<&BoundaryConfig>) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vertices {}", self.vertices.len());
        for p in &self.vertices {
            let _ = writeln!(s, "{} {}", p.x, p.y);
        }
        let _ = writeln!(s, "triangles {}", self.triangles.len());
        for t in &self.triangles {
            let v = t.vertices;
            let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
        }
        let _ = writeln!(s, "edges {}", self.edges.len());
        for (i, e) in self.edges.iter().enumerate() {
            let (gd, gn) = config
                .map(|c| (c.in_gamma_d(i), c.in_gamma_n(i)))
                .unwrap_or((false, false));
            let _ = writeln!(
                s,
                "{} {} {} {} {}",
                e.vertices[0],
                e.vertices[1],
                u8::from(e.is_boundary()),
                u8::from(gd),
                u8::from(gn)
            );
        }
        s
    }
}

/// Uniform `n x n` triangulation of the unit square, each sub-square split
/// along its negative-slope diagonal.
pub fn build_uniform_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidRefinement(n));
    }
    let m = n + 1;
    let nf = n as f64;
    let vertices: Vec<Point> = (0..m)
        .flat_map(|j| (0..m).map(move |i| Point::new(i as f64 / nf, j as f64 / nf)))
        .collect();
    let id = |i: usize, j: usize| i + j * m;
    let mut tris = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            tris.push([v00, v10, v01]);
            tris.push([v10, v11, v01]);
        }
    }
    Ok(Mesh::from_triangles(vertices, &tris))
}

/// Membership of each boundary edge in the Dirichlet part and in the Neumann
/// part of the boundary. Both flags may be set on the same edge.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConfig {
    gamma_d: Vec<bool>,
    gamma_n: Vec<bool>,
    boundary: Vec<bool>,
}

impl BoundaryConfig {
    /// Raw constructor from per-edge flags. An empty configuration is allowed
    /// here; flags on interior edges are not.
    pub fn from_edge_flags(mesh: &Mesh, gamma_d: Vec<bool>, gamma_n: Vec<bool>) -> Result<Self> {
        let ne = mesh.num_edges();
        for len in [gamma_d.len(), gamma_n.len()] {
            if len != ne {
                return Err(Error::ConfigMismatch {
                    expected: ne,
                    got: len,
                });
            }
        }
        let boundary: Vec<bool> = mesh.edges.iter().map(Edge::is_boundary).collect();
        if let Some(e) = (0..ne).find(|&e| !boundary[e] && (gamma_d[e] || gamma_n[e])) {
            return Err(Error::FlagOnInteriorEdge(e));
        }
        Ok(BoundaryConfig {
            gamma_d,
            gamma_n,
            boundary,
        })
    }

    pub fn num_edges(&self) -> usize {
        self.boundary.len()
    }

    pub fn in_gamma_d(&self, e: usize) -> bool {
        self.gamma_d[e]
    }

    pub fn in_gamma_n(&self, e: usize) -> bool {
        self.gamma_n[e]
    }

    pub fn is_boundary(&self, e: usize) -> bool {
        self.boundary[e]
    }

    /// Boundary edge outside the Neumann part.
    pub fn in_gamma_n_complement(&self, e: usize) -> bool {
        self.boundary[e] && !self.gamma_n[e]
    }

    /// Boundary edge outside the Dirichlet part.
    pub fn in_gamma_d_complement(&self, e: usize) -> bool {
        self.boundary[e] && !self.gamma_d[e]
    }
}

/// Flags every boundary edge lying on one of the named sides.
pub fn classify_boundary(
    mesh: &Mesh,
    dirichlet: &BTreeSet<Side>,
    neumann: &BTreeSet<Side>,
) -> Result<BoundaryConfig> {
    if dirichlet.is_empty() && neumann.is_empty() {
        return Err(Error::NoBoundaryData);
    }
    let on = |sides: &BTreeSet<Side>| -> Vec<bool> {
        mesh.edges
            .iter()
            .map(|e| e.boundary.is_some_and(|s| sides.contains(&s)))
            .collect()
    };
    BoundaryConfig::from_edge_flags(mesh, on(dirichlet), on(neumann))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sides(list: &[Side]) -> BTreeSet<Side> {
        list.iter().copied().collect()
    }

    #[test]
    fn smallest_mesh_counts() {
        let m = build_uniform_mesh(1).unwrap();
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.num_triangles(), 2);
        assert_eq!(m.num_edges(), 5);
        assert!((m.h - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_refinement_rejected() {
        assert_eq!(build_uniform_mesh(0).unwrap_err(), Error::InvalidRefinement(0));
    }

    #[test]
    fn counts_match_enumeration() {
        // Count edges independently from the set of distinct sorted vertex pairs.
        for n in [1, 2, 3, 4, 7, 32] {
            let m = build_uniform_mesh(n).unwrap();
            let mut pairs = BTreeSet::new();
            for t in &m.triangles {
                for l in 0..3 {
                    let (a, b) = (t.vertices[l], t.vertices[(l + 1) % 3]);
                    pairs.insert((a.min(b), a.max(b)));
                }
            }
            assert_eq!(m.num_vertices(), (n + 1) * (n + 1));
            assert_eq!(m.num_triangles(), 2 * n * n);
            assert_eq!(pairs.len(), 3 * n * n + 2 * n);
            assert_eq!(m.num_edges(), pairs.len());
            let euler = m.num_vertices() as i64 - m.num_edges() as i64 + m.num_triangles() as i64;
            assert_eq!(euler, 1);
        }
        let m4 = build_uniform_mesh(4).unwrap();
        assert_eq!((m4.num_vertices(), m4.num_triangles(), m4.num_edges()), (25, 32, 56));
        assert_eq!(build_uniform_mesh(32).unwrap().num_triangles(), 2048);
    }

    #[test]
    fn diagonal_has_negative_slope() {
        let m = build_uniform_mesh(1).unwrap();
        let diag: Vec<_> = m.edges.iter().filter(|e| !e.is_boundary()).collect();
        assert_eq!(diag.len(), 1);
        let d = diag[0];
        let (a, b) = (m.vertices[d.vertices[0]], m.vertices[d.vertices[1]]);
        assert!((b.y - a.y) / (b.x - a.x) < 0.0);
    }

    #[test]
    fn areas_adjacency_and_normals() {
        for n in [1, 3, 8] {
            let m = build_uniform_mesh(n).unwrap();
            let total: f64 = m.triangles.iter().map(|t| t.area).sum();
            assert!((total - 1.0).abs() < 1e-12);
            for (e, edge) in m.edges.iter().enumerate() {
                let expected = if edge.is_boundary() { 1 } else { 2 };
                assert_eq!(edge.adjacent.len(), expected);
                for &t in &edge.adjacent {
                    assert!(m.triangles[t].edges.contains(&e));
                }
            }
            for (t, tri) in m.triangles.iter().enumerate() {
                assert!(tri.area > 0.0);
                for l in 0..3 {
                    assert!(m.edges[tri.edges[l]].adjacent.contains(&t));
                    let e = &m.edges[tri.edges[l]];
                    let outward = m.outward_normal(t, l);
                    assert!(outward.dot(&(e.midpoint - tri.centroid)) > 0.0);
                }
            }
            assert!((m.h - 2f64.sqrt() / n as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn refinement_quadruples_triangles() {
        for n in [1, 2, 4, 8] {
            let a = build_uniform_mesh(n).unwrap().num_triangles();
            let b = build_uniform_mesh(2 * n).unwrap().num_triangles();
            assert_eq!(b, 4 * a);
        }
    }

    #[test]
    fn edge_weight_rules() {
        let m = build_uniform_mesh(4).unwrap();
        for e in 0..m.num_edges() {
            assert!((m.edge_weight(e) - 2f64.sqrt() / 4.0).abs() < 1e-15);
        }
        // Two triangles with diameters 1.0 and 0.5 sharing the edge (0,0)-(0.4,0.3).
        let verts = vec![
            Point::new(0.0, 0.0),
            Point::new(0.4, 0.3),
            Point::new(0.0, 1.0),
            Point::new(0.4, 0.0),
        ];
        let m = Mesh::from_triangles(verts, &[[0, 1, 2], [0, 3, 1]]);
        assert!((m.triangles[0].diameter - 1.0).abs() < 1e-12);
        assert!((m.triangles[1].diameter - 0.5).abs() < 1e-12);
        let shared = m.edges.iter().position(|e| e.adjacent.len() == 2).unwrap();
        assert!((m.edge_weight(shared) - 1.0).abs() < 1e-12);
        let lonely = m.triangles[1].edges.iter().copied().find(|&e| e != shared).unwrap();
        assert!((m.edge_weight(lonely) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn classify_cauchy_bottom() {
        let m = build_uniform_mesh(4).unwrap();
        let c = classify_boundary(&m, &sides(&[Side::Bottom]), &sides(&[Side::Bottom])).unwrap();
        for (e, edge) in m.edges.iter().enumerate() {
            let bottom = edge.boundary == Some(Side::Bottom);
            assert_eq!(c.in_gamma_d(e), bottom);
            assert_eq!(c.in_gamma_n(e), bottom);
            assert_eq!(c.in_gamma_n_complement(e), edge.is_boundary() && !bottom);
        }
        assert_eq!((0..m.num_edges()).filter(|&e| c.in_gamma_n_complement(e)).count(), 12);
    }

    #[test]
    fn classify_mixed_and_pure_dirichlet() {
        let m = build_uniform_mesh(2).unwrap();
        let c = classify_boundary(
            &m,
            &sides(&[Side::Bottom, Side::Left]),
            &sides(&[Side::Right, Side::Top]),
        )
        .unwrap();
        for e in m.boundary_edges() {
            assert!(c.in_gamma_d(e) ^ c.in_gamma_n(e));
        }
        let all = classify_boundary(&m, &sides(&Side::ALL), &BTreeSet::new()).unwrap();
        assert!(m.boundary_edges().all(|e| all.in_gamma_n_complement(e) && all.in_gamma_d(e)));
    }

    #[test]
    fn classify_rejects_no_data() {
        let m = build_uniform_mesh(2).unwrap();
        let err = classify_boundary(&m, &BTreeSet::new(), &BTreeSet::new()).unwrap_err();
        assert_eq!(err, Error::NoBoundaryData);
    }

    #[test]
    fn flags_on_interior_edges_rejected() {
        let m = build_uniform_mesh(1).unwrap();
        let interior = m.edges.iter().position(|e| !e.is_boundary()).unwrap();
        let mut gd = vec![false; m.num_edges()];
        gd[interior] = true;
        let err = BoundaryConfig::from_edge_flags(&m, gd, vec![false; m.num_edges()]).unwrap_err();
        assert_eq!(err, Error::FlagOnInteriorEdge(interior));
    }
}

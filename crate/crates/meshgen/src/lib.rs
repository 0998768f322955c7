//! Fixture meshes for coastopt, written as GMSH v2.2 ASCII.
//!
//! Boundary pieces are discretized here and kept as constraint edges, so the
//! lateral sides get matching vertex heights for periodic pairing. The
//! interior is a refined constrained Delaunay triangulation.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use spade::{ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

/// Physical ids written to the mesh file.
pub const G1: u32 = 1;
pub const G2: u32 = 2;
pub const G3: u32 = 3;
pub const G4: u32 = 4;
pub const G5: u32 = 5;
pub const OMEGA: u32 = 6;
pub const D: u32 = 7;

type P = [f64; 2];

#[derive(Debug)]
pub enum MeshGenError {
    Triangulation(String),
    Incomplete,
}

impl std::fmt::Display for MeshGenError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Triangulation(m) => write!(f, "triangulation failed: {m}"),
            Self::Incomplete => f.write_str("refinement hit the vertex budget"),
        }
    }
}

impl std::error::Error for MeshGenError {}

/// Points from `a` toward `b` in `n` equal steps, `b` excluded.
pub fn line(a: P, b: P, n: usize) -> Vec<P> {
    (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
        })
        .collect()
}

/// Arc points from angle `t0` toward `t1`, the end excluded.
pub fn arc(c: P, r: f64, t0: f64, t1: f64, n: usize) -> Vec<P> {
    (0..n)
        .map(|i| {
            let t = t0 + (t1 - t0) * i as f64 / n as f64;
            [c[0] + r * t.cos(), c[1] + r * t.sin()]
        })
        .collect()
}

/// Closed polygon approximating a circle, counter-clockwise.
pub fn circle(c: P, r: f64, n: usize) -> Vec<P> {
    arc(c, r, 0.0, 2.0 * PI, n)
}

/// Axis-aligned rectangle with corners rounded by radius `r` (zero for
/// sharp corners), counter-clockwise, sides split at spacing about `h`.
pub fn rounded_rectangle(c: P, width: f64, height: f64, r: f64, h: f64) -> Vec<P> {
    let (hw, hh) = (width / 2.0 - r, height / 2.0 - r);
    let n = |len: f64| ((len / h).ceil() as usize).max(1);
    let corners = [
        ([c[0] + hw, c[1] - hh], -PI / 2.0),
        ([c[0] + hw, c[1] + hh], 0.0),
        ([c[0] - hw, c[1] + hh], PI / 2.0),
        ([c[0] - hw, c[1] - hh], PI),
    ];
    let mut out = Vec::new();
    for (i, &(cc, t0)) in corners.iter().enumerate() {
        if r > 0.0 {
            out.extend(arc(cc, r, t0, t0 + PI / 2.0, n(r * PI / 2.0)));
        }
        let (next, _) = corners[(i + 1) % 4];
        let a = [cc[0] + r * (t0 + PI / 2.0).cos(), cc[1] + r * (t0 + PI / 2.0).sin()];
        let b = [next[0] + r * (t0 + PI / 2.0).cos(), next[1] + r * (t0 + PI / 2.0).sin()];
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        out.extend(line(a, b, n(len)));
    }
    out
}

/// Planar domain: a counter-clockwise outer loop made of tagged pieces and
/// closed obstacle polygons whose boundary is `G5` and interior `D`.
#[derive(Debug, Clone, Default)]
pub struct Domain {
    pieces: Vec<(Vec<P>, u32)>,
    obstacles: Vec<Vec<P>>,
    seeds: Vec<P>,
}

impl Domain {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a piece; its last edge runs to the first point of the next piece.
    pub fn piece(mut self, points: Vec<P>, tag: u32) -> Self {
        self.pieces.push((points, tag));
        self
    }

    pub fn obstacle(mut self, polygon: Vec<P>) -> Self {
        self.obstacles.push(polygon);
        self
    }

    /// Hexagonal lattice of extra vertices with spacing `h` inside the box.
    pub fn refine_box(mut self, lo: P, hi: P, h: f64) -> Self {
        let dy = h * 3f64.sqrt() / 2.0;
        let mut j = 0;
        let mut y = lo[1];
        while y <= hi[1] {
            let mut x = lo[0] + if j % 2 == 1 { h / 2.0 } else { 0.0 };
            while x <= hi[0] {
                self.seeds.push([x, y]);
                x += h;
            }
            y += dy;
            j += 1;
        }
        self
    }

    fn outer_loop(&self) -> Vec<(P, u32)> {
        self.pieces
            .iter()
            .flat_map(|(pts, tag)| pts.iter().map(move |&p| (p, *tag)))
            .collect()
    }

    /// Triangulates with cells no larger than an equilateral triangle of side `h`.
    pub fn mesh(&self, h: f64) -> Result<Fixture, MeshGenError> {
        let outer = self.outer_loop();
        let outer_pts: Vec<P> = outer.iter().map(|p| p.0).collect();
        let mut vertices: Vec<P> = outer_pts.clone();
        let mut constraints: Vec<([usize; 2], u32)> = (0..outer.len())
            .map(|i| ([i, (i + 1) % outer.len()], outer[i].1))
            .collect();
        for poly in &self.obstacles {
            let base = vertices.len();
            vertices.extend(poly);
            constraints.extend((0..poly.len()).map(|i| ([base + i, base + (i + 1) % poly.len()], G5)));
        }
        let boundary: Vec<(P, P)> = constraints
            .iter()
            .map(|(e, _)| (vertices[e[0]], vertices[e[1]]))
            .collect();
        let clearance = h * 0.3;
        for &s in &self.seeds {
            if point_in_polygon(s, &outer_pts) && boundary.iter().all(|&(a, b)| segment_distance(s, a, b) > clearance) {
                vertices.push(s);
            }
        }

        let pts: Vec<Point2<f64>> = vertices.iter().map(|p| Point2::new(p[0], p[1])).collect();
        let edges: Vec<[usize; 2]> = constraints.iter().map(|c| c.0).collect();
        let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
            ConstrainedDelaunayTriangulation::bulk_load_cdt(pts, edges)
                .map_err(|e| MeshGenError::Triangulation(format!("{e:?}")))?;
        let params = RefinementParameters::new()
            .keep_constraint_edges()
            .exclude_outer_faces(false)
            .with_max_allowed_area(h * h * 3f64.sqrt() / 4.0)
            .with_max_additional_vertices(2_000_000);
        let result = cdt.refine(params);
        if !result.refinement_complete {
            return Err(MeshGenError::Incomplete);
        }

        let key = |p: P| (p[0].to_bits(), p[1].to_bits());
        let mut nodes = Vec::with_capacity(cdt.num_vertices());
        let mut index = HashMap::new();
        for v in cdt.vertices() {
            let p = v.position();
            index.insert(key([p.x, p.y]), nodes.len());
            nodes.push([p.x, p.y]);
        }
        let mut triangles = Vec::new();
        for f in cdt.inner_faces() {
            let vs = f.vertices().map(|v| {
                let p = v.position();
                index[&key([p.x, p.y])]
            });
            let c = [
                (nodes[vs[0]][0] + nodes[vs[1]][0] + nodes[vs[2]][0]) / 3.0,
                (nodes[vs[0]][1] + nodes[vs[1]][1] + nodes[vs[2]][1]) / 3.0,
            ];
            if !point_in_polygon(c, &outer_pts) {
                continue;
            }
            let region = if self.obstacles.iter().any(|o| point_in_polygon(c, o)) { D } else { OMEGA };
            triangles.push((vs, region));
        }
        let mut lines: Vec<([usize; 2], u32)> = constraints
            .iter()
            .map(|(e, tag)| ([index[&key(vertices[e[0]])], index[&key(vertices[e[1]])]], *tag))
            .collect();
        // drop vertices that only belong to faces outside the domain
        let mut renum = vec![usize::MAX; nodes.len()];
        let mut kept = Vec::new();
        for (t, _) in &mut triangles {
            for v in t.iter_mut() {
                if renum[*v] == usize::MAX {
                    renum[*v] = kept.len();
                    kept.push(nodes[*v]);
                }
                *v = renum[*v];
            }
        }
        for (l, _) in &mut lines {
            *l = l.map(|v| renum[v]);
        }
        Ok(Fixture {
            nodes: kept,
            triangles,
            lines,
        })
    }
}

fn point_in_polygon(p: P, poly: &[P]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn segment_distance(p: P, a: P, b: P) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let l2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if l2 > 0.0 {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((p[0] - a[0] - t * ab[0]).powi(2) + (p[1] - a[1] - t * ab[1]).powi(2)).sqrt()
}

/// A triangulated fixture ready to be written out.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub nodes: Vec<P>,
    /// Counter-clockwise triangles with their region id.
    pub triangles: Vec<([usize; 3], u32)>,
    /// Boundary segments with their physical id.
    pub lines: Vec<([usize; 2], u32)>,
}

impl Fixture {
    pub fn to_msh(&self) -> String {
        let mut s = String::new();
        s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n");
        let names = [(1, G1, "G1"), (1, G2, "G2"), (1, G3, "G3"), (1, G4, "G4"), (1, G5, "G5"), (2, OMEGA, "OMEGA"), (2, D, "D")];
        let used: Vec<_> = names
            .iter()
            .filter(|(dim, id, _)| {
                if *dim == 1 {
                    self.lines.iter().any(|l| l.1 == *id)
                } else {
                    self.triangles.iter().any(|t| t.1 == *id)
                }
            })
            .collect();
        let _ = writeln!(s, "$PhysicalNames\n{}", used.len());
        for (dim, id, name) in used {
            let _ = writeln!(s, "{dim} {id} \"{name}\"");
        }
        s.push_str("$EndPhysicalNames\n");
        let _ = writeln!(s, "$Nodes\n{}", self.nodes.len());
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "{} {} {} 0", i + 1, p[0], p[1]);
        }
        s.push_str("$EndNodes\n");
        let _ = writeln!(s, "$Elements\n{}", self.lines.len() + self.triangles.len());
        let mut id = 0;
        for (l, tag) in &self.lines {
            id += 1;
            let _ = writeln!(s, "{id} 1 2 {tag} {tag} {} {}", l[0] + 1, l[1] + 1);
        }
        for (t, tag) in &self.triangles {
            id += 1;
            let _ = writeln!(s, "{id} 2 2 {tag} {tag} {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        s.push_str("$EndElements\n");
        s
    }

    pub fn n_vertices(&self) -> usize {
        self.nodes.len()
    }
}

fn count(len: f64, h: f64) -> usize {
    ((len / h).round() as usize).max(1)
}

/// Rectangle `[0, 5] x [-5, 0]` with coast `G1` at the bottom, periodic
/// sides `G2` (left) and `G3` (right) and a half-disc cap `G4` on top.
pub fn half_disc_domain(h: f64) -> Domain {
    let (w, depth, r) = (5.0, 5.0, 2.5);
    let ny = count(depth, h);
    Domain::new()
        .piece(line([0.0, -depth], [w, -depth], count(w, h)), G1)
        .piece(line([w, -depth], [w, 0.0], ny), G3)
        .piece(arc([w / 2.0, 0.0], r, 0.0, PI, count(PI * r, h)), G4)
        .piece(line([0.0, 0.0], [0.0, -depth], ny), G2)
}

/// The half-disc domain with a circular obstacle of radius 0.5 at `(2.5, -4)`.
pub fn circle_obstacle(h_far: f64, h_near: f64, segments: usize) -> Domain {
    half_disc_domain(h_far)
        .obstacle(circle([2.5, -4.0], 0.5, segments))
        .refine_box([1.6, -4.9], [3.4, -3.1], h_near)
}

/// The half-disc domain with a rectangular obstacle of size 1.2 x 0.4 at
/// `(2.5, -3.6)`; a positive `corner` radius smooths the corners.
pub fn rectangle_obstacle(h_far: f64, h_near: f64, corner: f64) -> Domain {
    half_disc_domain(h_far)
        .obstacle(rounded_rectangle([2.5, -3.6], 1.2, 0.4, corner, h_near))
        .refine_box([1.5, -4.3], [3.5, -2.9], h_near)
}

/// Rectangle `[0, 1.5] x [-1.5, 0]` with a straight `G4` on top and a
/// circular obstacle of radius 0.25 at `(0.75, -0.9)`, uniform size `h`.
pub fn compact_circle(h: f64) -> Domain {
    let s = 1.5;
    let n = count(s, h);
    let segs = count(2.0 * PI * 0.25, h).max(16);
    Domain::new()
        .piece(line([0.0, -s], [s, -s], n), G1)
        .piece(line([s, -s], [s, 0.0], n), G3)
        .piece(line([s, 0.0], [0.0, 0.0], n), G4)
        .piece(line([0.0, 0.0], [0.0, -s], n), G2)
        .obstacle(circle([0.75, -0.9], 0.25, segs))
}

/// Coastal strip `[0, 3] x [-1.5, 0]` with a wavy coast and a thin
/// elongated island as obstacle.
pub fn barrier_island(h_far: f64, h_near: f64) -> Domain {
    let (w, depth) = (3.0, 1.5);
    let nx = count(w, h_far);
    let coast: Vec<P> = (0..nx)
        .map(|i| {
            let x = w * i as f64 / nx as f64;
            [x, -depth + 0.12 * (2.0 * PI * x / w).sin()]
        })
        .collect();
    let ny = count(depth, h_far);
    let (c, a, b, tilt) = ([1.3, -0.95], 0.35, 0.07, 0.25f64);
    let n = count(PI * (a + b), h_near).max(24);
    let island: Vec<P> = (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            let (x, y) = (a * t.cos(), b * t.sin());
            [c[0] + x * tilt.cos() - y * tilt.sin(), c[1] + x * tilt.sin() + y * tilt.cos()]
        })
        .collect();
    Domain::new()
        .piece(coast, G1)
        .piece(line([w, -depth], [w, 0.0], ny), G3)
        .piece(line([w, 0.0], [0.0, 0.0], nx), G4)
        .piece(line([0.0, 0.0], [0.0, -depth], ny), G2)
        .obstacle(island)
        .refine_box([0.8, -1.3], [1.8, -0.6], h_near)
}

/// Named fixtures with their default sizes.
pub fn fixture(name: &str, h: Option<f64>) -> Option<Domain> {
    Some(match name {
        "circle" => circle_obstacle(h.unwrap_or(0.08), h.map_or(0.04, |h| h / 2.0), 128),
        "rectangle" => rectangle_obstacle(h.unwrap_or(0.08), h.map_or(0.04, |h| h / 2.0), 0.0),
        "rounded" => rectangle_obstacle(h.unwrap_or(0.08), h.map_or(0.04, |h| h / 2.0), 0.1),
        "empty" => half_disc_domain(h.unwrap_or(0.08)),
        "compact" => compact_circle(h.unwrap_or(0.02)),
        "island" => barrier_island(h.unwrap_or(0.04), h.map_or(0.02, |h| h / 2.0)),
        _ => return None,
    })
}

pub const FIXTURES: [&str; 6] = ["circle", "rectangle", "rounded", "empty", "compact", "island"];

/// Default mesh size of a named fixture.
pub fn default_h(name: &str) -> f64 {
    match name {
        "compact" => 0.02,
        "island" => 0.04,
        _ => 0.08,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn area(f: &Fixture, t: &[usize; 3]) -> f64 {
        let [a, b, c] = t.map(|i| f.nodes[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    }

    #[test]
    fn circle_fixture_is_consistent() {
        let f = circle_obstacle(0.25, 0.1, 64).mesh(0.25).unwrap();
        let total: f64 = f.triangles.iter().map(|t| area(&f, &t.0)).sum();
        let exact = 25.0 + PI * 2.5 * 2.5 / 2.0;
        // polygonal cap loses a little area
        assert!(total < exact && total > exact * 0.99, "{total}");
        assert!(f.triangles.iter().all(|t| area(&f, &t.0) > 0.0));
        let d: f64 = f.triangles.iter().filter(|t| t.1 == D).map(|t| area(&f, &t.0)).sum();
        assert!((d - PI * 0.25).abs() < 0.01);
        assert_eq!(f.lines.iter().filter(|l| l.1 == G5).count(), 64);
        let lefts: Vec<f64> = f.lines.iter().filter(|l| l.1 == G2).map(|l| f.nodes[l.0[0]][1]).collect();
        let mut rights: Vec<f64> = f.lines.iter().filter(|l| l.1 == G3).map(|l| f.nodes[l.0[1]][1]).collect();
        let mut lefts = lefts;
        lefts.sort_by(f64::total_cmp);
        rights.sort_by(f64::total_cmp);
        assert_eq!(lefts, rights);
    }

    #[test]
    fn msh_text_has_all_sections() {
        let f = fixture("compact", Some(0.1)).unwrap().mesh(0.1).unwrap();
        let s = f.to_msh();
        for sec in ["$MeshFormat", "$PhysicalNames", "$Nodes", "$Elements", "2 7 \"D\""] {
            assert!(s.contains(sec), "{sec}");
        }
        assert!(fixture("nope", None).is_none());
    }
}

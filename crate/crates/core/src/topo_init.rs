//! Obstacle initialization from the topological derivative: candidate
//! selection, DBSCAN clustering, hull outlines and `.geo` emission.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geom::{orient, Vec2};
use crate::mesh::{BoundaryTag, Region, TriMesh};
use crate::scalar::Real;
use crate::sensitivity::TopoField;

/// Vertices picked from the most negative part of the topological derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection<T> {
    pub vertices: Vec<usize>,
    pub points: Vec<Vec2<T>>,
    /// All eligible values were equal, so the pick is by index only.
    pub degenerate: bool,
}

fn point_segment_distance<T: Real>(p: Vec2<T>, a: Vec2<T>, b: Vec2<T>) -> T {
    let ab = b - a;
    let l2 = ab.norm_sq();
    let t = if l2 > T::zero() {
        ((p - a).dot(ab) / l2).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    (p - (a + ab.scale(t))).norm()
}

/// Vertices whose value is negative and among the lowest `q` fraction of the
/// eligible vertices, i.e. vertices of water cells farther than `margin`
/// from every tagged boundary. Ties are broken by vertex index.
pub fn select_candidates<T: Real>(mesh: &TriMesh<T>, topo: &TopoField<T>, q: T, margin: T) -> Result<Selection<T>> {
    if !(q > T::zero() && q < T::one()) {
        return Err(Error::InvalidParameter(format!("quantile must lie in (0, 1), got {q}")));
    }
    if topo.values.len() != mesh.n_vertices() {
        return Err(Error::DimensionMismatch(format!(
            "field has {} values, mesh has {} vertices",
            topo.values.len(),
            mesh.n_vertices()
        )));
    }
    let mut water = vec![false; mesh.n_vertices()];
    for (c, cell) in mesh.cells().iter().enumerate() {
        if mesh.regions()[c] == Region::Omega {
            for &v in cell {
                water[v] = true;
            }
        }
    }
    let segments: Vec<(Vec2<T>, Vec2<T>)> = mesh
        .boundary_edges()
        .iter()
        .map(|e| (mesh.vertices()[e.a], mesh.vertices()[e.b]))
        .collect();
    let mut eligible: Vec<usize> = (0..mesh.n_vertices())
        .filter(|&v| {
            water[v] && {
                let p = mesh.vertices()[v];
                segments.iter().all(|&(a, b)| point_segment_distance(p, a, b) > margin)
            }
        })
        .collect();
    if eligible.is_empty() {
        return Err(Error::EmptySelection("no vertex lies inside the margin".into()));
    }
    let vals = &topo.values;
    eligible.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let lo = vals[eligible[0]];
    let hi = vals[*eligible.last().unwrap()];
    let count = (q * T::from_count(eligible.len())).ceil().to_usize().unwrap_or(0).max(1);
    let mut vertices: Vec<usize> = eligible
        .into_iter()
        .take(count)
        .filter(|&v| vals[v] < T::zero())
        .collect();
    if vertices.is_empty() {
        return Err(Error::EmptySelection("no negative topological derivative values".into()));
    }
    vertices.sort_unstable();
    Ok(Selection {
        points: vertices.iter().map(|&v| mesh.vertices()[v]).collect(),
        vertices,
        degenerate: lo == hi,
    })
}

/// DBSCAN labels: `-1` for noise, `0..n_clusters` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult<T> {
    pub labels: Vec<i64>,
    pub n_clusters: usize,
    pub eps: T,
    pub min_points: usize,
}

impl<T: Real> ClusterResult<T> {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == cluster as i64)
            .collect()
    }
}

struct Grid<'a, T> {
    points: &'a [Vec2<T>],
    eps: T,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a, T: Real> Grid<'a, T> {
    fn new(points: &'a [Vec2<T>], eps: T) -> Self {
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, &p) in points.iter().enumerate() {
            cells.entry(Self::key(p, eps)).or_default().push(i);
        }
        Self { points, eps, cells }
    }

    fn key(p: Vec2<T>, eps: T) -> (i64, i64) {
        let f = |x: T| (x / eps).floor().to_i64().unwrap_or(0);
        (f(p.x), f(p.y))
    }

    /// Indices within distance `eps` of point `i`, itself included, ascending.
    fn neighbors(&self, i: usize) -> Vec<usize> {
        let p = self.points[i];
        let (cx, cy) = Self::key(p, self.eps);
        let e2 = self.eps * self.eps;
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = self.cells.get(&(cx + dx, cy + dy)) {
                    out.extend(list.iter().copied().filter(|&j| (self.points[j] - p).norm_sq() <= e2));
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Density-based clustering. A point is core when at least `min_points`
/// points (itself included) lie within `eps`. Points are scanned in index
/// order; a border point joins the first cluster that reaches it.
pub fn dbscan<T: Real>(points: &[Vec2<T>], eps: T, min_points: usize) -> Result<ClusterResult<T>> {
    if !(eps > T::zero()) || min_points == 0 {
        return Err(Error::InvalidParameter(format!(
            "dbscan needs eps > 0 and min_points >= 1, got {eps} and {min_points}"
        )));
    }
    const UNSEEN: i64 = -2;
    const NOISE: i64 = -1;
    let grid = Grid::new(points, eps);
    let mut labels = vec![UNSEEN; points.len()];
    let mut n_clusters = 0usize;
    for i in 0..points.len() {
        if labels[i] != UNSEEN {
            continue;
        }
        let nb = grid.neighbors(i);
        if nb.len() < min_points {
            labels[i] = NOISE;
            continue;
        }
        let id = n_clusters as i64;
        n_clusters += 1;
        labels[i] = id;
        let mut queue: VecDeque<usize> = nb.into_iter().collect();
        while let Some(j) = queue.pop_front() {
            if labels[j] == NOISE {
                labels[j] = id;
            }
            if labels[j] != UNSEEN {
                continue;
            }
            labels[j] = id;
            let nj = grid.neighbors(j);
            if nj.len() >= min_points {
                queue.extend(nj);
            }
        }
    }
    Ok(ClusterResult {
        labels,
        n_clusters,
        eps,
        min_points,
    })
}

/// Convex hull, counter-clockwise, without collinear points.
pub fn convex_hull<T: Real>(points: &[Vec2<T>]) -> Vec<Vec2<T>> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap().then(a.y.partial_cmp(&b.y).unwrap()));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut hull: Vec<Vec2<T>> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec2<T>>> = if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while hull.len() >= start + 2 && orient(hull[hull.len() - 2], hull[hull.len() - 1], q) <= T::zero() {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    hull
}

/// Offsets a counter-clockwise convex polygon outward by `d` with mitred corners.
pub fn dilate<T: Real>(poly: &[Vec2<T>], d: T) -> Vec<Vec2<T>> {
    if d == T::zero() {
        return poly.to_vec();
    }
    let n = poly.len();
    let normal = |i: usize| {
        let t = poly[(i + 1) % n] - poly[i];
        t.perp_right().scale(T::one() / t.norm())
    };
    (0..n)
        .map(|i| {
            let n0 = normal((i + n - 1) % n);
            let n1 = normal(i);
            let bis = n0 + n1;
            // miter point: p + bis * d / (1 + n0.n1)
            poly[i] + bis.scale(d / (T::one() + n0.dot(n1)))
        })
        .collect()
}

fn point_in_polygon<T: Real>(p: Vec2<T>, poly: &[Vec2<T>]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn polygons_overlap<T: Real>(a: &[Vec2<T>], b: &[Vec2<T>]) -> bool {
    a.iter().any(|&p| point_in_polygon(p, b))
        || b.iter().any(|&p| point_in_polygon(p, a))
        || (0..a.len()).any(|i| {
            (0..b.len()).any(|j| {
                let (p, q) = (a[i], a[(i + 1) % a.len()]);
                let (r, s) = (b[j], b[(j + 1) % b.len()]);
                let d1 = orient(p, q, r);
                let d2 = orient(p, q, s);
                let d3 = orient(r, s, p);
                let d4 = orient(r, s, q);
                (d1 > T::zero()) != (d2 > T::zero()) && (d3 > T::zero()) != (d4 > T::zero())
            })
        })
}

/// Dilated hull outline per cluster; overlapping outlines are merged.
pub fn obstacle_outlines<T: Real>(points: &[Vec2<T>], clusters: &ClusterResult<T>, pad: T) -> Result<Vec<Vec<Vec2<T>>>> {
    if clusters.n_clusters == 0 {
        return Err(Error::NoBeneficialObstacle);
    }
    let mut groups: Vec<Vec<Vec2<T>>> = (0..clusters.n_clusters)
        .map(|c| clusters.members(c).into_iter().map(|i| points[i]).collect())
        .collect();
    for (c, g) in groups.iter().enumerate() {
        if convex_hull(g).len() < 3 {
            return Err(Error::DegenerateCluster {
                cluster: c,
                msg: format!("{} points without three non-collinear ones", g.len()),
            });
        }
    }
    loop {
        let outlines: Vec<Vec<Vec2<T>>> = groups.iter().map(|g| dilate(&convex_hull(g), pad)).collect();
        let pair = (0..outlines.len())
            .flat_map(|i| (i + 1..outlines.len()).map(move |j| (i, j)))
            .find(|&(i, j)| polygons_overlap(&outlines[i], &outlines[j]));
        match pair {
            Some((i, j)) => {
                let moved = groups.remove(j);
                groups[i].extend(moved);
            }
            None => return Ok(outlines),
        }
    }
}

/// Outer boundary of an obstacle-free mesh as one counter-clockwise loop of
/// `(start point, tag)` runs; collinear consecutive edges with equal tags merged.
fn outer_loop<T: Real>(mesh: &TriMesh<T>) -> Result<Vec<(Vec2<T>, BoundaryTag)>> {
    let edges = mesh.boundary_edges();
    if edges.iter().any(|e| e.tag == BoundaryTag::G5) {
        return Err(Error::InvalidMesh("topology phase expects a mesh without obstacle".into()));
    }
    let next: HashMap<usize, usize> = edges.iter().enumerate().map(|(i, e)| (e.a, i)).collect();
    let mut order = Vec::with_capacity(edges.len());
    let mut cur = 0usize;
    for _ in 0..edges.len() {
        order.push(cur);
        cur = *next
            .get(&edges[cur].b)
            .ok_or_else(|| Error::InvalidMesh("outer boundary is not closed".into()))?;
        if cur == 0 {
            break;
        }
    }
    if order.len() != edges.len() {
        return Err(Error::InvalidMesh("outer boundary has more than one loop".into()));
    }
    // start at a tag change so runs do not wrap around
    let n = order.len();
    let shift = (0..n)
        .find(|&i| edges[order[i]].tag != edges[order[(i + n - 1) % n]].tag)
        .unwrap_or(0);
    order.rotate_left(shift);
    let v = mesh.vertices();
    let mut runs: Vec<(Vec2<T>, BoundaryTag)> = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        let e = edges[i];
        let keep = match runs.last() {
            Some(&(_, tag)) if tag == e.tag && k > 0 => {
                let prev = edges[order[k - 1]];
                let turn = orient(v[prev.a], v[e.a], v[e.b]).abs();
                turn > T::lit(1e-12) * (v[e.b] - v[prev.a]).norm_sq()
            }
            _ => true,
        };
        if keep {
            runs.push((v[e.a], e.tag));
        }
    }
    Ok(runs)
}

/// GMSH `.geo` text: the outer boundary of `mesh` with every outline as a
/// hole tagged `G5`, the water surface `OMEGA` and the obstacle surfaces `D`.
pub fn emit_obstacle_geometry<T: Real>(mesh: &TriMesh<T>, outlines: &[Vec<Vec2<T>>], lc: T) -> Result<String> {
    if outlines.is_empty() {
        return Err(Error::NoBeneficialObstacle);
    }
    let outer = outer_loop(mesh)?;
    let outer_pts: Vec<Vec2<T>> = outer.iter().map(|r| r.0).collect();
    for (c, o) in outlines.iter().enumerate() {
        if o.len() < 3 {
            return Err(Error::DegenerateCluster {
                cluster: c,
                msg: "outline has fewer than three corners".into(),
            });
        }
        if o.iter().any(|&p| !point_in_polygon(p, &outer_pts)) {
            return Err(Error::DegenerateCluster {
                cluster: c,
                msg: "outline leaves the domain".into(),
            });
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "// obstacle layout from clustered topological derivative");
    let _ = writeln!(s, "Mesh.MshFileVersion = 2.2;");
    let _ = writeln!(s, "lc = {lc};");
    let mut point = 0usize;
    let mut line = 0usize;
    let mut by_tag: HashMap<BoundaryTag, Vec<i64>> = HashMap::new();
    let mut outer_refs = Vec::new();
    let first = point + 1;
    for p in &outer_pts {
        point += 1;
        let _ = writeln!(s, "Point({point}) = {{{}, {}, 0, lc}};", p.x, p.y);
    }
    let n = outer.len();
    for (i, &(_, tag)) in outer.iter().enumerate() {
        let a = first + i;
        let b = first + (i + 1) % n;
        line += 1;
        // G2 runs against the loop so that paired sides share orientation
        if tag == BoundaryTag::G2 {
            let _ = writeln!(s, "Line({line}) = {{{b}, {a}}};");
            outer_refs.push(-(line as i64));
        } else {
            let _ = writeln!(s, "Line({line}) = {{{a}, {b}}};");
            outer_refs.push(line as i64);
        }
        by_tag.entry(tag).or_default().push(line as i64);
    }
    let join = |v: &[i64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
    let _ = writeln!(s, "Curve Loop(1) = {{{}}};", join(&outer_refs));
    let mut hole_loops = Vec::new();
    for o in outlines {
        let first = point + 1;
        for p in o {
            point += 1;
            let _ = writeln!(s, "Point({point}) = {{{}, {}, 0, lc}};", p.x, p.y);
        }
        let mut refs = Vec::new();
        for i in 0..o.len() {
            line += 1;
            let _ = writeln!(s, "Line({line}) = {{{}, {}}};", first + i, first + (i + 1) % o.len());
            refs.push(line as i64);
        }
        let id = 2 + hole_loops.len();
        let _ = writeln!(s, "Curve Loop({id}) = {{{}}};", join(&refs));
        by_tag.entry(BoundaryTag::G5).or_default().extend(refs);
        hole_loops.push(id as i64);
    }
    let mut surf = vec![1i64];
    surf.extend(&hole_loops);
    let _ = writeln!(s, "Plane Surface(1) = {{{}}};", join(&surf));
    let mut d_surfs = Vec::new();
    for (k, &l) in hole_loops.iter().enumerate() {
        let id = 2 + k as i64;
        let _ = writeln!(s, "Plane Surface({id}) = {{{l}}};");
        d_surfs.push(id);
    }
    for tag in BoundaryTag::ALL {
        if let Some(lines) = by_tag.get(&tag) {
            let _ = writeln!(s, "Physical Curve(\"{}\", {}) = {{{}}};", tag.name(), tag as usize + 1, join(lines));
        }
    }
    let _ = writeln!(s, "Physical Surface(\"OMEGA\", 6) = {{1}};");
    let _ = writeln!(s, "Physical Surface(\"D\", 7) = {{{}}};", join(&d_surfs));
    if let (Some(g2), Some(g3)) = (by_tag.get(&BoundaryTag::G2), by_tag.get(&BoundaryTag::G3)) {
        if g2.len() == 1 && g3.len() == 1 {
            let lo = outer_pts.iter().fold(T::infinity(), |m, p| m.min(p.x));
            let hi = outer_pts.iter().fold(T::neg_infinity(), |m, p| m.max(p.x));
            let _ = writeln!(s, "Periodic Curve {{{}}} = {{{}}} Translate {{{}, 0, 0}};", g3[0], g2[0], hi - lo);
        }
    }
    Ok(s)
}

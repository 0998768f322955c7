//! Tagged triangular meshes.
//!
//! A [`TriMesh`] covers the computational domain: cells carry a [`Region`]
//! (open water or obstacle interior) and boundary edges carry a
//! [`BoundaryTag`]. Boundary edges are stored oriented so that the owning
//! water cell lies on their left; the outward normal of the water region is
//! then the right-hand normal of the edge direction. On the obstacle
//! boundary this normal points into the obstacle.

mod gmsh;
mod periodic;
mod structured;
mod validity;

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

pub use gmsh::{load_msh, parse_msh, write_msh, GroupRole, PhysicalNames};
pub use periodic::{build_periodic_pairing, PeriodicPairing};
pub use structured::{rectangle, with_obstacle, RectangleTags};
pub use validity::{check_shape_validity, segments_cross, ValidityReport};

use crate::error::{Error, Result};
use crate::geom::{orient, Vec2};
use crate::scalar::Real;

/// Cell region: open water or the interior of an obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Omega,
    Obstacle,
}

/// Boundary segment classes.
///
/// `G1` coastline, `G2`/`G3` lateral periodic sides, `G4` open sea,
/// `G5` obstacle boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    G1,
    G2,
    G3,
    G4,
    G5,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 5] = [Self::G1, Self::G2, Self::G3, Self::G4, Self::G5];
    /// Fixed outer boundary; deformation fields vanish here.
    pub const OUTER: [BoundaryTag; 4] = [Self::G1, Self::G2, Self::G3, Self::G4];

    pub fn name(self) -> &'static str {
        match self {
            Self::G1 => "G1",
            Self::G2 => "G2",
            Self::G3 => "G3",
            Self::G4 => "G4",
            Self::G5 => "G5",
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Omega => "OMEGA",
            Region::Obstacle => "D",
        })
    }
}

/// Tagged boundary (or interface) edge, oriented with its owning cell on the left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub tag: BoundaryTag,
    /// Adjacent water cell (or the only adjacent cell).
    pub cell: usize,
    /// Obstacle cell across an interface edge, if any.
    pub twin: Option<usize>,
}

/// Real 2-vector per mesh vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalVectorField<T>(pub Vec<Vec2<T>>);

impl<T: Real> NodalVectorField<T> {
    pub fn zeros(n: usize) -> Self {
        Self(vec![Vec2::zero(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[Vec2<T>] {
        &self.0
    }

    /// Flattened `[x0, y0, x1, y1, ...]` layout used by the vector-valued P1 space.
    pub fn to_flat(&self) -> Vec<T> {
        self.0.iter().flat_map(|v| [v.x, v.y]).collect()
    }

    pub fn from_flat(flat: &[T]) -> Self {
        Self(flat.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect())
    }

    pub fn max_norm(&self) -> T {
        self.0.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    pub fn scaled(&self, s: T) -> Self {
        Self(self.0.iter().map(|v| v.scale(s)).collect())
    }
}

static NEXT_GENERATION: AtomicU64 = AtomicU64::new(1);

fn next_generation() -> u64 {
    NEXT_GENERATION.fetch_add(1, Ordering::Relaxed)
}

/// Tagged 2D triangular mesh. Immutable once built.
#[derive(Debug, Clone)]
pub struct TriMesh<T> {
    vertices: Vec<Vec2<T>>,
    cells: Vec<[usize; 3]>,
    regions: Vec<Region>,
    boundary: Vec<BoundaryEdge>,
    generation: u64,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl<T: Real> TriMesh<T> {
    /// Builds a mesh and checks its invariants.
    ///
    /// Cells must be counter-clockwise. `tagged_edges` lists vertex pairs in
    /// any orientation; every edge of the domain boundary and every edge
    /// between a water cell and an obstacle cell must be tagged.
    pub fn new(
        vertices: Vec<Vec2<T>>,
        cells: Vec<[usize; 3]>,
        regions: Vec<Region>,
        tagged_edges: &[(usize, usize, BoundaryTag)],
    ) -> Result<Self> {
        if cells.len() != regions.len() {
            return Err(Error::InvalidMesh(format!(
                "{} cells but {} region tags",
                cells.len(),
                regions.len()
            )));
        }
        let nv = vertices.len();
        if let Some(p) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh(format!("vertex {p} has non-finite coordinates")));
        }
        for (c, cell) in cells.iter().enumerate() {
            if let Some(&v) = cell.iter().find(|&&v| v >= nv) {
                return Err(Error::InvalidMesh(format!(
                    "cell {c} references vertex {v}, but only {nv} vertices exist"
                )));
            }
            let area = orient(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
            if !(area > T::zero()) {
                return Err(Error::DegenerateCell {
                    cell: c,
                    area: area.to_f64_lossy() * 0.5,
                });
            }
        }

        // edge -> adjacent cells, with the directed edge as seen from each cell
        let mut adjacency: HashMap<(usize, usize), Vec<(usize, usize, usize)>> = HashMap::new();
        for (c, cell) in cells.iter().enumerate() {
            for l in 0..3 {
                let (p, q) = (cell[l], cell[(l + 1) % 3]);
                adjacency.entry(edge_key(p, q)).or_default().push((c, p, q));
            }
        }

        let mut boundary = Vec::with_capacity(tagged_edges.len());
        let mut tagged: HashMap<(usize, usize), BoundaryTag> = HashMap::new();
        for &(a, b, tag) in tagged_edges {
            if a >= nv || b >= nv {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge ({a}, {b}) references a vertex out of range"
                )));
            }
            let key = edge_key(a, b);
            if let Some(prev) = tagged.insert(key, tag) {
                if prev != tag {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({a}, {b}) tagged both {prev} and {tag}"
                    )));
                }
                continue;
            }
            let Some(adj) = adjacency.get(&key) else {
                return Err(Error::InvalidMesh(format!(
                    "tagged edge ({a}, {b}) is not an edge of any cell"
                )));
            };
            let edge = match adj.as_slice() {
                [(c, p, q)] => BoundaryEdge {
                    a: *p,
                    b: *q,
                    tag,
                    cell: *c,
                    twin: None,
                },
                [first, second] => {
                    let (own, other) = match (regions[first.0], regions[second.0]) {
                        (Region::Omega, Region::Obstacle) => (first, second),
                        (Region::Obstacle, Region::Omega) => (second, first),
                        _ => {
                            return Err(Error::InvalidMesh(format!(
                                "tagged edge ({a}, {b}) is interior to a single region"
                            )))
                        }
                    };
                    BoundaryEdge {
                        a: own.1,
                        b: own.2,
                        tag,
                        cell: own.0,
                        twin: Some(other.0),
                    }
                }
                _ => {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({a}, {b}) shared by more than two cells"
                    )))
                }
            };
            boundary.push(edge);
        }

        for (key, adj) in &adjacency {
            let needs_tag = match adj.as_slice() {
                [_] => true,
                [x, y] => regions[x.0] != regions[y.0],
                _ => {
                    return Err(Error::InvalidMesh(format!(
                        "edge {key:?} shared by more than two cells"
                    )))
                }
            };
            if needs_tag && !tagged.contains_key(key) {
                return Err(Error::UntaggedBoundaryEdge(key.0, key.1));
            }
        }

        Ok(Self {
            vertices,
            cells,
            regions,
            boundary,
            generation: next_generation(),
        })
    }

    pub fn vertices(&self) -> &[Vec2<T>] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Stamp identifying this geometry. Fields computed on a mesh remember it
    /// so that stale fields are rejected after a deformation.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn has_region(&self, region: Region) -> bool {
        self.regions.contains(&region)
    }

    pub fn has_tag(&self, tag: BoundaryTag) -> bool {
        self.boundary.iter().any(|e| e.tag == tag)
    }

    pub fn edges_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> + '_ {
        self.boundary.iter().filter(move |e| e.tag == tag)
    }

    pub fn cell_points(&self, c: usize) -> [Vec2<T>; 3] {
        let [a, b, d] = self.cells[c];
        [self.vertices[a], self.vertices[b], self.vertices[d]]
    }

    pub fn signed_area(&self, c: usize) -> T {
        let [p0, p1, p2] = self.cell_points(c);
        orient(p0, p1, p2) * T::lit(0.5)
    }

    pub fn centroid(&self, c: usize) -> Vec2<T> {
        let [p0, p1, p2] = self.cell_points(c);
        (p0 + p1 + p2).scale(T::lit(1.0 / 3.0))
    }

    pub fn min_cell_area(&self) -> T {
        (0..self.n_cells())
            .map(|c| self.signed_area(c))
            .fold(T::infinity(), T::min)
    }

    pub fn edge_vector(&self, e: &BoundaryEdge) -> Vec2<T> {
        self.vertices[e.b] - self.vertices[e.a]
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> T {
        self.edge_vector(e).norm()
    }

    /// Unit normal pointing out of the water region (into the obstacle on `G5`).
    pub fn outward_normal(&self, e: &BoundaryEdge) -> Vec2<T> {
        let t = self.edge_vector(e);
        t.perp_right().scale(T::one() / t.norm())
    }

    pub fn boundary_length(&self, tag: BoundaryTag) -> Result<T> {
        if !self.has_tag(tag) {
            return Err(Error::UnknownTag(tag.to_string()));
        }
        Ok(self.edges_with_tag(tag).map(|e| self.edge_length(e)).sum())
    }

    pub fn domain_area(&self, region: Region) -> Result<T> {
        if !self.has_region(region) {
            return Err(Error::UnknownTag(region.to_string()));
        }
        Ok((0..self.n_cells())
            .filter(|&c| self.regions[c] == region)
            .map(|c| self.signed_area(c))
            .sum())
    }

    /// Sorted, deduplicated vertices of all edges carrying `tag`.
    pub fn tagged_vertices(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut vs: Vec<usize> = self
            .edges_with_tag(tag)
            .flat_map(|e| [e.a, e.b])
            .collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// Per-vertex flag: vertex lies on one of `tags`.
    pub fn vertex_mask(&self, tags: &[BoundaryTag]) -> Vec<bool> {
        let mut mask = vec![false; self.n_vertices()];
        for e in self.boundary.iter().filter(|e| tags.contains(&e.tag)) {
            mask[e.a] = true;
            mask[e.b] = true;
        }
        mask
    }

    /// Cells incident to each vertex.
    pub fn vertex_cells(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_vertices()];
        for (c, cell) in self.cells.iter().enumerate() {
            for &v in cell {
                out[v].push(c);
            }
        }
        out
    }

    pub fn mean_edge_length(&self) -> T {
        let mut total = T::zero();
        for c in 0..self.n_cells() {
            let [p0, p1, p2] = self.cell_points(c);
            total += (p1 - p0).norm() + (p2 - p1).norm() + (p0 - p2).norm();
        }
        total / T::from_count(3 * self.n_cells().max(1))
    }

    /// Perturbation of identity: moves every vertex to `x + scale * disp(x)`.
    ///
    /// Connectivity and tags are kept; the result gets a fresh generation
    /// stamp. Validity is not checked here, see [`check_shape_validity`].
    pub fn apply_displacement(&self, disp: &NodalVectorField<T>, scale: T) -> Result<Self> {
        if disp.len() != self.n_vertices() {
            return Err(Error::DimensionMismatch(format!(
                "displacement has {} entries, mesh has {} vertices",
                disp.len(),
                self.n_vertices()
            )));
        }
        let vertices = self
            .vertices
            .iter()
            .zip(disp.values())
            .map(|(&x, &v)| x + v.scale(scale))
            .collect();
        Ok(Self {
            vertices,
            cells: self.cells.clone(),
            regions: self.regions.clone(),
            boundary: self.boundary.clone(),
            generation: next_generation(),
        })
    }

    /// Applies an arbitrary point map. Orientation-reversing maps flip the
    /// cell ordering so that all cells stay counter-clockwise; boundary tags
    /// are renamed through `retag`.
    pub fn transformed(
        &self,
        map: impl Fn(Vec2<T>) -> Vec2<T>,
        retag: impl Fn(BoundaryTag) -> BoundaryTag,
    ) -> Result<Self> {
        let vertices: Vec<_> = self.vertices.iter().map(|&p| map(p)).collect();
        let cells = self
            .cells
            .iter()
            .map(|&[a, b, c]| {
                if orient(vertices[a], vertices[b], vertices[c]) < T::zero() {
                    [a, c, b]
                } else {
                    [a, b, c]
                }
            })
            .collect();
        let tags: Vec<_> = self
            .boundary
            .iter()
            .map(|e| (e.a, e.b, retag(e.tag)))
            .collect();
        Self::new(vertices, cells, self.regions.clone(), &tags)
    }
}

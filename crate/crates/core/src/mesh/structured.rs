use super::{BoundaryTag, Region, TriMesh};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::scalar::Real;

/// Tags for the four sides of a structured rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RectangleTags {
    pub bottom: BoundaryTag,
    pub right: BoundaryTag,
    pub top: BoundaryTag,
    pub left: BoundaryTag,
}

impl Default for RectangleTags {
    /// Coast at the bottom, open sea at the top, periodic sides.
    fn default() -> Self {
        Self {
            bottom: BoundaryTag::G1,
            right: BoundaryTag::G3,
            top: BoundaryTag::G4,
            left: BoundaryTag::G2,
        }
    }
}

/// Uniform `nx` by `ny` grid over `[origin, origin + size]`, each square split
/// along its lower-left to upper-right diagonal. Vertex `(i, j)` has index
/// `j * (nx + 1) + i`.
pub fn rectangle<T: Real>(
    origin: Vec2<T>,
    size: Vec2<T>,
    nx: usize,
    ny: usize,
    tags: RectangleTags,
) -> Result<TriMesh<T>> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidParameter("grid needs at least one cell per direction".into()));
    }
    let stride = nx + 1;
    let id = |i: usize, j: usize| j * stride + i;
    let mut vertices = Vec::with_capacity(stride * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = origin.x + size.x * T::from_count(i) / T::from_count(nx);
            let y = origin.y + size.y * T::from_count(j) / T::from_count(ny);
            vertices.push(Vec2::new(x, y));
        }
    }
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cells.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            cells.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        edges.push((id(i, 0), id(i + 1, 0), tags.bottom));
        edges.push((id(i, ny), id(i + 1, ny), tags.top));
    }
    for j in 0..ny {
        edges.push((id(0, j), id(0, j + 1), tags.left));
        edges.push((id(nx, j), id(nx, j + 1), tags.right));
    }
    let regions = vec![Region::Omega; cells.len()];
    TriMesh::new(vertices, cells, regions, &edges)
}

/// Marks cells whose centroid satisfies `inside` as obstacle cells and tags
/// every water/obstacle interface edge `G5`.
pub fn with_obstacle<T: Real>(mesh: &TriMesh<T>, inside: impl Fn(Vec2<T>) -> bool) -> Result<TriMesh<T>> {
    let regions: Vec<Region> = (0..mesh.n_cells())
        .map(|c| if inside(mesh.centroid(c)) { Region::Obstacle } else { Region::Omega })
        .collect();
    let mut owner: std::collections::HashMap<(usize, usize), usize> = std::collections::HashMap::new();
    let mut edges: Vec<(usize, usize, BoundaryTag)> =
        mesh.boundary_edges().iter().map(|e| (e.a, e.b, e.tag)).collect();
    for (c, cell) in mesh.cells().iter().enumerate() {
        for l in 0..3 {
            let (p, q) = (cell[l], cell[(l + 1) % 3]);
            let key = (p.min(q), p.max(q));
            if let Some(&other) = owner.get(&key) {
                if regions[other] != regions[c] {
                    edges.push((p, q, BoundaryTag::G5));
                }
            } else {
                owner.insert(key, c);
            }
        }
    }
    TriMesh::new(mesh.vertices().to_vec(), mesh.cells().to_vec(), regions, &edges)
}

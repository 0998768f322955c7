use std::collections::HashMap;

use super::element::{Order, CELL_EDGES};
use crate::geom::Vec2;
use crate::mesh::{BoundaryEdge, PeriodicPairing, TriMesh};
use crate::scalar::Real;

/// Global numbering of Lagrange nodes. Vertex nodes come first and share the
/// vertex index; P2 edge nodes follow, one per mesh edge.
#[derive(Debug, Clone)]
pub struct DofMap<T> {
    order: Order,
    n_vertices: usize,
    cell_dofs: Vec<[usize; 6]>,
    edge_index: HashMap<(usize, usize), usize>,
    coords: Vec<Vec2<T>>,
    generation: u64,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl<T: Real> DofMap<T> {
    pub fn new(mesh: &TriMesh<T>, order: Order) -> Self {
        let nv = mesh.n_vertices();
        let mut coords = mesh.vertices().to_vec();
        let mut edge_index = HashMap::new();
        let mut cell_dofs = Vec::with_capacity(mesh.n_cells());
        for cell in mesh.cells() {
            let mut d = [usize::MAX; 6];
            d[..3].copy_from_slice(cell);
            if order == Order::P2 {
                for (e, &(i, j)) in CELL_EDGES.iter().enumerate() {
                    let (a, b) = (cell[i], cell[j]);
                    let next = nv + edge_index.len();
                    let idx = *edge_index.entry(key(a, b)).or_insert_with(|| {
                        coords.push((mesh.vertices()[a] + mesh.vertices()[b]).scale(T::lit(0.5)));
                        next - nv
                    });
                    d[3 + e] = nv + idx;
                }
            }
            cell_dofs.push(d);
        }
        Self {
            order,
            n_vertices: nv,
            cell_dofs,
            edge_index,
            coords,
            generation: mesh.generation(),
        }
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn n_dofs(&self) -> usize {
        self.coords.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cell_dofs[c][..self.order.n_local()]
    }

    pub fn coords(&self) -> &[Vec2<T>] {
        &self.coords
    }

    /// Edge node of `(a, b)` for P2.
    pub fn edge_dof(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&key(a, b)).map(|i| self.n_vertices + i)
    }

    /// DOFs of a boundary edge in edge-basis order: `[a, b]` or `[a, b, mid]`.
    pub fn boundary_dofs(&self, e: &BoundaryEdge) -> Vec<usize> {
        match self.order {
            Order::P1 => vec![e.a, e.b],
            Order::P2 => vec![e.a, e.b, self.edge_dof(e.a, e.b).expect("boundary edge is a cell edge")],
        }
    }

    /// DOF-level periodic pairs: vertex pairs plus, for P2, the edge nodes of
    /// paired boundary edges.
    pub fn periodic_pairs(&self, mesh: &TriMesh<T>, pairing: &PeriodicPairing<T>) -> Vec<(usize, usize)> {
        let mut pairs = pairing.pairs.clone();
        if self.order == Order::P2 && !pairing.is_empty() {
            let partner: HashMap<usize, usize> = pairing.pairs.iter().copied().collect();
            let right: HashMap<(usize, usize), ()> = mesh
                .edges_with_tag(crate::mesh::BoundaryTag::G3)
                .map(|e| (key(e.a, e.b), ()))
                .collect();
            for e in mesh.edges_with_tag(crate::mesh::BoundaryTag::G2) {
                if let (Some(&pa), Some(&pb)) = (partner.get(&e.a), partner.get(&e.b)) {
                    if right.contains_key(&key(pa, pb)) {
                        let m = self.edge_dof(e.a, e.b).unwrap();
                        let s = self.edge_dof(pa, pb).unwrap();
                        pairs.push((m, s));
                    }
                }
            }
        }
        pairs
    }
}

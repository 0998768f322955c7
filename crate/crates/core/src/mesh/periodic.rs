use super::{BoundaryTag, TriMesh};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Vertex correspondence between the lateral boundaries `G2` and `G3`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicPairing<T> {
    /// `(vertex on G2, vertex on G3)`, sorted along the boundary.
    pub pairs: Vec<(usize, usize)>,
    pub tolerance: T,
}

impl<T: Real> PeriodicPairing<T> {
    pub fn empty() -> Self {
        Self {
            pairs: Vec::new(),
            tolerance: T::zero(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Pairs `G2` and `G3` vertices by their coordinate along the boundary.
///
/// The periodic direction is the longer bounding-box axis of the `G2`
/// vertices. Both vertex sets are sorted along it and matched in order;
/// each pair must agree in that coordinate within `tol`.
pub fn build_periodic_pairing<T: Real>(mesh: &TriMesh<T>, tol: T) -> Result<PeriodicPairing<T>> {
    let left = mesh.tagged_vertices(BoundaryTag::G2);
    let right = mesh.tagged_vertices(BoundaryTag::G3);
    if left.is_empty() && right.is_empty() {
        return Ok(PeriodicPairing::empty());
    }
    if left.len() != right.len() {
        return Err(Error::Pairing(format!(
            "G2 has {} vertices, G3 has {}",
            left.len(),
            right.len()
        )));
    }
    let pts = mesh.vertices();
    let extent = |axis: usize| {
        let (lo, hi) = left.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
            let c = pts[v].get(axis);
            (lo.min(c), hi.max(c))
        });
        hi - lo
    };
    let axis = if extent(1) >= extent(0) { 1 } else { 0 };
    let sorted = |vs: &[usize]| {
        let mut vs = vs.to_vec();
        vs.sort_by(|&a, &b| {
            pts[a]
                .get(axis)
                .partial_cmp(&pts[b].get(axis))
                .unwrap()
                .then(a.cmp(&b))
        });
        vs
    };
    let left = sorted(&left);
    let right = sorted(&right);
    let mut pairs = Vec::with_capacity(left.len());
    for (&a, &b) in left.iter().zip(&right) {
        let gap = (pts[a].get(axis) - pts[b].get(axis)).abs();
        if gap > tol {
            return Err(Error::Pairing(format!(
                "vertex {a} on G2 has no partner on G3 within {tol:e} (nearest in order: {b}, gap {gap:e})"
            )));
        }
        pairs.push((a, b));
    }
    Ok(PeriodicPairing {
        pairs,
        tolerance: tol,
    })
}

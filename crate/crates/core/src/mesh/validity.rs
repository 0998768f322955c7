use rayon::prelude::*;

use super::{BoundaryTag, TriMesh};
use crate::geom::{orient, Vec2};
use crate::scalar::Real;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidityReport {
    /// Pairs of indices into `TriMesh::boundary_edges` whose `G5` segments cross.
    pub crossing_pairs: Vec<(usize, usize)>,
    /// Cells with signed area at or below the floor.
    pub inverted_cells: Vec<usize>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.crossing_pairs.is_empty() && self.inverted_cells.is_empty()
    }
}

fn between<T: Real>(a: T, b: T, c: T) -> bool {
    a.min(b) <= c && c <= a.max(b)
}

fn on_segment<T: Real>(p: Vec2<T>, q: Vec2<T>, r: Vec2<T>) -> bool {
    between(p.x, q.x, r.x) && between(p.y, q.y, r.y)
}

/// Whether closed segments `pq` and `rs` intersect anywhere other than at a
/// shared endpoint. Segments sharing an endpoint only count when they overlap
/// collinearly beyond it.
pub fn segments_cross<T: Real>(
    (ip, p): (usize, Vec2<T>),
    (iq, q): (usize, Vec2<T>),
    (ir, r): (usize, Vec2<T>),
    (is, s): (usize, Vec2<T>),
) -> bool {
    let shared = [ip, iq].iter().filter(|&&v| v == ir || v == is).count();
    if shared == 2 {
        return true;
    }
    let o1 = orient(p, q, r);
    let o2 = orient(p, q, s);
    let o3 = orient(r, s, p);
    let o4 = orient(r, s, q);
    let zero = T::zero();
    if shared == 1 {
        // the only legal contact is the common endpoint
        let (common, a_other, b_other) = if ip == ir {
            (p, q, s)
        } else if ip == is {
            (p, q, r)
        } else if iq == ir {
            (q, p, s)
        } else {
            (q, p, r)
        };
        let d1 = a_other - common;
        let d2 = b_other - common;
        return d1.cross(d2) == zero && d1.dot(d2) > zero;
    }
    let sign = |v: T| {
        if v > zero {
            1
        } else if v < zero {
            -1
        } else {
            0
        }
    };
    let (s1, s2, s3, s4) = (sign(o1), sign(o2), sign(o3), sign(o4));
    if s1 * s2 < 0 && s3 * s4 < 0 {
        return true;
    }
    (s1 == 0 && on_segment(p, q, r))
        || (s2 == 0 && on_segment(p, q, s))
        || (s3 == 0 && on_segment(r, s, p))
        || (s4 == 0 && on_segment(r, s, q))
}

/// Checks `G5` for self-intersections and all cells for collapse below `area_floor`.
pub fn check_shape_validity<T: Real>(mesh: &TriMesh<T>, area_floor: T) -> ValidityReport {
    let pts = mesh.vertices();
    let g5: Vec<usize> = mesh
        .boundary_edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.tag == BoundaryTag::G5)
        .map(|(i, _)| i)
        .collect();
    let edges = mesh.boundary_edges();
    let mut crossing_pairs: Vec<(usize, usize)> = g5
        .par_iter()
        .enumerate()
        .flat_map_iter(|(k, &i)| {
            let ei = edges[i];
            g5[k + 1..].iter().filter_map(move |&j| {
                let ej = edges[j];
                segments_cross(
                    (ei.a, pts[ei.a]),
                    (ei.b, pts[ei.b]),
                    (ej.a, pts[ej.a]),
                    (ej.b, pts[ej.b]),
                )
                .then_some((i, j))
            })
        })
        .collect();
    crossing_pairs.sort_unstable();
    let inverted_cells = (0..mesh.n_cells())
        .filter(|&c| !(mesh.signed_area(c) > area_floor))
        .collect();
    ValidityReport {
        crossing_pairs,
        inverted_cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{rectangle, NodalVectorField, RectangleTags};

    fn seg(i: usize, x: f64, y: f64) -> (usize, Vec2<f64>) {
        (i, Vec2::new(x, y))
    }

    #[test]
    fn crossing_cases() {
        assert!(segments_cross(seg(0, 0., 0.), seg(1, 1., 1.), seg(2, 0., 1.), seg(3, 1., 0.)));
        assert!(!segments_cross(seg(0, 0., 0.), seg(1, 1., 0.), seg(2, 0., 1.), seg(3, 1., 1.)));
        // shared endpoint, not overlapping
        assert!(!segments_cross(seg(0, 0., 0.), seg(1, 1., 0.), seg(1, 1., 0.), seg(2, 1., 1.)));
        // shared endpoint, folding back onto itself
        assert!(segments_cross(seg(0, 0., 0.), seg(1, 1., 0.), seg(1, 1., 0.), seg(2, 0.5, 0.)));
        // T-junction touching the interior
        assert!(segments_cross(seg(0, 0., 0.), seg(1, 2., 0.), seg(2, 1., 0.), seg(3, 1., 1.)));
        // collinear disjoint
        assert!(!segments_cross(seg(0, 0., 0.), seg(1, 1., 0.), seg(2, 2., 0.), seg(3, 3., 0.)));
    }

    #[test]
    fn folded_cell_is_reported() {
        let m = rectangle(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), 4, 4, RectangleTags::default())
            .unwrap();
        assert!(check_shape_validity(&m, 1e-6).is_valid());
        // interior vertex (1,1) at (0.25,0.25): push it far across its neighbours
        let v = 5 + 1;
        let mut d = NodalVectorField::zeros(m.n_vertices());
        d.0[v] = Vec2::new(0.6, 0.6);
        let bent = m.apply_displacement(&d, 1.0).unwrap();
        let rep = check_shape_validity(&bent, 1e-6);
        assert!(!rep.is_valid());
        for c in &rep.inverted_cells {
            assert!(m.cells()[*c].contains(&v));
        }
    }
}

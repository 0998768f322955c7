//! Fill-reducing orderings for the sparse factorization.

use crate::geom::Vec2;
use crate::scalar::Real;

const LEAF: usize = 64;

/// Geometric nested dissection.
///
/// Node sets are split at the median of their longer bounding-box axis; the
/// separator is the set of lower-half nodes adjacent to the upper half.
/// Returns `perm` with `perm[new] = old`.
pub fn nested_dissection<T: Real>(coords: &[Vec2<T>], adj: &[Vec<usize>]) -> Vec<usize> {
    let n = coords.len();
    let mut perm = Vec::with_capacity(n);
    // label[v] identifies the part v currently belongs to
    let mut label = vec![0u32; n];
    let mut next_label = 1u32;
    let mut stack: Vec<(Vec<usize>, bool)> = vec![((0..n).collect(), false)];
    // explicit stack: (nodes, emit) where emit=true means append without splitting
    while let Some((nodes, emit)) = stack.pop() {
        if emit || nodes.len() <= LEAF {
            perm.extend_from_slice(&nodes);
            continue;
        }
        let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) =
            (T::infinity(), T::neg_infinity(), T::infinity(), T::neg_infinity());
        for &v in &nodes {
            let p = coords[v];
            lo_x = lo_x.min(p.x);
            hi_x = hi_x.max(p.x);
            lo_y = lo_y.min(p.y);
            hi_y = hi_y.max(p.y);
        }
        let axis = if hi_x - lo_x >= hi_y - lo_y { 0 } else { 1 };
        let mut sorted = nodes;
        let mid = sorted.len() / 2;
        sorted.select_nth_unstable_by(mid, |&a, &b| {
            coords[a]
                .get(axis)
                .partial_cmp(&coords[b].get(axis))
                .unwrap()
                .then(a.cmp(&b))
        });
        let (lower, upper) = sorted.split_at(mid);
        let upper_label = next_label;
        next_label += 1;
        for &v in upper {
            label[v] = upper_label;
        }
        let mut sep = Vec::new();
        let mut rest = Vec::new();
        for &v in lower {
            if adj[v].iter().any(|&w| label[w] == upper_label) {
                sep.push(v);
            } else {
                rest.push(v);
            }
        }
        let lower_label = next_label;
        next_label += 1;
        for &v in &rest {
            label[v] = lower_label;
        }
        let sep_label = next_label;
        next_label += 1;
        for &v in &sep {
            label[v] = sep_label;
        }
        let mut upper = upper.to_vec();
        upper.sort_unstable();
        rest.sort_unstable();
        sep.sort_unstable();
        // popped in reverse: rest, upper, then separator last
        stack.push((sep, true));
        stack.push((upper, false));
        stack.push((rest, false));
    }
    perm
}

/// Inverse of a permutation.
pub fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_ordering_is_a_permutation() {
        let n = 40;
        let mut coords = Vec::new();
        let mut adj = vec![Vec::new(); n * n];
        for j in 0..n {
            for i in 0..n {
                coords.push(Vec2::new(i as f64, j as f64));
                let v = j * n + i;
                if i > 0 {
                    adj[v].push(v - 1);
                    adj[v - 1].push(v);
                }
                if j > 0 {
                    adj[v].push(v - n);
                    adj[v - n].push(v);
                }
            }
        }
        let perm = nested_dissection(&coords, &adj);
        let mut s = perm.clone();
        s.sort_unstable();
        assert_eq!(s, (0..n * n).collect::<Vec<_>>());
        let inv = invert(&perm);
        for (k, &v) in perm.iter().enumerate() {
            assert_eq!(inv[v], k);
        }
    }
}

#![allow(dead_code)]

use coastopt_core::mesh::{parse_msh, PhysicalNames};
use coastopt_core::Mesh;
use coastopt_meshgen::Domain;

pub fn mesh_of(domain: Domain, h: f64) -> Mesh {
    let fx = domain.mesh(h).expect("fixture meshes");
    parse_msh(&fx.to_msh(), &PhysicalNames::default()).expect("fixture parses")
}

pub fn fixture(name: &str) -> Mesh {
    let domain = coastopt_meshgen::fixture(name, None).expect("known fixture");
    mesh_of(domain, coastopt_meshgen::default_h(name))
}

/// Reference DBSCAN: O(n^2) neighbourhoods, union-find over core points,
/// clusters ranked by their smallest core index, border points attached to
/// the best-ranked cluster among their core neighbours.
pub fn dbscan_reference(points: &[(f64, f64)], eps: f64, min_points: usize) -> Vec<i64> {
    let n = points.len();
    let near = |i: usize, j: usize| {
        let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
        dx * dx + dy * dy <= eps * eps
    };
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_points).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in 0..i {
            if core[i] && core[j] && near(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut rank = vec![-1i64; n];
    let mut next = 0;
    let mut labels = vec![-1i64; n];
    for i in 0..n {
        if core[i] {
            let r = find(&mut parent, i);
            if rank[r] < 0 {
                rank[r] = next;
                next += 1;
            }
            labels[i] = rank[r];
        }
    }
    for i in 0..n {
        if !core[i] {
            labels[i] = (0..n)
                .filter(|&j| core[j] && near(i, j))
                .map(|j| labels[j])
                .min()
                .unwrap_or(-1);
        }
    }
    labels
}

/// True when the two labelings agree up to a bijection of cluster ids,
/// with noise (-1) fixed.
pub fn same_partition(a: &[i64], b: &[i64]) -> bool {
    use std::collections::HashMap;
    if a.len() != b.len() {
        return false;
    }
    let mut ab = HashMap::new();
    let mut ba = HashMap::new();
    a.iter().zip(b).all(|(&x, &y)| {
        if (x < 0) != (y < 0) {
            return false;
        }
        x < 0 || (*ab.entry(x).or_insert(y) == y && *ba.entry(y).or_insert(x) == x)
    })
}

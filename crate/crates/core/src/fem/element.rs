//! Lagrange P1/P2 elements on affine triangles.
//!
//! Local P2 ordering: vertices 0, 1, 2, then edge nodes on (0,1), (1,2), (2,0).

use crate::geom::{orient, Vec2};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Order {
    P1,
    P2,
}

impl Order {
    pub fn from_degree(p: u32) -> Option<Self> {
        match p {
            1 => Some(Order::P1),
            2 => Some(Order::P2),
            _ => None,
        }
    }

    pub fn degree(self) -> u32 {
        match self {
            Order::P1 => 1,
            Order::P2 => 2,
        }
    }

    /// Local basis functions per cell.
    pub fn n_local(self) -> usize {
        match self {
            Order::P1 => 3,
            Order::P2 => 6,
        }
    }

    /// Basis functions per edge.
    pub fn n_edge(self) -> usize {
        match self {
            Order::P1 => 2,
            Order::P2 => 3,
        }
    }
}

/// Local vertex pairs of the three cell edges, matching the P2 edge-node order.
pub const CELL_EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

/// Symmetric 6-point rule, exact for degree 4: barycentric points, weights sum to 1.
pub fn dunavant4<T: Real>() -> [([T; 3], T); 6] {
    let a = T::lit(0.445_948_490_915_965);
    let wa = T::lit(0.223_381_589_678_011);
    let b = T::lit(0.091_576_213_509_771);
    let wb = T::lit(0.109_951_743_655_322);
    let one = T::one();
    let two = T::lit(2.0);
    [
        ([one - two * a, a, a], wa),
        ([a, one - two * a, a], wa),
        ([a, a, one - two * a], wa),
        ([one - two * b, b, b], wb),
        ([b, one - two * b, b], wb),
        ([b, b, one - two * b], wb),
    ]
}

/// Gauss-Legendre points on [0, 1] with weights summing to 1.
pub fn gauss_edge<T: Real>(n: usize) -> Vec<(T, T)> {
    let half = T::lit(0.5);
    match n {
        1 => vec![(half, T::one())],
        2 => {
            let d = T::lit(0.5 / 3f64.sqrt());
            vec![(half - d, half), (half + d, half)]
        }
        3 => {
            let d = T::lit(0.5 * (0.6f64).sqrt());
            let w0 = T::lit(5.0 / 18.0);
            let w1 = T::lit(8.0 / 18.0);
            vec![(half - d, w0), (half, w1), (half + d, w0)]
        }
        _ => panic!("edge rule with {n} points not tabulated"),
    }
}

/// Affine map data of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry<T> {
    pub points: [Vec2<T>; 3],
    pub area: T,
    /// Gradients of the barycentric coordinates.
    pub grad_lambda: [Vec2<T>; 3],
}

impl<T: Real> CellGeometry<T> {
    pub fn new(points: [Vec2<T>; 3]) -> Self {
        let [p0, p1, p2] = points;
        let det = orient(p0, p1, p2);
        let inv = T::one() / det;
        let g = |a: Vec2<T>, b: Vec2<T>| Vec2::new(a.y - b.y, b.x - a.x).scale(inv);
        Self {
            points,
            area: det * T::lit(0.5),
            grad_lambda: [g(p1, p2), g(p2, p0), g(p0, p1)],
        }
    }

    pub fn map(&self, lambda: [T; 3]) -> Vec2<T> {
        self.points[0].scale(lambda[0]) + self.points[1].scale(lambda[1]) + self.points[2].scale(lambda[2])
    }

    /// Basis values at barycentric point `lambda`.
    pub fn values(&self, order: Order, lambda: [T; 3], out: &mut [T]) {
        match order {
            Order::P1 => out[..3].copy_from_slice(&lambda),
            Order::P2 => {
                let two = T::lit(2.0);
                let four = T::lit(4.0);
                for i in 0..3 {
                    out[i] = lambda[i] * (two * lambda[i] - T::one());
                }
                for (e, &(i, j)) in CELL_EDGES.iter().enumerate() {
                    out[3 + e] = four * lambda[i] * lambda[j];
                }
            }
        }
    }

    /// Basis gradients at barycentric point `lambda`.
    pub fn gradients(&self, order: Order, lambda: [T; 3], out: &mut [Vec2<T>]) {
        let gl = &self.grad_lambda;
        match order {
            Order::P1 => out[..3].copy_from_slice(gl),
            Order::P2 => {
                let four = T::lit(4.0);
                for i in 0..3 {
                    out[i] = gl[i].scale(four * lambda[i] - T::one());
                }
                for (e, &(i, j)) in CELL_EDGES.iter().enumerate() {
                    out[3 + e] = (gl[i].scale(lambda[j]) + gl[j].scale(lambda[i])).scale(four);
                }
            }
        }
    }

    /// Local stiffness and mass matrices, row-major `n_local x n_local`.
    pub fn stiffness_mass(&self, order: Order) -> (Vec<T>, Vec<T>) {
        let n = order.n_local();
        let mut k = vec![T::zero(); n * n];
        let mut m = vec![T::zero(); n * n];
        match order {
            Order::P1 => {
                let m_diag = self.area / T::lit(6.0);
                let m_off = self.area / T::lit(12.0);
                for a in 0..3 {
                    for b in 0..3 {
                        k[a * 3 + b] = self.area * self.grad_lambda[a].dot(self.grad_lambda[b]);
                        m[a * 3 + b] = if a == b { m_diag } else { m_off };
                    }
                }
            }
            Order::P2 => {
                let mut phi = [T::zero(); 6];
                let mut grad = [Vec2::zero(); 6];
                for (lambda, w) in dunavant4::<T>() {
                    self.values(order, lambda, &mut phi);
                    self.gradients(order, lambda, &mut grad);
                    let wa = w * self.area;
                    for a in 0..6 {
                        for b in 0..6 {
                            k[a * 6 + b] += wa * grad[a].dot(grad[b]);
                            m[a * 6 + b] += wa * phi[a] * phi[b];
                        }
                    }
                }
            }
        }
        (k, m)
    }
}

/// Edge basis values at parameter `t` in [0, 1] along (a, b); P2 third node is the midpoint.
pub fn edge_values<T: Real>(order: Order, t: T, out: &mut [T]) {
    let s = T::one() - t;
    match order {
        Order::P1 => {
            out[0] = s;
            out[1] = t;
        }
        Order::P2 => {
            let two = T::lit(2.0);
            out[0] = s * (two * s - T::one());
            out[1] = t * (two * t - T::one());
            out[2] = T::lit(4.0) * s * t;
        }
    }
}

/// Exact edge mass matrix for an edge of length `len`, row-major.
pub fn edge_mass<T: Real>(order: Order, len: T) -> Vec<T> {
    match order {
        Order::P1 => {
            let d = len / T::lit(3.0);
            let o = len / T::lit(6.0);
            vec![d, o, o, d]
        }
        Order::P2 => {
            let s = len / T::lit(30.0);
            [4.0, -1.0, 2.0, -1.0, 4.0, 2.0, 2.0, 2.0, 16.0]
                .iter()
                .map(|&v| T::lit(v) * s)
                .collect()
        }
    }
}

/// Exact integrals of the edge basis functions over an edge of length `len`.
pub fn edge_integrals<T: Real>(order: Order, len: T) -> Vec<T> {
    match order {
        Order::P1 => vec![len * T::lit(0.5); 2],
        Order::P2 => vec![len / T::lit(6.0), len / T::lit(6.0), len * T::lit(2.0 / 3.0)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_right() -> CellGeometry<f64> {
        CellGeometry::new([Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)])
    }

    #[test]
    fn p1_reference_stiffness() {
        let (k, _) = unit_right().stiffness_mass(Order::P1);
        let expect = [1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5];
        for (a, b) in k.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn mass_row_sums() {
        let g = CellGeometry::new([Vec2::new(0.3, -0.2), Vec2::new(2.0, 0.1), Vec2::new(0.7, 1.9)]);
        let (_, m) = g.stiffness_mass(Order::P1);
        for a in 0..3 {
            let s: f64 = m[a * 3..a * 3 + 3].iter().sum();
            assert!((s - g.area / 3.0).abs() < 1e-14);
        }
        let (k2, m2) = g.stiffness_mass(Order::P2);
        let total: f64 = m2.iter().sum();
        assert!((total - g.area).abs() < 1e-13);
        // constants are in the kernel of the stiffness
        for a in 0..6 {
            let s: f64 = k2[a * 6..a * 6 + 6].iter().sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn p2_mass_matches_closed_form() {
        let g = unit_right();
        let (_, m) = g.stiffness_mass(Order::P2);
        // vertex-vertex 6/360 * 2A, vertex-own-edge 0, vertex-opposite-edge -4/360 * 2A, edge-edge 32/360 or 16/360 * 2A
        let s = 2.0 * g.area / 360.0;
        assert!((m[0] - 6.0 * s).abs() < 1e-14);
        assert!((m[1] - -1.0 * s).abs() < 1e-14);
        assert!((m[3] - 0.0).abs() < 1e-14);
        assert!((m[4] - -4.0 * s).abs() < 1e-14);
        assert!((m[3 * 6 + 3] - 32.0 * s).abs() < 1e-14);
        assert!((m[3 * 6 + 4] - 16.0 * s).abs() < 1e-14);
    }

    #[test]
    fn edge_rules_integrate_polynomials() {
        for n in 1..=3 {
            let exact_to = 2 * n - 1;
            for p in 0..=exact_to {
                let s: f64 = gauss_edge::<f64>(n).iter().map(|(t, w)| w * t.powi(p as i32)).sum();
                assert!((s - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn edge_mass_consistent_with_quadrature() {
        for order in [Order::P1, Order::P2] {
            let len = 1.7;
            let m = edge_mass(order, len);
            let n = order.n_edge();
            let mut phi = vec![0.0; n];
            let mut q = vec![0.0; n * n];
            for (t, w) in gauss_edge::<f64>(3) {
                edge_values(order, t, &mut phi);
                for a in 0..n {
                    for b in 0..n {
                        q[a * n + b] += w * len * phi[a] * phi[b];
                    }
                }
            }
            for (x, y) in m.iter().zip(&q) {
                assert!((x - y).abs() < 1e-14);
            }
            let ints = edge_integrals(order, len);
            let row_sums: Vec<f64> = (0..n).map(|a| m[a * n..(a + 1) * n].iter().sum()).collect();
            for (x, y) in ints.iter().zip(&row_sums) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn dunavant_exact_to_degree_four() {
        // integral over the reference triangle of l0^a l1^b = a! b! / (a + b + 2)! * 2 * area
        let fact = |n: u32| (1..=n).map(|x| x as f64).product::<f64>();
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                let q: f64 = dunavant4::<f64>()
                    .iter()
                    .map(|(l, w)| w * l[0].powi(a as i32) * l[1].powi(b as i32))
                    .sum();
                let exact = 2.0 * fact(a) * fact(b) / fact(a + b + 2);
                assert!((q - exact).abs() < 1e-12, "a={a} b={b}");
            }
        }
    }
}

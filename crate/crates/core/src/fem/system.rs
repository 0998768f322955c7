//! Constrained block linear systems and their direct solution.

use super::lu::BlockLu;
use super::ordering::nested_dissection;
use super::sparse::{pair_add, pair_norm, pair_sub, Block2, BlockCsr, Pair};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint<T> {
    Free,
    /// Value equals that of the given master DOF.
    Slave(usize),
    /// Prescribed value.
    Fixed(Pair<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraints<T> {
    kinds: Vec<Constraint<T>>,
}

impl<T: Real> Constraints<T> {
    pub fn none(n: usize) -> Self {
        Self {
            kinds: vec![Constraint::Free; n],
        }
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn get(&self, i: usize) -> Constraint<T> {
        self.kinds[i]
    }

    /// Ties each `slave` to its `master`.
    pub fn add_periodic(&mut self, pairs: &[(usize, usize)]) {
        for &(m, s) in pairs {
            if m != s {
                self.kinds[s] = Constraint::Slave(m);
            }
        }
    }

    pub fn fix(&mut self, dof: usize, value: Pair<T>) {
        self.kinds[dof] = Constraint::Fixed(value);
    }

    /// Follows slave chains to the final master, or the fixed value.
    fn resolve(&self, mut i: usize) -> Result<Constraint<T>> {
        let start = i;
        for _ in 0..=self.kinds.len() {
            match self.kinds[i] {
                Constraint::Free => {
                    return Ok(if i == start {
                        Constraint::Free
                    } else {
                        Constraint::Slave(i)
                    })
                }
                Constraint::Fixed(v) => return Ok(Constraint::Fixed(v)),
                Constraint::Slave(m) => i = m,
            }
        }
        Err(Error::Pairing(format!("cyclic master/slave chain through dof {start}")))
    }
}

/// Block matrix, right-hand side and constraints over full DOF numbering.
#[derive(Debug, Clone)]
pub struct SesquilinearSystem<T> {
    pub matrix: BlockCsr<T>,
    pub rhs: Vec<Pair<T>>,
    pub constraints: Constraints<T>,
}

impl<T: Real> SesquilinearSystem<T> {
    pub fn new(matrix: BlockCsr<T>, rhs: Vec<Pair<T>>) -> Self {
        let n = matrix.n();
        Self {
            matrix,
            rhs,
            constraints: Constraints::none(n),
        }
    }

    /// Eliminates constraints, factorizes, and solves.
    pub fn solve(&self, coords: &[Vec2<T>]) -> Result<Vec<Pair<T>>> {
        PreparedSystem::new(&self.matrix, &self.constraints, coords)?.solve(&self.rhs)
    }
}

/// Factorized reduced system, reusable for many right-hand sides.
#[derive(Debug, Clone)]
pub struct PreparedSystem<T> {
    full: BlockCsr<T>,
    /// Reduced index of each full DOF (`None` when fixed).
    map: Vec<Option<usize>>,
    fixed: Vec<Option<Pair<T>>>,
    /// A representative full DOF for each reduced unknown.
    owner: Vec<usize>,
    reduced: BlockCsr<T>,
    lu: BlockLu<T>,
    tolerance: T,
}

impl<T: Real> PreparedSystem<T> {
    pub fn new(matrix: &BlockCsr<T>, constraints: &Constraints<T>, coords: &[Vec2<T>]) -> Result<Self> {
        let n = matrix.n();
        if constraints.len() != n || coords.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {n} nodes, constraints {}, coordinates {}",
                constraints.len(),
                coords.len()
            )));
        }
        let mut map = vec![None; n];
        let mut fixed = vec![None; n];
        let mut owner = Vec::new();
        for i in 0..n {
            if let Constraint::Free = constraints.resolve(i)? {
                map[i] = Some(owner.len());
                owner.push(i);
            }
        }
        for i in 0..n {
            match constraints.resolve(i)? {
                Constraint::Free => {}
                Constraint::Slave(m) => map[i] = map[m],
                Constraint::Fixed(v) => fixed[i] = Some(v),
            }
        }
        let nr = owner.len();
        let mut rows: Vec<Vec<usize>> = (0..nr).map(|i| vec![i]).collect();
        for i in 0..n {
            let Some(ri) = map[i] else { continue };
            for &j in matrix.row(i).0 {
                if let Some(rj) = map[j] {
                    rows[ri].push(rj);
                    rows[rj].push(ri);
                }
            }
        }
        let mut reduced = BlockCsr::from_rows(rows);
        for i in 0..n {
            let Some(ri) = map[i] else { continue };
            let (cols, vals) = matrix.row(i);
            for (&j, &b) in cols.iter().zip(vals) {
                if let Some(rj) = map[j] {
                    reduced.add(ri, rj, b);
                }
            }
        }
        let adj: Vec<Vec<usize>> = (0..nr).map(|i| reduced.row(i).0.to_vec()).collect();
        let rcoords: Vec<Vec2<T>> = owner.iter().map(|&i| coords[i]).collect();
        let perm = nested_dissection(&rcoords, &adj);
        let lu = BlockLu::factor(&reduced, perm).map_err(|e| match e {
            Error::SingularMatrix { dof } => Error::SingularMatrix { dof: owner[dof] },
            other => other,
        })?;
        Ok(Self {
            full: matrix.clone(),
            map,
            fixed,
            owner,
            reduced,
            lu,
            tolerance: T::lit(1e-10).max(T::epsilon() * T::lit(1e3)),
        })
    }

    pub fn n_full(&self) -> usize {
        self.map.len()
    }

    pub fn n_reduced(&self) -> usize {
        self.owner.len()
    }

    pub fn reduced_matrix(&self) -> &BlockCsr<T> {
        &self.reduced
    }

    pub fn full_matrix(&self) -> &BlockCsr<T> {
        &self.full
    }

    /// Relative residual target for iterative refinement.
    pub fn tolerance(&self) -> T {
        self.tolerance
    }

    pub fn with_tolerance(mut self, tol: T) -> Self {
        self.tolerance = tol;
        self
    }

    fn fixed_vector(&self, conj: bool) -> Option<Vec<Pair<T>>> {
        if self.fixed.iter().all(Option::is_none) {
            return None;
        }
        Some(
            self.fixed
                .iter()
                .map(|f| match f {
                    Some(v) if conj => [v[0], -v[1]],
                    Some(v) => *v,
                    None => [T::zero(); 2],
                })
                .collect(),
        )
    }

    fn reduce_rhs(&self, rhs: &[Pair<T>], conj: bool) -> Vec<Pair<T>> {
        let mut lifted = rhs.to_vec();
        if let Some(xf) = self.fixed_vector(conj) {
            // conj(A) x = S A S x with S = diag(1, -1) per node
            let ax = self.full.matvec(&xf);
            for (l, v) in lifted.iter_mut().zip(ax) {
                let v = if conj { [v[0], -v[1]] } else { v };
                *l = pair_sub(*l, v);
            }
        }
        let mut r = vec![[T::zero(); 2]; self.n_reduced()];
        for (i, l) in lifted.iter().enumerate() {
            if let Some(ri) = self.map[i] {
                r[ri] = pair_add(r[ri], *l);
            }
        }
        r
    }

    fn expand(&self, x: &[Pair<T>]) -> Vec<Pair<T>> {
        (0..self.n_full())
            .map(|i| match (self.map[i], self.fixed[i]) {
                (Some(ri), _) => x[ri],
                (None, Some(v)) => v,
                (None, None) => unreachable!("dof neither mapped nor fixed"),
            })
            .collect()
    }

    fn refine(&self, b: &[Pair<T>]) -> Result<Vec<Pair<T>>> {
        let bn = pair_norm(b);
        if bn == T::zero() {
            return Ok(vec![[T::zero(); 2]; b.len()]);
        }
        let mut x = self.lu.solve(b);
        let mut res = T::infinity();
        for _ in 0..=3 {
            let ax = self.reduced.matvec(&x);
            let r: Vec<Pair<T>> = b.iter().zip(&ax).map(|(p, q)| pair_sub(*p, *q)).collect();
            res = pair_norm(&r) / bn;
            if res <= self.tolerance {
                return Ok(x);
            }
            let dx = self.lu.solve(&r);
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi = pair_add(*xi, d);
            }
        }
        Err(Error::InaccurateSolve {
            residual: res.to_f64_lossy(),
            tolerance: self.tolerance.to_f64_lossy(),
        })
    }

    /// Solves `A x = rhs` subject to the constraints.
    pub fn solve(&self, rhs: &[Pair<T>]) -> Result<Vec<Pair<T>>> {
        self.check_len(rhs)?;
        let b = self.reduce_rhs(rhs, false);
        let x = self.refine(&b)?;
        Ok(self.expand(&x))
    }

    /// Solves `conj(A) x = rhs`, reusing the factorization of `A`.
    pub fn solve_conj(&self, rhs: &[Pair<T>]) -> Result<Vec<Pair<T>>> {
        self.check_len(rhs)?;
        let b: Vec<Pair<T>> = self.reduce_rhs(rhs, true).iter().map(|p| [p[0], -p[1]]).collect();
        let y = self.refine(&b)?;
        let x: Vec<Pair<T>> = y.iter().map(|p| [p[0], -p[1]]).collect();
        Ok(self.expand(&x))
    }

    fn check_len(&self, rhs: &[Pair<T>]) -> Result<()> {
        if rhs.len() != self.n_full() {
            return Err(Error::DimensionMismatch(format!(
                "rhs has {} nodes, system has {}",
                rhs.len(),
                self.n_full()
            )));
        }
        Ok(())
    }
}

/// Scalar helper: `Block2::scalar` entries for real-valued systems.
pub fn real_block<T: Real>(v: T) -> Block2<T> {
    Block2::scalar(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_coords(n: usize) -> Vec<Vec2<f64>> {
        (0..n).map(|i| Vec2::new(i as f64, 0.0)).collect()
    }

    #[test]
    fn identity_solve() {
        let sys = SesquilinearSystem::new(
            BlockCsr::identity(3),
            vec![[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
        );
        let x = sys.solve(&line_coords(3)).unwrap();
        assert_eq!(x, vec![[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]);
    }

    /// Two-cell P1 Poisson strip on [0, 2] with a penalty `1e8 u(0)^2`:
    /// stiffness [[1,-1,0],[-1,2,-1],[0,-1,1]], load (0, 0, 1) => u = (0, 1, 2) up to the penalty.
    #[test]
    fn penalized_poisson_strip() {
        let mut t = Vec::new();
        for c in 0..2 {
            let (a, b) = (c, c + 1);
            t.push((a, a, Block2::scalar(1.0)));
            t.push((b, b, Block2::scalar(1.0)));
            t.push((a, b, Block2::scalar(-1.0)));
            t.push((b, a, Block2::scalar(-1.0)));
        }
        t.push((0, 0, Block2::scalar(1e8)));
        let sys = SesquilinearSystem::new(
            BlockCsr::from_triplets(3, &t),
            vec![[0.0; 2], [0.0; 2], [1.0, 0.0]],
        );
        let x = sys.solve(&line_coords(3)).unwrap();
        // hand elimination: u0 = 1e-8, u1 = u0 + 1, u2 = u1 + 1
        assert!((x[0][0] - 1e-8).abs() < 1e-15);
        assert!((x[1][0] - (1.0 + 1e-8)).abs() < 1e-12);
        assert!((x[2][0] - (2.0 + 1e-8)).abs() < 1e-12);
    }

    fn path_matrix(n: usize) -> BlockCsr<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, Block2([3.0, -0.4, 0.4, 3.0])));
            if i + 1 < n {
                t.push((i, i + 1, Block2::scalar(-1.0)));
                t.push((i + 1, i, Block2::scalar(-1.0)));
            }
        }
        BlockCsr::from_triplets(n, &t)
    }

    #[test]
    fn periodic_pair_expands_equal() {
        let a = path_matrix(6);
        let rhs: Vec<Pair<f64>> = (0..6).map(|i| [i as f64, 1.0]).collect();
        let mut c = Constraints::none(6);
        c.add_periodic(&[(0, 5)]);
        let p = PreparedSystem::new(&a, &c, &line_coords(6)).unwrap();
        assert_eq!(p.n_reduced(), 5);
        let x = p.solve(&rhs).unwrap();
        assert_eq!(x[0], x[5]);
        let empty = PreparedSystem::new(&a, &Constraints::none(6), &line_coords(6)).unwrap();
        assert_eq!(empty.n_reduced(), 6);
    }

    #[test]
    fn fixed_values_and_conjugate_solve() {
        let a = path_matrix(5);
        let mut c = Constraints::none(5);
        c.fix(0, [0.5, -0.25]);
        let p = PreparedSystem::new(&a, &c, &line_coords(5)).unwrap();
        let rhs: Vec<Pair<f64>> = (0..5).map(|i| [1.0, i as f64]).collect();
        let x = p.solve(&rhs).unwrap();
        assert_eq!(x[0], [0.5, -0.25]);
        let ax = a.matvec(&x);
        for i in 1..5 {
            assert!((ax[i][0] - rhs[i][0]).abs() < 1e-12 && (ax[i][1] - rhs[i][1]).abs() < 1e-12);
        }
        let xc = p.solve_conj(&rhs).unwrap();
        assert_eq!(xc[0], [0.5, -0.25]);
        let ac = a.map_values(|b| b.conj()).matvec(&xc);
        for i in 1..5 {
            assert!((ac[i][0] - rhs[i][0]).abs() < 1e-12 && (ac[i][1] - rhs[i][1]).abs() < 1e-12);
        }
    }
}

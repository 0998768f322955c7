//! Sparse matrices of real 2x2 blocks.
//!
//! A complex number `a + ib` is stored as the block `[[a, -b], [b, a]]`
//! acting on `(re, im)`; real vector problems with two components per node
//! use general blocks.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex;

use crate::scalar::Real;

/// Real 2-vector attached to one node: `(re, im)` or `(x, y)`.
pub type Pair<T> = [T; 2];

/// Row-major 2x2 block `[[m[0], m[1]], [m[2], m[3]]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Block2<T>(pub [T; 4]);

impl<T: Real> Block2<T> {
    #[inline]
    pub fn zero() -> Self {
        Self([T::zero(); 4])
    }

    #[inline]
    pub fn identity() -> Self {
        Self::scalar(T::one())
    }

    #[inline]
    pub fn scalar(a: T) -> Self {
        Self([a, T::zero(), T::zero(), a])
    }

    #[inline]
    pub fn complex(z: Complex<T>) -> Self {
        Self([z.re, -z.im, z.im, z.re])
    }

    #[inline]
    pub fn det(self) -> T {
        let m = self.0;
        m[0] * m[3] - m[1] * m[2]
    }

    #[inline]
    pub fn inverse(self) -> Self {
        let m = self.0;
        let d = T::one() / self.det();
        Self([m[3] * d, -m[1] * d, -m[2] * d, m[0] * d])
    }

    #[inline]
    pub fn apply(self, v: Pair<T>) -> Pair<T> {
        let m = self.0;
        [m[0] * v[0] + m[1] * v[1], m[2] * v[0] + m[3] * v[1]]
    }

    #[inline]
    pub fn transpose(self) -> Self {
        let m = self.0;
        Self([m[0], m[2], m[1], m[3]])
    }

    /// Conjugation `S M S` with `S = diag(1, -1)`.
    #[inline]
    pub fn conj(self) -> Self {
        let m = self.0;
        Self([m[0], -m[1], -m[2], m[3]])
    }

    #[inline]
    pub fn scale(self, s: T) -> Self {
        let m = self.0;
        Self([m[0] * s, m[1] * s, m[2] * s, m[3] * s])
    }

    #[inline]
    pub fn max_abs(self) -> T {
        self.0.iter().fold(T::zero(), |a, &x| a.max(x.abs()))
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl<T: Real> Add for Block2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        let (a, b) = (self.0, o.0);
        Self([a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]])
    }
}

impl<T: Real> Sub for Block2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        let (a, b) = (self.0, o.0);
        Self([a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]])
    }
}

impl<T: Real> Neg for Block2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul for Block2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let (a, b) = (self.0, o.0);
        Self([
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ])
    }
}

impl<T: Real> AddAssign for Block2<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> SubAssign for Block2<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

#[inline]
pub fn pair_add<T: Real>(a: Pair<T>, b: Pair<T>) -> Pair<T> {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn pair_sub<T: Real>(a: Pair<T>, b: Pair<T>) -> Pair<T> {
    [a[0] - b[0], a[1] - b[1]]
}

/// Euclidean norm of a block vector.
pub fn pair_norm<T: Real>(v: &[Pair<T>]) -> T {
    v.iter().map(|p| p[0] * p[0] + p[1] * p[1]).sum::<T>().sqrt()
}

/// Square block matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCsr<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<Block2<T>>,
}

impl<T: Real> BlockCsr<T> {
    /// Empty-valued matrix with the union pattern of the given node groups
    /// (every pair of nodes within a group is coupled) plus the diagonal.
    pub fn from_groups<'a>(n: usize, groups: impl Iterator<Item = &'a [usize]>) -> Self {
        let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for g in groups {
            for &i in g {
                rows[i].extend_from_slice(g);
            }
        }
        Self::from_rows(rows)
    }

    /// Pattern from per-row column lists (duplicates allowed).
    pub fn from_rows(mut rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        Self {
            n,
            row_ptr,
            col_idx,
            vals: vec![Block2::zero(); nnz],
        }
    }

    /// Builds from triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, Block2<T>)]) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            rows[i].push(j);
        }
        let mut m = Self::from_rows(rows);
        for &(i, j, b) in triplets {
            m.add(i, j, b);
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::from_rows((0..n).map(|i| vec![i]).collect());
        for v in &mut m.vals {
            *v = Block2::identity();
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[Block2<T>]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.vals[r])
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let cols = &self.col_idx[lo..self.row_ptr[i + 1]];
        cols.binary_search(&j).ok().map(|k| lo + k)
    }

    pub fn get(&self, i: usize, j: usize) -> Block2<T> {
        self.position(i, j).map_or(Block2::zero(), |k| self.vals[k])
    }

    /// Adds into an existing pattern entry.
    ///
    /// # Panics
    /// If `(i, j)` is outside the pattern.
    pub fn add(&mut self, i: usize, j: usize, b: Block2<T>) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.vals[k] += b;
    }

    /// Adds a dense local matrix `local[a * n + b]` times `scale` at `dofs x dofs`.
    pub fn add_local(&mut self, dofs: &[usize], local: &[T], scale: Block2<T>) {
        let n = dofs.len();
        for (a, &i) in dofs.iter().enumerate() {
            for (b, &j) in dofs.iter().enumerate() {
                let v = local[a * n + b];
                if v != T::zero() {
                    self.add(i, j, scale.scale(v));
                }
            }
        }
    }

    pub fn matvec(&self, x: &[Pair<T>]) -> Vec<Pair<T>> {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).fold([T::zero(); 2], |acc, (&j, b)| {
                    pair_add(acc, b.apply(x[j]))
                })
            })
            .collect()
    }

    pub fn map_values(&self, f: impl Fn(Block2<T>) -> Block2<T>) -> Self {
        Self {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            vals: self.vals.iter().map(|&b| f(b)).collect(),
        }
    }

    /// Entry-wise sum of two matrices with identical pattern.
    pub fn axpy_same_pattern(&mut self, s: T, other: &Self) {
        assert_eq!(self.col_idx, other.col_idx, "patterns differ");
        for (a, b) in self.vals.iter_mut().zip(&other.vals) {
            *a += b.scale(s);
        }
    }

    pub fn is_pattern_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).0.iter().all(|&j| self.position(j, i).is_some()))
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for &j in self.row(i).0 {
                rows[j].push(i);
            }
        }
        let mut t = Self::from_rows(rows);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &b) in cols.iter().zip(vals) {
                t.add(j, i, b.transpose());
            }
        }
        t
    }

    /// Dense copy, `2n x 2n`, for tests.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); 2 * self.n]; 2 * self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, b) in cols.iter().zip(vals) {
                d[2 * i][2 * j] = b.0[0];
                d[2 * i][2 * j + 1] = b.0[1];
                d[2 * i + 1][2 * j] = b.0[2];
                d[2 * i + 1][2 * j + 1] = b.0[3];
            }
        }
        d
    }
}

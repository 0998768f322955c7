//! Sparse block LU factorization without pivoting.
//!
//! The matrix must have a symmetric nonzero pattern (values may be
//! unsymmetric). After a fill-reducing permutation the factors are computed
//! row by row ("up-looking"): row `k` of `L` and column `k` of `U` come from
//! two sparse triangular solves whose patterns are the elimination-tree reach
//! of row `k`.

use super::ordering::invert;
use super::sparse::{pair_sub, Block2, BlockCsr, Pair};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct BlockLu<T> {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    inv: Vec<usize>,
    /// Strictly lower part of `L` by column: `(row, L(row, col))`.
    lcol: Vec<Vec<(u32, Block2<T>)>>,
    /// Strictly upper part of `U` by row: `(col, U(row, col))`.
    urow: Vec<Vec<(u32, Block2<T>)>>,
    uinv: Vec<Block2<T>>,
}

fn etree(n: usize, rows: &[Vec<(usize, usize)>]) -> Vec<usize> {
    const NONE: usize = usize::MAX;
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for &(i, _) in &rows[k] {
            let mut i = i;
            if i >= k {
                continue;
            }
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

impl<T: Real> BlockLu<T> {
    /// Factorizes `a` under the symmetric permutation `perm` (`perm[new] = old`).
    ///
    /// A pivot block whose determinant is negligible relative to the
    /// magnitude of its original row is reported as singular, with the
    /// original (unpermuted) index.
    pub fn factor(a: &BlockCsr<T>, perm: Vec<usize>) -> Result<Self> {
        let n = a.n();
        assert_eq!(perm.len(), n, "permutation length");
        let inv = invert(&perm);

        // permuted rows: (new col, original entry index into row) with values looked up below
        let mut rows: Vec<Vec<(usize, usize)>> = Vec::with_capacity(n);
        for k in 0..n {
            let (cols, _) = a.row(perm[k]);
            let mut r: Vec<(usize, usize)> = cols.iter().enumerate().map(|(p, &j)| (inv[j], p)).collect();
            r.sort_unstable();
            rows.push(r);
        }
        let parent = etree(n, &rows);
        let row_scale: Vec<T> = (0..n)
            .map(|k| {
                let (_, vals) = a.row(perm[k]);
                vals.iter().fold(T::zero(), |m, b| m.max(b.max_abs()))
            })
            .collect();
        let tiny = T::epsilon() * T::lit(100.0);

        let mut lcol: Vec<Vec<(u32, Block2<T>)>> = vec![Vec::new(); n];
        let mut urow: Vec<Vec<(u32, Block2<T>)>> = vec![Vec::new(); n];
        let mut uinv = Vec::with_capacity(n);
        let mut xc = vec![Block2::zero(); n];
        let mut xr = vec![Block2::zero(); n];
        let mut mark = vec![usize::MAX; n];
        let mut paths: Vec<usize> = Vec::new();
        let mut starts: Vec<usize> = Vec::new();
        let mut reach: Vec<usize> = Vec::new();

        for k in 0..n {
            let (_, vals) = a.row(perm[k]);
            let mut d = Block2::zero();
            mark[k] = k;
            paths.clear();
            starts.clear();
            for &(j, p) in &rows[k] {
                if j == k {
                    d = vals[p];
                    continue;
                }
                if j > k {
                    continue;
                }
                xr[j] = vals[p];
                // A(j, k) = entry of original row perm[j] at column perm[k]
                xc[j] = a.get(perm[j], perm[k]);
                starts.push(paths.len());
                let mut i = j;
                while mark[i] != k {
                    mark[i] = k;
                    paths.push(i);
                    i = parent[i];
                }
            }
            // later paths end on earlier ones, so they go first
            reach.clear();
            let mut end = paths.len();
            for &s in starts.iter().rev() {
                reach.extend_from_slice(&paths[s..end]);
                end = s;
            }

            for &j in &reach {
                let ujk = xc[j];
                let lkj = xr[j] * uinv[j];
                for &(i, lij) in &lcol[j] {
                    xc[i as usize] -= lij * ujk;
                }
                for &(i, uji) in &urow[j] {
                    xr[i as usize] -= lkj * uji;
                }
                d -= lkj * ujk;
                lcol[j].push((k as u32, lkj));
                urow[j].push((k as u32, ujk));
                xc[j] = Block2::zero();
                xr[j] = Block2::zero();
            }
            let s = row_scale[k] * tiny;
            if !(d.det().abs() > s * s) || !d.is_finite() {
                return Err(Error::SingularMatrix { dof: perm[k] });
            }
            uinv.push(d.inverse());
        }

        Ok(Self {
            n,
            perm,
            inv,
            lcol,
            urow,
            uinv,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored off-diagonal blocks of `L` and `U`.
    pub fn fill(&self) -> usize {
        self.lcol.iter().map(Vec::len).sum::<usize>() + self.urow.iter().map(Vec::len).sum::<usize>()
    }

    pub fn solve(&self, b: &[Pair<T>]) -> Vec<Pair<T>> {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<Pair<T>> = self.perm.iter().map(|&o| b[o]).collect();
        for j in 0..self.n {
            let yj = y[j];
            for &(i, l) in &self.lcol[j] {
                let i = i as usize;
                y[i] = pair_sub(y[i], l.apply(yj));
            }
        }
        for i in (0..self.n).rev() {
            let mut s = y[i];
            for &(j, u) in &self.urow[i] {
                s = pair_sub(s, u.apply(y[j as usize]));
            }
            y[i] = self.uinv[i].apply(s);
        }
        (0..self.n).map(|o| y[self.inv[o]]).collect()
    }
}

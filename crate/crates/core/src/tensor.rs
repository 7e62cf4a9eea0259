//! Kronecker, Khatri-Rao and Schur-Hadamard products, plus the
//! vec-permutation matrix.
//!
//! The cumulant system is assembled row-wise from Hadamard products (see
//! [`crate::system`]); the full Kronecker forms here are only meant for
//! small matrices and for cross-checking that construction.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::matrix::{checked_len, DenseMatrix};
use crate::{Error, Result};

/// Highest cumulant order handled anywhere in the crate.
pub const MAX_ORDER: usize = 4;

/// Sorted tuple of link indices identifying one cumulant entry.
///
/// Ordering groups tuples by order first, then lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IndexTuple {
    order: u8,
    idx: [u32; MAX_ORDER],
}

impl IndexTuple {
    /// Canonicalizes `indices` by sorting. Repeated indices are kept.
    pub fn new(indices: &[usize]) -> Result<Self> {
        if indices.is_empty() || indices.len() > MAX_ORDER {
            return Err(Error::InvalidArgument(
                "tuple order must be in 1..=4".into(),
            ));
        }
        let mut idx = [0u32; MAX_ORDER];
        for (slot, &i) in idx.iter_mut().zip(indices) {
            *slot = u32::try_from(i)
                .map_err(|_| Error::InvalidArgument("link index out of range".into()))?;
        }
        let order = indices.len();
        idx[..order].sort_unstable();
        Ok(IndexTuple {
            order: order as u8,
            idx,
        })
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn indices(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.idx[..self.order()].iter().map(|&i| i as usize)
    }

    pub fn max_index(&self) -> usize {
        self.idx[self.order() - 1] as usize
    }

    /// True when no index repeats.
    pub fn is_distinct(&self) -> bool {
        self.idx[..self.order()].windows(2).all(|w| w[0] != w[1])
    }
}

impl Ord for IndexTuple {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order
            .cmp(&other.order)
            .then_with(|| self.idx[..self.order()].cmp(&other.idx[..other.order()]))
    }
}

impl PartialOrd for IndexTuple {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for IndexTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, i) in self.indices().enumerate() {
            if n > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

/// `A ⊗ B`: block `(i, j)` is `a_ij · B`.
pub fn kronecker(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let rows = a.rows().checked_mul(b.rows()).ok_or(Error::SizeLimit {
        requested: usize::MAX,
        limit: crate::matrix::MAX_ENTRIES,
    })?;
    let cols = a.cols().checked_mul(b.cols()).ok_or(Error::SizeLimit {
        requested: usize::MAX,
        limit: crate::matrix::MAX_ENTRIES,
    })?;
    checked_len(rows, cols)?;
    let mut out = DenseMatrix::zeros(rows, cols);
    for ia in 0..a.rows() {
        for ja in 0..a.cols() {
            let s = a[(ia, ja)];
            if s == 0.0 {
                continue;
            }
            for ib in 0..b.rows() {
                for jb in 0..b.cols() {
                    out[(ia * b.rows() + ib, ja * b.cols() + jb)] = s * b[(ib, jb)];
                }
            }
        }
    }
    Ok(out)
}

/// Column-wise Kronecker product: column `j` is `a_j ⊗ b_j`.
pub fn khatri_rao(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            found: b.cols(),
        });
    }
    let rows = a.rows().saturating_mul(b.rows());
    checked_len(rows, a.cols())?;
    let mut out = DenseMatrix::zeros(rows, a.cols());
    for ia in 0..a.rows() {
        for ib in 0..b.rows() {
            let r = ia * b.rows() + ib;
            for j in 0..a.cols() {
                out[(r, j)] = a[(ia, j)] * b[(ib, j)];
            }
        }
    }
    Ok(out)
}

/// Elementwise product of all `rows`.
pub fn hadamard_row<R: AsRef<[f64]>>(rows: &[R]) -> Result<Vec<f64>> {
    let Some(first) = rows.first() else {
        return Err(Error::InvalidArgument("hadamard product of no rows".into()));
    };
    let mut out = first.as_ref().to_vec();
    for r in &rows[1..] {
        let r = r.as_ref();
        if r.len() != out.len() {
            return Err(Error::DimensionMismatch {
                expected: out.len(),
                found: r.len(),
            });
        }
        for (o, &v) in out.iter_mut().zip(r) {
            *o *= v;
        }
    }
    Ok(out)
}

/// `L² × L²` permutation `U = Σ_ij (e_i e_jᵀ) ⊗ (e_j e_iᵀ)`, which maps
/// `vec(R)` to `vec(Rᵀ)` for column-major `vec`.
pub fn vec_permutation(l: usize) -> Result<DenseMatrix> {
    const LIMIT: usize = 10_000;
    let n = l
        .checked_mul(l)
        .filter(|&n| n <= LIMIT)
        .ok_or(Error::SizeLimit {
            requested: l.saturating_mul(l),
            limit: LIMIT,
        })?;
    if l == 0 {
        return Err(Error::InvalidArgument(
            "vec permutation needs L >= 1".into(),
        ));
    }
    let mut u = DenseMatrix::zeros(n, n);
    for i in 0..l {
        for j in 0..l {
            u[(i * l + j, j * l + i)] = 1.0;
        }
    }
    Ok(u)
}

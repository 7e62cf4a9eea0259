//! The stacked cumulant-matching system `𝒜ᵣ λ = ηᵣ`.
//!
//! Row `(i₁ < … < i_k)` of the order-`k` block is the Schur-Hadamard
//! product `α_{i₁} ∘ … ∘ α_{i_k}` of routing-matrix rows. Tuples with a
//! repeated index are never generated: for a binary matrix they collapse
//! onto a lower-order row. Null rows and duplicate patterns are then
//! dropped, keeping the lowest order (and, within an order, the first
//! tuple), because low-order statistics are the cheapest to estimate.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::cumulants::CumulantVector;
use crate::linalg::singular_values;
use crate::matrix::DenseMatrix;
use crate::tensor::{IndexTuple, MAX_ORDER};
use crate::topology::RoutingMatrix;
use crate::{Error, Result};

/// Relative singular-value cutoff for numerical rank.
pub const RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRow {
    pub tuple: IndexTuple,
    pub row: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowMeta {
    pub tuple: IndexTuple,
    pub weight: f64,
}

impl RowMeta {
    pub fn order(&self) -> usize {
        self.tuple.order()
    }
}

/// Weights `(ε₂, ε₃, ε₄)` for rows of order 2, 3 and 4; order 1 is
/// always weighted by one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epsilons(pub [f64; 3]);

impl Epsilons {
    pub const UNIT: Epsilons = Epsilons([1.0; 3]);

    pub fn new(eps2: f64, eps3: f64, eps4: f64) -> Result<Self> {
        for e in [eps2, eps3, eps4] {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "epsilon weights must lie in (0, 1], got {e}"
                )));
            }
        }
        Ok(Epsilons([eps2, eps3, eps4]))
    }

    pub fn for_order(&self, order: usize) -> f64 {
        if order <= 1 {
            1.0
        } else {
            self.0[order - 2]
        }
    }
}

impl Default for Epsilons {
    fn default() -> Self {
        Epsilons::UNIT
    }
}

/// Deduplicated, optionally ε-weighted cumulant-matching matrix.
///
/// Rows are grouped by ascending order, lexicographic within an order, and
/// `row_meta[i]` describes row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    links: usize,
    r: usize,
    epsilons: Epsilons,
    binary: DenseMatrix,
    matrix: DenseMatrix,
    row_meta: Vec<RowMeta>,
}

impl ReducedSystem {
    /// `reduce(enumerate_rows(a, r))`
    pub fn build(a: &RoutingMatrix, r: usize) -> Result<Self> {
        reduce(a.links(), r, enumerate_rows(a, r)?)
    }

    pub fn links(&self) -> usize {
        self.links
    }

    pub fn paths(&self) -> usize {
        self.matrix.cols()
    }

    pub fn order(&self) -> usize {
        self.r
    }

    pub fn epsilons(&self) -> Epsilons {
        self.epsilons
    }

    /// The weighted matrix `𝒜_{r,ε}`.
    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    /// The unweighted binary matrix `𝒜ᵣ`.
    pub fn binary(&self) -> &DenseMatrix {
        &self.binary
    }

    pub fn row_meta(&self) -> &[RowMeta] {
        &self.row_meta
    }

    pub fn rows(&self) -> usize {
        self.row_meta.len()
    }

    pub fn tuples(&self) -> Vec<IndexTuple> {
        self.row_meta.iter().map(|m| m.tuple).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.row_meta.iter().map(|m| m.weight).collect()
    }

    /// Number of surviving rows per order `1..=4`.
    pub fn rows_per_order(&self) -> [usize; MAX_ORDER] {
        let mut out = [0; MAX_ORDER];
        for m in &self.row_meta {
            out[m.order() - 1] += 1;
        }
        out
    }

    /// Reweights rows of order `k` by `ε_k`, starting from the binary rows.
    pub fn apply_epsilon(&self, eps: Epsilons) -> Result<Self> {
        Epsilons::new(eps.0[0], eps.0[1], eps.0[2])?;
        let mut matrix = self.binary.clone();
        let mut row_meta = self.row_meta.clone();
        for (i, meta) in row_meta.iter_mut().enumerate() {
            meta.weight = eps.for_order(meta.order());
            if meta.weight != 1.0 {
                for v in matrix.row_mut(i) {
                    *v *= meta.weight;
                }
            }
        }
        Ok(ReducedSystem {
            matrix,
            row_meta,
            epsilons: eps,
            ..self.clone()
        })
    }

    /// Right-hand side values checked against the row tuples and scaled by
    /// the row weights.
    pub fn weighted_rhs(&self, rhs: &CumulantVector) -> Result<Vec<f64>> {
        if rhs.len() != self.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.rows(),
                found: rhs.len(),
            });
        }
        self.row_meta
            .iter()
            .zip(&rhs.entries)
            .map(|(meta, (tuple, value))| {
                if *tuple != meta.tuple {
                    return Err(Error::InvalidArgument(alloc::format!(
                        "right-hand side tuple ({tuple}) does not match row tuple ({})",
                        meta.tuple
                    )));
                }
                Ok(value * meta.weight)
            })
            .collect()
    }
}

fn next_combination(c: &mut [usize], m: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < m - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// All Hadamard products of `k ≤ r` distinct routing rows, in order then
/// lexicographic tuple order.
pub fn enumerate_rows(a: &RoutingMatrix, r: usize) -> Result<Vec<CandidateRow>> {
    if r == 0 || r > MAX_ORDER {
        return Err(Error::InvalidArgument(alloc::format!(
            "order r must be in 1..=4, got {r}"
        )));
    }
    let m = a.links();
    let mat = a.matrix();
    let mut out = Vec::new();
    for k in 1..=r.min(m) {
        let mut comb: Vec<usize> = (0..k).collect();
        loop {
            let mut row = mat.row(comb[0]).to_vec();
            for &i in &comb[1..] {
                for (v, &x) in row.iter_mut().zip(mat.row(i)) {
                    *v *= x;
                }
            }
            out.push(CandidateRow {
                tuple: IndexTuple::new(&comb)?,
                row,
            });
            if !next_combination(&mut comb, m) {
                break;
            }
        }
    }
    Ok(out)
}

fn pattern(row: &[f64]) -> Vec<u64> {
    let mut words = alloc::vec![0u64; row.len().div_ceil(64)];
    for (j, &v) in row.iter().enumerate() {
        if v != 0.0 {
            words[j / 64] |= 1 << (j % 64);
        }
    }
    words
}

/// Drops null rows and repeated patterns, keeping the first occurrence in
/// (order, tuple) order. The result has unit weights.
pub fn reduce(links: usize, r: usize, mut candidates: Vec<CandidateRow>) -> Result<ReducedSystem> {
    let cols = candidates.first().map_or(0, |c| c.row.len());
    if cols == 0 {
        return Err(Error::InvalidArgument("no candidate rows".into()));
    }
    if let Some(c) = candidates.iter().find(|c| c.row.len() != cols) {
        return Err(Error::DimensionMismatch {
            expected: cols,
            found: c.row.len(),
        });
    }
    candidates.sort_by_key(|c| c.tuple);
    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    let mut row_meta = Vec::new();
    for c in candidates {
        if c.row.iter().all(|&v| v == 0.0) {
            continue;
        }
        if seen.insert(pattern(&c.row)) {
            row_meta.push(RowMeta {
                tuple: c.tuple,
                weight: 1.0,
            });
            rows.push(c.row);
        }
    }
    let binary = DenseMatrix::from_rows(&rows)?;
    Ok(ReducedSystem {
        links,
        r,
        epsilons: Epsilons::UNIT,
        matrix: binary.clone(),
        binary,
        row_meta,
    })
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// `(n̄ᵣ(M), nᵣ(M))`: rows of the unreduced stack `M + M² + … + M^r`, and
/// the maximum number of distinct rows `Σ_{i≤r} C(M, i)`.
pub fn counting(m: usize, r: usize) -> Result<(usize, usize)> {
    if r == 0 || r > MAX_ORDER {
        return Err(Error::InvalidArgument(alloc::format!(
            "order r must be in 1..=4, got {r}"
        )));
    }
    let overflow = || Error::SizeLimit {
        requested: usize::MAX,
        limit: usize::MAX,
    };
    let mut n_bar: usize = 0;
    let mut power: usize = 1;
    let mut n_max: usize = 0;
    for i in 1..=r {
        power = power.checked_mul(m).ok_or_else(overflow)?;
        n_bar = n_bar.checked_add(power).ok_or_else(overflow)?;
        n_max += binomial(m, i).ok_or_else(overflow)?;
    }
    Ok((n_bar, n_max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemDiagnostics {
    pub n_bar: usize,
    pub n_max: usize,
    pub surviving: usize,
    pub rank: usize,
    /// Extreme eigenvalues of `𝒜ᵀ𝒜` for the (weighted) matrix.
    pub eig_min: f64,
    pub eig_max: f64,
}

impl SystemDiagnostics {
    pub fn full_column_rank(&self, columns: usize) -> bool {
        self.rank == columns
    }
}

pub fn diagnostics(s: &ReducedSystem) -> Result<SystemDiagnostics> {
    let (n_bar, n_max) = counting(s.links(), s.order())?;
    let sv = singular_values(s.matrix());
    let max = sv.first().copied().unwrap_or(0.0);
    let rank = if max == 0.0 {
        0
    } else {
        sv.iter().filter(|&&x| x > RANK_TOL * max).count()
    };
    let eig_min = if s.rows() < s.paths() {
        0.0
    } else {
        sv.last().map_or(0.0, |x| x * x)
    };
    Ok(SystemDiagnostics {
        n_bar,
        n_max,
        surviving: s.rows(),
        rank,
        eig_min,
        eig_max: max * max,
    })
}

//! Theoretical Poisson cumulants and unbiased K-statistics of link samples.
//!
//! Statistics are only ever evaluated at requested [`IndexTuple`]s. The
//! empirical path is two-pass: integer power sums give the mean exactly,
//! then centered products are summed per tuple. Both passes can be split
//! over disjoint sample ranges and merged.

use alloc::vec;
use alloc::vec::Vec;

use crate::system::ReducedSystem;
use crate::tensor::IndexTuple;
use crate::topology::RoutingMatrix;
use crate::{Error, Result};

/// `N` samples of `dim` nonnegative integer counts, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleBatch {
    dim: usize,
    data: Vec<u32>,
}

impl SampleBatch {
    pub fn new(dim: usize, data: Vec<u32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "sample dimension must be positive".into(),
            ));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: data.len().div_ceil(dim) * dim,
                found: data.len(),
            });
        }
        Ok(SampleBatch { dim, data })
    }

    pub fn from_rows<R: AsRef<[u32]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(dim, data)
    }

    /// One-dimensional batch.
    pub fn scalar(values: &[u32]) -> Self {
        SampleBatch {
            dim: 1,
            data: values.to_vec(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn sample(&self, n: usize) -> &[u32] {
        &self.data[n * self.dim..(n + 1) * self.dim]
    }

    pub fn samples(&self) -> impl Iterator<Item = &[u32]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.data
    }
}

/// Cumulant values keyed by index tuple, in caller order.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantVector {
    pub entries: Vec<(IndexTuple, f64)>,
}

impl CumulantVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|&(_, v)| v).collect()
    }

    pub fn get(&self, t: &IndexTuple) -> Option<f64> {
        self.entries.iter().find(|(u, _)| u == t).map(|&(_, v)| v)
    }
}

/// Poisson link cumulants: the entry for `(i₁..i_k)` is
/// `Σ_j (∏_t a_{i_t j}) λ_j`, since every cumulant of a Poisson count
/// equals its rate and distinct paths are independent.
pub fn theoretical_cumulants(
    rates: &[f64],
    a: &RoutingMatrix,
    tuples: &[IndexTuple],
) -> Result<CumulantVector> {
    if rates.len() != a.paths() {
        return Err(Error::DimensionMismatch {
            expected: a.paths(),
            found: rates.len(),
        });
    }
    if let Some(index) = rates.iter().position(|&r| !(r >= 0.0)) {
        return Err(Error::NegativeRate { index });
    }
    let m = a.matrix();
    let mut entries = Vec::with_capacity(tuples.len());
    for t in tuples {
        check_tuple(t, m.rows())?;
        let value = (0..m.cols())
            .filter(|&j| t.indices().all(|i| m[(i, j)] != 0.0))
            .map(|j| rates[j])
            .sum();
        entries.push((*t, value));
    }
    Ok(CumulantVector { entries })
}

fn check_tuple(t: &IndexTuple, dim: usize) -> Result<()> {
    if t.max_index() >= dim {
        return Err(Error::InvalidArgument(alloc::format!(
            "tuple ({t}) indexes past dimension {dim}"
        )));
    }
    Ok(())
}

/// Smallest sample count for which the order-`k` K-statistic is defined.
pub fn min_samples(order: usize) -> usize {
    order.max(1)
}

/// First pass: exact integer sums per component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerSums {
    count: usize,
    sums: Vec<u64>,
}

impl PowerSums {
    pub fn new(dim: usize) -> Self {
        PowerSums {
            count: 0,
            sums: vec![0; dim],
        }
    }

    pub fn add_samples<'a, I: IntoIterator<Item = &'a [u32]>>(&mut self, samples: I) {
        for s in samples {
            for (acc, &y) in self.sums.iter_mut().zip(s) {
                *acc += u64::from(y);
            }
            self.count += 1;
        }
    }

    pub fn merge(&mut self, other: &PowerSums) {
        assert_eq!(self.sums.len(), other.sums.len());
        self.count += other.count;
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.sums.iter().map(|&s| s as f64 / n).collect()
    }
}

/// Second pass: centered product sums at the requested tuples, around a
/// fixed mean. Order-4 tuples additionally need the centered pair sums of
/// their two halves, which are tracked internally.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredSums {
    mean: Vec<f64>,
    tuples: Vec<IndexTuple>,
    /// Flattened tuple indices, `MAX_ORDER` slots per tuple.
    flat: Vec<[usize; 4]>,
    sums: Vec<f64>,
    /// Pairs needed by order-4 tuples, and their sums.
    pairs: Vec<(usize, usize)>,
    pair_slots: Vec<[usize; 2]>,
    pair_sums: Vec<f64>,
    count: usize,
    z: Vec<f64>,
}

impl CenteredSums {
    pub fn new(mean: Vec<f64>, tuples: &[IndexTuple]) -> Result<Self> {
        let dim = mean.len();
        let mut flat = Vec::with_capacity(tuples.len());
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for t in tuples {
            check_tuple(t, dim)?;
            let mut f = [0usize; 4];
            for (slot, i) in f.iter_mut().zip(t.indices()) {
                *slot = i;
            }
            flat.push(f);
            if t.order() == 4 {
                pairs.push((f[0], f[1]));
                pairs.push((f[2], f[3]));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let pair_slots = tuples
            .iter()
            .zip(&flat)
            .map(|(t, f)| {
                if t.order() == 4 {
                    let lo = pairs.binary_search(&(f[0], f[1])).unwrap();
                    let hi = pairs.binary_search(&(f[2], f[3])).unwrap();
                    [lo, hi]
                } else {
                    [0, 0]
                }
            })
            .collect();
        Ok(CenteredSums {
            sums: vec![0.0; tuples.len()],
            pair_sums: vec![0.0; pairs.len()],
            tuples: tuples.to_vec(),
            flat,
            pairs,
            pair_slots,
            count: 0,
            z: vec![0.0; dim],
            mean,
        })
    }

    pub fn add_samples<'a, I: IntoIterator<Item = &'a [u32]>>(&mut self, samples: I) {
        for s in samples {
            for ((z, &y), &m) in self.z.iter_mut().zip(s).zip(&self.mean) {
                *z = f64::from(y) - m;
            }
            let z = &self.z;
            for ((acc, t), f) in self.sums.iter_mut().zip(&self.tuples).zip(&self.flat) {
                *acc += match t.order() {
                    1 => z[f[0]],
                    2 => z[f[0]] * z[f[1]],
                    3 => z[f[0]] * z[f[1]] * z[f[2]],
                    _ => z[f[0]] * z[f[1]] * z[f[2]] * z[f[3]],
                };
            }
            for (acc, &(i, j)) in self.pair_sums.iter_mut().zip(&self.pairs) {
                *acc += z[i] * z[j];
            }
            self.count += 1;
        }
    }

    /// Combines sums accumulated over a disjoint sample range.
    pub fn merge(&mut self, other: &CenteredSums) -> Result<()> {
        if self.tuples != other.tuples || self.mean != other.mean {
            return Err(Error::InvalidArgument(
                "cannot merge sums over different tuples".into(),
            ));
        }
        self.count += other.count;
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        for (a, b) in self.pair_sums.iter_mut().zip(&other.pair_sums) {
            *a += b;
        }
        Ok(())
    }

    /// Applies the K-statistic corrections.
    pub fn finish(&self) -> Result<CumulantVector> {
        let count = self.count;
        let max_order = self.tuples.iter().map(IndexTuple::order).max().unwrap_or(1);
        if count < min_samples(max_order) {
            return Err(Error::InsufficientSamples {
                order: max_order,
                needed: min_samples(max_order),
                found: count,
            });
        }
        let n = count as f64;
        let entries = self
            .tuples
            .iter()
            .zip(&self.sums)
            .zip(&self.pair_slots)
            .zip(&self.flat)
            .map(|(((t, &s), slots), f)| {
                let value = match t.order() {
                    1 => self.mean[f[0]],
                    2 => s / (n - 1.0),
                    3 => n * s / ((n - 1.0) * (n - 2.0)),
                    _ => {
                        let m4 = s / n;
                        let m2a = self.pair_sums[slots[0]] / n;
                        let m2b = self.pair_sums[slots[1]] / n;
                        n * n / ((n - 1.0) * (n - 2.0) * (n - 3.0))
                            * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2a * m2b)
                    }
                };
                (*t, value)
            })
            .collect();
        Ok(CumulantVector { entries })
    }
}

/// K-statistics of mixed orders at `tuples`, one pair of passes over `b`.
///
/// Order 4 uses the vectorized form with `μ̃₂(i,j)·μ̃₂(k,l)` taken on the
/// sorted tuple's two halves.
pub fn k_statistics(b: &SampleBatch, tuples: &[IndexTuple]) -> Result<CumulantVector> {
    let max_order = tuples.iter().map(IndexTuple::order).max().unwrap_or(1);
    if b.len() < min_samples(max_order) {
        return Err(Error::InsufficientSamples {
            order: max_order,
            needed: min_samples(max_order),
            found: b.len(),
        });
    }
    let mut first = PowerSums::new(b.dim());
    first.add_samples(b.samples());
    let mut second = CenteredSums::new(first.mean(), tuples)?;
    second.add_samples(b.samples());
    second.finish()
}

fn single_order(b: &SampleBatch, tuples: &[IndexTuple], order: usize) -> Result<CumulantVector> {
    if let Some(t) = tuples.iter().find(|t| t.order() != order) {
        return Err(Error::InvalidArgument(alloc::format!(
            "tuple ({t}) is not of order {order}"
        )));
    }
    if b.len() < min_samples(order) {
        return Err(Error::InsufficientSamples {
            order,
            needed: min_samples(order),
            found: b.len(),
        });
    }
    k_statistics(b, tuples)
}

/// Sample mean of every component.
pub fn empirical_mean(b: &SampleBatch) -> Result<CumulantVector> {
    if b.is_empty() {
        return Err(Error::InsufficientSamples {
            order: 1,
            needed: 1,
            found: 0,
        });
    }
    let tuples: Vec<IndexTuple> = (0..b.dim())
        .map(|i| IndexTuple::new(&[i]))
        .collect::<Result<_>>()?;
    k_statistics(b, &tuples)
}

/// `N/(N−1) · μ̃₂`
pub fn k_statistic_2(b: &SampleBatch, tuples: &[IndexTuple]) -> Result<CumulantVector> {
    single_order(b, tuples, 2)
}

/// `N²/((N−1)(N−2)) · μ̃₃`
pub fn k_statistic_3(b: &SampleBatch, tuples: &[IndexTuple]) -> Result<CumulantVector> {
    single_order(b, tuples, 3)
}

/// `N²/((N−1)(N−2)(N−3)) · [(N+1) μ̃₄ − 3(N−1) μ̃₂⊗μ̃₂]`
pub fn k_statistic_4(b: &SampleBatch, tuples: &[IndexTuple]) -> Result<CumulantVector> {
    single_order(b, tuples, 4)
}

/// Empirical right-hand side aligned row-for-row with `system`.
pub fn stack_k_statistics(b: &SampleBatch, system: &ReducedSystem) -> Result<CumulantVector> {
    if b.dim() != system.links() {
        return Err(Error::DimensionMismatch {
            expected: system.links(),
            found: b.dim(),
        });
    }
    k_statistics(b, &system.tuples())
}

/// Largest full tensor [`k_statistic_tensor`] will build.
pub const MAX_TENSOR_LEN: usize = 1 << 20;

/// The full order-`order` K-statistic tensor, vectorized with the first
/// index most significant (the layout `A⊗…⊗A` acts on). Order 4 pairs
/// positions `(0,1)` and `(2,3)` as written, without sorting.
pub fn k_statistic_tensor(b: &SampleBatch, order: usize) -> Result<Vec<f64>> {
    if !(1..=4).contains(&order) {
        return Err(Error::InvalidArgument(alloc::format!(
            "order {order} outside 1..=4"
        )));
    }
    if b.len() < min_samples(order) {
        return Err(Error::InsufficientSamples {
            order,
            needed: min_samples(order),
            found: b.len(),
        });
    }
    let dim = b.dim();
    let len = (0..order)
        .try_fold(1usize, |acc, _| acc.checked_mul(dim))
        .unwrap_or(usize::MAX);
    if len > MAX_TENSOR_LEN {
        return Err(Error::SizeLimit {
            requested: len,
            limit: MAX_TENSOR_LEN,
        });
    }
    let mut first = PowerSums::new(dim);
    first.add_samples(b.samples());
    let mean = first.mean();
    if order == 1 {
        return Ok(mean);
    }
    let n = b.len() as f64;
    let mut sums = vec![0.0; len];
    let mut pair = vec![0.0; dim * dim];
    let mut z = vec![0.0; dim];
    let mut prod = vec![0.0; len];
    for s in b.samples() {
        for ((z, &y), &m) in z.iter_mut().zip(s).zip(&mean) {
            *z = f64::from(y) - m;
        }
        // Outer powers of z, built one factor at a time.
        prod[..dim].copy_from_slice(&z);
        let mut filled = dim;
        for _ in 1..order {
            for p in (0..filled).rev() {
                let v = prod[p];
                for (q, &zq) in z.iter().enumerate().rev() {
                    prod[p * dim + q] = v * zq;
                }
            }
            filled *= dim;
        }
        for (acc, v) in sums.iter_mut().zip(&prod) {
            *acc += v;
        }
        if order == 4 {
            for (i, &zi) in z.iter().enumerate() {
                for (j, &zj) in z.iter().enumerate() {
                    pair[i * dim + j] += zi * zj;
                }
            }
        }
    }
    Ok(match order {
        2 => sums.iter().map(|s| s / (n - 1.0)).collect(),
        3 => sums
            .iter()
            .map(|s| n * s / ((n - 1.0) * (n - 2.0)))
            .collect(),
        _ => {
            let dd = dim * dim;
            let c = n * n / ((n - 1.0) * (n - 2.0) * (n - 3.0));
            sums.iter()
                .enumerate()
                .map(|(idx, s)| {
                    let (hi, lo) = (idx / dd, idx % dd);
                    c * ((n + 1.0) * s / n - 3.0 * (n - 1.0) * (pair[hi] / n) * (pair[lo] / n))
                })
                .collect()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DenseMatrix;

    fn t(i: &[usize]) -> IndexTuple {
        IndexTuple::new(i).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn theoretical_identity_map() {
        let a = RoutingMatrix::new(DenseMatrix::identity(2)).unwrap();
        let tuples = [t(&[0]), t(&[1]), t(&[0, 0]), t(&[0, 1]), t(&[1, 1])];
        let c = theoretical_cumulants(&[2.0, 3.0], &a, &tuples).unwrap();
        assert_eq!(c.values(), vec![2.0, 3.0, 2.0, 0.0, 3.0]);
        let z = theoretical_cumulants(&[0.0, 0.0], &a, &tuples).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
        assert_eq!(
            theoretical_cumulants(&[1.0, -1.0], &a, &tuples),
            Err(Error::NegativeRate { index: 1 })
        );
    }

    #[test]
    fn theoretical_third_cumulant_of_sum() {
        let a = RoutingMatrix::new(DenseMatrix::from_rows(&[[1.0, 1.0]]).unwrap()).unwrap();
        let c = theoretical_cumulants(&[1.0, 1.0], &a, &[t(&[0, 0, 0])]).unwrap();
        assert_eq!(c.values(), vec![2.0]);
    }

    #[test]
    fn scalar_hand_values() {
        let b = SampleBatch::scalar(&[0, 2]);
        assert_eq!(empirical_mean(&b).unwrap().values(), vec![1.0]);
        assert!(close(
            k_statistic_2(&b, &[t(&[0, 0])]).unwrap().values()[0],
            2.0
        ));
        let b3 = SampleBatch::scalar(&[0, 0, 3]);
        assert!(close(
            k_statistic_3(&b3, &[t(&[0, 0, 0])]).unwrap().values()[0],
            9.0
        ));
        let b4 = SampleBatch::scalar(&[0, 0, 0, 4]);
        assert!(close(
            k_statistic_4(&b4, &[t(&[0, 0, 0, 0])]).unwrap().values()[0],
            64.0
        ));
    }

    #[test]
    fn constant_batches_have_zero_higher_statistics() {
        let b = SampleBatch::scalar(&[5; 7]);
        assert_eq!(empirical_mean(&b).unwrap().values(), vec![5.0]);
        assert_eq!(
            k_statistic_2(&b, &[t(&[0, 0])]).unwrap().values(),
            vec![0.0]
        );
        assert_eq!(
            k_statistic_3(&b, &[t(&[0, 0, 0])]).unwrap().values(),
            vec![0.0]
        );
        assert_eq!(
            k_statistic_4(&b, &[t(&[0, 0, 0, 0])]).unwrap().values(),
            vec![0.0]
        );
    }

    #[test]
    fn symmetric_data_has_zero_third_statistic() {
        let b = SampleBatch::scalar(&[1, 5, 3, 1, 5, 3]);
        assert!(k_statistic_3(&b, &[t(&[0, 0, 0])]).unwrap().values()[0].abs() < 1e-12);
    }

    #[test]
    fn sample_size_guards() {
        assert!(empirical_mean(&SampleBatch::scalar(&[])).is_err());
        assert!(k_statistic_2(&SampleBatch::scalar(&[1]), &[t(&[0, 0])]).is_err());
        assert!(k_statistic_3(&SampleBatch::scalar(&[1, 2]), &[t(&[0, 0, 0])]).is_err());
        assert_eq!(
            k_statistic_4(&SampleBatch::scalar(&[1, 2, 3]), &[t(&[0, 0, 0, 0])]),
            Err(Error::InsufficientSamples {
                order: 4,
                needed: 4,
                found: 3
            })
        );
    }

    #[test]
    fn wrong_order_and_out_of_range_tuples() {
        let b = SampleBatch::scalar(&[1, 2, 3]);
        assert!(k_statistic_2(&b, &[t(&[0, 0, 0])]).is_err());
        assert!(k_statistic_2(&b, &[t(&[0, 1])]).is_err());
    }

    #[test]
    fn split_and_merge_matches_single_pass() {
        let rows: Vec<[u32; 3]> = (0..40u32)
            .map(|n| [n % 7, (n * 3) % 5, (n * n) % 11])
            .collect();
        let b = SampleBatch::from_rows(&rows).unwrap();
        let tuples = [
            t(&[0]),
            t(&[0, 2]),
            t(&[0, 1, 2]),
            t(&[0, 1, 1, 2]),
            t(&[2, 2, 2, 2]),
        ];
        let whole = k_statistics(&b, &tuples).unwrap();

        let mut p1 = PowerSums::new(3);
        let mut p2 = PowerSums::new(3);
        p1.add_samples(b.samples().take(13));
        p2.add_samples(b.samples().skip(13));
        p1.merge(&p2);
        let mean = p1.mean();
        let mut c1 = CenteredSums::new(mean.clone(), &tuples).unwrap();
        let mut c2 = CenteredSums::new(mean, &tuples).unwrap();
        c1.add_samples(b.samples().take(29));
        c2.add_samples(b.samples().skip(29));
        c1.merge(&c2).unwrap();
        let merged = c1.finish().unwrap();
        for (x, y) in whole.values().iter().zip(merged.values()) {
            assert!(close(*x, y));
        }
    }

    #[test]
    fn full_tensor_agrees_at_sorted_positions() {
        let rows: Vec<[u32; 3]> = (0..17u32)
            .map(|i| [i % 4, (i * 7) % 5, (i * i) % 3])
            .collect();
        let b = SampleBatch::from_rows(&rows).unwrap();
        for order in 1..=4usize {
            let full = k_statistic_tensor(&b, order).unwrap();
            assert_eq!(full.len(), 3usize.pow(order as u32));
            for (idx, v) in full.iter().enumerate() {
                let digits: Vec<usize> = (0..order)
                    .rev()
                    .map(|p| idx / 3usize.pow(p as u32) % 3)
                    .collect();
                if digits.windows(2).all(|w| w[0] <= w[1]) {
                    let k = k_statistics(&b, &[t(&digits)]).unwrap().values()[0];
                    assert!(close(*v, k), "{digits:?}: {v} vs {k}");
                }
            }
        }
        assert!(k_statistic_tensor(&b, 5).is_err());
    }
}

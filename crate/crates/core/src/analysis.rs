//! Error metrics, Poisson K-statistic variances and the least-squares MSE
//! bound.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::cumulants::CumulantVector;
use crate::linalg::singular_values;
use crate::solvers::SolverKind;
use crate::system::{diagnostics, ReducedSystem};
use crate::tensor::MAX_ORDER;
use crate::topology::RoutingMatrix;
use crate::{Error, Result};

/// One cell of an experiment table: a solver, a cumulant order and a
/// sample size (`None` for theoretical cumulants).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub solver: SolverKind,
    pub r: usize,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellEstimate {
    pub rates: Vec<f64>,
    pub clamped: usize,
}

/// True rates of one trial and every estimate made from them.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub truth: Vec<f64>,
    pub estimates: BTreeMap<Cell, CellEstimate>,
}

/// Normalized MSE per component and its average over components.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMse {
    pub per_component: Vec<f64>,
    pub mean: f64,
}

/// `ξᵢ² = Σ_t (λ_t(i) − λ̂_t(i))² / Σ_t λ_t(i)²` and `ξ̄² = mean_i ξᵢ²`.
pub fn normalized_mse_of<'a, I>(pairs: I) -> Result<NormalizedMse>
where
    I: IntoIterator<Item = (&'a [f64], &'a [f64])>,
{
    let mut num: Vec<f64> = Vec::new();
    let mut den: Vec<f64> = Vec::new();
    let mut trials = 0;
    for (truth, est) in pairs {
        if truth.len() != est.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.len(),
                found: est.len(),
            });
        }
        if trials == 0 {
            num = vec![0.0; truth.len()];
            den = vec![0.0; truth.len()];
        } else if truth.len() != num.len() {
            return Err(Error::DimensionMismatch {
                expected: num.len(),
                found: truth.len(),
            });
        }
        for (i, (&t, &e)) in truth.iter().zip(est).enumerate() {
            num[i] += (t - e) * (t - e);
            den[i] += t * t;
        }
        trials += 1;
    }
    if trials == 0 || num.is_empty() {
        return Err(Error::InvalidArgument(
            "normalized MSE needs at least one trial".into(),
        ));
    }
    if let Some(component) = den.iter().position(|&d| d == 0.0) {
        return Err(Error::ZeroDenominator { component });
    }
    let per_component: Vec<f64> = num.iter().zip(&den).map(|(n, d)| n / d).collect();
    let mean = per_component.iter().sum::<f64>() / per_component.len() as f64;
    Ok(NormalizedMse {
        per_component,
        mean,
    })
}

/// Normalized MSE of `cell` over `records`; records lacking the cell are
/// skipped.
pub fn normalized_mse(records: &[TrialRecord], cell: Cell) -> Result<NormalizedMse> {
    normalized_mse_of(records.iter().filter_map(|r| {
        r.estimates
            .get(&cell)
            .map(|e| (r.truth.as_slice(), e.rates.as_slice()))
    }))
}

/// Fraction (in percent) of clamped least-squares components in `cell`.
pub fn negative_percentage(records: &[TrialRecord], cell: Cell) -> f64 {
    let (clamped, total) = records
        .iter()
        .filter_map(|r| r.estimates.get(&cell))
        .fold((0usize, 0usize), |(c, t), e| {
            (c + e.clamped, t + e.rates.len())
        });
    if total == 0 {
        0.0
    } else {
        100.0 * clamped as f64 / total as f64
    }
}

/// Variance of the order-`k` K-statistic of `N` iid Poisson(`λ`) samples.
///
/// Order 1 is the sample mean (`λ/N`); orders 2 and 3 specialize the
/// general iid variance formulas to cumulants that all equal `λ`.
pub fn kstat_variance(rate: f64, n: usize, order: usize) -> Result<f64> {
    if !(rate >= 0.0) {
        return Err(Error::NegativeRate { index: 0 });
    }
    let needed = match order {
        1 => 1,
        2 => 2,
        3 => 3,
        _ => {
            return Err(Error::InvalidArgument(
                "variance formula available for orders 1..=3".into(),
            ))
        }
    };
    if n < needed {
        return Err(Error::InsufficientSamples {
            order,
            needed,
            found: n,
        });
    }
    let nf = n as f64;
    let l = rate;
    Ok(match order {
        1 => l / nf,
        2 => l / nf + 2.0 * l * l / (nf - 1.0),
        _ => l / nf + 18.0 * l * l / (nf - 1.0) + 6.0 * nf * l * l * l / ((nf - 1.0) * (nf - 2.0)),
    })
}

/// Upper bound on `E‖λ̂ − λ‖²` for unregularized least squares:
/// `max(ρ, ρʳ) / ρ_min(𝒜ᵣᵀ𝒜ᵣ) · Σ_l var(order-r K-statistic of x_l)`,
/// with `ρ = ρ_max(AᵀA)`.
pub fn mse_upper_bound(
    a: &RoutingMatrix,
    system: &ReducedSystem,
    rates: &[f64],
    n: usize,
    r: usize,
) -> Result<f64> {
    if rates.len() != a.paths() {
        return Err(Error::DimensionMismatch {
            expected: a.paths(),
            found: rates.len(),
        });
    }
    let diag = diagnostics(system)?;
    if diag.rank < system.paths() || diag.eig_min <= 0.0 {
        return Err(Error::RankDeficient {
            rank: diag.rank,
            columns: system.paths(),
        });
    }
    let smax = singular_values(a.matrix()).first().copied().unwrap_or(0.0);
    let rho = smax * smax;
    let gain = rho.max(libm::pow(rho, r as f64));
    let mut noise = 0.0;
    for &l in rates {
        noise += kstat_variance(l, n, r)?;
    }
    Ok(gain / diag.eig_min * noise)
}

/// Squared-error sums and entry counts per order `1..=4` between matched
/// empirical and theoretical cumulants.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CumulantErrors {
    pub sum_sq: [f64; MAX_ORDER],
    pub count: [usize; MAX_ORDER],
}

impl CumulantErrors {
    pub fn between(empirical: &CumulantVector, theoretical: &CumulantVector) -> Result<Self> {
        if empirical.len() != theoretical.len() {
            return Err(Error::DimensionMismatch {
                expected: theoretical.len(),
                found: empirical.len(),
            });
        }
        let mut out = CumulantErrors::default();
        for ((te, ve), (tt, vt)) in empirical.entries.iter().zip(&theoretical.entries) {
            if te != tt {
                return Err(Error::InvalidArgument(
                    "cumulant vectors are not aligned".into(),
                ));
            }
            let k = te.order() - 1;
            out.sum_sq[k] += (ve - vt) * (ve - vt);
            out.count[k] += 1;
        }
        Ok(out)
    }

    pub fn merge(&mut self, other: &CumulantErrors) {
        for k in 0..MAX_ORDER {
            self.sum_sq[k] += other.sum_sq[k];
            self.count[k] += other.count[k];
        }
    }

    /// Per-entry mean squared error at `order`, or `None` with no entries.
    pub fn mse(&self, order: usize) -> Option<f64> {
        let k = order.checked_sub(1)?;
        (k < MAX_ORDER && self.count[k] > 0).then(|| self.sum_sq[k] / self.count[k] as f64)
    }
}

/// Mean squared deviation of the order-`order` K-statistics from the
/// theoretical cumulants, over all matched entries of all trials.
pub fn cumulant_estimation_mse(
    trials: &[(CumulantVector, CumulantVector)],
    order: usize,
) -> Result<f64> {
    let mut acc = CumulantErrors::default();
    for (emp, theo) in trials {
        acc.merge(&CumulantErrors::between(emp, theo)?);
    }
    acc.mse(order)
        .ok_or_else(|| Error::InvalidArgument(alloc::format!("no order-{order} entries")))
}

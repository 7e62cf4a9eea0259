//! Rate estimation from a reduced system and its matched right-hand side.
//!
//! Two estimators are provided: the multiplicative minimum I-divergence
//! iteration (Richardson-Lucy form) and Tikhonov-regularized least squares
//! with substitution of negative components.

use alloc::vec;
use alloc::vec::Vec;

use crate::cumulants::{stack_k_statistics, theoretical_cumulants, CumulantVector, SampleBatch};
use crate::linalg::{cholesky, cholesky_solve};
use crate::matrix::{dot, DenseMatrix};
use crate::system::{Epsilons, ReducedSystem};
use crate::topology::RoutingMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Uniform starting value of the iteration.
    pub init: f64,
    /// Tikhonov regularization `γ`.
    pub gamma: f64,
    /// Value substituted for negative least-squares components.
    pub negative_replacement: f64,
    /// Targets below this are raised to it before iterating.
    pub rhs_floor: f64,
    /// Optional early stop on the largest relative change of an iterate.
    pub tolerance: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 300,
            init: 0.1,
            gamma: 0.0005,
            negative_replacement: 0.005,
            rhs_floor: 0.0,
            tolerance: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.init, self.gamma, self.negative_replacement];
        if self.max_iterations == 0 || positive.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(
                "iterations, init, gamma and negative replacement must be positive".into(),
            ));
        }
        if !(self.rhs_floor >= 0.0) {
            return Err(Error::InvalidArgument(
                "rhs floor must be nonnegative".into(),
            ));
        }
        if matches!(self.tolerance, Some(t) if !(t > 0.0)) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverKind {
    /// Minimum I-divergence iteration.
    Iteration,
    /// Tikhonov-regularized least squares.
    LeastSquares,
}

impl SolverKind {
    pub fn tag(&self) -> &'static str {
        match self {
            SolverKind::Iteration => "iteration",
            SolverKind::LeastSquares => "ls",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub rates: Vec<f64>,
    pub solver: SolverKind,
    /// Iterations run (zero for least squares).
    pub iterations: usize,
    /// `γ` used by least squares.
    pub gamma: Option<f64>,
    /// Components whose raw least-squares value was negative.
    pub clamped: Vec<bool>,
    /// Right-hand side entries raised to the floor before iterating.
    pub floored_rhs: usize,
}

impl RateEstimate {
    pub fn clamped_count(&self) -> usize {
        self.clamped.iter().filter(|&&c| c).count()
    }
}

/// Iteration state that only depends on the system: the column-normalized
/// weights `b̄_ij = b_ij / Σ_t b_tj`.
#[derive(Debug, Clone)]
pub struct IdivSolver<'a> {
    b: &'a DenseMatrix,
    normalized: DenseMatrix,
}

impl<'a> IdivSolver<'a> {
    pub fn new(system: &'a ReducedSystem) -> Result<Self> {
        Self::from_matrix(system.matrix())
    }

    pub fn from_matrix(b: &'a DenseMatrix) -> Result<Self> {
        if b.as_slice().iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument(
                "iteration needs a nonnegative matrix".into(),
            ));
        }
        let sums = b.column_sums();
        if let Some(column) = sums.iter().position(|&s| !(s > 0.0)) {
            return Err(Error::ZeroColumnSum { column });
        }
        let mut normalized = b.clone();
        for i in 0..b.rows() {
            for (v, s) in normalized.row_mut(i).iter_mut().zip(&sums) {
                *v /= s;
            }
        }
        Ok(IdivSolver { b, normalized })
    }

    /// Runs the iteration on an already weighted target vector.
    pub fn solve(&self, target: &[f64], cfg: &SolverConfig) -> Result<RateEstimate> {
        cfg.validate()?;
        if target.len() != self.b.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.b.rows(),
                found: target.len(),
            });
        }
        let mut floored_rhs = 0;
        let eta: Vec<f64> = target
            .iter()
            .map(|&v| {
                if v < cfg.rhs_floor {
                    floored_rhs += 1;
                    cfg.rhs_floor
                } else {
                    v
                }
            })
            .collect();
        let mut rates = vec![cfg.init; self.b.cols()];
        let mut ratio = vec![0.0; self.b.rows()];
        let mut iterations = 0;
        for _ in 0..cfg.max_iterations {
            for (i, q) in ratio.iter_mut().enumerate() {
                let pred = dot(self.b.row(i), &rates);
                *q = if pred > 0.0 {
                    eta[i] / pred
                } else if eta[i] > 0.0 {
                    return Err(Error::Divergence { row: i });
                } else {
                    0.0
                };
            }
            let update = self.normalized.transpose_matvec(&ratio)?;
            iterations += 1;
            let mut change: f64 = 0.0;
            for (l, u) in rates.iter_mut().zip(&update) {
                let next = *l * u;
                if *l > 0.0 {
                    change = change.max(libm::fabs(next - *l) / *l);
                }
                *l = next;
            }
            if matches!(cfg.tolerance, Some(tol) if change < tol) {
                break;
            }
        }
        Ok(RateEstimate {
            clamped: vec![false; rates.len()],
            rates,
            solver: SolverKind::Iteration,
            iterations,
            gamma: None,
            floored_rhs,
        })
    }
}

/// Cholesky factor of `𝒜ᵀ𝒜 + γI`, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct TikhonovSolver<'a> {
    a: &'a DenseMatrix,
    factor: DenseMatrix,
    gamma: f64,
}

impl<'a> TikhonovSolver<'a> {
    pub fn new(system: &'a ReducedSystem, gamma: f64) -> Result<Self> {
        Self::from_matrix(system.matrix(), gamma)
    }

    pub fn from_matrix(a: &'a DenseMatrix, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument("gamma must be nonnegative".into()));
        }
        let mut g = a.gram();
        for j in 0..g.rows() {
            g[(j, j)] += gamma;
        }
        Ok(TikhonovSolver {
            a,
            factor: cholesky(&g)?,
            gamma,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `(𝒜ᵀ𝒜 + γI)⁻¹ 𝒜ᵀ η` without any post-processing.
    pub fn solve_raw(&self, target: &[f64]) -> Result<Vec<f64>> {
        let rhs = self.a.transpose_matvec(target)?;
        cholesky_solve(&self.factor, &rhs)
    }

    pub fn solve(&self, target: &[f64], cfg: &SolverConfig) -> Result<RateEstimate> {
        cfg.validate()?;
        let mut rates = self.solve_raw(target)?;
        let mut clamped = vec![false; rates.len()];
        for (r, c) in rates.iter_mut().zip(clamped.iter_mut()) {
            if *r < 0.0 {
                *r = cfg.negative_replacement;
                *c = true;
            }
        }
        Ok(RateEstimate {
            rates,
            solver: SolverKind::LeastSquares,
            iterations: 0,
            gamma: Some(self.gamma),
            clamped,
            floored_rhs: 0,
        })
    }
}

/// Minimum I-divergence iteration
/// `λ_j ← λ_j Σ_i b̄_ij η_i / (Bλ)_i` from a uniform start.
pub fn solve_idiv(
    system: &ReducedSystem,
    rhs: &CumulantVector,
    cfg: &SolverConfig,
) -> Result<RateEstimate> {
    IdivSolver::new(system)?.solve(&system.weighted_rhs(rhs)?, cfg)
}

/// Tikhonov least squares with negative components replaced.
pub fn solve_tikhonov(
    system: &ReducedSystem,
    rhs: &CumulantVector,
    cfg: &SolverConfig,
) -> Result<RateEstimate> {
    cfg.validate()?;
    TikhonovSolver::new(system, cfg.gamma)?.solve(&system.weighted_rhs(rhs)?, cfg)
}

/// Where the matched right-hand side comes from.
#[derive(Debug, Clone, Copy)]
pub enum RhsSource<'a> {
    /// K-statistics of observed link samples.
    Empirical(&'a SampleBatch),
    /// Exact cumulants of the given rates (the `N = ∞` limit).
    Theoretical(&'a [f64]),
}

/// Builds and weights the reduced system, matches the right-hand side and
/// runs `solver`.
pub fn estimate_pipeline(
    a: &RoutingMatrix,
    r: usize,
    source: RhsSource<'_>,
    solver: SolverKind,
    cfg: &SolverConfig,
    eps: Epsilons,
) -> Result<RateEstimate> {
    let system = ReducedSystem::build(a, r)?.apply_epsilon(eps)?;
    let rhs = match source {
        RhsSource::Empirical(batch) => stack_k_statistics(batch, &system)?,
        RhsSource::Theoretical(rates) => theoretical_cumulants(rates, a, &system.tuples())?,
    };
    match solver {
        SolverKind::Iteration => solve_idiv(&system, &rhs, cfg),
        SolverKind::LeastSquares => solve_tikhonov(&system, &rhs, cfg),
    }
}

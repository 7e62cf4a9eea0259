//! Random routing as deterministic routing on a super-network.
//!
//! Each source–destination pair owns one column per feasible path. A
//! Poisson pair flow split multinomially over its paths gives independent
//! Poisson path flows with the split rates, so the expanded matrix can be
//! estimated like any deterministic one and path estimates summed back per
//! pair. Path-selection probabilities are only used to simulate traffic.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::cumulants::SampleBatch;
use crate::simulate::{ExperimentSeed, PoissonSampler, RateVector};
use crate::topology::{build_routing_matrix, PathSet, RoutingMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SuperNetMap {
    pub matrix: RoutingMatrix,
    /// Column indices of each pair's paths, pairs in path-set order.
    pub pair_columns: Vec<Vec<usize>>,
    /// `src-dst` label per pair.
    pub pair_labels: Vec<String>,
}

impl SuperNetMap {
    pub fn pairs(&self) -> usize {
        self.pair_columns.len()
    }
}

/// One column per feasible path, grouped by pair.
pub fn expand(p: &PathSet) -> Result<SuperNetMap> {
    let matrix = build_routing_matrix(p)?;
    let mut pair_columns = Vec::with_capacity(p.pairs.len());
    let mut pair_labels = Vec::with_capacity(p.pairs.len());
    let mut next = 0;
    for pair in &p.pairs {
        if pair.paths.is_empty() {
            return Err(Error::InvalidArgument(
                "pair without a feasible path".into(),
            ));
        }
        pair_columns.push((next..next + pair.paths.len()).collect());
        pair_labels.push(alloc::format!(
            "{}-{}",
            p.node_names[pair.src],
            p.node_names[pair.dst]
        ));
        next += pair.paths.len();
    }
    Ok(SuperNetMap {
        matrix,
        pair_columns,
        pair_labels,
    })
}

/// Pair rate = sum of its thinned path-rate estimates.
pub fn aggregate_rates(path_rates: &[f64], map: &SuperNetMap) -> Result<Vec<f64>> {
    if path_rates.len() != map.matrix.paths() {
        return Err(Error::DimensionMismatch {
            expected: map.matrix.paths(),
            found: path_rates.len(),
        });
    }
    Ok(map
        .pair_columns
        .iter()
        .map(|cols| cols.iter().map(|&j| path_rates[j]).sum())
        .collect())
}

fn check_split(pair_rates: &[f64], probabilities: &[Vec<f64>], map: &SuperNetMap) -> Result<()> {
    if pair_rates.len() != map.pairs() || probabilities.len() != map.pairs() {
        return Err(Error::DimensionMismatch {
            expected: map.pairs(),
            found: pair_rates.len(),
        });
    }
    for (probs, cols) in probabilities.iter().zip(&map.pair_columns) {
        if probs.len() != cols.len() {
            return Err(Error::DimensionMismatch {
                expected: cols.len(),
                found: probs.len(),
            });
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|&p| !(p >= 0.0)) || libm::fabs(total - 1.0) > 1e-9 {
            return Err(Error::InvalidArgument(
                "path probabilities must be a distribution".into(),
            ));
        }
    }
    Ok(())
}

/// Path rates `λ_pair · p_path` implied by a split.
pub fn thinned_rates(
    pair_rates: &[f64],
    probabilities: &[Vec<f64>],
    map: &SuperNetMap,
) -> Result<RateVector> {
    check_split(pair_rates, probabilities, map)?;
    let mut out = vec![0.0; map.matrix.paths()];
    for ((rate, probs), cols) in pair_rates.iter().zip(probabilities).zip(&map.pair_columns) {
        for (&p, &j) in probs.iter().zip(cols) {
            out[j] = rate * p;
        }
    }
    RateVector::new(out)
}

/// Simulates random routing: each pair draws a Poisson total, then every
/// arrival picks a path with the given probabilities. Returns the path
/// counts and the link counts.
pub fn simulate_random_routing(
    pair_rates: &[f64],
    probabilities: &[Vec<f64>],
    map: &SuperNetMap,
    n: usize,
    seed: ExperimentSeed,
) -> Result<(SampleBatch, SampleBatch)> {
    check_split(pair_rates, probabilities, map)?;
    let sampler = PoissonSampler::new(pair_rates)?;
    let supports = map.matrix.column_supports();
    let mut rng = seed.rng();
    let paths = map.matrix.paths();
    let links = map.matrix.links();
    let mut xs = Vec::with_capacity(n * paths);
    let mut ys = Vec::with_capacity(n * links);
    let mut x = vec![0u32; paths];
    let mut y = vec![0u32; links];
    for _ in 0..n {
        x.iter_mut().for_each(|v| *v = 0);
        y.iter_mut().for_each(|v| *v = 0);
        for (pair, (probs, cols)) in probabilities.iter().zip(&map.pair_columns).enumerate() {
            let total = sampler.sample(&mut rng, pair);
            for _ in 0..total {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut pick = cols[cols.len() - 1];
                for (&p, &j) in probs.iter().zip(cols) {
                    acc += p;
                    if u < acc {
                        pick = j;
                        break;
                    }
                }
                x[pick] += 1;
            }
        }
        for (j, &xj) in x.iter().enumerate() {
            for &i in &supports[j] {
                y[i] += xj;
            }
        }
        xs.extend_from_slice(&x);
        ys.extend_from_slice(&y);
    }
    Ok((SampleBatch::new(paths, xs)?, SampleBatch::new(links, ys)?))
}

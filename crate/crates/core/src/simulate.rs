//! Seeded Poisson path traffic and the induced link counts.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cumulants::SampleBatch;
use crate::topology::RoutingMatrix;
use crate::{Error, Result};

/// `(seed, stream)` selects an independent, reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExperimentSeed {
    pub seed: u64,
    pub stream: u64,
}

impl ExperimentSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        ExperimentSeed { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Nonnegative path rates.
#[derive(Debug, Clone, PartialEq)]
pub struct RateVector(Vec<f64>);

impl RateVector {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if let Some(index) = rates.iter().position(|&r| !(r >= 0.0) || !r.is_finite()) {
            return Err(Error::NegativeRate { index });
        }
        Ok(RateVector(rates))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// `len` independent uniform draws on `[lo, hi]`.
pub fn draw_rates(len: usize, lo: f64, hi: f64, seed: ExperimentSeed) -> Result<RateVector> {
    if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!(
            "invalid rate interval [{lo}, {hi}]"
        )));
    }
    let mut rng = seed.rng();
    let width = hi - lo;
    RateVector::new((0..len).map(|_| lo + width * rng.gen::<f64>()).collect())
}

/// Inversion sampler. Rates of 10 or more are split into chunks below 10,
/// and the chunk draws summed.
#[derive(Debug, Clone)]
pub struct PoissonSampler {
    chunks: Vec<(f64, f64)>,
    /// Range of `chunks` belonging to each rate.
    spans: Vec<(usize, usize)>,
}

const CHUNK: f64 = 10.0;

impl PoissonSampler {
    pub fn new(rates: &[f64]) -> Result<Self> {
        RateVector::new(rates.to_vec())?;
        let mut chunks = Vec::new();
        let mut spans = Vec::with_capacity(rates.len());
        for &rate in rates {
            let start = chunks.len();
            let mut rest = rate;
            while rest >= CHUNK {
                chunks.push((CHUNK / 2.0, libm::exp(-CHUNK / 2.0)));
                rest -= CHUNK / 2.0;
            }
            chunks.push((rest, libm::exp(-rest)));
            spans.push((start, chunks.len()));
        }
        Ok(PoissonSampler { chunks, spans })
    }

    fn invert<R: Rng>(rng: &mut R, rate: f64, p0: f64) -> u32 {
        if rate == 0.0 {
            return 0;
        }
        let u: f64 = rng.gen();
        let mut x = 0u32;
        let mut p = p0;
        let mut cdf = p;
        while u > cdf {
            x += 1;
            p *= rate / f64::from(x);
            if p == 0.0 {
                break;
            }
            cdf += p;
        }
        x
    }

    #[inline]
    pub fn sample<R: Rng>(&self, rng: &mut R, index: usize) -> u32 {
        let (start, end) = self.spans[index];
        self.chunks[start..end]
            .iter()
            .map(|&(rate, p0)| Self::invert(rng, rate, p0))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }
}

/// Draws `n` path-count vectors and maps each through `a`, calling `sink`
/// with `(x, y)` per sample.
fn generate<F: FnMut(&[u32], &[u32])>(
    rates: &RateVector,
    a: &RoutingMatrix,
    n: usize,
    seed: ExperimentSeed,
    mut sink: F,
) -> Result<()> {
    if rates.len() != a.paths() {
        return Err(Error::DimensionMismatch {
            expected: a.paths(),
            found: rates.len(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be positive".into(),
        ));
    }
    let sampler = PoissonSampler::new(rates.as_slice())?;
    let supports = a.column_supports();
    let mut rng = seed.rng();
    let mut x = vec![0u32; a.paths()];
    let mut y = vec![0u32; a.links()];
    for _ in 0..n {
        y.iter_mut().for_each(|v| *v = 0);
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = sampler.sample(&mut rng, j);
            if *xj != 0 {
                for &i in &supports[j] {
                    y[i] += *xj;
                }
            }
        }
        sink(&x, &y);
    }
    Ok(())
}

/// `n` iid path vectors `X_n` and link vectors `Y_n = A X_n`.
pub fn simulate_traffic(
    rates: &RateVector,
    a: &RoutingMatrix,
    n: usize,
    seed: ExperimentSeed,
) -> Result<(SampleBatch, SampleBatch)> {
    let mut xs = Vec::with_capacity(n * a.paths());
    let mut ys = Vec::with_capacity(n * a.links());
    generate(rates, a, n, seed, |x, y| {
        xs.extend_from_slice(x);
        ys.extend_from_slice(y);
    })?;
    Ok((
        SampleBatch::new(a.paths(), xs)?,
        SampleBatch::new(a.links(), ys)?,
    ))
}

/// Link samples only; identical to the second half of [`simulate_traffic`]
/// for the same seed.
pub fn simulate_links(
    rates: &RateVector,
    a: &RoutingMatrix,
    n: usize,
    seed: ExperimentSeed,
) -> Result<SampleBatch> {
    let mut ys = Vec::with_capacity(n * a.links());
    generate(rates, a, n, seed, |_, y| ys.extend_from_slice(y))?;
    SampleBatch::new(a.links(), ys)
}

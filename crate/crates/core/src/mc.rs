//! Seeded Monte Carlo expectation engine.
//!
//! Every draw `i` gets its own ChaCha8 stream keyed by `(seed, i)`: the seed
//! fixes the key and the draw index selects the stream, so no draw ever reads
//! another draw's randomness. Draws run on a rayon pool but are collected in
//! index order and reduced by a fixed pairwise tree, which makes every
//! estimate bit-identical for any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Per-draw random number generator.
pub type DrawRng = ChaCha8Rng;

/// Identifier of the substream scheme, recorded in reports.
pub const GENERATOR_ID: &str = "rand_chacha::ChaCha8Rng; key=seed_from_u64(seed), stream=draw index";

/// Seed used when none is given, so default runs are reproducible.
pub const DEFAULT_SEED: u64 = 271_828;

/// Block size used when adaptive stopping is enabled.
const ADAPTIVE_BLOCK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCConfig {
    pub n_draws: usize,
    pub seed: u64,
    /// Number of worker threads; 0 uses the global pool.
    pub worker_hint: usize,
    /// Stop early once `standard_error <= max_relative_se * |mean|`.
    pub max_relative_se: Option<f64>,
}

impl MCConfig {
    pub fn new(n_draws: usize, seed: u64) -> Result<Self> {
        if n_draws < 2 {
            return Err(Error::Config(format!(
                "n_draws must be at least 2 to report a standard error, got {n_draws}"
            )));
        }
        Ok(Self {
            n_draws,
            seed,
            worker_hint: 0,
            max_relative_se: None,
        })
    }

    pub fn with_workers(mut self, worker_hint: usize) -> Self {
        self.worker_hint = worker_hint;
        self
    }

    pub fn with_max_relative_se(mut self, target: f64) -> Result<Self> {
        if !(target > 0.0 && target.is_finite()) {
            return Err(Error::Config(format!(
                "max_relative_se must be positive and finite, got {target}"
            )));
        }
        self.max_relative_se = Some(target);
        Ok(self)
    }

    /// Same draws under a different seed; used for nested experiments.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.n_draws < 2 {
            return Err(Error::Config(format!(
                "n_draws must be at least 2, got {}",
                self.n_draws
            )));
        }
        Ok(())
    }
}

/// Summary of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub n_effective: usize,
    pub sentinel_count: usize,
}

impl MCEstimate {
    pub fn n_draws(&self) -> usize {
        self.n_effective + self.sentinel_count
    }
}

/// The generator for draw `index` under `seed`.
pub fn draw_rng(seed: u64, index: u64) -> DrawRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives a child seed, used when one experiment runs many nested MC studies.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    use rand::RngCore;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(index);
    rng.next_u64()
}

/// Evaluates `draw` for indices `range`, returning results in index order.
fn run_range<T, D>(seed: u64, worker_hint: usize, range: std::ops::Range<usize>, draw: &D) -> Vec<T>
where
    T: Send,
    D: Fn(u64, &mut DrawRng) -> T + Sync,
{
    let job = || {
        range
            .clone()
            .into_par_iter()
            .map(|i| {
                let mut rng = draw_rng(seed, i as u64);
                draw(i as u64, &mut rng)
            })
            .collect::<Vec<T>>()
    };
    if worker_hint == 0 {
        return job();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(worker_hint).build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}

/// Runs `config.n_draws` draws and returns them in index order.
///
/// The draw closure receives the draw index and its private generator.
pub fn draws<T, D>(config: &MCConfig, draw: D) -> Result<Vec<T>>
where
    T: Send,
    D: Fn(u64, &mut DrawRng) -> T + Sync,
{
    config.validate()?;
    Ok(run_range(config.seed, config.worker_hint, 0..config.n_draws, &draw))
}

/// Sum in a fixed binary tree over index order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

fn finite_values(values: &[f64]) -> (Vec<f64>, usize) {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let sentinels = values.len() - finite.len();
    (finite, sentinels)
}

fn all_equal(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0].to_bits() == w[1].to_bits())
}

/// Sample mean with standard error `s / sqrt(n)`; non-finite values are
/// counted as sentinels and excluded.
pub fn summarize_mean(values: &[f64]) -> Result<MCEstimate> {
    let (finite, sentinel_count) = finite_values(values);
    let n = finite.len();
    if n < 2 {
        return Err(Error::EstimationFailure {
            n_effective: n,
            n_draws: values.len(),
        });
    }
    if all_equal(&finite) {
        return Ok(MCEstimate {
            mean: finite[0],
            standard_error: 0.0,
            n_effective: n,
            sentinel_count,
        });
    }
    let mean = pairwise_sum(&finite) / n as f64;
    let sq: Vec<f64> = finite.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    Ok(MCEstimate {
        mean,
        standard_error: (var / n as f64).sqrt(),
        n_effective: n,
        sentinel_count,
    })
}

/// Unbiased sample variance with a standard error from the fourth central moment.
pub fn summarize_variance(values: &[f64]) -> Result<MCEstimate> {
    let (finite, sentinel_count) = finite_values(values);
    let n = finite.len();
    if n < 2 {
        return Err(Error::EstimationFailure {
            n_effective: n,
            n_draws: values.len(),
        });
    }
    if all_equal(&finite) {
        return Ok(MCEstimate {
            mean: 0.0,
            standard_error: 0.0,
            n_effective: n,
            sentinel_count,
        });
    }
    let nf = n as f64;
    let mean = pairwise_sum(&finite) / nf;
    let dev2: Vec<f64> = finite.iter().map(|v| (v - mean).powi(2)).collect();
    let dev4: Vec<f64> = dev2.iter().map(|d| d * d).collect();
    let s2 = pairwise_sum(&dev2) / (nf - 1.0);
    let m4 = pairwise_sum(&dev4) / nf;
    // Var(s^2) ~ (mu4 - sigma^4 (n-3)/(n-1)) / n
    let var_s2 = if n > 3 {
        ((m4 - s2 * s2 * (nf - 3.0) / (nf - 1.0)) / nf).max(0.0)
    } else {
        (m4 / nf).max(0.0)
    };
    Ok(MCEstimate {
        mean: s2,
        standard_error: var_s2.sqrt(),
        n_effective: n,
        sentinel_count,
    })
}

fn run_functional<T, D, F>(config: &MCConfig, draw: &D, functional: &F, range: std::ops::Range<usize>) -> Vec<f64>
where
    T: Send,
    D: Fn(&mut DrawRng) -> T + Sync,
    F: Fn(&T) -> f64 + Sync,
{
    run_range(config.seed, config.worker_hint, range, &|_, rng: &mut DrawRng| {
        functional(&draw(rng))
    })
}

fn estimate_with<T, D, F, S>(config: &MCConfig, draw: D, functional: F, summarize: S) -> Result<MCEstimate>
where
    T: Send,
    D: Fn(&mut DrawRng) -> T + Sync,
    F: Fn(&T) -> f64 + Sync,
    S: Fn(&[f64]) -> Result<MCEstimate>,
{
    config.validate()?;
    let Some(target) = config.max_relative_se else {
        let values = run_functional(config, &draw, &functional, 0..config.n_draws);
        return summarize(&values);
    };
    let mut values = Vec::with_capacity(config.n_draws);
    let mut done = 0;
    while done < config.n_draws {
        let end = (done + ADAPTIVE_BLOCK).min(config.n_draws);
        values.extend(run_functional(config, &draw, &functional, done..end));
        done = end;
        if let Ok(est) = summarize(&values) {
            if est.n_effective >= 2 && est.standard_error <= target * est.mean.abs() {
                return Ok(est);
            }
        }
    }
    summarize(&values)
}

/// Monte Carlo estimate of `E[functional(draw)]`.
pub fn mc_expectation<T, D, F>(config: &MCConfig, draw: D, functional: F) -> Result<MCEstimate>
where
    T: Send,
    D: Fn(&mut DrawRng) -> T + Sync,
    F: Fn(&T) -> f64 + Sync,
{
    estimate_with(config, draw, functional, summarize_mean)
}

/// Monte Carlo estimate of `Var[functional(draw)]`.
pub fn mc_variance<T, D, F>(config: &MCConfig, draw: D, functional: F) -> Result<MCEstimate>
where
    T: Send,
    D: Fn(&mut DrawRng) -> T + Sync,
    F: Fn(&T) -> f64 + Sync,
{
    estimate_with(config, draw, functional, summarize_variance)
}

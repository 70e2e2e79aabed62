//! Paired naive/correct augmentation study over simulated censored datasets.
//!
//! Each dataset has a binary covariate, exponential failure times with
//! log-hazard ratio `beta_true` and independent exponential censoring. The
//! naive estimator runs on the censored data; the correct one runs on the
//! uncensored variant of the same subjects, where the partial likelihood is a
//! full rank likelihood and the measure must stay at or below 1.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use super::augment::{ri1_cox_correct, ri1_cox_naive, CoxAugmentation};
use super::data::{SurvivalDataset, SurvivalRecord};
use crate::error::{Error, Result};
use crate::mc::{self, MCConfig};
use crate::measures::RelInfoResult;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationConfig {
    pub n_datasets: usize,
    pub n_subjects: usize,
    pub n_new: usize,
    pub beta_true: f64,
    /// Exponential censoring hazard; 0.315 gives about 20% censoring at
    /// `beta_true = 0.5`.
    pub censoring_rate: f64,
    pub n_draws: usize,
    pub seed: u64,
    #[serde(skip)]
    pub worker_hint: usize,
}

impl Default for ReplicationConfig {
    fn default() -> Self {
        Self {
            n_datasets: 100,
            n_subjects: 20,
            n_new: 5,
            beta_true: 0.5,
            censoring_rate: 0.315,
            n_draws: 2000,
            seed: mc::DEFAULT_SEED,
            worker_hint: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRow {
    pub attempt: u64,
    pub censored_fraction: f64,
    pub beta_hat_censored: f64,
    pub beta_hat_uncensored: f64,
    pub naive: RelInfoResult,
    pub correct_uncensored: RelInfoResult,
}

impl ReplicationRow {
    pub fn naive_exceeds_one(&self) -> bool {
        self.naive.estimate > 1.0
    }

    /// Correct estimate above `1 + 3 SE`.
    pub fn correct_violates_bound(&self) -> bool {
        self.correct_uncensored.estimate > 1.0 + 3.0 * self.correct_uncensored.mc_standard_error
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationSummary {
    pub rows: Vec<ReplicationRow>,
    pub naive_above_one: usize,
    pub fraction_naive_above_one: f64,
    pub correct_bound_violations: usize,
    pub mean_censored_fraction: f64,
    /// Datasets discarded because a fit failed (monotone likelihood etc.).
    pub skipped: usize,
}

/// A censored dataset, its uncensored variant with the true failure times,
/// and the covariates of the new subjects.
pub fn simulate_pair(config: &ReplicationConfig, attempt: u64) -> Result<(SurvivalDataset, SurvivalDataset, Vec<Vec<f64>>)> {
    let mut rng = mc::draw_rng(config.seed, attempt);
    let mut censored = Vec::with_capacity(config.n_subjects);
    let mut full = Vec::with_capacity(config.n_subjects);
    for _ in 0..config.n_subjects {
        let z = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
        let t: f64 = Exp1.sample(&mut rng);
        let t = t / (config.beta_true * z).exp();
        let c: f64 = Exp1.sample(&mut rng);
        let c = c / config.censoring_rate;
        full.push(SurvivalRecord::event(t, vec![z]));
        censored.push(if t <= c {
            SurvivalRecord::event(t, vec![z])
        } else {
            SurvivalRecord::censored(c, vec![z])
        });
    }
    let new_covariates = (0..config.n_new)
        .map(|_| vec![if rng.random_bool(0.5) { 1.0 } else { 0.0 }])
        .collect();
    Ok((SurvivalDataset::new(censored)?, SurvivalDataset::new(full)?, new_covariates))
}

fn is_skippable(e: &Error) -> bool {
    matches!(
        e,
        Error::Separation(_) | Error::Degenerate(_) | Error::RankDeficient(_) | Error::UndefinedMeasure | Error::Instability { .. }
    )
}

pub fn run_replication(config: &ReplicationConfig) -> Result<ReplicationSummary> {
    if config.n_datasets == 0 || config.n_subjects < 2 {
        return Err(Error::Config("need at least one dataset of two or more subjects".into()));
    }
    let max_attempts = 10 * config.n_datasets as u64;
    let mut rows = Vec::with_capacity(config.n_datasets);
    let mut skipped = 0;
    let mut attempt = 0;
    while rows.len() < config.n_datasets {
        if attempt >= max_attempts {
            return Err(Error::EstimationFailure {
                n_effective: rows.len(),
                n_draws: attempt as usize,
            });
        }
        let (censored, full, new_covariates) = simulate_pair(config, attempt)?;
        let mc_config = MCConfig::new(config.n_draws, mc::derive_seed(config.seed, attempt))?.with_workers(config.worker_hint);
        let aug = CoxAugmentation::new(config.n_new, new_covariates)?;
        let outcome = ri1_cox_naive(&censored, &aug, &mc_config)
            .and_then(|naive| ri1_cox_correct(&full, &aug, &mc_config).map(|correct| (naive, correct)));
        match outcome {
            Ok((naive, correct)) => rows.push(ReplicationRow {
                attempt,
                censored_fraction: censored.censored_fraction(),
                beta_hat_censored: naive.fit.beta[0],
                beta_hat_uncensored: correct.fit.beta[0],
                naive: naive.ri,
                correct_uncensored: correct.ri,
            }),
            Err(e) if is_skippable(&e) => skipped += 1,
            Err(e) => return Err(e),
        }
        attempt += 1;
    }
    let naive_above_one = rows.iter().filter(|r| r.naive_exceeds_one()).count();
    let correct_bound_violations = rows.iter().filter(|r| r.correct_violates_bound()).count();
    let mean_censored_fraction = rows.iter().map(|r| r.censored_fraction).sum::<f64>() / rows.len() as f64;
    Ok(ReplicationSummary {
        fraction_naive_above_one: naive_above_one as f64 / rows.len() as f64,
        naive_above_one,
        correct_bound_violations,
        mean_censored_fraction,
        skipped,
        rows,
    })
}

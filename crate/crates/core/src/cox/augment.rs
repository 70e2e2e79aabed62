//! `RI_1` for Cox regression against an augmented sample.
//!
//! The observed lod is the partial-likelihood lod on the partial data. The
//! denominator averages the same lod over augmented partial data, where `n_new`
//! extra subjects are drawn from the fitted proportional-hazards model. The
//! two estimators differ only in what the existing subjects are conditioned on:
//!
//! * correct: existing failure times are redrawn given their ranks, so the
//!   expectation conditions on the partial data;
//! * naive: existing times stay at their observed values, conditioning on the
//!   censored data instead.

use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use super::baseline::{breslow_baseline, BaselineHazard, HazardCurve, TailRule};
use super::data::{extract_rank_data, RankData, SurvivalDataset};
use super::fit::{fit_partial_likelihood, CoxFit};
use super::sampler::{gap_rates, sample_with_rates};
use crate::error::{Error, Result};
use crate::mc::{self, DrawRng, MCConfig};
use crate::measures::RelInfoResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    /// Condition on the partial (rank) data.
    Correct,
    /// Condition on the censored data.
    Naive,
}

pub const CENSORED_CORRECT_NOTE: &str = "censored input: existing failure times redrawn given ranks with each censored subject held at its relative position in its bracketing failure gap; baseline from Breslow on the censored data";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoxAugmentation {
    /// Covariates of the new subjects, one row each.
    pub new_covariates: Vec<Vec<f64>>,
    /// Null coefficient vector; `None` means zero.
    pub beta_null: Option<Vec<f64>>,
    pub tail: TailRule,
    /// Rate of independent exponential censoring of the new subjects.
    pub new_censoring_rate: Option<f64>,
    /// Multiplier applied to the estimated baseline before sampling.
    pub baseline_scale: f64,
}

impl CoxAugmentation {
    /// `n_new` subjects; a single covariate row is recycled for all of them.
    pub fn new(n_new: usize, new_covariates: Vec<Vec<f64>>) -> Result<Self> {
        let rows = match new_covariates.len() {
            n if n == n_new => new_covariates,
            1 => vec![new_covariates[0].clone(); n_new],
            0 if n_new == 0 => Vec::new(),
            n => {
                return Err(Error::Config(format!(
                    "{n} covariate rows given for {n_new} new subjects"
                )))
            }
        };
        Ok(Self {
            new_covariates: rows,
            beta_null: None,
            tail: TailRule::default(),
            new_censoring_rate: None,
            baseline_scale: 1.0,
        })
    }

    pub fn n_new(&self) -> usize {
        self.new_covariates.len()
    }

    pub fn with_beta_null(mut self, beta: Vec<f64>) -> Self {
        self.beta_null = Some(beta);
        self
    }

    pub fn with_tail(mut self, tail: TailRule) -> Self {
        self.tail = tail;
        self
    }

    pub fn with_new_censoring(mut self, rate: f64) -> Self {
        self.new_censoring_rate = Some(rate);
        self
    }

    pub fn with_baseline_scale(mut self, scale: f64) -> Self {
        self.baseline_scale = scale;
        self
    }

    fn validate(&self, dim: usize) -> Result<Vec<f64>> {
        if let Some(row) = self.new_covariates.iter().find(|r| r.len() != dim || r.iter().any(|z| !z.is_finite())) {
            return Err(Error::Config(format!("new-subject covariates {row:?} must be finite with dimension {dim}")));
        }
        if let Some(rate) = self.new_censoring_rate {
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(Error::Config(format!("censoring rate must be positive, got {rate}")));
            }
        }
        if !(self.baseline_scale > 0.0 && self.baseline_scale.is_finite()) {
            return Err(Error::Config(format!("baseline scale must be positive, got {}", self.baseline_scale)));
        }
        let beta_null = self.beta_null.clone().unwrap_or_else(|| vec![0.0; dim]);
        if beta_null.len() != dim || beta_null.iter().any(|b| !b.is_finite()) {
            return Err(Error::Domain(format!("null beta {beta_null:?} must be finite with dimension {dim}")));
        }
        Ok(beta_null)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoxRelInfo {
    pub conditioning: Conditioning,
    pub ri: RelInfoResult,
    pub fit: CoxFit,
    pub beta_null: Vec<f64>,
    pub baseline: BaselineHazard,
}

/// Breslow partial lod computed straight from times, sorted once.
pub(crate) fn partial_lod_from_times(
    times: &[f64],
    events: &[bool],
    covariates: &[Vec<f64>],
    beta_alt: &[f64],
    beta_null: &[f64],
) -> f64 {
    let n = times.len();
    let eta = |beta: &[f64]| -> Vec<f64> {
        covariates
            .iter()
            .map(|z| z.iter().zip(beta).map(|(a, b)| a * b).sum())
            .collect()
    };
    let (e1, e0) = (eta(beta_alt), eta(beta_null));
    let max1 = e1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max0 = e0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[b].total_cmp(&times[a]).then(a.cmp(&b)));

    let (mut s1, mut s0) = (0.0, 0.0);
    let mut lod = 0.0;
    let mut i = 0;
    while i < n {
        let t = times[order[i]];
        let mut j = i;
        while j < n && times[order[j]] == t {
            s1 += (e1[order[j]] - max1).exp();
            s0 += (e0[order[j]] - max0).exp();
            j += 1;
        }
        let (l1, l0) = (max1 + s1.ln(), max0 + s0.ln());
        for &k in &order[i..j] {
            if events[k] {
                lod += (e1[k] - l1) - (e0[k] - l0);
            }
        }
        i = j;
    }
    lod
}

struct Prepared {
    rank: RankData,
    fit: CoxFit,
    beta_null: Vec<f64>,
    baseline: BaselineHazard,
    curve: HazardCurve,
    numerator: f64,
}

fn prepare(data: &SurvivalDataset, aug: &CoxAugmentation) -> Result<Prepared> {
    let beta_null = aug.validate(data.covariate_dim())?;
    let rank = extract_rank_data(data)?;
    let fit = fit_partial_likelihood(&rank)?;
    let times: Vec<f64> = data.records().iter().map(|r| r.time).collect();
    let events: Vec<bool> = data.records().iter().map(|r| r.status.is_event()).collect();
    let numerator = partial_lod_from_times(&times, &events, &rank.covariates, &fit.beta, &beta_null);
    if numerator == 0.0 || !numerator.is_finite() {
        return Err(Error::UndefinedMeasure);
    }
    let baseline = breslow_baseline(data, &fit.beta)?;
    let curve = baseline.rescaled(aug.baseline_scale).curve(aug.tail)?;
    Ok(Prepared {
        rank,
        fit,
        beta_null,
        baseline,
        curve,
        numerator,
    })
}

fn draw_new_subjects(
    aug: &CoxAugmentation,
    beta: &[f64],
    curve: &HazardCurve,
    rng: &mut DrawRng,
    times: &mut Vec<f64>,
    events: &mut Vec<bool>,
) {
    for z in &aug.new_covariates {
        let rate = z.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>().exp();
        let e: f64 = Exp1.sample(rng);
        let t = curve.inverse(e / rate);
        match aug.new_censoring_rate {
            Some(c) => {
                let ce: f64 = Exp1.sample(rng);
                let c = ce / c;
                times.push(t.min(c));
                events.push(t <= c);
            }
            None => {
                times.push(t);
                events.push(true);
            }
        }
    }
}

fn ri1_cox(data: &SurvivalDataset, aug: &CoxAugmentation, mc_config: &MCConfig, conditioning: Conditioning) -> Result<CoxRelInfo> {
    let prep = prepare(data, aug)?;
    let observed_times: Vec<f64> = data.records().iter().map(|r| r.time).collect();
    let mut events: Vec<bool> = data.records().iter().map(|r| r.status.is_event()).collect();
    events.reserve(aug.n_new());
    let mut covariates = prep.rank.covariates.clone();
    covariates.extend(aug.new_covariates.iter().cloned());
    let rates = gap_rates(&prep.rank, &prep.fit.beta);
    let n_old = data.len();

    let lods = mc::draws(mc_config, |_, rng| {
        let mut times = match conditioning {
            Conditioning::Correct => match sample_with_rates(&prep.rank, &rates, &prep.curve, rng) {
                Ok(t) => t,
                Err(_) => return f64::NAN,
            },
            Conditioning::Naive => observed_times.clone(),
        };
        let mut ev = events[..n_old].to_vec();
        draw_new_subjects(aug, &prep.fit.beta, &prep.curve, rng, &mut times, &mut ev);
        partial_lod_from_times(&times, &ev, &covariates, &prep.fit.beta, &prep.beta_null)
    })?;
    let est = mc::summarize_mean(&lods)?;
    let mut ri = RelInfoResult::ratio_of_mc(prep.numerator, &est, mc_config)?;
    ri = ri.with_note(match conditioning {
        Conditioning::Correct => "conditioning on partial (rank) data; existing failure times redrawn given ranks",
        Conditioning::Naive => "conditioning on censored data; existing times held at observed values",
    });
    if conditioning == Conditioning::Correct && data.n_events() < data.len() {
        ri = ri.with_note(CENSORED_CORRECT_NOTE);
    }
    Ok(CoxRelInfo {
        conditioning,
        ri,
        fit: prep.fit,
        beta_null: prep.beta_null,
        baseline: prep.baseline,
    })
}

/// `RI_1` with the expectation conditioned on the partial data.
pub fn ri1_cox_correct(data: &SurvivalDataset, aug: &CoxAugmentation, mc_config: &MCConfig) -> Result<CoxRelInfo> {
    ri1_cox(data, aug, mc_config, Conditioning::Correct)
}

/// `RI_1` with the expectation conditioned on the censored data; may exceed 1.
pub fn ri1_cox_naive(data: &SurvivalDataset, aug: &CoxAugmentation, mc_config: &MCConfig) -> Result<CoxRelInfo> {
    ri1_cox(data, aug, mc_config, Conditioning::Naive)
}

pub fn ri1_cox_with(
    data: &SurvivalDataset,
    aug: &CoxAugmentation,
    mc_config: &MCConfig,
    conditioning: Conditioning,
) -> Result<CoxRelInfo> {
    ri1_cox(data, aug, mc_config, conditioning)
}

//! Binomial observations with a known number of missing trials.
//!
//! The missing trials are exchangeable with the observed ones and missingness
//! is independent of outcome, so `f(Y_co | Y_ob; p)` adds
//! `Binomial(n_missing, p)` successes to the observed count.

use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::DrawRng;
use crate::measures::{ExactExpectation, ExponentialFamily, Model};

/// Default cap on `n_missing` for exact enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinomialObserved {
    pub successes: u64,
    pub n_observed: u64,
    pub n_missing: u64,
}

impl BinomialObserved {
    pub fn new(successes: u64, n_observed: u64, n_missing: u64) -> Result<Self> {
        if n_observed == 0 {
            return Err(Error::InvalidData("n_observed must be positive".into()));
        }
        if successes > n_observed {
            return Err(Error::InvalidData(format!(
                "successes ({successes}) exceed observed trials ({n_observed})"
            )));
        }
        Ok(Self {
            successes,
            n_observed,
            n_missing,
        })
    }

    pub fn n_total(&self) -> u64 {
        self.n_observed + self.n_missing
    }

    /// Completes the record with `k` successes among the missing trials.
    pub fn complete_with(&self, k: u64) -> BinomialComplete {
        debug_assert!(k <= self.n_missing);
        BinomialComplete {
            successes_total: self.successes + k,
            n_total: self.n_total(),
            observed: *self,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BinomialComplete {
    pub successes_total: u64,
    pub n_total: u64,
    /// The record this completion was generated from.
    pub observed: BinomialObserved,
}

impl BinomialComplete {
    pub fn reduce(&self) -> BinomialObserved {
        self.observed
    }

    pub fn missing_successes(&self) -> u64 {
        self.successes_total - self.observed.successes
    }
}

/// `a * ln(b)` with the convention `0 * ln(0) = 0`.
fn xlogy(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * b.ln()
    }
}

/// `x ln p + (n - x) ln(1 - p)`, evaluated as a limit on the boundary.
pub fn log_likelihood(p: f64, successes: f64, trials: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    xlogy(successes, p) + xlogy(trials - successes, 1.0 - p)
}

/// `x ln(alt/null) + (n - x) ln((1-alt)/(1-null))` for interior `alt`, `null`;
/// the log ratios are formed from the differences to keep precision when the
/// two probabilities are close.
pub fn log_likelihood_ratio(alt: f64, null: f64, successes: f64, trials: f64) -> f64 {
    let up = if successes == 0.0 { 0.0 } else { successes * ((alt - null) / null).ln_1p() };
    let failures = trials - successes;
    let down = if failures == 0.0 { 0.0 } else { failures * ((null - alt) / (1.0 - null)).ln_1p() };
    up + down
}

fn lod_or_limit(alt: f64, null: f64, successes: f64, trials: f64) -> f64 {
    if alt > 0.0 && alt < 1.0 && null > 0.0 && null < 1.0 {
        log_likelihood_ratio(alt, null, successes, trials)
    } else {
        log_likelihood(alt, successes, trials) - log_likelihood(null, successes, trials)
    }
}

/// The binomial model with an enumeration oracle for small `n_missing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Binomial {
    pub enumeration_cap: u64,
}

impl Default for Binomial {
    fn default() -> Self {
        Self {
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

pub fn binomial_model() -> Binomial {
    Binomial::default()
}

impl Binomial {
    pub fn with_enumeration_cap(cap: u64) -> Self {
        Self { enumeration_cap: cap }
    }

    /// `sum_k pmf(k; n_missing, theta) * functional(x + k)`.
    pub fn enumerate_expectation<F>(&self, observed: &BinomialObserved, theta: f64, functional: F) -> Result<f64>
    where
        F: Fn(&BinomialComplete) -> f64,
    {
        if observed.n_missing > self.enumeration_cap {
            return Err(Error::OracleUnavailable {
                n_missing: observed.n_missing,
                cap: self.enumeration_cap,
            });
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::Domain(format!("binomial probability {theta} outside [0, 1]")));
        }
        Ok(binomial_pmf(observed.n_missing, theta)
            .into_iter()
            .enumerate()
            .map(|(k, w)| if w == 0.0 { 0.0 } else { w * functional(&observed.complete_with(k as u64)) })
            .sum())
    }
}

/// Exact probabilities of `0..=n` successes.
pub fn binomial_pmf(n: u64, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    let mut coef = 1.0_f64;
    (0..=n)
        .map(|k| {
            let w = coef * p.powi(k as i32) * q.powi((n - k) as i32);
            coef = coef * (n - k) as f64 / (k + 1) as f64;
            w
        })
        .collect()
}

/// Exact expectation with the default enumeration cap.
pub fn enumerate_expectation<F>(observed: &BinomialObserved, theta: f64, functional: F) -> Result<f64>
where
    F: Fn(&BinomialComplete) -> f64,
{
    Binomial::default().enumerate_expectation(observed, theta, functional)
}

/// `RI_1 = n_observed / (n_observed + n_missing)`.
///
/// The lod is linear in the success count and imputation at the observed MLE
/// keeps the success fraction, so the expected complete-data lod is the
/// observed lod scaled by `n_total / n_observed`.
pub fn ri1_closed_form(observed: &BinomialObserved) -> Result<f64> {
    if observed.successes == 0 || observed.successes == observed.n_observed {
        return Err(Error::Boundary(format!(
            "observed proportion {}/{} is on the boundary",
            observed.successes, observed.n_observed
        )));
    }
    Ok(observed.n_observed as f64 / observed.n_total() as f64)
}

impl Model for Binomial {
    type Param = f64;
    type Observed = BinomialObserved;
    type Complete = BinomialComplete;

    fn check_param(&self, theta: &f64) -> Result<()> {
        if (0.0..=1.0).contains(theta) {
            Ok(())
        } else {
            Err(Error::Domain(format!("binomial probability {theta} outside [0, 1]")))
        }
    }

    fn is_interior(&self, theta: &f64) -> bool {
        *theta > 0.0 && *theta < 1.0
    }

    fn param_dim(&self, _: &f64) -> usize {
        1
    }

    fn observed_log_likelihood(&self, theta: &f64, data: &BinomialObserved) -> f64 {
        log_likelihood(*theta, data.successes as f64, data.n_observed as f64)
    }

    fn complete_log_likelihood(&self, theta: &f64, data: &BinomialComplete) -> f64 {
        log_likelihood(*theta, data.successes_total as f64, data.n_total as f64)
    }

    fn observed_lod(&self, alt: &f64, null: &f64, data: &BinomialObserved) -> f64 {
        lod_or_limit(*alt, *null, data.successes as f64, data.n_observed as f64)
    }

    fn complete_lod(&self, alt: &f64, null: &f64, data: &BinomialComplete) -> f64 {
        lod_or_limit(*alt, *null, data.successes_total as f64, data.n_total as f64)
    }

    fn observed_mle(&self, data: &BinomialObserved) -> Result<f64> {
        Ok(data.successes as f64 / data.n_observed as f64)
    }

    fn complete_mle(&self, data: &BinomialComplete) -> Result<f64> {
        Ok(data.successes_total as f64 / data.n_total as f64)
    }

    fn draw_completion(&self, observed: &BinomialObserved, theta: &f64, rng: &mut DrawRng) -> BinomialComplete {
        let k = if observed.n_missing == 0 || *theta == 0.0 {
            0
        } else if *theta == 1.0 {
            observed.n_missing
        } else {
            rand_distr::Binomial::new(observed.n_missing, *theta)
                .expect("probability checked in (0, 1)")
                .sample(rng)
        };
        observed.complete_with(k)
    }

    fn exponential_family(&self) -> Option<&dyn ExponentialFamily<Self>> {
        Some(self)
    }

    fn exact_expectation(&self) -> Option<&dyn ExactExpectation<Self>> {
        Some(self)
    }
}

impl ExponentialFamily<Binomial> for Binomial {
    fn sufficient_statistic(&self, data: &BinomialComplete) -> Vec<f64> {
        vec![data.successes_total as f64, data.n_total as f64]
    }

    fn expected_statistic(&self, observed: &BinomialObserved, theta: &f64) -> Vec<f64> {
        vec![
            observed.successes as f64 + observed.n_missing as f64 * theta,
            observed.n_total() as f64,
        ]
    }

    fn statistic_log_likelihood(&self, theta: &f64, stat: &[f64]) -> f64 {
        log_likelihood(*theta, stat[0], stat[1])
    }

    fn statistic_lod(&self, alt: &f64, null: &f64, stat: &[f64]) -> f64 {
        lod_or_limit(*alt, *null, stat[0], stat[1])
    }

    fn statistic_mle(&self, stat: &[f64]) -> Result<f64> {
        if stat[1] <= 0.0 {
            return Err(Error::InvalidData("no trials in sufficient statistic".into()));
        }
        Ok(stat[0] / stat[1])
    }
}

impl ExactExpectation<Binomial> for Binomial {
    fn expectation(
        &self,
        observed: &BinomialObserved,
        theta: &f64,
        functional: &dyn Fn(&BinomialComplete) -> f64,
    ) -> Result<f64> {
        self.enumerate_expectation(observed, *theta, functional)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{self, MCConfig};
    use crate::measures::{lod, HypothesisPair};

    fn obs(x: u64, n: u64, m: u64) -> BinomialObserved {
        BinomialObserved::new(x, n, m).unwrap()
    }

    #[test]
    fn rejects_invalid_records() {
        assert!(BinomialObserved::new(11, 10, 0).is_err());
        assert!(BinomialObserved::new(0, 0, 3).is_err());
    }

    #[test]
    fn mle_is_sample_proportion() {
        assert_eq!(binomial_model().observed_mle(&obs(30, 50, 0)).unwrap(), 0.6);
    }

    #[test]
    fn completion_without_missing_is_identity() {
        let o = obs(30, 50, 0);
        let mut rng = mc::draw_rng(1, 0);
        let c = binomial_model().draw_completion(&o, &0.6, &mut rng);
        assert_eq!(c.successes_total, 30);
        assert_eq!(c.n_total, 50);
        assert_eq!(c.reduce(), o);
    }

    #[test]
    fn completion_mean_matches_binomial_mean() {
        let o = obs(30, 50, 50);
        let cfg = MCConfig::new(20_000, 5).unwrap();
        let model = binomial_model();
        let est = mc::mc_expectation(&cfg, |rng| model.draw_completion(&o, &0.6, rng), |c| {
            assert_eq!(c.reduce(), o);
            c.missing_successes() as f64
        })
        .unwrap();
        assert!((est.mean - 30.0).abs() <= 3.0 * est.standard_error, "{est:?}");
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(ri1_closed_form(&obs(30, 50, 0)).unwrap(), 1.0);
        assert_eq!(ri1_closed_form(&obs(30, 50, 50)).unwrap(), 0.5);
        assert_eq!(ri1_closed_form(&obs(10, 20, 80)).unwrap(), 0.2);
        assert!(matches!(ri1_closed_form(&obs(0, 20, 5)), Err(Error::Boundary(_))));
        assert!(matches!(ri1_closed_form(&obs(20, 20, 5)), Err(Error::Boundary(_))));
    }

    #[test]
    fn enumeration_normalizes() {
        let e = enumerate_expectation(&obs(30, 50, 10), 0.6, |_| 1.0).unwrap();
        assert!((e - 1.0).abs() < 1e-14);
    }

    #[test]
    fn enumeration_of_success_total() {
        let e = enumerate_expectation(&obs(30, 50, 10), 0.6, |c| c.successes_total as f64).unwrap();
        assert!((e - 36.0).abs() < 1e-12);
    }

    #[test]
    fn enumeration_of_lod_scales_with_sample_size() {
        let model = binomial_model();
        let o = obs(30, 50, 10);
        let pair = HypothesisPair::new(&model, 0.5, 0.6).unwrap();
        let lod_ob = lod(&model, &pair, &o).unwrap().value();
        let e = enumerate_expectation(&o, 0.6, |c| {
            log_likelihood(0.6, c.successes_total as f64, c.n_total as f64)
                - log_likelihood(0.5, c.successes_total as f64, c.n_total as f64)
        })
        .unwrap();
        // independent evaluation in exact rational-weight arithmetic: 1.2081308130413313
        assert!((e - 1.2081308130413313).abs() < 1e-12);
        assert!((e - 1.2 * lod_ob).abs() < 1e-12);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let err = enumerate_expectation(&obs(30, 50, 26), 0.6, |_| 1.0).unwrap_err();
        assert_eq!(err, Error::OracleUnavailable { n_missing: 26, cap: 25 });
        assert!(Binomial::with_enumeration_cap(30)
            .enumerate_expectation(&obs(30, 50, 26), 0.6, |_| 1.0)
            .is_ok());
    }

    #[test]
    fn linear_functional_equals_imputed_statistic() {
        let model = binomial_model();
        for &(x, n, m, t) in &[(3u64, 10u64, 7u64, 0.3), (12, 20, 25, 0.77), (1, 2, 1, 0.5)] {
            let o = obs(x, n, m);
            let stat = model.expected_statistic(&o, &t);
            let f = |c: &BinomialComplete| 2.5 * c.successes_total as f64 - 0.75 * c.n_total as f64;
            let e = enumerate_expectation(&o, t, f).unwrap();
            assert!((e - (2.5 * stat[0] - 0.75 * stat[1])).abs() < 1e-11);
        }
    }

    #[test]
    fn pmf_endpoints() {
        assert_eq!(binomial_pmf(4, 0.0), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(binomial_pmf(3, 1.0), vec![0.0, 0.0, 0.0, 1.0]);
    }
}

//! Sampling failure times conditional on their ranks.
//!
//! On the cumulative-hazard scale `U_i = Lambda_0(T_i)` is exponential with
//! rate `exp(beta.z_i)`. Given the failure order, the gaps between successive
//! ordered `U` values are independent exponentials whose rates are the total
//! risk-set weights, so the conditional law is drawn gap by gap and mapped
//! back through `Lambda_0^{-1}`.

use rand_distr::{Distribution, Exp1};

use super::baseline::HazardCurve;
use super::data::RankData;
use crate::error::{Error, Result};
use crate::mc::DrawRng;

/// Total risk weight for each step of the failure sequence. Tied failures are
/// resolved in `failure_order`, each removing itself before the next step.
pub fn gap_rates(rank: &RankData, beta: &[f64]) -> Vec<f64> {
    let weight: Vec<f64> = rank
        .covariates
        .iter()
        .map(|z| z.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>().exp())
        .collect();
    let mut failed = vec![false; rank.n_subjects()];
    rank.failure_order
        .iter()
        .zip(&rank.risk_sets)
        .map(|(&f, set)| {
            let rate = set.iter().filter(|&&j| !failed[j]).map(|&j| weight[j]).sum();
            failed[f] = true;
            rate
        })
        .collect()
}

/// Draws per-subject times whose ranks reproduce `rank` exactly.
///
/// Failure times follow the gap construction. A censored subject keeps its
/// relative position inside its bracketing failure gap (or its excess time
/// past the last failure), so the censoring pattern of `rank` is preserved.
pub fn sample_times_given_ranks(rank: &RankData, beta: &[f64], curve: &HazardCurve, rng: &mut DrawRng) -> Result<Vec<f64>> {
    let rates = gap_rates(rank, beta);
    sample_with_rates(rank, &rates, curve, rng)
}

pub(crate) fn sample_with_rates(rank: &RankData, rates: &[f64], curve: &HazardCurve, rng: &mut DrawRng) -> Result<Vec<f64>> {
    let mut times = vec![f64::NAN; rank.n_subjects()];
    let mut failure_times = Vec::with_capacity(rates.len());
    let mut u = 0.0;
    let mut last = 0.0;
    for (&f, &rate) in rank.failure_order.iter().zip(rates) {
        let e: f64 = Exp1.sample(rng);
        u += e / rate;
        let t = curve.inverse(u);
        if !(t > last) {
            return Err(Error::InvalidData(format!(
                "sampled failure times not strictly increasing ({last} then {t})"
            )));
        }
        times[f] = t;
        failure_times.push(t);
        last = t;
    }
    for c in &rank.censored {
        let m = c.failures_before;
        let lo = if m == 0 { 0.0 } else { failure_times[m - 1] };
        times[c.subject] = if m < failure_times.len() {
            lo + c.gap_position * (failure_times[m] - lo)
        } else {
            lo + c.gap_position
        };
    }
    Ok(times)
}

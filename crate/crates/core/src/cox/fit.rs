use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::data::RankData;
use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 50;
pub const GRADIENT_TOLERANCE: f64 = 1e-8;
const MAX_HALVINGS: usize = 40;
/// `|beta_j| * range(z_j)` beyond this means the likelihood is monotone.
const DIVERGENCE_BOUND: f64 = 40.0;
/// Information on a coefficient falling below this fraction of its value at
/// `beta = 0` means the likelihood flattened out toward infinity.
const INFORMATION_COLLAPSE: f64 = 1e-6;
const POLISH_STEPS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoxFit {
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub log_partial_likelihood: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Breslow log partial likelihood `sum_k [beta.z_k - log sum_{j in R_k} exp(beta.z_j)]`.
pub fn partial_log_likelihood(rank: &RankData, beta: &[f64]) -> f64 {
    let eta: Vec<f64> = rank.covariates.iter().map(|z| dot(beta, z)).collect();
    rank.failure_order
        .iter()
        .zip(&rank.risk_sets)
        .map(|(&f, set)| eta[f] - log_sum_exp(set.iter().map(|&j| eta[j])))
        .sum()
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `log PL(beta_alt) - log PL(beta_null)`.
pub fn partial_lod(rank: &RankData, beta_alt: &[f64], beta_null: &[f64]) -> f64 {
    partial_log_likelihood(rank, beta_alt) - partial_log_likelihood(rank, beta_null)
}

/// Log partial likelihood, score and observed information at `beta`.
fn derivatives(rank: &RankData, beta: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
    let p = beta.len();
    let eta: Vec<f64> = rank.covariates.iter().map(|z| dot(beta, z)).collect();
    let mut ll = 0.0;
    let mut score = DVector::zeros(p);
    let mut info = DMatrix::zeros(p, p);
    for (&f, set) in rank.failure_order.iter().zip(&rank.risk_sets) {
        let max = set.iter().map(|&j| eta[j]).fold(f64::NEG_INFINITY, f64::max);
        let mut w_sum = 0.0;
        let mut zbar = DVector::zeros(p);
        let mut zz = DMatrix::zeros(p, p);
        for &j in set {
            let w = (eta[j] - max).exp();
            let z = DVector::from_column_slice(&rank.covariates[j]);
            w_sum += w;
            zbar += w * &z;
            zz += w * &z * z.transpose();
        }
        zbar /= w_sum;
        zz /= w_sum;
        ll += eta[f] - max - w_sum.ln();
        score += DVector::from_column_slice(&rank.covariates[f]) - &zbar;
        info += zz - &zbar * zbar.transpose();
    }
    (ll, score, info)
}

/// Whether some risk set has covariate variation in any dimension.
fn has_variation(rank: &RankData) -> bool {
    rank.risk_sets.iter().any(|set| {
        set.windows(2)
            .any(|w| rank.covariates[w[0]] != rank.covariates[w[1]])
    })
}

/// Maximizes the partial likelihood by damped Newton iteration from `beta = 0`.
///
/// A step is halved until the log partial likelihood does not decrease.
pub fn fit_partial_likelihood(rank: &RankData) -> Result<CoxFit> {
    let p = rank.covariate_dim();
    if rank.n_failures() == 0 {
        return Err(Error::Degenerate("no failures".into()));
    }
    if !has_variation(rank) {
        return Err(Error::Degenerate(
            "covariates are constant within every risk set; the partial likelihood is flat".into(),
        ));
    }
    let ranges: Vec<f64> = (0..p)
        .map(|d| {
            let (lo, hi) = rank
                .covariates
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| (lo.min(z[d]), hi.max(z[d])));
            hi - lo
        })
        .collect();

    let mut beta = DVector::zeros(p);
    let (mut ll, mut score, mut info) = derivatives(rank, beta.as_slice());
    let info_at_zero: Vec<f64> = (0..p).map(|d| info[(d, d)]).collect();
    // a concave log partial likelihood still rising past the optimum is monotone
    let collapsed = |info: &DMatrix<f64>, beta: &DVector<f64>, ll: f64| -> Result<()> {
        if (0..p).any(|d| info[(d, d)] < INFORMATION_COLLAPSE * info_at_zero[d]) {
            return Err(Error::Separation(format!("information collapsed at beta = {:?}", beta.as_slice())));
        }
        let doubled: Vec<f64> = beta.iter().map(|b| 2.0 * b).collect();
        if beta.amax() > 0.0 && partial_log_likelihood(rank, &doubled) > ll {
            return Err(Error::Separation(format!("likelihood still increasing beyond beta = {:?}", beta.as_slice())));
        }
        Ok(())
    };
    for iteration in 0..=MAX_ITERATIONS {
        if score.amax() < GRADIENT_TOLERANCE {
            // a few full steps past the tolerance; cheap and matters when the information is small
            for _ in 0..POLISH_STEPS {
                let Some(chol) = info.clone().cholesky() else { break };
                let step = chol.solve(&score);
                let candidate = &beta + &step;
                let cand_ll = partial_log_likelihood(rank, candidate.as_slice());
                if step.amax() == 0.0 || !(cand_ll >= ll) {
                    break;
                }
                beta = candidate;
                (ll, score, info) = derivatives(rank, beta.as_slice());
            }
            collapsed(&info, &beta, ll)?;
            let inv = info
                .clone()
                .cholesky()
                .ok_or_else(|| Error::RankDeficient(format!("information not positive definite at beta = {:?}", beta.as_slice())))?
                .inverse();
            return Ok(CoxFit {
                beta: beta.as_slice().to_vec(),
                se: (0..p).map(|d| inv[(d, d)].sqrt()).collect(),
                log_partial_likelihood: ll,
                iterations: iteration,
            });
        }
        if iteration == MAX_ITERATIONS {
            break;
        }
        let chol = info.clone().cholesky().ok_or_else(|| {
            if iteration == 0 {
                Error::RankDeficient("information matrix singular at beta = 0 (collinear or constant covariates)".into())
            } else {
                Error::Separation(format!("information vanished at beta = {:?}", beta.as_slice()))
            }
        })?;
        let step = chol.solve(&score);
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let candidate = &beta + scale * &step;
            let cand_ll = partial_log_likelihood(rank, candidate.as_slice());
            if cand_ll.is_finite() && cand_ll >= ll {
                accepted = Some(candidate);
                break;
            }
            scale *= 0.5;
        }
        let Some(next) = accepted else {
            // no ascent along the Newton direction: at the optimum up to rounding
            break;
        };
        beta = next;
        if beta.iter().zip(&ranges).any(|(b, r)| (b * r).abs() > DIVERGENCE_BOUND) {
            return Err(Error::Separation(format!("beta = {:?}", beta.as_slice())));
        }
        (ll, score, info) = derivatives(rank, beta.as_slice());
    }
    if score.amax() < 1e-6 {
        collapsed(&info, &beta, ll)?;
        let inv = info
            .cholesky()
            .ok_or_else(|| Error::RankDeficient("information not positive definite at optimum".into()))?
            .inverse();
        return Ok(CoxFit {
            beta: beta.as_slice().to_vec(),
            se: (0..p).map(|d| inv[(d, d)].sqrt()).collect(),
            log_partial_likelihood: ll,
            iterations: MAX_ITERATIONS,
        });
    }
    Err(Error::Separation(format!(
        "no convergence after {MAX_ITERATIONS} iterations, beta = {:?}, gradient {:e}",
        beta.as_slice(),
        score.amax()
    )))
}

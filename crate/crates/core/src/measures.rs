//! Lod scores and relative-information measures over a pluggable model.
//!
//! All lods are natural-log likelihood ratios. A measure is the observed-data
//! lod divided by an expected complete-data lod; the expectation is taken over
//! completions of the missing data drawn from `f(Y_co | Y_ob; theta)`.

use std::fmt::Debug;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mc::{self, DrawRng, MCConfig, MCEstimate};

/// Two draws count as a dominance violation only when the lod at the draw's
/// own MLE falls below the lod at another parameter by more than this relative
/// margin (floating-point cancellation between nearly equal log-likelihoods).
pub const DOMINANCE_TOLERANCE: f64 = 1e-12;

/// A likelihood model with observed data, complete data, and a way to draw the
/// missing part given the observed part.
pub trait Model: Sync {
    type Param: Clone + Debug + PartialEq + Send + Sync;
    type Observed: Sync;
    type Complete: Send + Sync;

    /// Checks that `theta` lies in the (closed) parameter domain.
    fn check_param(&self, theta: &Self::Param) -> Result<()>;

    /// Whether `theta` lies in the open interior of the domain.
    fn is_interior(&self, theta: &Self::Param) -> bool;

    fn param_dim(&self, theta: &Self::Param) -> usize;

    fn observed_log_likelihood(&self, theta: &Self::Param, data: &Self::Observed) -> f64;

    fn complete_log_likelihood(&self, theta: &Self::Param, data: &Self::Complete) -> f64;

    /// `log L(alt) - log L(null)` on observed data. Only called when both
    /// log-likelihoods are finite; models may override with a form that
    /// avoids cancellation.
    fn observed_lod(&self, alt: &Self::Param, null: &Self::Param, data: &Self::Observed) -> f64 {
        self.observed_log_likelihood(alt, data) - self.observed_log_likelihood(null, data)
    }

    /// Complete-data counterpart of [`Model::observed_lod`].
    fn complete_lod(&self, alt: &Self::Param, null: &Self::Param, data: &Self::Complete) -> f64 {
        self.complete_log_likelihood(alt, data) - self.complete_log_likelihood(null, data)
    }

    fn observed_mle(&self, data: &Self::Observed) -> Result<Self::Param>;

    fn complete_mle(&self, data: &Self::Complete) -> Result<Self::Param>;

    /// Draws `Y_co ~ f(Y_co | Y_ob; theta)`.
    fn draw_completion(&self, observed: &Self::Observed, theta: &Self::Param, rng: &mut DrawRng) -> Self::Complete;

    /// Exponential-family structure, when the model declares it.
    fn exponential_family(&self) -> Option<&dyn ExponentialFamily<Self>> {
        None
    }

    /// Exact conditional expectations, when the model can enumerate completions.
    fn exact_expectation(&self) -> Option<&dyn ExactExpectation<Self>> {
        None
    }
}

/// Complete-data log-likelihood as a function of a sufficient statistic.
///
/// The log-likelihood is affine in the statistic, so evaluating it at the
/// conditional expectation of the statistic gives the conditional expectation
/// of the log-likelihood exactly.
pub trait ExponentialFamily<M: Model + ?Sized> {
    fn sufficient_statistic(&self, data: &M::Complete) -> Vec<f64>;

    /// `E[T(Y_co) | Y_ob; theta]`.
    fn expected_statistic(&self, observed: &M::Observed, theta: &M::Param) -> Vec<f64>;

    fn statistic_log_likelihood(&self, theta: &M::Param, stat: &[f64]) -> f64;

    /// Lod as a function of the statistic; override to avoid cancellation.
    fn statistic_lod(&self, alt: &M::Param, null: &M::Param, stat: &[f64]) -> f64 {
        self.statistic_log_likelihood(alt, stat) - self.statistic_log_likelihood(null, stat)
    }

    fn statistic_mle(&self, stat: &[f64]) -> Result<M::Param>;
}

/// Exact `E[g(Y_co) | Y_ob; theta]` by enumeration of the missing data.
pub trait ExactExpectation<M: Model + ?Sized> {
    fn expectation(
        &self,
        observed: &M::Observed,
        theta: &M::Param,
        functional: &dyn Fn(&M::Complete) -> f64,
    ) -> Result<f64>;
}

/// Null and alternative parameter values for a lod score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisPair<P> {
    pub theta_null: P,
    pub theta_alt: P,
}

impl<P: Clone + Debug + PartialEq> HypothesisPair<P> {
    pub fn new<M: Model<Param = P> + ?Sized>(model: &M, theta_null: P, theta_alt: P) -> Result<Self> {
        model.check_param(&theta_null)?;
        model.check_param(&theta_alt)?;
        let (d0, d1) = (model.param_dim(&theta_null), model.param_dim(&theta_alt));
        if d0 != d1 {
            return Err(Error::Domain(format!(
                "null has dimension {d0} but alternative has dimension {d1}"
            )));
        }
        Ok(Self { theta_null, theta_alt })
    }
}

/// Natural-log likelihood ratio.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct LodScore(pub f64);

impl LodScore {
    pub fn value(self) -> f64 {
        self.0
    }

    /// The same score on the log10 scale used in genetics.
    pub fn to_log10(self) -> f64 {
        self.0 / std::f64::consts::LN_10
    }
}

/// How a measure was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    SufficientStatImputation,
    ExactEnumeration,
    MonteCarlo,
}

/// A computed relative-information measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelInfoResult {
    pub estimate: f64,
    /// Zero for exact methods.
    pub mc_standard_error: f64,
    /// Zero for exact methods.
    pub n_draws: usize,
    pub seed: u64,
    pub method: Method,
    pub numerator: f64,
    pub denominator: f64,
    pub notes: Vec<String>,
}

impl RelInfoResult {
    pub fn exact(method: Method, numerator: f64, denominator: f64) -> Self {
        Self {
            estimate: numerator / denominator,
            mc_standard_error: 0.0,
            n_draws: 0,
            seed: 0,
            method,
            numerator,
            denominator,
            notes: Vec::new(),
        }
    }

    /// Ratio with a fixed numerator and a Monte Carlo denominator; the
    /// standard error follows from the delta method.
    pub fn ratio_of_mc(numerator: f64, denominator: &MCEstimate, config: &MCConfig) -> Result<Self> {
        let den = denominator.mean;
        if !(numerator * den > 0.0) {
            return Err(Error::Instability {
                mean: den,
                standard_error: denominator.standard_error,
                n_effective: denominator.n_effective,
            });
        }
        let estimate = numerator / den;
        Ok(Self {
            estimate,
            mc_standard_error: estimate.abs() * denominator.standard_error / den.abs(),
            n_draws: denominator.n_draws(),
            seed: config.seed,
            method: Method::MonteCarlo,
            numerator,
            denominator: den,
            notes: vec!["standard error by delta method: numerator fixed, denominator Monte Carlo".into()],
        })
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

/// Route for the conditional expectation in the denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Route {
    MonteCarlo(MCConfig),
    Imputation,
    Enumeration,
}

fn check_log_likelihoods(alt: f64, null: f64) -> Result<()> {
    if alt == f64::NEG_INFINITY || null == f64::NEG_INFINITY || alt.is_nan() || null.is_nan() {
        return Err(Error::Domain(format!(
            "log-likelihood not finite (alternative {alt}, null {null})"
        )));
    }
    Ok(())
}

/// `log L(theta_alt | data) - log L(theta_null | data)` on observed data.
pub fn lod<M: Model + ?Sized>(model: &M, pair: &HypothesisPair<M::Param>, data: &M::Observed) -> Result<LodScore> {
    check_log_likelihoods(
        model.observed_log_likelihood(&pair.theta_alt, data),
        model.observed_log_likelihood(&pair.theta_null, data),
    )?;
    Ok(LodScore(model.observed_lod(&pair.theta_alt, &pair.theta_null, data)))
}

/// Lod score on complete data.
pub fn lod_complete<M: Model + ?Sized>(
    model: &M,
    pair: &HypothesisPair<M::Param>,
    data: &M::Complete,
) -> Result<LodScore> {
    check_log_likelihoods(
        model.complete_log_likelihood(&pair.theta_alt, data),
        model.complete_log_likelihood(&pair.theta_null, data),
    )?;
    Ok(LodScore(model.complete_lod(&pair.theta_alt, &pair.theta_null, data)))
}

fn complete_lod_value<M: Model + ?Sized>(model: &M, alt: &M::Param, null: &M::Param, data: &M::Complete) -> f64 {
    let a = model.complete_log_likelihood(alt, data);
    let b = model.complete_log_likelihood(null, data);
    if check_log_likelihoods(a, b).is_err() {
        f64::NAN
    } else {
        model.complete_lod(alt, null, data)
    }
}

/// Observed-data MLE, required to be interior for any ratio measure.
fn interior_mle<M: Model + ?Sized>(model: &M, observed: &M::Observed) -> Result<M::Param> {
    let mle = model.observed_mle(observed)?;
    if !model.is_interior(&mle) {
        return Err(Error::Boundary(format!("{mle:?}")));
    }
    Ok(mle)
}

/// Observed lod at `(mle, theta_null)`, rejecting a zero lod.
fn observed_lod_at_mle<M: Model + ?Sized>(
    model: &M,
    observed: &M::Observed,
    theta_null: &M::Param,
) -> Result<(HypothesisPair<M::Param>, f64)> {
    let mle = interior_mle(model, observed)?;
    let pair = HypothesisPair::new(model, theta_null.clone(), mle)?;
    let value = lod(model, &pair, observed)?.value();
    if value == 0.0 || pair.theta_alt == pair.theta_null {
        return Err(Error::UndefinedMeasure);
    }
    Ok((pair, value))
}

/// `RI_1` with lods at `(mle(Y_ob), theta_null)` and the conditional
/// expectation at `mle(Y_ob)`.
///
/// Exponential-family models use sufficient-statistic imputation, which is the
/// exact expectation; other models fall back to Monte Carlo with `engine`.
pub fn ri1<M: Model + ?Sized>(
    model: &M,
    observed: &M::Observed,
    theta_null: &M::Param,
    engine: &MCConfig,
) -> Result<RelInfoResult> {
    let route = if model.exponential_family().is_some() {
        Route::Imputation
    } else {
        Route::MonteCarlo(*engine)
    };
    ri1_via(model, observed, theta_null, route)
}

/// `RI_1` through an explicit expectation route.
pub fn ri1_via<M: Model + ?Sized>(
    model: &M,
    observed: &M::Observed,
    theta_null: &M::Param,
    route: Route,
) -> Result<RelInfoResult> {
    let (pair, numerator) = observed_lod_at_mle(model, observed, theta_null)?;
    let at = pair.theta_alt.clone();
    ratio_measure(model, observed, &pair, &at, numerator, route)
}

/// `RI_1` for a sharp (fixed) hypothesis pair; the expectation is taken at
/// `completion_theta`, which defaults to the observed-data MLE.
pub fn ri1_sharp<M: Model + ?Sized>(
    model: &M,
    observed: &M::Observed,
    pair: &HypothesisPair<M::Param>,
    completion_theta: Option<&M::Param>,
    route: Route,
) -> Result<RelInfoResult> {
    let at = match completion_theta {
        Some(theta) => {
            model.check_param(theta)?;
            theta.clone()
        }
        None => interior_mle(model, observed)?,
    };
    let numerator = lod(model, pair, observed)?.value();
    if numerator == 0.0 {
        return Err(Error::UndefinedMeasure);
    }
    ratio_measure(model, observed, pair, &at, numerator, route)
}

fn ratio_measure<M: Model + ?Sized>(
    model: &M,
    observed: &M::Observed,
    pair: &HypothesisPair<M::Param>,
    at: &M::Param,
    numerator: f64,
    route: Route,
) -> Result<RelInfoResult> {
    let exact = |method, denominator: f64| {
        if !(numerator * denominator > 0.0) {
            return Err(Error::Instability {
                mean: denominator,
                standard_error: 0.0,
                n_effective: 0,
            });
        }
        Ok(RelInfoResult::exact(method, numerator, denominator))
    };
    match route {
        Route::Imputation => {
            let ef = model
                .exponential_family()
                .ok_or_else(|| Error::Unsupported("sufficient-statistic imputation needs an exponential family".into()))?;
            let stat = ef.expected_statistic(observed, at);
            let den = ef.statistic_lod(&pair.theta_alt, &pair.theta_null, &stat);
            exact(Method::SufficientStatImputation, den)
        }
        Route::Enumeration => {
            let ex = model
                .exact_expectation()
                .ok_or_else(|| Error::Unsupported("model has no exact enumeration".into()))?;
            let den = ex.expectation(observed, at, &|c| {
                complete_lod_value(model, &pair.theta_alt, &pair.theta_null, c)
            })?;
            exact(Method::ExactEnumeration, den)
        }
        Route::MonteCarlo(config) => {
            let est = mc::mc_expectation(
                &config,
                |rng| model.draw_completion(observed, at, rng),
                |c| complete_lod_value(model, &pair.theta_alt, &pair.theta_null, c),
            )?;
            RelInfoResult::ratio_of_mc(numerator, &est, &config)
        }
    }
}

/// Orientation note attached to every `RI_0` result.
pub const RI0_ORIENTATION: &str =
    "RI0 oriented as lod(pseudo-complete data imputed under the null) / lod(observed), which lies in (0,1] for exponential families";

/// `RI_0`: impute the complete-data sufficient statistic under the null,
/// treat it as real data, and compare its lod (at its own MLE) with the
/// observed lod.
pub fn ri0<M: Model + ?Sized>(model: &M, observed: &M::Observed, theta_null: &M::Param) -> Result<RelInfoResult> {
    let ef = model
        .exponential_family()
        .ok_or_else(|| Error::Unsupported("RI0 is defined only for exponential-family models".into()))?;
    let (_, observed_lod) = observed_lod_at_mle(model, observed, theta_null)?;
    let stat = ef.expected_statistic(observed, theta_null);
    let imputed_mle = ef.statistic_mle(&stat)?;
    let imputed_lod = ef.statistic_lod(&imputed_mle, theta_null, &stat);
    Ok(RelInfoResult::exact(Method::SufficientStatImputation, imputed_lod, observed_lod).with_note(RI0_ORIENTATION))
}

/// Per-draw ratios `lod(pair | Y_ob) / lod(pair | Y_co)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiYSamples {
    pub observed_lod: f64,
    /// One entry per draw; `+inf` marks a draw whose complete-data lod is zero.
    pub samples: Vec<f64>,
    pub complete_lods: Vec<f64>,
    pub sentinel_count: usize,
    pub seed: u64,
}

impl RiYSamples {
    /// Mean of the finite samples; sentinels are excluded and counted.
    pub fn mean(&self) -> Result<MCEstimate> {
        mc::summarize_mean(&self.samples)
    }

    /// Mean of `1 / RI_y = lod(Y_co) / lod(Y_ob)`, which is finite on every draw.
    pub fn reciprocal_mean(&self) -> Result<MCEstimate> {
        let recip: Vec<f64> = self.complete_lods.iter().map(|c| c / self.observed_lod).collect();
        mc::summarize_mean(&recip)
    }

    /// Sample standard deviation of the finite samples.
    pub fn std_dev(&self) -> f64 {
        match mc::summarize_variance(&self.samples) {
            Ok(v) => v.mean.sqrt(),
            Err(_) => f64::NAN,
        }
    }
}

/// `RI_y` samples with draws from `f(Y_co | Y_ob; mle(Y_ob))`.
pub fn ri_y_samples<M: Model + ?Sized>(
    model: &M,
    observed: &M::Observed,
    pair: &HypothesisPair<M::Param>,
    config: &MCConfig,
) -> Result<RiYSamples> {
    ri_y_samples_with_tolerance(model, observed, pair, config, 0.0)
}

/// As [`ri_y_samples`], treating `|lod(Y_co)| <= zero_tolerance` as zero.
pub fn ri_y_samples_with_tolerance<M: Model + ?Sized>(
    model: &M,
    observed: &M::Observed,
    pair: &HypothesisPair<M::Param>,
    config: &MCConfig,
    zero_tolerance: f64,
) -> Result<RiYSamples> {
    let at = interior_mle(model, observed)?;
    let observed_lod = lod(model, pair, observed)?.value();
    if observed_lod == 0.0 {
        return Err(Error::UndefinedMeasure);
    }
    let complete_lods = mc::draws(config, |_, rng| {
        let c = model.draw_completion(observed, &at, rng);
        complete_lod_value(model, &pair.theta_alt, &pair.theta_null, &c)
    })?;
    let samples: Vec<f64> = complete_lods
        .iter()
        .map(|&c| {
            if c.abs() <= zero_tolerance {
                f64::INFINITY
            } else {
                observed_lod / c
            }
        })
        .collect();
    let sentinel_count = samples.iter().filter(|s| !s.is_finite()).count();
    Ok(RiYSamples {
        observed_lod,
        samples,
        complete_lods,
        sentinel_count,
        seed: config.seed,
    })
}

/// `Var[lod(theta_co, theta_null | Y_co) | Y_ob; mle(Y_ob)] / lod(mle(Y_ob), theta_null | Y_ob)^2`
/// where `theta_co` is recomputed as the MLE of every completed data set.
pub fn lod_ratio_variance<M: Model + ?Sized>(
    model: &M,
    observed: &M::Observed,
    theta_null: &M::Param,
    config: &MCConfig,
) -> Result<RelInfoResult> {
    let (pair, observed_lod) = observed_lod_at_mle(model, observed, theta_null)?;
    let at = pair.theta_alt.clone();
    let var = mc::mc_variance(
        config,
        |rng| model.draw_completion(observed, &at, rng),
        |c| complete_lod_at_own_mle(model, theta_null, c),
    )?;
    let scale = observed_lod * observed_lod;
    Ok(RelInfoResult {
        estimate: var.mean / scale,
        mc_standard_error: var.standard_error / scale,
        n_draws: var.n_draws(),
        seed: config.seed,
        method: Method::MonteCarlo,
        numerator: var.mean,
        denominator: scale,
        notes: vec!["variance standard error from the fourth central moment".into()],
    })
}

fn complete_lod_at_own_mle<M: Model + ?Sized>(model: &M, theta_null: &M::Param, data: &M::Complete) -> f64 {
    match model.complete_mle(data) {
        Ok(mle) => complete_lod_value(model, &mle, theta_null, data),
        Err(_) => f64::NAN,
    }
}

/// Expected complete-data lods at the draw's own MLE and at the fixed
/// observed-data MLE, over shared draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LodGap {
    pub at_complete_mle: MCEstimate,
    pub at_observed_mle: MCEstimate,
    /// Paired per-draw differences.
    pub difference: MCEstimate,
    pub violations: usize,
    pub observed_lod: f64,
}

impl LodGap {
    pub fn gap(&self) -> f64 {
        self.at_complete_mle.mean - self.at_observed_mle.mean
    }

    /// `sqrt(se1^2 + se2^2)`, ignoring the positive correlation between the two.
    pub fn combined_standard_error(&self) -> f64 {
        self.at_complete_mle.standard_error.hypot(self.at_observed_mle.standard_error)
    }
}

pub fn expected_lod_gap<M: Model + ?Sized>(
    model: &M,
    observed: &M::Observed,
    theta_null: &M::Param,
    config: &MCConfig,
) -> Result<LodGap> {
    let (pair, observed_lod) = observed_lod_at_mle(model, observed, theta_null)?;
    let at = pair.theta_alt.clone();
    let pairs = mc::draws(config, |_, rng| {
        let c = model.draw_completion(observed, &at, rng);
        (
            complete_lod_at_own_mle(model, theta_null, &c),
            complete_lod_value(model, &at, theta_null, &c),
        )
    })?;
    let own: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let fixed: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let diff: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
    let violations = pairs
        .iter()
        .filter(|(a, b)| a - b < -DOMINANCE_TOLERANCE * (1.0 + a.abs() + b.abs()))
        .count();
    Ok(LodGap {
        at_complete_mle: mc::summarize_mean(&own)?,
        at_observed_mle: mc::summarize_mean(&fixed)?,
        difference: mc::summarize_mean(&diff)?,
        violations,
        observed_lod,
    })
}

//! Experiment configuration shared by the command line and JSON replay.
//!
//! Each subcommand's argument struct doubles as its serialized form, so a
//! report's `inputs.config` holds every value needed to rerun the experiment.

use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Draws used by the binomial Monte Carlo commands when `--draws` is absent.
pub const DEFAULT_BINOMIAL_DRAWS: usize = 10_000;
/// Draws used by the Cox commands when `--draws` is absent.
pub const DEFAULT_COX_DRAWS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Monte Carlo draws; zero for commands without a Monte Carlo step.
    pub draws: usize,
    /// Display standalone lod scores on the log10 scale.
    pub log10: bool,
    pub experiment: Experiment,
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.experiment.default_draws() > 0 && self.draws < 2 {
            return Err(CliError::Config(format!("draws must be at least 2, got {}", self.draws)));
        }
        self.experiment.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Experiment {
    /// RI1 and RI0 for binomial data with missing trials.
    BinomRi(BinomArgs),
    /// RI1 for a Cox model with new subjects, under naive or correct conditioning.
    CoxRi(CoxArgs),
    /// Per-draw RI_y samples for a sharp binomial hypothesis pair.
    RiY(RiYArgs),
    /// Lod-ratio variance and the expected lod gap for binomial data.
    LodVar(LodVarArgs),
    /// Lod-weighted harmonic combination of per-study RI1 values.
    Combine(CombineArgs),
    /// S_x comparison of two regression designs.
    DesignEval(DesignArgs),
    /// Paired naive/correct Cox study over simulated censored datasets.
    DossReplication(DossArgs),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::BinomRi(_) => "binom-ri",
            Experiment::CoxRi(_) => "cox-ri",
            Experiment::RiY(_) => "ri-y",
            Experiment::LodVar(_) => "lod-var",
            Experiment::Combine(_) => "combine",
            Experiment::DesignEval(_) => "design-eval",
            Experiment::DossReplication(_) => "doss-replication",
        }
    }

    /// Zero marks commands without a Monte Carlo step.
    pub fn default_draws(&self) -> usize {
        match self {
            Experiment::BinomRi(_) | Experiment::RiY(_) | Experiment::LodVar(_) => DEFAULT_BINOMIAL_DRAWS,
            Experiment::CoxRi(_) | Experiment::DossReplication(_) => DEFAULT_COX_DRAWS,
            Experiment::Combine(_) | Experiment::DesignEval(_) => 0,
        }
    }

    fn validate(&self) -> CliResult<()> {
        let unit = |name: &str, p: f64| {
            if p > 0.0 && p < 1.0 {
                Ok(())
            } else {
                Err(CliError::Config(format!("{name} must lie in (0, 1), got {p}")))
            }
        };
        match self {
            Experiment::BinomRi(a) => unit("p0", a.p0),
            Experiment::LodVar(a) => unit("p0", a.p0),
            Experiment::RiY(a) => {
                unit("p0", a.p0)?;
                unit("p1", a.p1)?;
                if !(a.zero_tolerance >= 0.0 && a.zero_tolerance.is_finite()) {
                    return Err(CliError::Config(format!("zero tolerance must be non-negative, got {}", a.zero_tolerance)));
                }
                Ok(())
            }
            Experiment::CoxRi(a) => {
                for (name, v) in [("tail rate", a.tail_rate), ("new censoring rate", a.new_censoring_rate), ("jitter", a.jitter_ties)] {
                    if let Some(v) = v {
                        if !(v > 0.0 && v.is_finite()) {
                            return Err(CliError::Config(format!("{name} must be positive and finite, got {v}")));
                        }
                    }
                }
                Ok(())
            }
            Experiment::Combine(_) => Ok(()),
            Experiment::DesignEval(a) => {
                if a.design_a.is_some() == a.design_a_file.is_some() || a.design_b.is_some() == a.design_b_file.is_some() {
                    return Err(CliError::Config(
                        "give each design exactly once, as --design-a/--design-b or --design-a-file/--design-b-file".into(),
                    ));
                }
                Ok(())
            }
            Experiment::DossReplication(a) => {
                if a.datasets == 0 || a.subjects < 2 {
                    return Err(CliError::Config("need at least one dataset of at least two subjects".into()));
                }
                if !(a.censoring_rate > 0.0 && a.censoring_rate.is_finite()) || !a.beta.is_finite() {
                    return Err(CliError::Config("censoring rate must be positive and beta finite".into()));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouteChoice {
    /// Sufficient-statistic imputation (exact for the binomial).
    Imputation,
    /// Exact enumeration of the missing successes.
    Enumeration,
    /// Monte Carlo completion draws.
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Naive,
    Correct,
    Both,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinomArgs {
    /// Observed successes.
    #[arg(long)]
    pub x: u64,
    /// Observed trials.
    #[arg(long)]
    pub n_obs: u64,
    /// Trials whose outcome is missing.
    #[arg(long, default_value_t = 0)]
    pub n_missing: u64,
    /// Null success probability.
    #[arg(long, default_value_t = 0.5)]
    pub p0: f64,
    #[arg(long, value_enum, default_value_t = RouteChoice::Imputation)]
    pub route: RouteChoice,
    /// Largest missing count the enumeration route accepts.
    #[arg(long, default_value_t = relinfo::binomial::DEFAULT_ENUMERATION_CAP)]
    pub enumeration_cap: u64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiYArgs {
    #[arg(long)]
    pub x: u64,
    #[arg(long)]
    pub n_obs: u64,
    #[arg(long, default_value_t = 0)]
    pub n_missing: u64,
    #[arg(long, default_value_t = 0.5)]
    pub p0: f64,
    /// Sharp alternative success probability.
    #[arg(long)]
    pub p1: f64,
    /// Complete-data lods with absolute value at most this are treated as zero.
    #[arg(long, default_value_t = 0.0)]
    pub zero_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LodVarArgs {
    #[arg(long)]
    pub x: u64,
    #[arg(long)]
    pub n_obs: u64,
    #[arg(long, default_value_t = 0)]
    pub n_missing: u64,
    #[arg(long, default_value_t = 0.5)]
    pub p0: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoxArgs {
    /// Survival CSV with header time,status,cov1..covK.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Correct)]
    pub mode: Mode,
    /// Number of new subjects added to the complete data.
    #[arg(long, default_value_t = 5)]
    pub n_new: usize,
    /// New-subject covariates as rows "a,b;c,d"; one row is recycled.
    /// Defaults to cycling through the observed covariate rows.
    #[arg(long)]
    #[serde(default)]
    pub new_covariates: Option<String>,
    /// Null coefficient vector "b1,b2,..."; defaults to zero.
    #[arg(long)]
    #[serde(default)]
    pub beta_null: Option<String>,
    /// Constant hazard past the last failure; defaults to the last
    /// increment over the last gap.
    #[arg(long)]
    #[serde(default)]
    pub tail_rate: Option<f64>,
    /// Exponential censoring rate for the new subjects.
    #[arg(long)]
    #[serde(default)]
    pub new_censoring_rate: Option<f64>,
    /// Separate tied times by this step before analysis.
    #[arg(long)]
    #[serde(default)]
    pub jitter_ties: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombineArgs {
    /// JSON array of {lod_observed, ri1, label?, pair?} objects.
    #[arg(long)]
    pub studies: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignArgs {
    /// Design expression: a preset (base, base-doubled, interlaced) or
    /// comma-separated terms `x`, `a/b`, `a..=b/d`.
    #[arg(long, conflicts_with = "design_a_file")]
    #[serde(default)]
    pub design_a: Option<String>,
    /// File with one design point per line.
    #[arg(long)]
    #[serde(default)]
    pub design_a_file: Option<PathBuf>,
    #[arg(long, conflicts_with = "design_b_file")]
    #[serde(default)]
    pub design_b: Option<String>,
    #[arg(long)]
    #[serde(default)]
    pub design_b_file: Option<PathBuf>,
    /// Also report S_x about the design mean.
    #[arg(long)]
    #[serde(default)]
    pub centered: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DossArgs {
    #[arg(long, default_value_t = 100)]
    pub datasets: usize,
    #[arg(long, default_value_t = 20)]
    pub subjects: usize,
    #[arg(long, default_value_t = 5)]
    pub n_new: usize,
    /// True coefficient of the single binary covariate.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub beta: f64,
    /// Exponential censoring hazard.
    #[arg(long, default_value_t = 0.315)]
    pub censoring_rate: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let good = r#"{"seed":1,"draws":10,"log10":false,"experiment":{"command":"lod-var","x":3,"n_obs":10,"n_missing":2,"p0":0.5}}"#;
        let cfg: ExperimentConfig = serde_json::from_str(good).unwrap();
        cfg.validate().unwrap();
        let extra_top = good.replace("\"log10\":false", "\"log10\":false,\"colour\":1");
        assert!(serde_json::from_str::<ExperimentConfig>(&extra_top).is_err());
        let extra_inner = good.replace("\"p0\":0.5", "\"p0\":0.5,\"p2\":0.1");
        assert!(serde_json::from_str::<ExperimentConfig>(&extra_inner).is_err());
    }

    #[test]
    fn validation_precedes_computation() {
        let cfg = ExperimentConfig {
            seed: 0,
            draws: 1,
            log10: false,
            experiment: Experiment::LodVar(LodVarArgs { x: 1, n_obs: 2, n_missing: 0, p0: 0.5 }),
        };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig { draws: 100, experiment: Experiment::LodVar(LodVarArgs { x: 1, n_obs: 2, n_missing: 0, p0: 1.0 }), ..cfg };
        assert!(cfg.validate().is_err());
    }
}

//! Maps each experiment onto library calls and shapes the results.

use serde_json::{json, Value};

use relinfo::binomial::{ri1_closed_form, Binomial, BinomialObserved};
use relinfo::combine::{check_shared_pair, combine_weighted_harmonic};
use relinfo::cox::{
    extract_rank_data, ri1_cox_with, run_replication, Conditioning, CoxAugmentation, CoxRelInfo, ReplicationConfig,
    SurvivalDataset, TailRule,
};
use relinfo::design::{self, Design, EXTERNAL_BAYESIAN_VALUES};
use relinfo::measures::{expected_lod_gap, lod_ratio_variance, ri0, ri1_sharp, ri1_via, ri_y_samples_with_tolerance};
use relinfo::{HypothesisPair, LodScore, MCConfig, MCEstimate, Method, RelInfoResult, Route};

use crate::config::*;
use crate::error::{CliError, CliResult};
use crate::input;
use crate::report::Table;

/// Results, tables and warnings of one experiment.
#[derive(Debug, Default)]
pub struct Outcome {
    pub results: Value,
    pub tables: Vec<Table>,
    pub warnings: Vec<String>,
}

fn exact(value: f64, method: Method) -> Value {
    json!({ "estimate": value, "standard_error": 0.0, "method": method })
}

fn monte_carlo(e: &MCEstimate) -> Value {
    json!({
        "estimate": e.mean,
        "standard_error": e.standard_error,
        "method": Method::MonteCarlo,
        "n_effective": e.n_effective,
        "sentinel_count": e.sentinel_count,
    })
}

fn lod_value(lod: f64, log10: bool) -> Value {
    let (value, scale) = if log10 {
        (LodScore(lod).to_log10(), "log10")
    } else {
        (lod, "ln")
    };
    json!({ "estimate": value, "standard_error": 0.0, "method": Method::ClosedForm, "scale": scale })
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn relinfo_row(table: &mut Table, measure: &str, r: &RelInfoResult) {
    table.push(vec![
        measure.to_string(),
        num(r.estimate),
        num(r.mc_standard_error),
        serde_json::to_value(r.method).unwrap().as_str().unwrap_or("").to_string(),
        r.n_draws.to_string(),
    ]);
}

fn summary_table() -> Table {
    Table::new("summary", &["measure", "estimate", "standard_error", "method", "n_draws"])
}

pub fn execute(config: &ExperimentConfig, workers: usize) -> CliResult<Outcome> {
    config.validate()?;
    let mc = || -> CliResult<MCConfig> { Ok(MCConfig::new(config.draws, config.seed)?.with_workers(workers)) };
    match &config.experiment {
        Experiment::BinomRi(a) => binom_ri(a, mc, config.log10),
        Experiment::RiY(a) => ri_y(a, &mc()?, config.log10),
        Experiment::LodVar(a) => lod_var(a, &mc()?, config.log10),
        Experiment::CoxRi(a) => cox_ri(a, &mc()?, config.log10),
        Experiment::Combine(a) => combine(a),
        Experiment::DesignEval(a) => design_eval(a),
        Experiment::DossReplication(a) => doss(a, config, workers),
    }
}

fn observed(x: u64, n_obs: u64, n_missing: u64) -> CliResult<BinomialObserved> {
    Ok(BinomialObserved::new(x, n_obs, n_missing)?)
}

fn observed_json(x: u64, n_obs: u64, n_missing: u64) -> Value {
    json!({ "successes": x, "n_observed": n_obs, "n_missing": n_missing, "mle": x as f64 / n_obs as f64 })
}

fn binom_ri(a: &BinomArgs, mc: impl Fn() -> CliResult<MCConfig>, log10: bool) -> CliResult<Outcome> {
    let obs = observed(a.x, a.n_obs, a.n_missing)?;
    let model = Binomial::with_enumeration_cap(a.enumeration_cap);
    let route = match a.route {
        RouteChoice::Imputation => Route::Imputation,
        RouteChoice::Enumeration => Route::Enumeration,
        RouteChoice::MonteCarlo => Route::MonteCarlo(mc()?),
    };
    let ri1 = ri1_via(&model, &obs, &a.p0, route)?;
    let mut out = Outcome::default();
    let mut table = summary_table();
    relinfo_row(&mut table, "ri1", &ri1);
    let mut results = json!({
        "observed": observed_json(a.x, a.n_obs, a.n_missing),
        "p0": a.p0,
        "observed_lod": lod_value(ri1.numerator, log10),
        "ri1": ri1,
    });
    match ri1_closed_form(&obs) {
        Ok(c) => {
            results["ri1_closed_form"] = exact(c, Method::ClosedForm);
            table.push(vec!["ri1_closed_form".into(), num(c), num(0.0), "closed_form".into(), "0".into()]);
        }
        Err(e) => out.warnings.push(format!("closed form unavailable: {e}")),
    }
    match ri0(&model, &obs, &a.p0) {
        Ok(r) => {
            relinfo_row(&mut table, "ri0", &r);
            results["ri0"] = serde_json::to_value(&r).unwrap();
        }
        Err(e) => out.warnings.push(format!("ri0 unavailable: {e}")),
    }
    out.results = results;
    out.tables.push(table);
    Ok(out)
}

fn ri_y(a: &RiYArgs, mc: &MCConfig, log10: bool) -> CliResult<Outcome> {
    let obs = observed(a.x, a.n_obs, a.n_missing)?;
    let model = Binomial::default();
    let pair = HypothesisPair::new(&model, a.p0, a.p1)?;
    let samples = ri_y_samples_with_tolerance(&model, &obs, &pair, mc, a.zero_tolerance)?;
    let sharp = ri1_sharp(&model, &obs, &pair, None, Route::Imputation)?;
    let recip = samples.reciprocal_mean()?;
    let mut out = Outcome::default();
    let mean = match samples.mean() {
        Ok(m) => monte_carlo(&m),
        Err(e) => {
            out.warnings.push(format!("mean of RI_y unavailable: {e}"));
            Value::Null
        }
    };
    if samples.sentinel_count > 0 {
        out.warnings.push(format!(
            "{} of {} draws had a zero complete-data lod; RI_y is infinite there and excluded from its mean",
            samples.sentinel_count,
            samples.samples.len()
        ));
    }
    let mut table = Table::new("samples", &["draw", "complete_lod", "ri_y"]);
    for (i, (c, r)) in samples.complete_lods.iter().zip(&samples.samples).enumerate() {
        table.push(vec![i.to_string(), num(*c), num(*r)]);
    }
    out.tables.push(table);
    out.results = json!({
        "observed": observed_json(a.x, a.n_obs, a.n_missing),
        "p0": a.p0,
        "p1": a.p1,
        "observed_lod": lod_value(samples.observed_lod, log10),
        "ri_y_mean": mean,
        "ri_y_std_dev": { "estimate": samples.std_dev(), "standard_error": Value::Null, "method": Method::MonteCarlo },
        "reciprocal_ri_y_mean": monte_carlo(&recip),
        "ri1_sharp": sharp,
        "reciprocal_ri1_sharp": exact(1.0 / sharp.estimate, sharp.method),
        "sentinel_count": samples.sentinel_count,
        "n_draws": samples.samples.len(),
        "seed": samples.seed,
    });
    Ok(out)
}

fn lod_var(a: &LodVarArgs, mc: &MCConfig, log10: bool) -> CliResult<Outcome> {
    let obs = observed(a.x, a.n_obs, a.n_missing)?;
    let model = Binomial::default();
    let var = lod_ratio_variance(&model, &obs, &a.p0, mc)?;
    let gap = expected_lod_gap(&model, &obs, &a.p0, mc)?;
    let mut out = Outcome::default();
    if gap.violations > 0 {
        out.warnings.push(format!("{} draws violate lod dominance at the per-draw MLE", gap.violations));
    }
    let mut table = summary_table();
    relinfo_row(&mut table, "lod_ratio_variance", &var);
    table.push(vec!["lod_gap".into(), num(gap.gap()), num(gap.combined_standard_error()), "monte_carlo".into(), mc.n_draws.to_string()]);
    out.tables.push(table);
    out.results = json!({
        "observed": observed_json(a.x, a.n_obs, a.n_missing),
        "p0": a.p0,
        "observed_lod": lod_value(gap.observed_lod, log10),
        "lod_ratio_variance": var,
        "expected_lod_at_complete_mle": monte_carlo(&gap.at_complete_mle),
        "expected_lod_at_observed_mle": monte_carlo(&gap.at_observed_mle),
        "lod_gap": {
            "estimate": gap.gap(),
            "standard_error": gap.combined_standard_error(),
            "paired_standard_error": gap.difference.standard_error,
            "method": Method::MonteCarlo,
        },
        "dominance_violations": gap.violations,
    });
    Ok(out)
}

fn new_subject_rows(a: &CoxArgs, data: &SurvivalDataset) -> CliResult<Vec<Vec<f64>>> {
    match &a.new_covariates {
        Some(text) => input::parse_rows(text, "new covariates"),
        None => Ok((0..a.n_new).map(|i| data.records()[i % data.len()].covariates.clone()).collect()),
    }
}

fn cox_json(r: &CoxRelInfo) -> Value {
    json!({ "conditioning": r.conditioning, "ri1": r.ri })
}

fn cox_ri(a: &CoxArgs, mc: &MCConfig, log10: bool) -> CliResult<Outcome> {
    let mut data = input::read_survival_csv(&a.data)?;
    let mut out = Outcome::default();
    if let Some(eps) = a.jitter_ties {
        data = data.jitter_ties(eps)?;
    }
    if a.mode != Mode::Naive && extract_rank_data(&data)?.has_ties() {
        out.warnings.push(
            "tied times present: correct conditioning redraws distinct times, so completions break the ties (see --jitter-ties)".into(),
        );
    }
    let mut aug = CoxAugmentation::new(a.n_new, new_subject_rows(a, &data)?)?;
    if let Some(b) = &a.beta_null {
        aug = aug.with_beta_null(input::parse_vector(b, "beta null")?);
    }
    if let Some(rate) = a.tail_rate {
        aug = aug.with_tail(TailRule::Rate(rate));
    }
    if let Some(rate) = a.new_censoring_rate {
        aug = aug.with_new_censoring(rate);
    }
    let modes: &[Conditioning] = match a.mode {
        Mode::Naive => &[Conditioning::Naive],
        Mode::Correct => &[Conditioning::Correct],
        Mode::Both => &[Conditioning::Naive, Conditioning::Correct],
    };
    let runs = modes
        .iter()
        .map(|&c| ri1_cox_with(&data, &aug, mc, c))
        .collect::<relinfo::Result<Vec<_>>>()?;
    let first = &runs[0];
    let mut table = summary_table();
    let mut baseline = Table::new("baseline", &["time", "jump"]);
    for (t, j) in first.baseline.jump_times.iter().zip(&first.baseline.jump_sizes) {
        baseline.push(vec![num(*t), num(*j)]);
    }
    let mut results = json!({
        "n_subjects": data.len(),
        "n_events": data.n_events(),
        "censored_fraction": data.censored_fraction(),
        "n_new": a.n_new,
        "fit": {
            "beta": first.fit.beta,
            "standard_error": first.fit.se,
            "method": "newton_partial_likelihood",
            "log_partial_likelihood": first.fit.log_partial_likelihood,
            "iterations": first.fit.iterations,
        },
        "beta_null": first.beta_null,
        "observed_lod": lod_value(first.ri.numerator, log10),
        "new_covariates": aug.new_covariates,
    });
    for r in &runs {
        let key = match r.conditioning {
            Conditioning::Naive => "naive",
            Conditioning::Correct => "correct",
        };
        relinfo_row(&mut table, &format!("ri1_{key}"), &r.ri);
        results[key] = cox_json(r);
        if r.conditioning == Conditioning::Naive && r.ri.estimate > 1.0 {
            out.warnings.push(format!(
                "naive RI1 = {:.6} exceeds 1: conditioning on censored data is not self-efficient",
                r.ri.estimate
            ));
        }
    }
    out.tables.push(table);
    out.tables.push(baseline);
    out.results = results;
    Ok(out)
}

fn combine(a: &CombineArgs) -> CliResult<Outcome> {
    let mut studies = input::read_studies(&a.studies)?;
    for (i, s) in studies.iter_mut().enumerate() {
        if s.label.is_empty() {
            s.label = format!("#{}", i + 1);
        }
    }
    let missing = check_shared_pair(&studies)?;
    let combined = combine_weighted_harmonic(&studies)?;
    let mut out = Outcome::default();
    if !missing.is_empty() {
        out.warnings.push(format!(
            "studies without a recorded hypothesis pair are assumed to share one: {}",
            missing.join(", ")
        ));
    }
    let total: f64 = studies.iter().map(|s| s.lod_observed).sum();
    let mut table = Table::new("studies", &["label", "lod_observed", "ri1", "weight"]);
    let per_study: Vec<Value> = studies
        .iter()
        .map(|s| {
            let w = s.lod_observed / total;
            table.push(vec![s.label.clone(), num(s.lod_observed), num(s.ri1), num(w)]);
            json!({ "label": s.label, "lod_observed": s.lod_observed, "ri1": s.ri1, "weight": w })
        })
        .collect();
    out.tables.push(table);
    out.results = json!({
        "n_studies": studies.len(),
        "combined_ri1": exact(combined, Method::ClosedForm),
        "studies": per_study,
    });
    Ok(out)
}

fn load_design(expr: &Option<String>, file: &Option<std::path::PathBuf>) -> CliResult<(Design, String)> {
    match (expr, file) {
        (Some(e), None) => Ok((e.parse::<Design>()?, e.clone())),
        (None, Some(f)) => Ok((input::read_design_file(f)?, f.display().to_string())),
        _ => Err(CliError::Config("each design needs exactly one of an expression or a file".into())),
    }
}

fn percent(r: f64) -> String {
    format!("{:.0}%", 100.0 * r)
}

fn design_eval(a: &DesignArgs) -> CliResult<Outcome> {
    let (da, name_a) = load_design(&a.design_a, &a.design_a_file)?;
    let (db, name_b) = load_design(&a.design_b, &a.design_b_file)?;
    let ratio = design::variance_ratio(&da, &db)?;
    let (reported_a, reported_b) = EXTERNAL_BAYESIAN_VALUES;
    let mut results = json!({
        "design_a": { "source": name_a, "points": da.points() },
        "design_b": { "source": name_b, "points": db.points() },
        "sx_a": exact(design::sx(&da), Method::ClosedForm),
        "sx_b": exact(design::sx(&db), Method::ClosedForm),
        "variance_ratio": {
            "estimate": ratio,
            "standard_error": 0.0,
            "method": Method::ClosedForm,
            "display": percent(ratio),
            "definition": "S_x(b) / S_x(a) = Var(beta_hat | a) / Var(beta_hat | b) for regression through the origin",
        },
        "external_contrast": {
            "reported": [reported_a, reported_b],
            "reported_ratio": reported_a / reported_b,
            "note": "a Bayesian testing measure was reported at these values for the two designs; S_x arithmetic does not reproduce that ratio and no ground truth exists for it",
        },
    });
    let mut table = Table::new("summary", &["measure", "estimate", "standard_error", "method", "n_draws"]);
    table.push(vec!["sx_a".into(), num(design::sx(&da)), num(0.0), "closed_form".into(), "0".into()]);
    table.push(vec!["sx_b".into(), num(design::sx(&db)), num(0.0), "closed_form".into(), "0".into()]);
    table.push(vec!["variance_ratio".into(), num(ratio), num(0.0), "closed_form".into(), "0".into()]);
    if a.centered {
        let rc = design::variance_ratio_centered(&da, &db)?;
        results["centered"] = json!({
            "sx_a": exact(design::sx_centered(&da), Method::ClosedForm),
            "sx_b": exact(design::sx_centered(&db), Method::ClosedForm),
            "variance_ratio": {
                "estimate": rc,
                "standard_error": 0.0,
                "method": Method::ClosedForm,
                "display": percent(rc),
            },
        });
        table.push(vec!["variance_ratio_centered".into(), num(rc), num(0.0), "closed_form".into(), "0".into()]);
    }
    Ok(Outcome {
        results,
        tables: vec![table],
        warnings: Vec::new(),
    })
}

fn doss(a: &DossArgs, config: &ExperimentConfig, workers: usize) -> CliResult<Outcome> {
    let rc = ReplicationConfig {
        n_datasets: a.datasets,
        n_subjects: a.subjects,
        n_new: a.n_new,
        beta_true: a.beta,
        censoring_rate: a.censoring_rate,
        n_draws: config.draws,
        seed: config.seed,
        worker_hint: workers,
    };
    let s = run_replication(&rc)?;
    let mut out = Outcome::default();
    if s.skipped > 0 {
        out.warnings.push(format!("{} simulated datasets could not be fitted and were replaced", s.skipped));
    }
    if s.correct_bound_violations > 0 {
        out.warnings.push(format!(
            "{} correct-conditioning estimates exceed 1 + 3 SE",
            s.correct_bound_violations
        ));
    }
    let mut table = Table::new(
        "datasets",
        &[
            "attempt",
            "censored_fraction",
            "beta_hat_censored",
            "beta_hat_uncensored",
            "ri1_naive",
            "ri1_naive_se",
            "ri1_correct_uncensored",
            "ri1_correct_uncensored_se",
        ],
    );
    for r in &s.rows {
        table.push(vec![
            r.attempt.to_string(),
            num(r.censored_fraction),
            num(r.beta_hat_censored),
            num(r.beta_hat_uncensored),
            num(r.naive.estimate),
            num(r.naive.mc_standard_error),
            num(r.correct_uncensored.estimate),
            num(r.correct_uncensored.mc_standard_error),
        ]);
    }
    out.tables.push(table);
    let n = s.rows.len() as f64;
    let p = s.fraction_naive_above_one;
    out.results = json!({
        "design": rc,
        "n_datasets": s.rows.len(),
        "fraction_naive_above_one": {
            "estimate": p,
            "standard_error": (p * (1.0 - p) / n).sqrt(),
            "method": "binomial_proportion",
        },
        "naive_above_one": s.naive_above_one,
        "correct_bound_violations": s.correct_bound_violations,
        "mean_censored_fraction": s.mean_censored_fraction,
        "skipped": s.skipped,
        "rows": s.rows,
    });
    Ok(out)
}

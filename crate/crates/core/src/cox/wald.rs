use crate::error::{Error, Result};

/// Relative information for Wald-type statistics after associating each
/// statistic with a normal model of known variance.
///
/// Under a normal model `theta_hat ~ N(theta, V)` the lod against `theta_null`
/// at the MLE is `(theta_hat - theta_null)^2 / (2V)`. The denominator is the
/// expected complete-data lod
/// `E[(theta_co - theta_null)^2] / (2 V_co) = (Var[theta_co | obs] + (mean_co - theta_null)^2) / (2 V_co)`.
/// When the complete-data statistic nests the observed one coherently
/// (`V_co <= V_ob`), `Var[theta_co | obs] = V_co (V_ob - V_co) / V_ob`; for an
/// incoherent pair (`V_co > V_ob`) no nesting exists and the term is zero,
/// which is how the measure ends up above 1.
pub fn ri_w_wald(
    observed_stat: f64,
    observed_var: f64,
    complete_stat_mean: f64,
    complete_stat_var: f64,
    theta_null: f64,
) -> Result<f64> {
    for (name, v) in [("observed", observed_var), ("complete", complete_stat_var)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("{name} variance must be positive and finite, got {v}")));
        }
    }
    if ![observed_stat, complete_stat_mean, theta_null].iter().all(|x| x.is_finite()) {
        return Err(Error::Domain("statistics must be finite".into()));
    }
    let observed_lod = (observed_stat - theta_null).powi(2) / (2.0 * observed_var);
    if observed_lod == 0.0 {
        return Ok(0.0);
    }
    let conditional_var = (complete_stat_var * (observed_var - complete_stat_var) / observed_var).max(0.0);
    let expected_complete = (conditional_var + (complete_stat_mean - theta_null).powi(2)) / (2.0 * complete_stat_var);
    if expected_complete == 0.0 {
        return Err(Error::UndefinedMeasure);
    }
    Ok(observed_lod / expected_complete)
}

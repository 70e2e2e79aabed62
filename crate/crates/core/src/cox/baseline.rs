use serde::Serialize;

use super::data::SurvivalDataset;
use crate::error::{Error, Result};

/// Step-function estimate of the baseline cumulative hazard.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineHazard {
    pub jump_times: Vec<f64>,
    pub jump_sizes: Vec<f64>,
}

/// How the cumulative hazard continues past the last jump.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailRule {
    /// Constant hazard equal to the last increment divided by the last gap.
    #[default]
    LastIncrementOverGap,
    /// Constant hazard with the given rate.
    Rate(f64),
}

impl BaselineHazard {
    pub fn is_empty(&self) -> bool {
        self.jump_times.is_empty()
    }

    /// `Lambda_0(t)` as a right-continuous step function.
    pub fn cumulative(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&s| s <= t);
        self.jump_sizes[..k].iter().sum()
    }

    /// Multiplies every increment by `c`.
    pub fn rescaled(&self, c: f64) -> Self {
        Self {
            jump_times: self.jump_times.clone(),
            jump_sizes: self.jump_sizes.iter().map(|s| s * c).collect(),
        }
    }

    /// Continuous, strictly increasing version for sampling: linear
    /// interpolation through `(0, 0)` and the step corners, then a constant
    /// hazard tail.
    pub fn curve(&self, tail: TailRule) -> Result<HazardCurve> {
        if self.is_empty() {
            return Err(Error::InvalidData("baseline hazard has no jumps".into()));
        }
        let mut knots_t = vec![0.0];
        let mut knots_h = vec![0.0];
        let mut h = 0.0;
        for (&t, &s) in self.jump_times.iter().zip(&self.jump_sizes) {
            h += s;
            knots_t.push(t);
            knots_h.push(h);
        }
        let n = knots_t.len();
        let tail_rate = match tail {
            TailRule::LastIncrementOverGap => {
                (knots_h[n - 1] - knots_h[n - 2]) / (knots_t[n - 1] - knots_t[n - 2])
            }
            TailRule::Rate(r) => r,
        };
        HazardCurve::new(knots_t, knots_h, tail_rate)
    }
}

/// Piecewise-linear cumulative hazard with a linear tail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HazardCurve {
    knots_t: Vec<f64>,
    knots_h: Vec<f64>,
    tail_rate: f64,
}

impl HazardCurve {
    fn new(knots_t: Vec<f64>, knots_h: Vec<f64>, tail_rate: f64) -> Result<Self> {
        if !(tail_rate > 0.0 && tail_rate.is_finite()) {
            return Err(Error::InvalidData(format!("tail hazard rate must be positive, got {tail_rate}")));
        }
        let increasing = knots_t.windows(2).all(|w| w[1] > w[0]) && knots_h.windows(2).all(|w| w[1] > w[0]);
        if !increasing {
            return Err(Error::InvalidData("cumulative hazard knots must be strictly increasing".into()));
        }
        Ok(Self { knots_t, knots_h, tail_rate })
    }

    /// `Lambda(t) = rate * t`.
    pub fn linear(rate: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![0.0], rate)
    }

    pub fn tail_rate(&self) -> f64 {
        self.tail_rate
    }

    pub fn cumulative(&self, t: f64) -> f64 {
        let n = self.knots_t.len();
        if t >= self.knots_t[n - 1] {
            return self.knots_h[n - 1] + self.tail_rate * (t - self.knots_t[n - 1]);
        }
        let k = self.knots_t.partition_point(|&s| s <= t);
        let (t0, t1) = (self.knots_t[k - 1], self.knots_t[k]);
        let (h0, h1) = (self.knots_h[k - 1], self.knots_h[k]);
        h0 + (h1 - h0) * (t - t0) / (t1 - t0)
    }

    /// `Lambda^{-1}(u)` for `u >= 0`.
    pub fn inverse(&self, u: f64) -> f64 {
        let n = self.knots_h.len();
        if u >= self.knots_h[n - 1] {
            return self.knots_t[n - 1] + (u - self.knots_h[n - 1]) / self.tail_rate;
        }
        let k = self.knots_h.partition_point(|&s| s <= u);
        let (t0, t1) = (self.knots_t[k - 1], self.knots_t[k]);
        let (h0, h1) = (self.knots_h[k - 1], self.knots_h[k]);
        t0 + (t1 - t0) * (u - h0) / (h1 - h0)
    }
}

/// Breslow estimator: a jump `d_i / sum_{j at risk} exp(beta.z_j)` at each
/// distinct event time, `d_i` the number of events there.
pub fn breslow_baseline(data: &SurvivalDataset, beta: &[f64]) -> Result<BaselineHazard> {
    if beta.len() != data.covariate_dim() || beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Domain(format!("beta {beta:?} must be finite with dimension {}", data.covariate_dim())));
    }
    let records = data.records();
    let risk: Vec<f64> = records
        .iter()
        .map(|r| r.covariates.iter().zip(beta).map(|(z, b)| z * b).sum::<f64>().exp())
        .collect();
    let mut event_times: Vec<f64> = records.iter().filter(|r| r.status.is_event()).map(|r| r.time).collect();
    event_times.sort_by(f64::total_cmp);
    event_times.dedup();

    let mut jump_sizes = Vec::with_capacity(event_times.len());
    for &t in &event_times {
        let d = records.iter().filter(|r| r.status.is_event() && r.time == t).count() as f64;
        let at_risk: f64 = records.iter().zip(&risk).filter(|(r, _)| r.time >= t).map(|(_, w)| w).sum();
        if !(at_risk > 0.0) {
            return Err(Error::InvalidData(format!("empty risk set at event time {t}")));
        }
        jump_sizes.push(d / at_risk);
    }
    Ok(BaselineHazard {
        jump_times: event_times,
        jump_sizes,
    })
}

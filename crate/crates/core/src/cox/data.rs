use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Event,
    Censored,
}

impl Status {
    pub fn is_event(self) -> bool {
        self == Status::Event
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRecord {
    pub time: f64,
    pub status: Status,
    pub covariates: Vec<f64>,
}

impl SurvivalRecord {
    pub fn event(time: f64, covariates: Vec<f64>) -> Self {
        Self {
            time,
            status: Status::Event,
            covariates,
        }
    }

    pub fn censored(time: f64, covariates: Vec<f64>) -> Self {
        Self {
            time,
            status: Status::Censored,
            covariates,
        }
    }
}

/// Right-censored survival data (one record per subject).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalDataset {
    records: Vec<SurvivalRecord>,
    covariate_dim: usize,
}

impl SurvivalDataset {
    pub fn new(records: Vec<SurvivalRecord>) -> Result<Self> {
        let covariate_dim = records.first().map(|r| r.covariates.len()).unwrap_or(0);
        if covariate_dim == 0 {
            return Err(Error::InvalidData("dataset needs at least one record with covariates".into()));
        }
        for (i, r) in records.iter().enumerate() {
            if !(r.time > 0.0 && r.time.is_finite()) {
                return Err(Error::InvalidData(format!("record {i}: time must be positive and finite, got {}", r.time)));
            }
            if r.covariates.len() != covariate_dim {
                return Err(Error::InvalidData(format!(
                    "record {i}: expected {covariate_dim} covariates, got {}",
                    r.covariates.len()
                )));
            }
            if r.covariates.iter().any(|z| !z.is_finite()) {
                return Err(Error::InvalidData(format!("record {i}: non-finite covariate")));
            }
        }
        Ok(Self { records, covariate_dim })
    }

    pub fn records(&self) -> &[SurvivalRecord] {
        &self.records
    }

    pub fn covariate_dim(&self) -> usize {
        self.covariate_dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_events(&self) -> usize {
        self.records.iter().filter(|r| r.status.is_event()).count()
    }

    pub fn censored_fraction(&self) -> f64 {
        1.0 - self.n_events() as f64 / self.len() as f64
    }

    /// The same subjects with every record treated as an observed event.
    pub fn uncensored(&self) -> Self {
        Self {
            records: self
                .records
                .iter()
                .map(|r| SurvivalRecord {
                    status: Status::Event,
                    ..r.clone()
                })
                .collect(),
            covariate_dim: self.covariate_dim,
        }
    }

    /// Applies a strictly increasing map to every time.
    pub fn map_times(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.records
                .iter()
                .map(|r| SurvivalRecord {
                    time: f(r.time),
                    ..r.clone()
                })
                .collect(),
        )
    }

    /// Breaks ties deterministically: the `j`-th record (in input order) sharing
    /// a time gets `time + j * epsilon`.
    pub fn jitter_ties(&self, epsilon: f64) -> Result<Self> {
        let mut seen: Vec<(f64, usize)> = Vec::new();
        let records = self
            .records
            .iter()
            .map(|r| {
                let j = match seen.iter_mut().find(|(t, _)| *t == r.time) {
                    Some((_, c)) => {
                        *c += 1;
                        *c
                    }
                    None => {
                        seen.push((r.time, 0));
                        0
                    }
                };
                SurvivalRecord {
                    time: r.time + j as f64 * epsilon,
                    ..r.clone()
                }
            })
            .collect();
        Self::new(records)
    }
}

/// Where a censored subject sits relative to the failures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CensoredSubject {
    pub subject: usize,
    /// Number of failures at or before the censoring time; the subject belongs
    /// to exactly those failures' risk sets.
    pub failures_before: usize,
    /// Position inside the bracketing failure gap, in `[0, 1)`; for subjects
    /// censored after the last failure, the excess time past it.
    pub gap_position: f64,
}

/// Cox's partial data: failure order, risk sets and covariates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankData {
    /// Subject ids in failure order (ties broken by subject id).
    pub failure_order: Vec<usize>,
    /// Risk set of each failure, in the same order; tied failures share one
    /// risk set (Breslow).
    pub risk_sets: Vec<Vec<usize>>,
    /// Per-subject covariates.
    pub covariates: Vec<Vec<f64>>,
    pub censored: Vec<CensoredSubject>,
}

impl RankData {
    pub fn n_subjects(&self) -> usize {
        self.covariates.len()
    }

    pub fn n_failures(&self) -> usize {
        self.failure_order.len()
    }

    pub fn covariate_dim(&self) -> usize {
        self.covariates.first().map_or(0, Vec::len)
    }

    /// Whether two failures at adjacent positions share a risk set.
    pub fn has_ties(&self) -> bool {
        self.risk_sets.windows(2).any(|w| w[0].len() == w[1].len())
    }
}

/// Projects censored data onto its partial (rank) data.
pub fn extract_rank_data(data: &SurvivalDataset) -> Result<RankData> {
    let records = data.records();
    let mut events: Vec<usize> = (0..records.len()).filter(|&i| records[i].status.is_event()).collect();
    if events.is_empty() {
        return Err(Error::Degenerate("no events in dataset".into()));
    }
    events.sort_by(|&a, &b| records[a].time.total_cmp(&records[b].time).then(a.cmp(&b)));

    // subjects sorted by time once; a risk set is a suffix of this order
    let mut by_time: Vec<usize> = (0..records.len()).collect();
    by_time.sort_by(|&a, &b| records[a].time.total_cmp(&records[b].time).then(a.cmp(&b)));

    let risk_sets = events
        .iter()
        .map(|&f| {
            let t = records[f].time;
            let start = by_time.partition_point(|&j| records[j].time < t);
            let mut set = by_time[start..].to_vec();
            set.sort_unstable();
            set
        })
        .collect();

    let failure_times: Vec<f64> = events.iter().map(|&f| records[f].time).collect();
    let censored = (0..records.len())
        .filter(|&i| !records[i].status.is_event())
        .map(|i| {
            let c = records[i].time;
            let m = failure_times.partition_point(|&t| t <= c);
            let lo = if m == 0 { 0.0 } else { failure_times[m - 1] };
            let gap_position = if m < failure_times.len() {
                (c - lo) / (failure_times[m] - lo)
            } else {
                c - lo
            };
            CensoredSubject {
                subject: i,
                failures_before: m,
                gap_position,
            }
        })
        .collect();

    Ok(RankData {
        failure_order: events,
        risk_sets,
        covariates: records.iter().map(|r| r.covariates.clone()).collect(),
        censored,
    })
}

//! Combining `RI_1` across independent studies.
//!
//! With log-likelihoods additive across studies and every study's lod taken at
//! one shared hypothesis pair, the pooled measure is
//! `sum(lod_i) / sum(E[lod_co_i])`. Writing `E[lod_co_i] = lod_i / RI_i` gives
//! the weighted harmonic mean `(sum w_i / RI_i)^-1` with `w_i = lod_i / sum lod`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hypothesis pair a study's lod was evaluated at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyPair {
    pub theta_null: Vec<f64>,
    pub theta_alt: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySummary {
    pub lod_observed: f64,
    pub ri1: f64,
    #[serde(default)]
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<StudyPair>,
}

impl StudySummary {
    pub fn new(label: impl Into<String>, lod_observed: f64, ri1: f64) -> Result<Self> {
        let s = Self {
            lod_observed,
            ri1,
            label: label.into(),
            pair: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lod_observed > 0.0 && self.lod_observed.is_finite()) {
            return Err(Error::Domain(format!(
                "study '{}': observed lod must be positive, got {}",
                self.label, self.lod_observed
            )));
        }
        if !(self.ri1 > 0.0 && self.ri1 <= 1.0) {
            return Err(Error::Domain(format!(
                "study '{}': ri1 must lie in (0, 1], got {}",
                self.label, self.ri1
            )));
        }
        Ok(())
    }

    pub fn with_pair(mut self, theta_null: Vec<f64>, theta_alt: Vec<f64>) -> Self {
        self.pair = Some(StudyPair { theta_null, theta_alt });
        self
    }
}

/// Rejects study sets whose recorded hypothesis pairs differ; the harmonic
/// identity with the pooled measure needs one shared pair. Returns the labels
/// of studies that record no pair.
pub fn check_shared_pair(studies: &[StudySummary]) -> Result<Vec<String>> {
    let mut recorded = studies.iter().filter_map(|s| s.pair.as_ref().map(|p| (s, p)));
    if let Some((first, pair)) = recorded.next() {
        if let Some((other, _)) = recorded.find(|(_, p)| *p != pair) {
            return Err(Error::InvalidData(format!(
                "studies '{}' and '{}' were evaluated at different hypothesis pairs; evaluate every study at one shared pair (e.g. the pooled MLE)",
                first.label, other.label
            )));
        }
    }
    Ok(studies.iter().filter(|s| s.pair.is_none()).map(|s| s.label.clone()).collect())
}

/// Lod-weighted harmonic mean of per-study `RI_1` values.
pub fn combine_weighted_harmonic(studies: &[StudySummary]) -> Result<f64> {
    if studies.is_empty() {
        return Err(Error::InvalidData("no studies to combine".into()));
    }
    for s in studies {
        s.validate()?;
    }
    let total_lod: f64 = studies.iter().map(|s| s.lod_observed).sum();
    let expected_complete: f64 = studies.iter().map(|s| s.lod_observed / s.ri1).sum();
    Ok(total_lod / expected_complete)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_study_is_identity() {
        let s = StudySummary::new("a", 2.0, 0.37).unwrap();
        assert!((combine_weighted_harmonic(&[s]).unwrap() - 0.37).abs() < 1e-15);
    }

    #[test]
    fn mixed_pairs_rejected() {
        let a = StudySummary::new("a", 1.0, 0.5).unwrap().with_pair(vec![0.5], vec![0.6]);
        let b = StudySummary::new("b", 1.0, 0.5).unwrap().with_pair(vec![0.5], vec![0.7]);
        let c = StudySummary::new("c", 1.0, 0.5).unwrap();
        assert!(matches!(check_shared_pair(&[a.clone(), b]), Err(Error::InvalidData(_))));
        assert_eq!(check_shared_pair(&[a.clone(), a, c]).unwrap(), vec!["c".to_string()]);
    }

    #[test]
    fn identical_studies() {
        let s = StudySummary::new("a", 1.3, 0.6).unwrap();
        let r = combine_weighted_harmonic(&[s.clone(), s]).unwrap();
        assert!((r - 0.6).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(combine_weighted_harmonic(&[]).is_err());
        let bad = StudySummary {
            lod_observed: -1.0,
            ri1: 0.5,
            label: "neg".into(),
            pair: None,
        };
        assert!(matches!(combine_weighted_harmonic(&[bad]), Err(Error::Domain(_))));
        assert!(StudySummary::new("x", 1.0, 1.5).is_err());
        assert!(StudySummary::new("x", 0.0, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn bounded_and_order_invariant(
            v in prop::collection::vec((0.01f64..50.0, 0.01f64..=1.0), 1..8)
        ) {
            let studies: Vec<_> = v.iter().enumerate()
                .map(|(i, &(l, r))| StudySummary::new(format!("s{i}"), l, r).unwrap())
                .collect();
            let c = combine_weighted_harmonic(&studies).unwrap();
            let lo = v.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            let hi = v.iter().map(|p| p.1).fold(0.0, f64::max);
            prop_assert!(c >= lo * (1.0 - 1e-12) && c <= hi * (1.0 + 1e-12));
            let mut rev = studies.clone();
            rev.reverse();
            let c2 = combine_weighted_harmonic(&rev).unwrap();
            prop_assert!((c - c2).abs() <= 1e-12 * c);
        }
    }
}

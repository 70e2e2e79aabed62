//! Harmonic combination of per-study measures against the pooled
//! full-likelihood computation on the concatenated data.

use proptest::prelude::*;
use relinfo::binomial::{binomial_model, BinomialObserved};
use relinfo::combine::{check_shared_pair, combine_weighted_harmonic, StudySummary};
use relinfo::measures::ri1_sharp;
use relinfo::{Error, HypothesisPair, Route};

/// Pooled `RI_1` written out: the complete-data lod is linear in the success
/// count, whose conditional mean is `x + n_missing * p_alt`.
fn pooled_oracle(studies: &[BinomialObserved], null: f64) -> f64 {
    let x: f64 = studies.iter().map(|s| s.successes as f64).sum();
    let n: f64 = studies.iter().map(|s| s.n_observed as f64).sum();
    let m: f64 = studies.iter().map(|s| s.n_missing as f64).sum();
    let alt = x / n;
    let lod = |x: f64, n: f64| x * (alt / null).ln() + (n - x) * ((1.0 - alt) / (1.0 - null)).ln();
    lod(x, n) / lod(x + m * alt, n + m)
}

/// Per-study summaries at the shared pair (null, pooled MLE), with the
/// expectation taken at the pooled MLE.
fn summaries(studies: &[BinomialObserved], null: f64) -> Vec<StudySummary> {
    let model = binomial_model();
    let x: u64 = studies.iter().map(|s| s.successes).sum();
    let n: u64 = studies.iter().map(|s| s.n_observed).sum();
    let alt = x as f64 / n as f64;
    let pair = HypothesisPair::new(&model, null, alt).unwrap();
    studies
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let r = ri1_sharp(&model, s, &pair, Some(&alt), Route::Imputation).unwrap();
            StudySummary::new(format!("study {i}"), r.numerator, r.estimate)
                .unwrap()
                .with_pair(vec![null], vec![alt])
        })
        .collect()
}

#[test]
fn two_binomial_studies_match_pooled_computation() {
    let studies = [
        BinomialObserved::new(30, 50, 50).unwrap(),
        BinomialObserved::new(34, 50, 150).unwrap(),
    ];
    let set = summaries(&studies, 0.5);
    assert!(check_shared_pair(&set).unwrap().is_empty());
    let combined = combine_weighted_harmonic(&set).unwrap();
    let oracle = pooled_oracle(&studies, 0.5);
    assert!((combined - oracle).abs() < 1e-10, "{combined} vs {oracle}");

    // the pooled route through the library on the concatenated data agrees as well
    let model = binomial_model();
    let pooled = BinomialObserved::new(64, 100, 200).unwrap();
    let pair = HypothesisPair::new(&model, 0.5, 0.64).unwrap();
    let r = ri1_sharp(&model, &pooled, &pair, None, Route::Imputation).unwrap();
    assert!((combined - r.estimate).abs() < 1e-10);
}

#[test]
fn single_and_identical_studies() {
    let one = StudySummary::new("a", 1.3, 0.4).unwrap();
    assert_eq!(combine_weighted_harmonic(std::slice::from_ref(&one)).unwrap(), 0.4);
    let twice = combine_weighted_harmonic(&[one.clone(), one]).unwrap();
    assert!((twice - 0.4).abs() < 1e-15);
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(matches!(StudySummary::new("neg", -1.0, 0.5), Err(Error::Domain(_))));
    assert!(matches!(StudySummary::new("zero", 0.0, 0.5), Err(Error::Domain(_))));
    assert!(StudySummary::new("ri", 1.0, 1.5).is_err());
    assert!(combine_weighted_harmonic(&[]).is_err());
}

fn study() -> impl Strategy<Value = BinomialObserved> {
    (10u64..200, 0u64..300).prop_flat_map(|(n, m)| (1..n).prop_map(move |x| BinomialObserved::new(x, n, m).unwrap()))
}

proptest! {
    #[test]
    fn shared_pair_combination_equals_pooled(studies in prop::collection::vec(study(), 1..6), null in 0.05f64..0.95) {
        let x: u64 = studies.iter().map(|s| s.successes).sum();
        let n: u64 = studies.iter().map(|s| s.n_observed).sum();
        let alt = x as f64 / n as f64;
        prop_assume!((alt - null).abs() > 1e-3);
        // every per-study lod must be positive at the shared pair
        let positive = studies.iter().all(|s| {
            let p = s.successes as f64 / s.n_observed as f64;
            let l = s.successes as f64 * (alt / null).ln() + (s.n_observed - s.successes) as f64 * ((1.0 - alt) / (1.0 - null)).ln();
            l > 0.0 && p > 0.0
        });
        prop_assume!(positive);
        let combined = combine_weighted_harmonic(&summaries(&studies, null)).unwrap();
        let oracle = pooled_oracle(&studies, null);
        prop_assert!((combined - oracle).abs() < 1e-10 * oracle.max(1.0), "{} vs {}", combined, oracle);
    }
}

//! Relative information and the fraction of missing information for
//! likelihood-based hypothesis tests.
//!
//! The central quantity is `RI_1`: the observed-data lod score divided by the
//! expected complete-data lod score, the expectation taken over the missing
//! data given what was observed. Modules:
//!
//! * [`measures`]: model-agnostic lods, `RI_1`, `RI_0`, per-draw `RI_y`, and
//!   lod-ratio variance over the [`measures::Model`] trait;
//! * [`binomial`]: binomial trials with missing outcomes, with exact oracles;
//! * [`cox`]: Cox partial likelihood, rank-conditional sampling and
//!   augmentation-based `RI_1` under two conditioning choices;
//! * [`combine`]: pooling `RI_1` across independent studies;
//! * [`design`]: `S_x` comparisons of regression designs;
//! * [`mc`]: the seeded, scheduling-invariant Monte Carlo engine.

pub mod binomial;
pub mod combine;
pub mod cox;
pub mod design;
pub mod error;
pub mod mc;
pub mod measures;

pub use error::{Error, Result};
pub use mc::{MCConfig, MCEstimate};
pub use measures::{HypothesisPair, LodScore, Method, Model, RelInfoResult, Route};

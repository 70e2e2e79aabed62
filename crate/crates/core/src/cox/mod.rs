//! Cox proportional-hazards machinery for relative information under
//! augmentation.
//!
//! Three views of the same subjects matter here: the full data (no
//! censoring), the censored data actually observed, and the partial data
//! (failure ranks and risk sets) that the partial likelihood uses.

pub mod augment;
pub mod baseline;
pub mod data;
pub mod fit;
pub mod replication;
pub mod sampler;
pub mod wald;

pub use augment::{ri1_cox_correct, ri1_cox_naive, ri1_cox_with, Conditioning, CoxAugmentation, CoxRelInfo};
pub use baseline::{breslow_baseline, BaselineHazard, HazardCurve, TailRule};
pub use data::{extract_rank_data, CensoredSubject, RankData, Status, SurvivalDataset, SurvivalRecord};
pub use fit::{fit_partial_likelihood, partial_lod, partial_log_likelihood, CoxFit};
pub use replication::{run_replication, simulate_pair, ReplicationConfig, ReplicationRow, ReplicationSummary};
pub use sampler::{gap_rates, sample_times_given_ranks};
pub use wald::ri_w_wald;

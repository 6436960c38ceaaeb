//! Deterministic Monte Carlo: counter-based random streams, batch
//! orchestration, summary statistics, and the empirical verifiers of the
//! limit theorems.

pub mod batch;
pub mod rng;
pub mod stats;

pub use batch::{
    clt_verify, equivalence_check, lln_verify, run_batch, CltReport, EquivalenceReport,
    LlnReport, SimResult,
};
pub use rng::RngStream;
pub use stats::{
    histogram, kde, kde_auto_grid, pairwise_sum, silverman_bandwidth, skewness_excess_kurtosis,
    summary, Bandwidth, DensityCurve, SummaryStats,
};

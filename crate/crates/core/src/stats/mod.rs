//! Metrics and statistical procedures: Pearson/RMSE/MAE, per-type and
//! item-level breakdowns, seeded k-fold plans, cross-validation, row
//! bootstrap, and paired t-tests.

mod bootstrap;
pub mod cv;
mod folds;
mod metrics;
pub mod special;
mod ttest;

pub use bootstrap::{bootstrap_ci, BootstrapCi};
pub use cv::{cross_validate, CvError, CvResult, Family, FoldModel, Pathway};
pub use folds::{kfold_split, FoldPlan};
pub use metrics::{
    aggregate_metrics, flatten, item_rmse_delta, pearson, per_type_correlations, row_rmse,
    ItemDelta, Metrics,
};
pub use ttest::{paired_t_test, TTestResult};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("correlation undefined: constant input")]
    ConstantInput,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 values, got {0}")]
    TooShort(usize),
    #[error("invalid fold count k={k} for n={n} items (need 2 <= k <= n)")]
    InvalidFoldCount { k: usize, n: usize },
    #[error("paired differences have zero variance")]
    DegenerateTest,
    #[error("bootstrap gave up after {0} constant resamples")]
    TooManyRedraws(usize),
}

/// Linear-interpolation quantile of ascending `sorted` data: position
/// `h = (n - 1) q`, interpolating between the neighbouring order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

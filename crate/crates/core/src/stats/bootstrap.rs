use crate::nnkit::RngStream;
use crate::Distribution;

use super::metrics::{flatten, pearson};
use super::{quantile, StatsError};

/// Percentile bootstrap over item rows.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapCi {
    pub lo: f64,
    pub hi: f64,
    pub resamples: usize,
    pub seed: u64,
    /// Resamples discarded because a resampled matrix was constant.
    pub redraws: usize,
    /// Accepted resample correlations, ascending.
    pub estimates: Vec<f64>,
}

impl BootstrapCi {
    /// Central percentile interval at `level` (e.g. 0.95) from the same
    /// resample set.
    pub fn interval(&self, level: f64) -> (f64, f64) {
        let tail = (1.0 - level) / 2.0;
        (
            quantile(&self.estimates, tail),
            quantile(&self.estimates, 1.0 - tail),
        )
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lo <= value && value <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Each resample draws `n` row indices with replacement (substream
/// `("bootstrap", 0)` of `seed`) and takes Pearson over all cells of the
/// resampled rows of both matrices. Returns the 2.5th and 97.5th percentiles
/// with linear interpolation between order statistics.
pub fn bootstrap_ci(
    pred: &[Distribution],
    human: &[Distribution],
    resamples: usize,
    seed: u64,
) -> Result<BootstrapCi, StatsError> {
    if pred.len() != human.len() {
        return Err(StatsError::LengthMismatch {
            left: pred.len(),
            right: human.len(),
        });
    }
    if resamples == 0 || pred.is_empty() {
        return Err(StatsError::TooShort(resamples.min(pred.len())));
    }
    let n = pred.len();
    let max_redraws = 100 * resamples + 1000;
    let mut rng = RngStream::substream(seed, "bootstrap", 0);
    let mut estimates = Vec::with_capacity(resamples);
    let mut redraws = 0;
    let mut idx = vec![0usize; n];
    let mut p_rows = Vec::with_capacity(n);
    let mut h_rows = Vec::with_capacity(n);
    while estimates.len() < resamples {
        for slot in idx.iter_mut() {
            *slot = rng.below(n);
        }
        p_rows.clear();
        h_rows.clear();
        p_rows.extend(idx.iter().map(|&i| pred[i]));
        h_rows.extend(idx.iter().map(|&i| human[i]));
        match pearson(&flatten(&p_rows), &flatten(&h_rows)) {
            Ok(r) => estimates.push(r),
            Err(StatsError::ConstantInput) => {
                redraws += 1;
                if redraws > max_redraws {
                    return Err(StatsError::TooManyRedraws(redraws));
                }
            }
            Err(e) => return Err(e),
        }
    }
    estimates.sort_by(f64::total_cmp);
    let lo = quantile(&estimates, 0.025);
    let hi = quantile(&estimates, 0.975);
    Ok(BootstrapCi {
        lo,
        hi,
        resamples,
        seed,
        redraws,
        estimates,
    })
}

use serde::{Deserialize, Serialize};

use crate::nnkit::RngStream;

use super::StatsError;

/// Assignment of items to `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Fold index of every item.
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn n_items(&self) -> usize {
        self.assignments.len()
    }

    /// Items of fold `j`, ascending.
    pub fn test_items(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    /// Items outside fold `j`, ascending.
    pub fn train_items(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded Fisher-Yates shuffle of `0..n` (substream `("kfold", 0)`) cut into
/// `k` contiguous chunks; the first `n % k` chunks get one extra item.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldPlan, StatsError> {
    if k < 2 || k > n {
        return Err(StatsError::InvalidFoldCount { k, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    RngStream::substream(seed, "kfold", 0).shuffle(&mut order);
    let base = n / k;
    let extra = n % k;
    let mut assignments = vec![0; n];
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &item in &order[pos..pos + size] {
            assignments[item] = fold;
        }
        pos += size;
    }
    Ok(FoldPlan {
        k,
        seed,
        assignments,
    })
}

//! Cross-validation over a shared fold plan.
//!
//! Fold `j` trains with model seed `derive_seed(cfg.seed, "fold", j)`; folds
//! run in parallel and are assembled in fold order, so results do not depend
//! on scheduling.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{
    train_direct, train_dualpath, DirectMlp, DualPathModel, ModelError, TrainConfig,
    TrainingData,
};
use crate::nnkit::derive_seed;
use crate::syllogism::N_RESPONSES;
use crate::Distribution;

use super::folds::FoldPlan;
use super::metrics::{aggregate_metrics, flatten, pearson, per_type_correlations, Metrics};
use super::StatsError;

/// What gets trained per fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Direct,
    /// One joint model yields both the intuition and deliberation pathways.
    DualPath,
    /// Returns the held-out targets themselves; for harness checks.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pathway {
    Direct,
    Intuition,
    Deliberation,
    Oracle,
}

impl Pathway {
    pub fn name(self) -> &'static str {
        match self {
            Pathway::Direct => "direct",
            Pathway::Intuition => "intuition",
            Pathway::Deliberation => "deliberation",
            Pathway::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Pathway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Family {
    pub fn pathways(self) -> &'static [Pathway] {
        match self {
            Family::Direct => &[Pathway::Direct],
            Family::DualPath => &[Pathway::Intuition, Pathway::Deliberation],
            Family::Oracle => &[Pathway::Oracle],
        }
    }
}

#[derive(Debug, Error)]
pub enum CvError {
    #[error("fold {fold}: training failed: {source}")]
    Training { fold: usize, source: ModelError },
    #[error("{context}: {source}")]
    Stats { context: String, source: StatsError },
    #[error("fold plan covers {plan} items but data has {data}")]
    PlanMismatch { plan: usize, data: usize },
}

/// A model trained on the complement of one fold.
#[derive(Debug, Clone)]
pub enum FoldModel {
    Direct(DirectMlp),
    DualPath(DualPathModel),
    Oracle,
}

impl FoldModel {
    pub fn predict(&self, pathway: Pathway, data: TrainingData<'_>, item: usize) -> Distribution {
        let x = &data.features[item];
        match (self, pathway) {
            (FoldModel::Direct(m), Pathway::Direct) => m.predict(x),
            (FoldModel::DualPath(m), Pathway::Intuition) => m.predict_intuition(x),
            (FoldModel::DualPath(m), Pathway::Deliberation) => m.predict_deliberation(x),
            (FoldModel::Oracle, Pathway::Oracle) => data.targets[item],
            (model, p) => panic!("pathway {p} is not produced by {model:?}"),
        }
    }
}

pub fn fold_seed(base: u64, fold: usize) -> u64 {
    derive_seed(base, "fold", fold as u64)
}

pub fn fit_fold(
    family: Family,
    data: TrainingData<'_>,
    cfg: &TrainConfig,
    plan: &FoldPlan,
    fold: usize,
) -> Result<FoldModel, CvError> {
    let train = plan.train_items(fold);
    let cfg = cfg.with_seed(fold_seed(cfg.seed, fold));
    let wrap = |source| CvError::Training { fold, source };
    Ok(match family {
        Family::Direct => FoldModel::Direct(train_direct(data, &train, &cfg).map_err(wrap)?.model),
        Family::DualPath => {
            FoldModel::DualPath(train_dualpath(data, &train, &cfg).map_err(wrap)?.model)
        }
        Family::Oracle => FoldModel::Oracle,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub pathway: Pathway,
    pub plan: FoldPlan,
    /// Row `i` comes from the model that held out item `i`.
    pub heldout: Vec<Distribution>,
    /// Pearson over each fold's own cells.
    pub fold_correlations: Vec<f64>,
    pub aggregate: Metrics,
    /// `None` where a column was constant.
    pub per_type: [Option<f64>; N_RESPONSES],
}

impl CvResult {
    pub fn fold_mean(&self) -> f64 {
        self.fold_correlations.iter().sum::<f64>() / self.fold_correlations.len() as f64
    }

    pub fn fold_sd(&self) -> f64 {
        let n = self.fold_correlations.len() as f64;
        let m = self.fold_mean();
        (self
            .fold_correlations
            .iter()
            .map(|r| (r - m) * (r - m))
            .sum::<f64>()
            / (n - 1.0))
            .sqrt()
    }
}

/// Assembles a [`CvResult`] from per-fold models.
pub fn assemble(
    pathway: Pathway,
    data: TrainingData<'_>,
    plan: &FoldPlan,
    models: &[FoldModel],
) -> Result<CvResult, CvError> {
    let n = data.features.len();
    let mut heldout = vec![[0.0; N_RESPONSES]; n];
    let mut fold_correlations = Vec::with_capacity(plan.k);
    for (fold, model) in models.iter().enumerate() {
        let items = plan.test_items(fold);
        let mut pred = Vec::with_capacity(items.len());
        let mut human = Vec::with_capacity(items.len());
        for &i in &items {
            let p = model.predict(pathway, data, i);
            heldout[i] = p;
            pred.push(p);
            human.push(data.targets[i]);
        }
        let r = pearson(&flatten(&pred), &flatten(&human)).map_err(|source| CvError::Stats {
            context: format!("{pathway} fold {fold} correlation"),
            source,
        })?;
        fold_correlations.push(r);
    }
    let aggregate = aggregate_metrics(&heldout, data.targets).map_err(|source| CvError::Stats {
        context: format!("{pathway} aggregate metrics"),
        source,
    })?;
    let per_type = per_type_correlations(&heldout, data.targets)
        .map_err(|source| CvError::Stats {
            context: format!("{pathway} per-type correlations"),
            source,
        })?
        .map(|r| r.ok());
    Ok(CvResult {
        pathway,
        plan: plan.clone(),
        heldout,
        fold_correlations,
        aggregate,
        per_type,
    })
}

/// Trains `family` once per fold and returns one result per pathway the
/// family produces.
pub fn cross_validate(
    family: Family,
    data: TrainingData<'_>,
    cfg: &TrainConfig,
    plan: &FoldPlan,
) -> Result<Vec<CvResult>, CvError> {
    if plan.n_items() != data.features.len() {
        return Err(CvError::PlanMismatch {
            plan: plan.n_items(),
            data: data.features.len(),
        });
    }
    let models = (0..plan.k)
        .into_par_iter()
        .map(|fold| fit_fold(family, data, cfg, plan, fold))
        .collect::<Result<Vec<_>, _>>()?;
    family
        .pathways()
        .iter()
        .map(|&p| assemble(p, data, plan, &models))
        .collect()
}

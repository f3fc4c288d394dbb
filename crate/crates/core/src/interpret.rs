//! Interpretability suite for a trained dual-path model: gate winners,
//! per-state probes, inference-time single-state ablation, role labels, and
//! multi-seed stability sweeps over repeated 80:20 splits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{
    train_dualpath, DualPathModel, KeepSet, ModelError, TrainConfig, TrainedDualPath,
    TrainingData, N_STATES,
};
use crate::nnkit::RngStream;
use crate::stats::{aggregate_metrics, Metrics, StatsError};
use crate::syllogism::{FeatureVector, ResponseType, N_RESPONSES};
use crate::Distribution;

/// Ablation correlation drop below which a state counts as dispensable.
pub const DISPENSABLE_DROP: f64 = 0.01;
/// Ablation correlation drop at or above which a state is load-bearing.
pub const LOAD_BEARING_DROP: f64 = 0.05;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Error)]
pub enum InterpretError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{context}: {source}")]
    Stats {
        context: String,
        source: StatsError,
    },
    #[error("invalid split: {0}")]
    BadSplit(String),
}

fn stats_err(context: impl Into<String>) -> impl FnOnce(StatsError) -> InterpretError {
    let context = context.into();
    move |source| InterpretError::Stats { context, source }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainTestSplit {
    pub seed: u64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `0..n` with substream `("split", 0)` of `seed`; the first
/// `round(n * train_fraction)` items train. Both lists are returned sorted.
pub fn train_test_split(
    n: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<TrainTestSplit, InterpretError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(InterpretError::BadSplit(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let n_train = (n as f64 * train_fraction).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(InterpretError::BadSplit(format!(
            "{n} items with fraction {train_fraction} leaves an empty partition"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    RngStream::substream(seed, "split", 0).shuffle(&mut order);
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(TrainTestSplit { seed, train, test })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSummary {
    pub train_counts: [usize; N_STATES],
    pub test_counts: [usize; N_STATES],
    /// (item, zero-based winning state) for train items, then test items.
    pub train_winners: Vec<(usize, usize)>,
    pub test_winners: Vec<(usize, usize)>,
}

impl GateSummary {
    /// Most test wins, lowest index on ties.
    pub fn dominant_test_state(&self) -> usize {
        let mut best = 0;
        for s in 1..N_STATES {
            if self.test_counts[s] > self.test_counts[best] {
                best = s;
            }
        }
        best
    }

    /// States that never win on either partition.
    pub fn dead_states(&self) -> Vec<usize> {
        (0..N_STATES)
            .filter(|&s| self.train_counts[s] == 0 && self.test_counts[s] == 0)
            .collect()
    }
}

fn winners(model: &DualPathModel, features: &[FeatureVector], items: &[usize]) -> Vec<(usize, usize)> {
    items
        .iter()
        .map(|&i| (i, model.predict(&features[i]).1.winner))
        .collect()
}

fn counts(w: &[(usize, usize)]) -> [usize; N_STATES] {
    let mut c = [0; N_STATES];
    for &(_, s) in w {
        c[s] += 1;
    }
    c
}

pub fn gate_summary(
    model: &DualPathModel,
    features: &[FeatureVector],
    split: &TrainTestSplit,
) -> GateSummary {
    let train_winners = winners(model, features, &split.train);
    let test_winners = winners(model, features, &split.test);
    GateSummary {
        train_counts: counts(&train_winners),
        test_counts: counts(&test_winners),
        train_winners,
        test_winners,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateProbe {
    pub state: usize,
    /// Mean of the per-item distributions.
    pub mean: Distribution,
    pub per_item: Vec<(usize, Distribution)>,
}

impl StateProbe {
    pub fn oac_mass(&self) -> f64 {
        self.mean[ResponseType::Oac.index()]
    }
}

/// Deliberation output with the gate forced to one-hot on `state`, averaged
/// over `items`.
pub fn state_probe(
    model: &DualPathModel,
    features: &[FeatureVector],
    items: &[usize],
    state: usize,
) -> Result<StateProbe, InterpretError> {
    let keep = KeepSet::only(state)?;
    let per_item: Vec<(usize, Distribution)> = items
        .iter()
        .map(|&i| (i, model.predict_with_gate_override(&features[i], keep)))
        .collect();
    let mut mean = [0.0; N_RESPONSES];
    for (_, d) in &per_item {
        for (m, v) in mean.iter_mut().zip(d) {
            *m += v;
        }
    }
    let n = per_item.len().max(1) as f64;
    for m in &mut mean {
        *m /= n;
    }
    Ok(StateProbe {
        state,
        mean,
        per_item,
    })
}

pub fn all_probes(
    model: &DualPathModel,
    features: &[FeatureVector],
    items: &[usize],
) -> Result<Vec<StateProbe>, InterpretError> {
    (0..N_STATES)
        .map(|s| state_probe(model, features, items, s))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationRow {
    /// Removed state (zero-based), `None` for the baseline.
    pub removed: Option<usize>,
    pub r: f64,
    pub r_drop: f64,
    pub rmse: f64,
    pub rmse_increase: f64,
}

fn predictions_with(
    model: &DualPathModel,
    features: &[FeatureVector],
    items: &[usize],
    keep: KeepSet,
) -> Vec<Distribution> {
    items
        .iter()
        .map(|&i| model.predict_with_gate_override(&features[i], keep))
        .collect()
}

/// Baseline plus one row per removed state; gate weights of the remaining
/// states are renormalized and nothing is retrained.
pub fn ablate(
    model: &DualPathModel,
    data: TrainingData<'_>,
    items: &[usize],
) -> Result<Vec<AblationRow>, InterpretError> {
    let human: Vec<Distribution> = items.iter().map(|&i| data.targets[i]).collect();
    let eval = |keep: KeepSet, label: &str| -> Result<Metrics, InterpretError> {
        aggregate_metrics(&predictions_with(model, data.features, items, keep), &human)
            .map_err(stats_err(format!("ablation {label}")))
    };
    let base = eval(KeepSet::all(), "baseline")?;
    let mut rows = vec![AblationRow {
        removed: None,
        r: base.r,
        r_drop: 0.0,
        rmse: base.rmse,
        rmse_increase: 0.0,
    }];
    for s in 0..N_STATES {
        let m = eval(KeepSet::without(s)?, &format!("without state {}", s + 1))?;
        rows.push(AblationRow {
            removed: Some(s),
            r: m.r,
            r_drop: base.r - m.r,
            rmse: m.rmse,
            rmse_increase: m.rmse - base.rmse,
        });
    }
    Ok(rows)
}

/// Removed state with the largest correlation drop (lowest index on ties).
pub fn strongest_ablation(rows: &[AblationRow]) -> Option<(usize, f64)> {
    rows.iter()
        .filter_map(|r| r.removed.map(|s| (s, r.r_drop)))
        .fold(None, |best, (s, d)| match best {
            Some((_, bd)) if bd >= d => best,
            _ => Some((s, d)),
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StateRoles {
    pub dominant: bool,
    pub dead: bool,
    pub oac_leaning: bool,
    pub dispensable: bool,
    pub load_bearing: bool,
}

impl StateRoles {
    pub fn labels(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.dominant {
            v.push("dominant");
        }
        if self.dead {
            v.push("dead");
        }
        if self.oac_leaning {
            v.push("oac-leaning");
        }
        if self.dispensable {
            v.push("dispensable");
        }
        if self.load_bearing {
            v.push("load-bearing");
        }
        v
    }
}

/// Zero-based index of the probe with the most `Oac` mass (lowest on ties).
pub fn oac_leaning_state(probes: &[StateProbe]) -> usize {
    let mut best = 0;
    for (i, p) in probes.iter().enumerate().skip(1) {
        if p.oac_mass() > probes[best].oac_mass() {
            best = i;
        }
    }
    probes[best].state
}

pub fn classify_roles(
    gate: &GateSummary,
    probes: &[StateProbe],
    ablation: &[AblationRow],
) -> [StateRoles; N_STATES] {
    let mut roles = [StateRoles::default(); N_STATES];
    roles[gate.dominant_test_state()].dominant = true;
    for s in gate.dead_states() {
        roles[s].dead = true;
    }
    if !probes.is_empty() {
        roles[oac_leaning_state(probes)].oac_leaning = true;
    }
    for row in ablation {
        if let Some(s) = row.removed {
            roles[s].dispensable = row.r_drop.abs() < DISPENSABLE_DROP;
            roles[s].load_bearing = row.r_drop >= LOAD_BEARING_DROP;
        }
    }
    roles
}

/// Everything produced by one 80:20 train/interpret run.
#[derive(Debug, Clone)]
pub struct SplitRun {
    pub split: TrainTestSplit,
    pub trained: TrainedDualPath,
    pub intuition_test: Metrics,
    pub deliberation_test: Metrics,
    pub gate: GateSummary,
    pub train_probes: Vec<StateProbe>,
    pub test_probes: Vec<StateProbe>,
    pub ablation: Vec<AblationRow>,
    pub roles: [StateRoles; N_STATES],
}

impl SplitRun {
    pub fn model(&self) -> &DualPathModel {
        &self.trained.model
    }

    pub fn test_predictions(&self, features: &[FeatureVector]) -> (Vec<Distribution>, Vec<Distribution>) {
        let m = self.model();
        self.split
            .test
            .iter()
            .map(|&i| {
                let x = &features[i];
                (m.predict_intuition(x), m.predict_deliberation(x))
            })
            .unzip()
    }
}

/// Trains on `split.train` with `cfg` and runs the full interpretability
/// suite on the result. `Oac`-leaning is judged on training-partition probes.
pub fn run_split(
    data: TrainingData<'_>,
    cfg: &TrainConfig,
    split: TrainTestSplit,
) -> Result<SplitRun, InterpretError> {
    let trained = train_dualpath(data, &split.train, cfg)?;
    let model = &trained.model;
    let human: Vec<Distribution> = split.test.iter().map(|&i| data.targets[i]).collect();
    let int_pred: Vec<Distribution> = split
        .test
        .iter()
        .map(|&i| model.predict_intuition(&data.features[i]))
        .collect();
    let del_pred = predictions_with(model, data.features, &split.test, KeepSet::all());
    let intuition_test =
        aggregate_metrics(&int_pred, &human).map_err(stats_err("intuition test metrics"))?;
    let deliberation_test =
        aggregate_metrics(&del_pred, &human).map_err(stats_err("deliberation test metrics"))?;
    let gate = gate_summary(model, data.features, &split);
    let train_probes = all_probes(model, data.features, &split.train)?;
    let test_probes = all_probes(model, data.features, &split.test)?;
    let ablation = ablate(model, data, &split.test)?;
    let roles = classify_roles(&gate, &train_probes, &ablation);
    Ok(SplitRun {
        split,
        trained,
        intuition_test,
        deliberation_test,
        gate,
        train_probes,
        test_probes,
        ablation,
        roles,
    })
}

/// One seed: that seed drives both the split membership and the model
/// initialization.
pub fn run_seed(
    data: TrainingData<'_>,
    cfg: &TrainConfig,
    seed: u64,
    train_fraction: f64,
) -> Result<SplitRun, InterpretError> {
    let split = train_test_split(data.features.len(), train_fraction, seed)?;
    run_split(data, &cfg.with_seed(seed), split)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub intuition_r: f64,
    pub deliberation_r: f64,
    pub gain: f64,
    pub dominant: usize,
    pub dead: Vec<usize>,
    pub oac_leaning: usize,
    pub strongest_ablation: usize,
    pub strongest_drop: f64,
}

impl SweepSummary {
    pub fn from_run(run: &SplitRun) -> Self {
        let (strongest_ablation, strongest_drop) =
            strongest_ablation(&run.ablation).unwrap_or((0, 0.0));
        SweepSummary {
            intuition_r: run.intuition_test.r,
            deliberation_r: run.deliberation_test.r,
            gain: run.deliberation_test.r - run.intuition_test.r,
            dominant: run.gate.dominant_test_state(),
            dead: run.gate.dead_states(),
            oac_leaning: oac_leaning_state(&run.train_probes),
            strongest_ablation,
            strongest_drop,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub seed: u64,
    /// Failed seeds keep their row with the error text.
    pub outcome: Result<SweepSummary, String>,
}

/// Independent 80:20 runs, one per seed, in seed-list order.
pub fn seed_sweep(
    data: TrainingData<'_>,
    cfg: &TrainConfig,
    seeds: &[u64],
    train_fraction: f64,
) -> Vec<SweepRow> {
    seeds
        .par_iter()
        .map(|&seed| SweepRow {
            seed,
            outcome: run_seed(data, cfg, seed, train_fraction)
                .map(|run| SweepSummary::from_run(&run))
                .map_err(|e| e.to_string()),
        })
        .collect()
}

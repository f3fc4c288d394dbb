//! Command implementations. Each command writes its artifacts into the output
//! directory, then a manifest (content hashes) and a run-times file, and
//! returns the lines to print.

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::dataset::{to_targets, HumanMatrix, ValidationSummary, validate_report};
use crate::interpret::{run_seed, seed_sweep, train_test_split, ablate, gate_summary, SplitRun};
use crate::models::{DualPathModel, TrainingData, N_STATES, STATE_UNITS};
use crate::stats::{
    bootstrap_ci, cross_validate, item_rmse_delta, kfold_split, paired_t_test, CvResult, Family,
    Pathway, StatsError,
};
use crate::syllogism::{enumerate_syllogisms, FeatureVector, ResponseType, FEATURE_DIM};
use crate::synthetic::synthetic_table;
use crate::Distribution;

use super::archive::{unix_now, Checkpoint, Manifest, RunTimes};
use super::config::{RunConfig, OUT_ENV};
use super::svg::{render_bar_chart, render_heatmap, ColorMode};
use super::tables::*;
use super::ReportError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("data error: {0}")]
    Data(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => 1,
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Config(m) => CliError::Config(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Model seed for `cv`; split and init seed for `canonical`/`ablate`;
    /// table seed for `synth`.
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub loss_weights: Option<(f64, f64)>,
    pub resamples: Option<usize>,
    pub seeds: Option<Vec<u64>>,
}

impl Overrides {
    /// Applies overrides; the `DUALPATH_OUT` value, when given, wins over both
    /// the file and `--out`.
    pub fn apply(&self, mut cfg: RunConfig, command: &str, env_out: Option<PathBuf>) -> RunConfig {
        if let Some(d) = &self.data {
            cfg.data = d.clone();
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(o) = env_out {
            cfg.out = o;
        }
        if let Some(s) = self.seed {
            match command {
                "canonical" | "ablate" => cfg.canonical.seed = s,
                _ => cfg.train.seed = s,
            }
        }
        if let Some(k) = self.k {
            cfg.cv.k = k;
        }
        if let Some(e) = self.epochs {
            cfg.train.epochs = e;
        }
        if let Some(lr) = self.lr {
            cfg.train.lr = lr;
        }
        if let Some(w) = self.loss_weights {
            cfg.train.loss_weights = w;
        }
        if let Some(r) = self.resamples {
            cfg.cv.resamples = r;
        }
        if let Some(s) = &self.seeds {
            cfg.sweep.seeds = s.clone();
        }
        cfg
    }
}

pub fn env_out() -> Option<PathBuf> {
    std::env::var_os(OUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

/// Loads the config file (or defaults) and applies overrides.
pub fn resolve_config(
    config_path: Option<&Path>,
    overrides: &Overrides,
    command: &str,
) -> Result<RunConfig, CliError> {
    let base = match config_path {
        Some(p) => RunConfig::load(p).map_err(|e| match e {
            ReportError::Io { path, source } => CliError::Config(format!("{path}: {source}")),
            other => CliError::from(other),
        })?,
        None => RunConfig::default(),
    };
    let cfg = overrides.apply(base, command, env_out());
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutput {
    pub lines: Vec<String>,
    pub files: Vec<String>,
}

/// A validated dataset ready for training.
pub struct LoadedData {
    pub matrix: HumanMatrix,
    pub summary: ValidationSummary,
    pub features: Vec<FeatureVector>,
    pub targets: Vec<Distribution>,
    pub codes: Vec<String>,
    pub bytes: Vec<u8>,
}

impl LoadedData {
    pub fn training(&self) -> TrainingData<'_> {
        TrainingData::new(&self.features, &self.targets)
    }
}

/// Reads and validates a data file; any schema or content problem is a data
/// error carrying the row-level diagnostics.
pub fn load_data(path: &Path) -> Result<LoadedData, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let raw = HumanMatrix::read_unchecked(bytes.as_slice())
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let summary = validate_report(&raw);
    if !summary.is_ok() {
        return Err(CliError::Data(format!("{}: {summary}", path.display())));
    }
    let matrix = raw
        .into_canonical()
        .map_err(|e| CliError::Data(e.to_string()))?;
    let targets = to_targets(&matrix).map_err(|e| CliError::Data(e.to_string()))?;
    let features = matrix.syllogisms().iter().map(|s| s.encode()).collect();
    let codes = matrix.codes();
    Ok(LoadedData {
        matrix,
        summary,
        features,
        targets,
        codes,
        bytes,
    })
}

/// Collects written files for the manifest.
struct Out {
    dir: PathBuf,
    hash: String,
    files: Vec<String>,
    started: u64,
}

impl Out {
    fn new(dir: &Path, hash: String) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
        Ok(Out {
            dir: dir.to_path_buf(),
            hash,
            files: Vec::new(),
            started: unix_now(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let hash = self.hash.clone();
        Ok(write_csv(&self.path(name), &hash, rows)?)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        Ok(write_json(&self.path(name), value)?)
    }

    fn matrix(&mut self, name: &str, m: &MatrixTable) -> Result<(), CliError> {
        let hash = self.hash.clone();
        Ok(m.write(&self.path(name), &hash)?)
    }

    fn text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.path(name);
        std::fs::write(&path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    }

    fn finish(self, command: &str, validation: &str, mut lines: Vec<String>) -> Result<CommandOutput, CliError> {
        let manifest = Manifest::build(&self.dir, command, &self.hash, validation, &self.files)?;
        write_json(&self.dir.join(Manifest::file_name(command)), &manifest)?;
        write_json(
            &self.dir.join(RunTimes::file_name(command)),
            &RunTimes {
                command: command.into(),
                config_hash: self.hash.clone(),
                started_unix: self.started,
                finished_unix: unix_now(),
            },
        )?;
        lines.push(format!(
            "wrote {} file(s) to {} (config_hash {})",
            self.files.len(),
            self.dir.display(),
            &self.hash[..12]
        ));
        let mut files = self.files;
        files.push(Manifest::file_name(command));
        Ok(CommandOutput { lines, files })
    }
}

fn first_line(summary: &ValidationSummary) -> String {
    summary.to_string().lines().next().unwrap_or_default().to_string()
}

// --- validate ---------------------------------------------------------------

pub fn cmd_validate(path: &Path) -> Result<CommandOutput, CliError> {
    let data = load_data(path)?;
    Ok(CommandOutput {
        lines: data.summary.to_string().lines().map(String::from).collect(),
        files: Vec::new(),
    })
}

// --- figures ---------------------------------------------------------------

fn rows_of(d: &[Distribution]) -> Vec<Vec<f64>> {
    d.iter().map(|r| r.to_vec()).collect()
}

fn response_labels() -> Vec<String> {
    ResponseType::LABELS.iter().map(|s| s.to_string()).collect()
}

/// Human, prediction and signed-difference (prediction - human) heatmaps.
pub fn render_triptych(
    title: &str,
    codes: &[String],
    human: &[Distribution],
    pred: &[Distribution],
) -> Result<[String; 3], ReportError> {
    let cols = response_labels();
    let diff: Vec<Vec<f64>> = pred
        .iter()
        .zip(human)
        .map(|(p, h)| p.iter().zip(h).map(|(a, b)| a - b).collect())
        .collect();
    Ok([
        render_heatmap(&format!("{title}: human"), &rows_of(human), codes, &cols, ColorMode::Absolute)?,
        render_heatmap(&format!("{title}: prediction"), &rows_of(pred), codes, &cols, ColorMode::Absolute)?,
        render_heatmap(&format!("{title}: prediction - human"), &diff, codes, &cols, ColorMode::Diverging)?,
    ])
}

const TRIPTYCH_SUFFIXES: [&str; 3] = ["human", "pred", "diff"];

fn triptych_files(prefix: &str, pathway: &str) -> [String; 3] {
    TRIPTYCH_SUFFIXES.map(|s| format!("{prefix}_{pathway}_{s}.svg"))
}

/// Figures derivable from the cv tables, as (file name, svg) pairs.
fn cv_figures(
    human: &MatrixTable,
    preds: &[(&str, MatrixTable)],
    bootstrap: &[BootstrapRow],
) -> Result<Vec<(String, String)>, ReportError> {
    let h = human.distributions()?;
    let mut out = Vec::new();
    for (name, table) in preds {
        let svgs = render_triptych(&format!("cross-validated {name}"), &human.row_labels, &h, &table.distributions()?)?;
        for (file, svg) in triptych_files("cv", name).into_iter().zip(svgs) {
            out.push((file, svg));
        }
    }
    let labels: Vec<String> = bootstrap.iter().map(|b| b.pathway.clone()).collect();
    let values: Vec<f64> = bootstrap.iter().map(|b| b.r).collect();
    let ci: Vec<(f64, f64)> = bootstrap.iter().map(|b| (b.ci_low, b.ci_high)).collect();
    out.push((
        "cv_performance.svg".into(),
        render_bar_chart("held-out aggregate r with 95% bootstrap CI", &labels, &values, Some(&ci))?,
    ));
    Ok(out)
}

fn canonical_figures(
    human: &MatrixTable,
    preds: &[(&str, MatrixTable)],
    gate: &MatrixTable,
    activations: &MatrixTable,
    ablation: &[AblationOutRow],
) -> Result<Vec<(String, String)>, ReportError> {
    let h = human.distributions()?;
    let mut out = Vec::new();
    for (name, table) in preds {
        let svgs = render_triptych(&format!("canonical test {name}"), &human.row_labels, &h, &table.distributions()?)?;
        for (file, svg) in triptych_files("canonical", name).into_iter().zip(svgs) {
            out.push((file, svg));
        }
    }
    out.push((
        "gate_weights.svg".into(),
        render_heatmap("gate weights", &gate.values, &gate.row_labels, &gate.col_labels, ColorMode::Absolute)?,
    ));
    let max = activations.values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let scaled: Vec<Vec<f64>> = activations
        .values
        .iter()
        .map(|r| r.iter().map(|v| if max > 0.0 { v / max } else { 0.0 }).collect())
        .collect();
    out.push((
        "state_activations.svg".into(),
        render_heatmap(
            &format!("candidate state activations (scaled by max {max:.4})"),
            &scaled,
            &activations.row_labels,
            &activations.col_labels,
            ColorMode::Absolute,
        )?,
    ));
    let removed: Vec<&AblationOutRow> = ablation.iter().filter(|r| r.removed != "none").collect();
    if !removed.is_empty() {
        let labels: Vec<String> = removed.iter().map(|r| format!("-state {}", r.removed)).collect();
        let values: Vec<f64> = removed.iter().map(|r| r.r_drop).collect();
        out.push((
            "ablation.svg".into(),
            render_bar_chart("test r drop when one state is removed", &labels, &values, None)?,
        ));
    }
    Ok(out)
}

// --- cv --------------------------------------------------------------------

fn stats_runtime(context: &str) -> impl FnOnce(StatsError) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{context}: {e}"))
}

pub fn cmd_cv(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let data = load_data(&cfg.data)?;
    let hash = cfg.hash(&data.bytes)?;
    let td = data.training();
    let n = data.targets.len();
    let plan = kfold_split(n, cfg.cv.k, cfg.cv.fold_seed).map_err(|e| CliError::Config(e.to_string()))?;

    let mut results: Vec<CvResult> = cross_validate(Family::Direct, td, &cfg.train, &plan).map_err(runtime)?;
    results.extend(cross_validate(Family::DualPath, td, &cfg.train, &plan).map_err(runtime)?);
    if results.iter().any(|r| r.plan != plan) {
        return Err(CliError::Runtime("model families did not share one fold plan".into()));
    }
    let get = |p: Pathway| results.iter().find(|r| r.pathway == p).expect("pathway present");
    let (direct, intuition, deliberation) = (get(Pathway::Direct), get(Pathway::Intuition), get(Pathway::Deliberation));
    let ordered = [direct, intuition, deliberation];

    let mut out = Out::new(&cfg.out, hash.clone())?;
    let mut lines = vec![first_line(&data.summary)];

    out.json(
        "cv_metrics.json",
        &CvMetricsDoc {
            config_hash: hash.clone(),
            items: n,
            fold_plan: plan.clone(),
            pathways: ordered
                .iter()
                .map(|r| PathwaySummary {
                    pathway: r.pathway.name().into(),
                    aggregate: r.aggregate.into(),
                    fold_mean_r: r.fold_mean(),
                    fold_sd_r: r.fold_sd(),
                })
                .collect(),
        },
    )?;
    for r in ordered {
        lines.push(format!(
            "{:<12} r={:.4} rmse={:.4} mae={:.4} fold mean r={:.4} (sd {:.4})",
            r.pathway.name(),
            r.aggregate.r,
            r.aggregate.rmse,
            r.aggregate.mae,
            r.fold_mean(),
            r.fold_sd()
        ));
    }

    let fold_sizes = plan.fold_sizes();
    let folds: Vec<FoldCorrelationRow> = (0..plan.k)
        .map(|j| FoldCorrelationRow {
            fold: j + 1,
            test_items: fold_sizes[j],
            direct: direct.fold_correlations[j],
            intuition: intuition.fold_correlations[j],
            deliberation: deliberation.fold_correlations[j],
        })
        .collect();
    out.csv("fold_correlations.csv", &folds)?;

    let per_type: Vec<PerTypeRow> = (0..ResponseType::ALL.len())
        .map(|k| PerTypeRow {
            response: ResponseType::LABELS[k].into(),
            direct: direct.per_type[k],
            intuition: intuition.per_type[k],
            deliberation: deliberation.per_type[k],
            deliberation_minus_intuition: deliberation.per_type[k]
                .zip(intuition.per_type[k])
                .map(|(d, i)| d - i),
        })
        .collect();
    out.csv("per_type.csv", &per_type)?;

    let deltas = item_rmse_delta(&intuition.heldout, &deliberation.heldout, &data.targets, &data.codes)
        .map_err(stats_runtime("item deltas"))?;
    let delta_rows: Vec<ItemDeltaRow> = deltas
        .iter()
        .enumerate()
        .map(|(rank, d)| ItemDeltaRow {
            rank: rank + 1,
            code: d.code.clone(),
            rmse_intuition: d.rmse_a,
            rmse_deliberation: d.rmse_b,
            delta: d.delta,
        })
        .collect();
    out.csv("item_deltas.csv", &delta_rows)?;

    let comparisons = [
        ("deliberation_vs_intuition", deliberation, intuition),
        ("deliberation_vs_direct", deliberation, direct),
        ("intuition_vs_direct", intuition, direct),
    ];
    let mut ttests = Vec::new();
    for (name, a, b) in comparisons {
        let diffs: Vec<f64> = a.fold_correlations.iter().zip(&b.fold_correlations).map(|(x, y)| x - y).collect();
        let mean_difference = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let (t, p) = match paired_t_test(&a.fold_correlations, &b.fold_correlations) {
            Ok(res) => (Some(res.t), Some(res.p)),
            Err(StatsError::DegenerateTest) => (None, None),
            Err(e) => return Err(CliError::Runtime(format!("{name}: {e}"))),
        };
        lines.push(format!(
            "{name}: mean diff {mean_difference:+.4}, t={}, p={}",
            t.map_or("n/a".into(), |v| format!("{v:.4}")),
            p.map_or("n/a".into(), |v| format!("{v:.4}"))
        ));
        ttests.push(TTestRow {
            comparison: name.into(),
            mean_difference,
            t,
            df: plan.k - 1,
            p,
        });
    }
    out.csv("ttests.csv", &ttests)?;

    let mut boot = Vec::new();
    for r in ordered {
        let ci = bootstrap_ci(&r.heldout, &data.targets, cfg.cv.resamples, cfg.cv.bootstrap_seed)
            .map_err(stats_runtime("bootstrap"))?;
        lines.push(format!(
            "{:<12} 95% CI [{:.4}, {:.4}] width {:.4}",
            r.pathway.name(),
            ci.lo,
            ci.hi,
            ci.width()
        ));
        boot.push(BootstrapRow {
            pathway: r.pathway.name().into(),
            r: r.aggregate.r,
            ci_low: ci.lo,
            ci_high: ci.hi,
            width: ci.width(),
            resamples: ci.resamples,
            seed: ci.seed,
            redraws: ci.redraws,
        });
    }
    out.csv("bootstrap.csv", &boot)?;

    let human = MatrixTable::from_distributions(data.codes.clone(), &data.targets);
    out.matrix("cv_predictions_human.csv", &human)?;
    let mut preds = Vec::new();
    for r in ordered {
        let t = MatrixTable::from_distributions(data.codes.clone(), &r.heldout);
        out.matrix(&format!("cv_predictions_{}.csv", r.pathway.name()), &t)?;
        preds.push((r.pathway.name(), t));
    }
    for (name, svg) in cv_figures(&human, &preds, &boot)? {
        out.text(&name, &svg)?;
    }
    out.finish("cv", &first_line(&data.summary), lines)
}

// --- canonical / ablate ----------------------------------------------------

fn codes_of(data: &LoadedData, items: &[usize]) -> Vec<String> {
    items.iter().map(|&i| data.codes[i].clone()).collect()
}

fn gate_tables(model: &DualPathModel, data: &LoadedData) -> (MatrixTable, MatrixTable) {
    let mut gate = Vec::new();
    let mut act = Vec::new();
    for x in &data.features {
        let (_, trace) = model.predict(x);
        gate.push(trace.gate.to_vec());
        act.push(trace.states.iter().flatten().copied().collect::<Vec<f64>>());
    }
    let gate_cols = (1..=N_STATES).map(|s| format!("g{s}")).collect();
    let act_cols = (1..=N_STATES)
        .flat_map(|s| (1..=STATE_UNITS).map(move |u| format!("s{s}.{u}")))
        .collect();
    (
        MatrixTable {
            row_labels: data.codes.clone(),
            col_labels: gate_cols,
            values: gate,
        },
        MatrixTable {
            row_labels: data.codes.clone(),
            col_labels: act_cols,
            values: act,
        },
    )
}

fn split_doc(hash: &str, data: &LoadedData, run_split: &crate::interpret::TrainTestSplit) -> SplitDoc {
    SplitDoc {
        config_hash: hash.into(),
        seed: run_split.seed,
        train: codes_of(data, &run_split.train),
        test: codes_of(data, &run_split.test),
    }
}

fn ablation_rows(rows: &[crate::interpret::AblationRow]) -> Vec<AblationOutRow> {
    rows.iter().map(AblationOutRow::from).collect()
}

pub fn cmd_canonical(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let data = load_data(&cfg.data)?;
    let hash = cfg.hash(&data.bytes)?;
    let run: SplitRun = run_seed(data.training(), &cfg.train, cfg.canonical.seed, cfg.canonical.train_fraction)
        .map_err(runtime)?;
    let mut out = Out::new(&cfg.out, hash.clone())?;
    let mut lines = vec![first_line(&data.summary)];
    let split = &run.split;

    out.json("split.json", &split_doc(&hash, &data, split))?;
    let final_loss = |v: &[f64]| v.last().copied().unwrap_or(f64::NAN);
    out.json(
        "metrics.json",
        &CanonicalMetricsDoc {
            config_hash: hash.clone(),
            seed: split.seed,
            train_items: split.train.len(),
            test_items: split.test.len(),
            intuition: run.intuition_test.into(),
            deliberation: run.deliberation_test.into(),
            gain: run.deliberation_test.r - run.intuition_test.r,
            final_intuition_loss: final_loss(&run.trained.intuition_losses),
            final_deliberation_loss: final_loss(&run.trained.deliberation_losses),
        },
    )?;
    lines.push(format!(
        "split seed {}: {} train / {} test; test r intuition {:.4}, deliberation {:.4} (gain {:+.4})",
        split.seed,
        split.train.len(),
        split.test.len(),
        run.intuition_test.r,
        run.deliberation_test.r,
        run.deliberation_test.r - run.intuition_test.r
    ));
    let losses: Vec<LossRow> = run
        .trained
        .intuition_losses
        .iter()
        .zip(&run.trained.deliberation_losses)
        .enumerate()
        .map(|(e, (&i, &d))| LossRow {
            epoch: e + 1,
            intuition: i,
            deliberation: d,
        })
        .collect();
    out.csv("losses.csv", &losses)?;
    let ck = Checkpoint::from_dualpath(run.model(), split.seed, &hash);
    out.text("model.ckpt", &ck.to_text())?;

    let test_codes = codes_of(&data, &split.test);
    let test_human: Vec<Distribution> = split.test.iter().map(|&i| data.targets[i]).collect();
    let (int_pred, del_pred) = run.test_predictions(&data.features);
    let human = MatrixTable::from_distributions(test_codes.clone(), &test_human);
    out.matrix("test_predictions_human.csv", &human)?;
    let preds = vec![
        ("intuition", MatrixTable::from_distributions(test_codes.clone(), &int_pred)),
        ("deliberation", MatrixTable::from_distributions(test_codes.clone(), &del_pred)),
    ];
    for (name, t) in &preds {
        out.matrix(&format!("test_predictions_{name}.csv"), t)?;
    }

    let deltas = item_rmse_delta(&int_pred, &del_pred, &test_human, &test_codes)
        .map_err(stats_runtime("item deltas"))?;
    let delta_rows: Vec<ItemDeltaRow> = deltas
        .iter()
        .enumerate()
        .map(|(rank, d)| ItemDeltaRow {
            rank: rank + 1,
            code: d.code.clone(),
            rmse_intuition: d.rmse_a,
            rmse_deliberation: d.rmse_b,
            delta: d.delta,
        })
        .collect();
    out.csv("canonical_item_deltas.csv", &delta_rows)?;

    let g = &run.gate;
    let winners: Vec<GateWinnerRow> = (0..N_STATES)
        .map(|s| GateWinnerRow {
            state: s + 1,
            train_wins: g.train_counts[s],
            test_wins: g.test_counts[s],
        })
        .collect();
    out.csv("gate_winners.csv", &winners)?;
    let items: Vec<GateItemRow> = g
        .train_winners
        .iter()
        .map(|&(i, w)| ("train", i, w))
        .chain(g.test_winners.iter().map(|&(i, w)| ("test", i, w)))
        .map(|(p, i, w)| GateItemRow {
            code: data.codes[i].clone(),
            partition: p.into(),
            winner: w + 1,
        })
        .collect();
    out.csv("gate_items.csv", &items)?;
    let probes: Vec<StateProbeRow> = run
        .train_probes
        .iter()
        .map(|p| StateProbeRow::new(p, "train"))
        .chain(run.test_probes.iter().map(|p| StateProbeRow::new(p, "test")))
        .collect();
    out.csv("state_probes.csv", &probes)?;
    let ablation = ablation_rows(&run.ablation);
    out.csv("ablation.csv", &ablation)?;
    let roles: Vec<StateRoleRow> = run
        .roles
        .iter()
        .enumerate()
        .map(|(s, r)| StateRoleRow {
            state: s + 1,
            roles: r.labels().join(";"),
        })
        .collect();
    out.csv("state_roles.csv", &roles)?;
    lines.push(format!(
        "gate wins train {:?} test {:?}",
        g.train_counts, g.test_counts
    ));
    for r in &roles {
        lines.push(format!("state {}: {}", r.state, if r.roles.is_empty() { "-" } else { &r.roles }));
    }
    for a in &ablation {
        lines.push(format!(
            "ablate {:<5} test r {:.4} drop {:+.4} rmse {:.4} (+{:.4})",
            a.removed, a.test_r, a.r_drop, a.test_rmse, a.rmse_increase
        ));
    }

    let (gate, act) = gate_tables(run.model(), &data);
    out.matrix("gate_weights.csv", &gate)?;
    out.matrix("state_activations.csv", &act)?;
    for (name, svg) in canonical_figures(&human, &preds, &gate, &act, &ablation)? {
        out.text(&name, &svg)?;
    }
    out.finish("canonical", &first_line(&data.summary), lines)
}

/// Ablation on the canonical split, using a saved checkpoint when given and
/// otherwise retraining the canonical model.
pub fn cmd_ablate(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<CommandOutput, CliError> {
    let data = load_data(&cfg.data)?;
    let hash = cfg.hash(&data.bytes)?;
    let td = data.training();
    let (model, split) = match checkpoint {
        Some(p) => {
            let ck = Checkpoint::load(p).map_err(|e| CliError::Data(e.to_string()))?;
            let split = train_test_split(data.features.len(), cfg.canonical.train_fraction, ck.seed)
                .map_err(runtime)?;
            (ck.to_dualpath().map_err(|e| CliError::Data(e.to_string()))?, split)
        }
        None => {
            let run = run_seed(td, &cfg.train, cfg.canonical.seed, cfg.canonical.train_fraction)
                .map_err(runtime)?;
            (run.trained.model, run.split)
        }
    };
    let rows = ablation_rows(&ablate(&model, td, &split.test).map_err(runtime)?);
    let gate = gate_summary(&model, &data.features, &split);
    let mut out = Out::new(&cfg.out, hash.clone())?;
    let mut lines = vec![first_line(&data.summary)];
    out.json("split.json", &split_doc(&hash, &data, &split))?;
    out.csv("ablation.csv", &rows)?;
    for a in &rows {
        lines.push(format!(
            "ablate {:<5} test r {:.4} drop {:+.4} rmse {:.4} (+{:.4})",
            a.removed, a.test_r, a.r_drop, a.test_rmse, a.rmse_increase
        ));
    }
    lines.push(format!("gate wins train {:?} test {:?}", gate.train_counts, gate.test_counts));
    let removed: Vec<&AblationOutRow> = rows.iter().filter(|r| r.removed != "none").collect();
    let labels: Vec<String> = removed.iter().map(|r| format!("-state {}", r.removed)).collect();
    let values: Vec<f64> = removed.iter().map(|r| r.r_drop).collect();
    out.text(
        "ablation.svg",
        &render_bar_chart("test r drop when one state is removed", &labels, &values, None)?,
    )?;
    out.finish("ablate", &first_line(&data.summary), lines)
}

// --- sweep -------------------------------------------------------------------

pub fn cmd_sweep(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let data = load_data(&cfg.data)?;
    let hash = cfg.hash(&data.bytes)?;
    let rows = seed_sweep(data.training(), &cfg.train, &cfg.sweep.seeds, cfg.canonical.train_fraction);
    let out_rows: Vec<SweepOutRow> = rows.iter().map(SweepOutRow::from).collect();
    let mut out = Out::new(&cfg.out, hash)?;
    out.csv("sweep.csv", &out_rows)?;
    let mut lines = vec![first_line(&data.summary)];
    for r in &out_rows {
        match r.gain {
            Some(g) => lines.push(format!(
                "seed {}: intuition {:.4} deliberation {:.4} gain {:+.4} dominant {} dead [{}] oac-leaning {} strongest ablation {}",
                r.seed,
                r.intuition_r.unwrap_or(f64::NAN),
                r.deliberation_r.unwrap_or(f64::NAN),
                g,
                r.dominant_state.unwrap_or(0),
                r.dead_states,
                r.oac_leaning_state.unwrap_or(0),
                r.strongest_ablation_state.unwrap_or(0)
            )),
            None => lines.push(format!("seed {}: {}", r.seed, r.dead_states)),
        }
    }
    out.finish("sweep", &first_line(&data.summary), lines)
}

// --- encode / synth / report -------------------------------------------------

pub fn cmd_encode(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let hash = cfg.hash(b"")?;
    let syllogisms = enumerate_syllogisms();
    let table = MatrixTable {
        row_labels: syllogisms.iter().map(|s| s.code()).collect(),
        col_labels: (0..FEATURE_DIM).map(|i| format!("f{i:02}")).collect(),
        values: syllogisms.iter().map(|s| s.encode().0.to_vec()).collect(),
    };
    let mut out = Out::new(&cfg.out, hash)?;
    out.matrix("features.csv", &table)?;
    out.finish(
        "encode",
        "no data",
        vec![format!("{} x {} feature matrix", table.values.len(), FEATURE_DIM)],
    )
}

/// Writes a synthetic table (not human data) in the input schema.
pub fn cmd_synth(seed: u64, path: &Path) -> Result<CommandOutput, CliError> {
    let table = synthetic_table(seed);
    let mut buf = format!("# synthetic response table, seed {seed}; not human data\n").into_bytes();
    table.write_csv(&mut buf).map_err(runtime)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Runtime(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, buf).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(CommandOutput {
        lines: vec![format!("wrote synthetic table (seed {seed}) to {}", path.display())],
        files: vec![path.display().to_string()],
    })
}

/// Re-renders every figure whose source tables exist in the output directory.
pub fn cmd_report(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let dir = &cfg.out;
    let exists = |n: &str| dir.join(n).exists();
    let read_matrix = |n: &str| MatrixTable::read(&dir.join(n)).map(|(_, m)| m);
    let mut figures = Vec::new();
    let mut hash = None;
    if exists("cv_predictions_human.csv") {
        let (h, human) = MatrixTable::read(&dir.join("cv_predictions_human.csv"))?;
        hash = Some(h);
        let mut preds = Vec::new();
        for name in ["direct", "intuition", "deliberation"] {
            preds.push((name, read_matrix(&format!("cv_predictions_{name}.csv"))?));
        }
        let (_, boot): (String, Vec<BootstrapRow>) = read_csv(&dir.join("bootstrap.csv"))?;
        figures.extend(cv_figures(&human, &preds, &boot)?);
    }
    if exists("test_predictions_human.csv") {
        let (h, human) = MatrixTable::read(&dir.join("test_predictions_human.csv"))?;
        hash.get_or_insert(h);
        let preds = vec![
            ("intuition", read_matrix("test_predictions_intuition.csv")?),
            ("deliberation", read_matrix("test_predictions_deliberation.csv")?),
        ];
        let (_, ablation): (String, Vec<AblationOutRow>) = read_csv(&dir.join("ablation.csv"))?;
        figures.extend(canonical_figures(
            &human,
            &preds,
            &read_matrix("gate_weights.csv")?,
            &read_matrix("state_activations.csv")?,
            &ablation,
        )?);
    }
    let Some(hash) = hash else {
        return Err(CliError::Data(format!(
            "{}: no archived cv or canonical tables to render",
            dir.display()
        )));
    };
    let mut out = Out::new(dir, hash)?;
    for (name, svg) in &figures {
        out.text(name, svg)?;
    }
    out.finish("report", "from archived tables", vec![format!("rendered {} figure(s)", figures.len())])
}

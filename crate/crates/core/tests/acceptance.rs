//! Acceptance criteria. Each test prints one `[PASS]`/`[FAIL]` line on stderr
//! (unaffected by output capture) and asserts the same condition.
//!
//! Criteria 4-9 need the human response table. It is read from
//! `$DUALPATH_HUMAN_DATA`, else `data/human_responses.csv` at the workspace
//! root; when neither exists those criteria fail as BLOCKED.

mod common;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::*;
use dualpath::dataset::{validate_report, DataIssue, HumanMatrix};
use dualpath::interpret::{run_seed, seed_sweep, SplitRun, SweepRow, DEFAULT_TRAIN_FRACTION};
use dualpath::models::{
    DirectMlp, DualPathModel, KeepSet, TrainConfig, TrainingData,
};
use dualpath::nnkit::{kl_loss, Parameters};
use dualpath::report::commands::load_data;
use dualpath::report::RunConfig;
use dualpath::stats::{
    aggregate_metrics, bootstrap_ci, cross_validate, kfold_split, paired_t_test, CvResult, Family,
    Pathway,
};
use dualpath::syllogism::ResponseType;
use dualpath::Distribution;

// Criterion 2
const T_TOL: f64 = 0.001;
const P_TOL: f64 = 0.0005;
// Criterion 3
const GRAD_RUNTIME: Duration = Duration::from_secs(10);
// Criterion 4
const DIRECT_BAND: (f64, f64) = (0.60, 0.80);
const INTUITION_BAND: (f64, f64) = (0.62, 0.80);
const DELIBERATION_BAND: (f64, f64) = (0.74, 0.89);
const MIN_DELIB_ADVANTAGE: f64 = 0.03;
const CV_RUNTIME: Duration = Duration::from_secs(300);
// Criterion 5
const FOLD_SEEDS: [u64; 5] = [42, 43, 44, 45, 46];
const ALPHA: f64 = 0.05;
const MIN_SIGNIFICANT_SEEDS: usize = 4;
// Criterion 6
const BOOTSTRAP_RESAMPLES: usize = 5000;
const CI_WIDTH_BAND: (f64, f64) = (0.06, 0.20);
const BOOTSTRAP_RUNTIME: Duration = Duration::from_secs(30);
// Criterion 7
const DEAD_STATE_MAX_DROP: f64 = 0.01;
const MIN_STRONGEST_DROP: f64 = 0.10;
const MIN_DOMINANT_MATCHES: usize = 3;
// Criterion 8
const MIN_POSITIVE_GAINS: usize = 4;
const MIN_DEAD_STATE_SEEDS: usize = 4;

fn say(line: &str) {
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn verdict(n: u8, title: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    say(&format!("[{tag}] criterion {n:>2} {title}: {detail}"));
    assert!(pass, "criterion {n} ({title}) failed: {detail}");
}

// --- human data ---------------------------------------------------------------

fn human_path() -> PathBuf {
    std::env::var_os("DUALPATH_HUMAN_DATA")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/human_responses.csv")
        })
}

struct Human {
    features: Vec<dualpath::syllogism::FeatureVector>,
    targets: Vec<Distribution>,
}

fn human() -> Option<&'static Human> {
    static DATA: OnceLock<Option<Human>> = OnceLock::new();
    DATA.get_or_init(|| {
        let path = human_path();
        if !path.exists() {
            return None;
        }
        let d = load_data(&path).unwrap_or_else(|e| panic!("human table {}: {e}", path.display()));
        Some(Human {
            features: d.features,
            targets: d.targets,
        })
    })
    .as_ref()
}

fn require_human(n: u8, title: &str) -> &'static Human {
    match human() {
        Some(h) => h,
        None => {
            verdict(
                n,
                title,
                false,
                &format!(
                    "BLOCKED: human response table not found at {} (set DUALPATH_HUMAN_DATA)",
                    human_path().display()
                ),
            );
            unreachable!()
        }
    }
}

fn data(h: &Human) -> TrainingData<'_> {
    TrainingData::new(&h.features, &h.targets)
}

struct CvRun {
    direct: CvResult,
    intuition: CvResult,
    deliberation: CvResult,
    elapsed: Duration,
}

fn cv_run(h: &'static Human, fold_seed: u64) -> CvRun {
    let start = Instant::now();
    let cfg = TrainConfig::default();
    let plan = kfold_split(64, 5, fold_seed).unwrap();
    let direct = cross_validate(Family::Direct, data(h), &cfg, &plan).unwrap().remove(0);
    let mut dual = cross_validate(Family::DualPath, data(h), &cfg, &plan).unwrap();
    let deliberation = dual.remove(1);
    let intuition = dual.remove(0);
    assert_eq!((intuition.pathway, deliberation.pathway), (Pathway::Intuition, Pathway::Deliberation));
    CvRun {
        direct,
        intuition,
        deliberation,
        elapsed: start.elapsed(),
    }
}

fn default_cv(h: &'static Human) -> &'static CvRun {
    static RUN: OnceLock<CvRun> = OnceLock::new();
    RUN.get_or_init(|| cv_run(h, RunConfig::default().cv.fold_seed))
}

fn canonical(h: &'static Human) -> &'static SplitRun {
    static RUN: OnceLock<SplitRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let c = RunConfig::default();
        run_seed(data(h), &c.train, c.canonical.seed, c.canonical.train_fraction).unwrap()
    })
}

fn sweep(h: &'static Human) -> &'static Vec<SweepRow> {
    static ROWS: OnceLock<Vec<SweepRow>> = OnceLock::new();
    ROWS.get_or_init(|| {
        let c = RunConfig::default();
        seed_sweep(data(h), &c.train, &c.sweep.seeds, DEFAULT_TRAIN_FRACTION)
    })
}

// --- 1 ----------------------------------------------------------------------

#[test]
fn criterion_01_parameter_counts() {
    let d = DirectMlp::build(7);
    let m = DualPathModel::build(7);
    let counts = (
        d.parameter_count(),
        m.intuition.parameter_count(),
        m.deliberation.parameter_count(),
        m.parameter_count(),
    );
    verdict(
        1,
        "parameter counts",
        counts == (2505, 165, 470, 635),
        &format!("direct {} / intuition {} / deliberation {} / dual-path {} (expected 2505 / 165 / 470 / 635)", counts.0, counts.1, counts.2, counts.3),
    );
}

// --- 2 ----------------------------------------------------------------------

#[test]
fn criterion_02_t_test_oracle() {
    let direct = [0.8523, 0.6223, 0.5859, 0.7350, 0.7745];
    let intuition = [0.6599, 0.6271, 0.8284, 0.7391, 0.7517];
    let deliberation = [0.7313, 0.7478, 0.8627, 0.8256, 0.9036];
    let cases = [
        ("deliberation vs intuition", &deliberation, &intuition, 4.5914, 0.0101),
        ("deliberation vs direct", &deliberation, &direct, 1.5678, 0.1920),
        ("intuition vs direct", &intuition, &direct, 0.1047, 0.9217),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, a, b, t_ref, p_ref) in cases {
        let r = paired_t_test(a, b).unwrap();
        let ok = (r.t - t_ref).abs() <= T_TOL && (r.p - p_ref).abs() <= P_TOL;
        pass &= ok;
        parts.push(format!(
            "{name}: t={:.4} (ref {t_ref}, |d|={:.4}) p={:.4} (ref {p_ref}, |d|={:.5}){}",
            r.t,
            (r.t - t_ref).abs(),
            r.p,
            (r.p - p_ref).abs(),
            if ok { "" } else { " OUT OF TOLERANCE" }
        ));
    }
    verdict(2, "t-test oracle (t +-0.001, p +-0.0005)", pass, &parts.join("; "));
}

// --- 3 ----------------------------------------------------------------------

#[test]
fn criterion_03_gradients() {
    let start = Instant::now();
    let f = features();
    let t = random_targets(64, 31);
    let items = [2usize, 21, 44, 60];
    let n = items.len() as f64;

    let direct = DirectMlp::build(3);
    let mut g = direct.zeros_like();
    for &i in &items {
        direct.accumulate_grad(&f[i], &t[i], 1.0 / n, &mut g);
    }
    let rd = gradcheck(&direct, &g.flat(), 0..2505, |m| {
        items.iter().map(|&i| kl_loss(&t[i], &m.predict(&f[i]))).sum::<f64>() / n
    });

    let dual = DualPathModel::build(3);
    let check = |w: (f64, f64), range: std::ops::Range<usize>| {
        let mut g = dual.zeros_like();
        for &i in &items {
            dual.accumulate_grad(&f[i], &t[i], (w.0 / n, w.1 / n), &mut g);
        }
        gradcheck(&dual, &g.flat(), range, |m| {
            items
                .iter()
                .map(|&i| {
                    let (pi, tr) = m.predict(&f[i]);
                    w.0 * kl_loss(&t[i], &pi) + w.1 * kl_loss(&t[i], &tr.dist)
                })
                .sum::<f64>()
                / n
        })
    };
    let ri = check((1.0, 0.0), 0..165);
    let rl = check((0.0, 1.0), 165..635);
    let elapsed = start.elapsed();
    let worst = rd.max_rel.max(ri.max_rel).max(rl.max_rel);
    let pass = worst < FD_MAX_REL
        && rd.checked + ri.checked + rl.checked == 2505 + 635
        && elapsed < GRAD_RUNTIME;
    verdict(
        3,
        "gradients vs central differences (h=1e-5, rel < 1e-4)",
        pass,
        &format!(
            "max rel error direct {:.2e} ({} params), intuition {:.2e} ({}), deliberation {:.2e} ({}); {:.2}s",
            rd.max_rel, rd.checked, ri.max_rel, ri.checked, rl.max_rel, rl.checked,
            elapsed.as_secs_f64()
        ),
    );
}

// --- 4 ----------------------------------------------------------------------

fn in_band(v: f64, band: (f64, f64)) -> bool {
    band.0 <= v && v <= band.1
}

#[test]
fn criterion_04_cv_bands() {
    let title = "5-fold CV aggregate r bands";
    let h = require_human(4, title);
    let run = default_cv(h);
    let (d, i, l) = (run.direct.aggregate.r, run.intuition.aggregate.r, run.deliberation.aggregate.r);
    let pass = in_band(d, DIRECT_BAND)
        && in_band(i, INTUITION_BAND)
        && in_band(l, DELIBERATION_BAND)
        && l - i >= MIN_DELIB_ADVANTAGE
        && run.elapsed < CV_RUNTIME;
    verdict(
        4,
        title,
        pass,
        &format!(
            "direct {d:.4} in {DIRECT_BAND:?}, intuition {i:.4} in {INTUITION_BAND:?}, deliberation {l:.4} in {DELIBERATION_BAND:?}, advantage {:+.4} (>= {MIN_DELIB_ADVANTAGE}); {:.1}s",
            l - i,
            run.elapsed.as_secs_f64()
        ),
    );
}

// --- 5 ----------------------------------------------------------------------

#[test]
fn criterion_05_paired_test_direction() {
    let title = "deliberation vs intuition p < 0.05 across fold seeds";
    let h = require_human(5, title);
    let mut significant = 0;
    let mut parts = Vec::new();
    for seed in FOLD_SEEDS {
        let own;
        let run = if seed == RunConfig::default().cv.fold_seed {
            default_cv(h)
        } else {
            own = cv_run(h, seed);
            &own
        };
        let r = paired_t_test(
            &run.deliberation.fold_correlations,
            &run.intuition.fold_correlations,
        );
        match r {
            Ok(r) => {
                if r.p < ALPHA && r.t > 0.0 {
                    significant += 1;
                }
                parts.push(format!("seed {seed}: t={:.3} p={:.4}", r.t, r.p));
            }
            Err(e) => parts.push(format!("seed {seed}: {e}")),
        }
    }
    verdict(
        5,
        title,
        significant >= MIN_SIGNIFICANT_SEEDS,
        &format!("{significant}/5 significant (need {MIN_SIGNIFICANT_SEEDS}); {}", parts.join(", ")),
    );
}

// --- 6 ----------------------------------------------------------------------

#[test]
fn criterion_06_bootstrap() {
    let title = "deliberation bootstrap CI";
    let h = require_human(6, title);
    let run = default_cv(h);
    let seed = RunConfig::default().cv.bootstrap_seed;
    let start = Instant::now();
    let a = bootstrap_ci(&run.deliberation.heldout, &h.targets, BOOTSTRAP_RESAMPLES, seed).unwrap();
    let elapsed = start.elapsed();
    let b = bootstrap_ci(&run.deliberation.heldout, &h.targets, BOOTSTRAP_RESAMPLES, seed).unwrap();
    let r = run.deliberation.aggregate.r;
    let pass = in_band(a.width(), CI_WIDTH_BAND) && a.contains(r) && a == b && elapsed < BOOTSTRAP_RUNTIME;
    verdict(
        6,
        title,
        pass,
        &format!(
            "[{:.4}, {:.4}] width {:.4} in {CI_WIDTH_BAND:?}, contains r={r:.4}: {}, deterministic: {}; {:.2}s",
            a.lo,
            a.hi,
            a.width(),
            a.contains(r),
            a == b,
            elapsed.as_secs_f64()
        ),
    );
}

// --- 7 ----------------------------------------------------------------------

#[test]
fn criterion_07_ablation_pattern() {
    let title = "ablation pattern";
    let h = require_human(7, title);
    let run = canonical(h);
    let model = run.model();
    let test = &run.split.test;
    let plain: Vec<Distribution> = test.iter().map(|&i| model.predict_deliberation(&h.features[i])).collect();
    let human: Vec<Distribution> = test.iter().map(|&i| h.targets[i]).collect();
    let plain_m = aggregate_metrics(&plain, &human).unwrap();
    let base = &run.ablation[0];
    let keep_all_identical = test
        .iter()
        .zip(&plain)
        .all(|(&i, p)| model.predict_with_gate_override(&h.features[i], KeepSet::all()) == *p);
    let a = base.removed.is_none()
        && base.r.to_bits() == plain_m.r.to_bits()
        && base.rmse.to_bits() == plain_m.rmse.to_bits()
        && keep_all_identical;

    let dead = run.gate.dead_states();
    let dead_drops: Vec<(usize, f64)> = dead
        .iter()
        .map(|&s| (s + 1, run.ablation[s + 1].r_drop))
        .collect();
    let b = dead_drops.iter().all(|&(_, d)| d.abs() < DEAD_STATE_MAX_DROP);

    let (strong, drop) = dualpath::interpret::strongest_ablation(&run.ablation).unwrap();
    let canonical_c = drop >= MIN_STRONGEST_DROP;
    let sweep_rows = sweep(h);
    let matches = sweep_rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .filter(|s| s.strongest_ablation == s.dominant)
        .count();
    let c = canonical_c && matches >= MIN_DOMINANT_MATCHES;
    verdict(
        7,
        title,
        a && b && c,
        &format!(
            "(a) baseline bit-identical: {a}; (b) dead states {:?} drops {:?} (< {DEAD_STATE_MAX_DROP}): {b}{}; (c) canonical strongest state {} drop {drop:.4} (>= {MIN_STRONGEST_DROP}), sweep seeds where strongest = most-winning test state: {matches}/5 (need {MIN_DOMINANT_MATCHES}): {c}",
            dead.iter().map(|s| s + 1).collect::<Vec<_>>(),
            dead_drops,
            if dead.is_empty() { " (no dead state in this run)" } else { "" },
            strong + 1
        ),
    );
}

// --- 8 ----------------------------------------------------------------------

#[test]
fn criterion_08_sweep_pattern() {
    let title = "five-seed sweep pattern";
    let h = require_human(8, title);
    let rows = sweep(h);
    let ok: Vec<_> = rows.iter().filter_map(|r| r.outcome.as_ref().ok().map(|s| (r.seed, s))).collect();
    let positive = ok.iter().filter(|(_, s)| s.gain > 0.0).count();
    let with_dead = ok.iter().filter(|(_, s)| !s.dead.is_empty()).count();
    let all_completed = ok.len() == rows.len();
    let detail: Vec<String> = ok
        .iter()
        .map(|(seed, s)| format!("seed {seed}: gain {:+.4} dead {:?}", s.gain, s.dead.iter().map(|d| d + 1).collect::<Vec<_>>()))
        .collect();
    verdict(
        8,
        title,
        positive >= MIN_POSITIVE_GAINS && with_dead >= MIN_DEAD_STATE_SEEDS && all_completed,
        &format!(
            "positive gains {positive}/5 (need {MIN_POSITIVE_GAINS}), dead state present {with_dead}/5 (need {MIN_DEAD_STATE_SEEDS}); {}",
            detail.join(", ")
        ),
    );
}

// --- 9 ----------------------------------------------------------------------

#[test]
fn criterion_09_per_type_direction() {
    let title = "per-type deliberation > intuition on NVC and Eca";
    let h = require_human(9, title);
    let run = default_cv(h);
    let mut pass = true;
    let mut parts = Vec::new();
    for resp in [ResponseType::Nvc, ResponseType::Eca] {
        let k = resp.index();
        let (d, i) = (run.deliberation.per_type[k], run.intuition.per_type[k]);
        let ok = matches!((d, i), (Some(d), Some(i)) if d > i);
        pass &= ok;
        parts.push(format!("{resp}: deliberation {d:?} vs intuition {i:?}"));
    }
    verdict(9, title, pass, &parts.join("; "));
}

// --- 10 ---------------------------------------------------------------------

fn run_cli(dir: &Path, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_dualpath"))
        .args(args)
        .current_dir(dir)
        .env_remove("DUALPATH_OUT")
        .output()
        .unwrap();
    assert!(out.status.success(), "dualpath {args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.file_name().unwrap().to_string_lossy().starts_with("run-"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_10_determinism() {
    // Synthetic table (not human data) with a short schedule; byte equality
    // does not depend on which table or schedule is used.
    let tmp = tempfile::tempdir().unwrap();
    let data = write_synthetic(tmp.path(), 4);
    let cfg = tmp.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "data = {:?}\n[train]\nepochs = 300\n[cv]\nresamples = 300\n[sweep]\nseeds = [1, 2]\n",
            data.display().to_string()
        ),
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let mut snaps = Vec::new();
    for round in ["a", "b"] {
        let out = tmp.path().join(round);
        let out = out.to_str().unwrap();
        for cmd in ["cv", "canonical", "ablate", "sweep", "encode", "report", "validate"] {
            run_cli(tmp.path(), &[cmd, "--config", cfg, "--out", out]);
        }
        snaps.push(snapshot(Path::new(out)));
    }
    let differing: Vec<&String> = snaps[0]
        .iter()
        .zip(&snaps[1])
        .filter(|(a, b)| a != b)
        .map(|(a, _)| &a.0)
        .collect();
    let kinds = ["csv", "json", "svg"]
        .map(|ext| snaps[0].iter().filter(|(n, _)| n.ends_with(ext)).count());
    let pass = snaps[0].len() == snaps[1].len() && differing.is_empty() && kinds.iter().all(|&k| k > 0);
    verdict(
        10,
        "byte-identical reruns",
        pass,
        &format!(
            "{} artifacts ({} csv, {} json, {} svg) across cv/canonical/ablate/sweep/encode/report; differing: {:?}",
            snaps[0].len(),
            kinds[0],
            kinds[1],
            kinds[2],
            differing
        ),
    );
}

// --- 11 ---------------------------------------------------------------------

fn mutate(text: &str, code: &str, f: impl Fn(&mut Vec<String>)) -> String {
    text.lines()
        .map(|l| {
            let mut cells: Vec<String> = l.split(',').map(String::from).collect();
            if cells[0] == code {
                f(&mut cells);
            }
            cells.join(",")
        })
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}

#[test]
fn criterion_11_dataset_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let (source, path) = match human() {
        Some(_) => ("human table", human_path()),
        None => ("synthetic stand-in (human table absent)", write_synthetic(tmp.path(), 1)),
    };
    let text = std::fs::read_to_string(&path).unwrap();
    let accepted = validate_report(&HumanMatrix::read_unchecked(text.as_bytes()).unwrap()).is_ok();

    let check = |mutated: &str, expect: &dyn Fn(&DataIssue) -> bool| -> bool {
        let m = HumanMatrix::read_unchecked(mutated.as_bytes()).unwrap();
        let s = validate_report(&m);
        !s.is_ok() && s.issues.iter().any(expect)
    };
    let missing = mutate(&text, "EI3", |c| c.clear());
    let missing_ok = check(&missing, &|i| matches!(i, DataIssue::MissingCode(c) if c == "EI3"));
    let negative = mutate(&text, "AO2", |c| {
        c[1] = "-5".into();
    });
    let negative_ok = check(&negative, &|i| matches!(i, DataIssue::NegativeCell { code, .. } if code == "AO2"));
    let bad_sum = mutate(&text, "IA1", |c| {
        let v: f64 = c[9].parse().unwrap();
        c[9] = format!("{}", (v - 4.0).max(0.0) - 0.0);
        let row: f64 = c[1..10].iter().map(|x| x.parse::<f64>().unwrap()).sum();
        if row > 96.5 {
            let first: f64 = c[1].parse().unwrap();
            c[1] = format!("{}", first - (row - 96.5));
        }
    });
    let bad_sum_ok = check(&bad_sum, &|i| matches!(i, DataIssue::RowSum { code, .. } if code == "IA1"));

    // the CLI reports the same problems with exit code 1 and row context
    let bad_file = tmp.path().join("bad.csv");
    std::fs::write(&bad_file, &negative).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dualpath"))
        .args(["validate", "--data", bad_file.to_str().unwrap()])
        .output()
        .unwrap();
    let stderr = String::from_utf8_lossy(&out.stderr);
    let cli_ok = out.status.code() == Some(1) && stderr.contains("AO2") && stderr.contains("row");

    let pass = accepted && missing_ok && negative_ok && bad_sum_ok && cli_ok;
    verdict(
        11,
        "dataset contract",
        pass,
        &format!(
            "{source}: accepted {accepted}; missing row rejected {missing_ok}; negative cell rejected {negative_ok}; row sum 96.5 rejected {bad_sum_ok}; CLI exit 1 with row diagnostics {cli_ok}"
        ),
    );
}

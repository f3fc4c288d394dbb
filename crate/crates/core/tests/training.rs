mod common;

use common::*;
use dualpath::interpret::train_test_split;
use dualpath::models::{
    train_direct, train_dualpath, DirectMlp, DualPathModel, TrainConfig, TrainingData,
};
use dualpath::nnkit::{kl_loss, Parameters};

const ITEMS: [usize; 4] = [0, 17, 38, 63];

fn direct_loss(m: &DirectMlp, f: &[dualpath::syllogism::FeatureVector], t: &[dualpath::Distribution]) -> f64 {
    ITEMS.iter().map(|&i| kl_loss(&t[i], &m.predict(&f[i]))).sum::<f64>() / ITEMS.len() as f64
}

fn dual_loss(m: &DualPathModel, f: &[dualpath::syllogism::FeatureVector], t: &[dualpath::Distribution], w: (f64, f64)) -> f64 {
    ITEMS
        .iter()
        .map(|&i| {
            let (pi, trace) = m.predict(&f[i]);
            w.0 * kl_loss(&t[i], &pi) + w.1 * kl_loss(&t[i], &trace.dist)
        })
        .sum::<f64>()
        / ITEMS.len() as f64
}

#[test]
fn direct_gradients_match_finite_differences() {
    let (f, t) = (features(), random_targets(64, 1));
    let m = DirectMlp::build(11);
    let mut g = m.zeros_like();
    for &i in &ITEMS {
        m.accumulate_grad(&f[i], &t[i], 1.0 / ITEMS.len() as f64, &mut g);
    }
    let r = gradcheck(&m, &g.flat(), 0..m.parameter_count(), |m| direct_loss(m, &f, &t));
    assert_eq!(r.checked, 2505);
    assert!(r.max_rel < FD_MAX_REL, "{r:?}");
}

#[test]
fn dualpath_gradients_match_finite_differences() {
    let (f, t) = (features(), random_targets(64, 2));
    let m = DualPathModel::build(12);
    for w in [(1.0, 0.0), (0.0, 1.0), (0.5, 0.5)] {
        let mut g = m.zeros_like();
        let n = ITEMS.len() as f64;
        for &i in &ITEMS {
            m.accumulate_grad(&f[i], &t[i], (w.0 / n, w.1 / n), &mut g);
        }
        let r = gradcheck(&m, &g.flat(), 0..635, |m| dual_loss(m, &f, &t, w));
        assert!(r.max_rel < FD_MAX_REL, "weights {w:?}: {r:?}");
    }
}

#[test]
fn pathway_gradients_are_isolated() {
    let (f, t) = (features(), random_targets(64, 3));
    let m = DualPathModel::build(5);
    let mut g_int = m.zeros_like();
    let mut g_del = m.zeros_like();
    for &i in &ITEMS {
        m.accumulate_grad(&f[i], &t[i], (1.0, 0.0), &mut g_int);
        m.accumulate_grad(&f[i], &t[i], (0.0, 1.0), &mut g_del);
    }
    let (gi, gd) = (g_int.flat(), g_del.flat());
    assert!(gi[165..].iter().all(|&v| v == 0.0));
    assert!(gd[..165].iter().all(|&v| v == 0.0));
    assert!(gi[..165].iter().any(|&v| v != 0.0));
    assert!(gd[165..].iter().any(|&v| v != 0.0));
}

#[test]
fn single_item_is_memorized() {
    let (f, t) = (features(), random_targets(64, 4));
    let cfg = TrainConfig::default();
    let data = TrainingData::new(&f, &t);
    let direct = train_direct(data, &[9], &cfg).unwrap();
    let last = *direct.losses.last().unwrap();
    assert!(kl_loss(&t[9], &direct.model.predict(&f[9])) < 1e-3, "direct final {last}");
    let dual = train_dualpath(data, &[9], &cfg).unwrap();
    let (pi, trace) = dual.model.predict(&f[9]);
    assert!(kl_loss(&t[9], &pi) < 1e-3);
    assert!(kl_loss(&t[9], &trace.dist) < 1e-3);
}

#[test]
fn zero_learning_rate_leaves_model_unchanged() {
    let (f, t) = (features(), random_targets(64, 5));
    let cfg = TrainConfig {
        lr: 0.0,
        epochs: 20,
        ..Default::default()
    };
    let data = TrainingData::new(&f, &t);
    let items: Vec<usize> = (0..64).collect();
    let d = train_direct(data, &items, &cfg).unwrap();
    assert_eq!(d.model, DirectMlp::build(cfg.seed));
    assert!(d.losses.iter().all(|&l| l == d.losses[0]));
    let p = train_dualpath(data, &items, &cfg).unwrap();
    assert_eq!(p.model, DualPathModel::build(cfg.seed));
    assert!(p.deliberation_losses.iter().all(|&l| l == p.deliberation_losses[0]));
}

#[test]
fn zero_deliberation_weight_freezes_deliberation() {
    let (f, t) = (features(), random_targets(64, 6));
    let cfg = TrainConfig {
        epochs: 50,
        loss_weights: (1.0, 0.0),
        ..Default::default()
    };
    let items: Vec<usize> = (0..40).collect();
    let trained = train_dualpath(TrainingData::new(&f, &t), &items, &cfg).unwrap();
    let init = DualPathModel::build(cfg.seed);
    assert_eq!(trained.model.deliberation, init.deliberation);
    assert_ne!(trained.model.intuition, init.intuition);
}

#[test]
fn training_is_deterministic() {
    let fx = synthetic_fixture(2);
    let cfg = TrainConfig {
        epochs: 200,
        ..Default::default()
    };
    let data = TrainingData::new(&fx.features, &fx.targets);
    let items: Vec<usize> = (0..51).collect();
    let a = train_dualpath(data, &items, &cfg).unwrap();
    let b = train_dualpath(data, &items, &cfg).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.deliberation_losses, b.deliberation_losses);
    let c = train_direct(data, &items, &cfg).unwrap();
    let d = train_direct(data, &items, &cfg).unwrap();
    assert_eq!(c.model, d.model);
}

// The following run the default configuration on a synthetic table (the
// human table is not bundled); they check optimizer behaviour, not fit to
// human data.

#[test]
fn default_loss_curves_have_no_jumps() {
    let fx = synthetic_fixture(1);
    let split = train_test_split(64, 0.8, 42).unwrap();
    let data = TrainingData::new(&fx.features, &fx.targets);
    let cfg = TrainConfig::default();
    let direct = train_direct(data, &split.train, &cfg).unwrap();
    let dual = train_dualpath(data, &split.train, &cfg).unwrap();
    for (name, curve) in [
        ("direct", &direct.losses),
        ("intuition", &dual.intuition_losses),
        ("deliberation", &dual.deliberation_losses),
    ] {
        assert!(curve.last().unwrap() < &curve[0], "{name} did not decrease");
        for (e, w) in curve.windows(2).enumerate() {
            assert!(w[1] - w[0] <= 0.1 * w[0], "{name} epoch {}: {} -> {}", e + 1, w[0], w[1]);
        }
    }
}

#[test]
fn deliberation_fits_training_items_better_than_intuition() {
    let fx = synthetic_fixture(1);
    let split = train_test_split(64, 0.8, 42).unwrap();
    let trained = train_dualpath(
        TrainingData::new(&fx.features, &fx.targets),
        &split.train,
        &TrainConfig::default(),
    )
    .unwrap();
    let (i, d) = (
        *trained.intuition_losses.last().unwrap(),
        *trained.deliberation_losses.last().unwrap(),
    );
    assert!(d < i, "deliberation {d} vs intuition {i}");
}

#![allow(dead_code)]

use std::path::PathBuf;

use dualpath::dataset::{to_targets, HumanMatrix};
use dualpath::nnkit::{Parameters, RngStream};
use dualpath::syllogism::{enumerate_syllogisms, FeatureVector};
use dualpath::synthetic::synthetic_table;
use dualpath::Distribution;

/// Central-difference step for gradient checks.
pub const FD_STEP: f64 = 1e-5;
/// Maximum allowed relative error between analytic and numeric gradients.
pub const FD_MAX_REL: f64 = 1e-4;
/// Denominator floor so parameters with (near) zero gradient compare on
/// absolute error instead of dividing by zero.
pub const FD_FLOOR: f64 = 1e-8;

pub fn features() -> Vec<FeatureVector> {
    enumerate_syllogisms().iter().map(|s| s.encode()).collect()
}

/// Random proper distributions with one exact zero per row, to exercise the
/// 0 log 0 convention.
pub fn random_targets(n: usize, seed: u64) -> Vec<Distribution> {
    let mut rng = RngStream::new(seed);
    (0..n)
        .map(|i| {
            let mut d: Distribution = std::array::from_fn(|_| rng.next_f64() + 0.05);
            d[i % 9] = 0.0;
            let s: f64 = d.iter().sum();
            d.iter_mut().for_each(|v| *v /= s);
            d
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct GradReport {
    pub checked: usize,
    pub max_rel: f64,
    pub worst_index: usize,
}

/// Compares `analytic` (flat, same order as `model.flat()`) against central
/// differences of `loss` for every flat index in `indices`.
pub fn gradcheck<M: Parameters + Clone>(
    model: &M,
    analytic: &[f64],
    indices: std::ops::Range<usize>,
    loss: impl Fn(&M) -> f64,
) -> GradReport {
    let mut report = GradReport {
        checked: 0,
        max_rel: 0.0,
        worst_index: 0,
    };
    for i in indices {
        let mut plus = model.clone();
        *plus.param_mut(i).unwrap() += FD_STEP;
        let mut minus = model.clone();
        *minus.param_mut(i).unwrap() -= FD_STEP;
        let numeric = (loss(&plus) - loss(&minus)) / (2.0 * FD_STEP);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FD_FLOOR);
        if rel > report.max_rel {
            report.max_rel = rel;
            report.worst_index = i;
        }
        report.checked += 1;
    }
    report
}

/// Synthetic table (not human data) and its training arrays.
pub struct Fixture {
    pub matrix: HumanMatrix,
    pub features: Vec<FeatureVector>,
    pub targets: Vec<Distribution>,
}

pub fn synthetic_fixture(seed: u64) -> Fixture {
    let matrix = synthetic_table(seed);
    let targets = to_targets(&matrix).unwrap();
    let features = matrix.syllogisms().iter().map(|s| s.encode()).collect();
    Fixture {
        matrix,
        features,
        targets,
    }
}

pub fn write_synthetic(dir: &std::path::Path, seed: u64) -> PathBuf {
    let path = dir.join("synthetic.csv");
    let mut buf = Vec::new();
    synthetic_table(seed).write_csv(&mut buf).unwrap();
    std::fs::write(&path, buf).unwrap();
    path
}

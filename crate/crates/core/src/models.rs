//! The three model families: the direct MLP baseline and the two pathways
//! of the bounded dual-path network, plus full-batch Adam training.
//!
//! Deliberation wiring (470 parameters):
//!
//! ```text
//! d   = relu(E x)                      E: 29 -> 4     120
//! s_k = relu(C_k d),  k = 1..5         C_k: 4 -> 4    5 x 20
//! g   = softmax(G d)                   G: 4 -> 5      25
//! out = softmax(O [g1 s1, .., g5 s5, d])  O: 24 -> 9  225
//! ```
//!
//! The intuition pathway is `softmax(U relu(V x))` with `V: 29 -> 4` and
//! `U: 4 -> 9` (165 parameters). The two pathways share no activations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nnkit::{
    adam_step, kl_loss, kl_softmax_backward, softmax_backward, softmax_in_place, AdamConfig,
    AdamState, DenseLayer, NnError, Parameters, RngStream,
};
use crate::syllogism::{FeatureVector, FEATURE_DIM, N_RESPONSES};
use crate::Distribution;

pub const DIRECT_HIDDEN: usize = 64;
pub const INTUITION_UNITS: usize = 4;
pub const DELIB_UNITS: usize = 4;
pub const N_STATES: usize = 5;
pub const STATE_UNITS: usize = 4;
/// Width of the gated representation read by the deliberation output head.
pub const DELIB_REPR: usize = N_STATES * STATE_UNITS + DELIB_UNITS;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("gate keep-set is empty")]
    EmptyKeepSet,
    #[error("state index {0} out of range (states are 0..{N_STATES})")]
    StateOutOfRange(usize),
    #[error("training item index {0} out of range")]
    ItemOutOfRange(usize),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    /// (intuition, deliberation) loss weights.
    pub loss_weights: (f64, f64),
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            epochs: 4000,
            loss_weights: (0.5, 0.5),
            seed: 7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(ModelError::InvalidConfig(format!("lr must be >= 0, got {}", self.lr)));
        }
        if self.epochs == 0 {
            return Err(ModelError::InvalidConfig("epochs must be >= 1".into()));
        }
        let (a, b) = self.loss_weights;
        if !(a.is_finite() && b.is_finite() && a >= 0.0 && b >= 0.0) {
            return Err(ModelError::InvalidConfig(format!(
                "loss weights must be non-negative, got ({a}, {b})"
            )));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

// ---------------------------------------------------------------------------
// Direct MLP

#[derive(Debug, Clone, PartialEq)]
pub struct DirectMlp {
    pub hidden: DenseLayer,
    pub out: DenseLayer,
}

impl DirectMlp {
    /// Initializes hidden then output layer from substream `("direct", 0)`.
    pub fn build(seed: u64) -> Self {
        let mut rng = RngStream::substream(seed, "direct", 0);
        DirectMlp {
            hidden: DenseLayer::init(FEATURE_DIM, DIRECT_HIDDEN, &mut rng),
            out: DenseLayer::init(DIRECT_HIDDEN, N_RESPONSES, &mut rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        DirectMlp {
            hidden: self.hidden.zeros_like(),
            out: self.out.zeros_like(),
        }
    }

    fn forward(&self, x: &[f64]) -> ([f64; DIRECT_HIDDEN], Distribution) {
        let mut h = [0.0; DIRECT_HIDDEN];
        self.hidden.forward_into(x, &mut h);
        relu(&mut h);
        let mut p = [0.0; N_RESPONSES];
        self.out.forward_into(&h, &mut p);
        softmax_in_place(&mut p);
        (h, p)
    }

    pub fn predict(&self, x: &FeatureVector) -> Distribution {
        self.forward(x.as_slice()).1
    }

    /// Adds `weight * dKL/dθ` for one item into `grads`; returns the KL.
    pub fn accumulate_grad(
        &self,
        x: &FeatureVector,
        target: &Distribution,
        weight: f64,
        grads: &mut DirectMlp,
    ) -> f64 {
        let x = x.as_slice();
        let (h, p) = self.forward(x);
        let dz = kl_softmax_backward(target, &p, weight);
        let mut dh = [0.0; DIRECT_HIDDEN];
        self.out.backward(&h, &dz, &mut grads.out, Some(&mut dh));
        for (g, &hv) in dh.iter_mut().zip(&h) {
            if hv <= 0.0 {
                *g = 0.0;
            }
        }
        self.hidden.backward(x, &dh, &mut grads.hidden, None);
        kl_loss(target, &p)
    }
}

impl Parameters for DirectMlp {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut v = self.hidden.tensors();
        v.extend(self.out.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.hidden.tensors_mut();
        v.extend(self.out.tensors_mut());
        v
    }
}

fn relu(x: &mut [f64]) {
    crate::nnkit::relu_in_place(x);
}

// ---------------------------------------------------------------------------
// Dual-path model

#[derive(Debug, Clone, PartialEq)]
pub struct IntuitionPath {
    pub enc: DenseLayer,
    pub out: DenseLayer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeliberationPath {
    pub enc: DenseLayer,
    pub candidates: Vec<DenseLayer>,
    pub gate: DenseLayer,
    pub out: DenseLayer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualPathModel {
    pub intuition: IntuitionPath,
    pub deliberation: DeliberationPath,
}

/// Internal quantities of one deliberation forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct DeliberationTrace {
    pub d: [f64; DELIB_UNITS],
    pub states: [[f64; STATE_UNITS]; N_STATES],
    /// Gate weights actually used (after any override).
    pub gate: [f64; N_STATES],
    /// Zero-based index of the largest gate weight, lowest index on ties.
    pub winner: usize,
    pub dist: Distribution,
}

/// Zero-based argmax with lowest-index tie-break.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate().skip(1) {
        if v > xs[best] {
            best = i;
        }
    }
    best
}

impl IntuitionPath {
    fn forward(&self, x: &[f64]) -> ([f64; INTUITION_UNITS], Distribution) {
        let mut h = [0.0; INTUITION_UNITS];
        self.enc.forward_into(x, &mut h);
        relu(&mut h);
        let mut p = [0.0; N_RESPONSES];
        self.out.forward_into(&h, &mut p);
        softmax_in_place(&mut p);
        (h, p)
    }

    fn backward(&self, x: &[f64], h: &[f64], dz: &Distribution, grads: &mut IntuitionPath) {
        let mut dh = [0.0; INTUITION_UNITS];
        self.out.backward(h, dz, &mut grads.out, Some(&mut dh));
        for (g, &hv) in dh.iter_mut().zip(h) {
            if hv <= 0.0 {
                *g = 0.0;
            }
        }
        self.enc.backward(x, &dh, &mut grads.enc, None);
    }
}

impl Parameters for IntuitionPath {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut v = self.enc.tensors();
        v.extend(self.out.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.enc.tensors_mut();
        v.extend(self.out.tensors_mut());
        v
    }
}

/// Which gate entries survive an override.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeepSet([bool; N_STATES]);

impl KeepSet {
    pub fn all() -> Self {
        KeepSet([true; N_STATES])
    }

    pub fn only(state: usize) -> Result<Self, ModelError> {
        Self::from_indices(&[state])
    }

    pub fn without(state: usize) -> Result<Self, ModelError> {
        if state >= N_STATES {
            return Err(ModelError::StateOutOfRange(state));
        }
        let mut k = [true; N_STATES];
        k[state] = false;
        Ok(KeepSet(k))
    }

    pub fn from_indices(states: &[usize]) -> Result<Self, ModelError> {
        let mut k = [false; N_STATES];
        for &s in states {
            if s >= N_STATES {
                return Err(ModelError::StateOutOfRange(s));
            }
            k[s] = true;
        }
        if !k.iter().any(|&b| b) {
            return Err(ModelError::EmptyKeepSet);
        }
        Ok(KeepSet(k))
    }

    pub fn contains(&self, state: usize) -> bool {
        self.0.get(state).copied().unwrap_or(false)
    }

    pub fn is_all(&self) -> bool {
        self.0.iter().all(|&b| b)
    }

    /// Zeroes dropped entries and renormalizes the rest. The full set is an
    /// exact no-op. If every kept weight underflowed to zero the kept states
    /// share the mass equally.
    pub fn apply(&self, gate: &mut [f64; N_STATES]) {
        if self.is_all() {
            return;
        }
        let mut sum = 0.0;
        for (g, &keep) in gate.iter_mut().zip(&self.0) {
            if keep {
                sum += *g;
            } else {
                *g = 0.0;
            }
        }
        if sum > 0.0 {
            for (g, &keep) in gate.iter_mut().zip(&self.0) {
                if keep {
                    *g /= sum;
                }
            }
        } else {
            let n = self.0.iter().filter(|&&b| b).count() as f64;
            for (g, &keep) in gate.iter_mut().zip(&self.0) {
                if keep {
                    *g = 1.0 / n;
                }
            }
        }
    }
}

impl DeliberationPath {
    fn forward(&self, x: &[f64], keep: KeepSet) -> (DeliberationTrace, [f64; DELIB_REPR]) {
        let mut d = [0.0; DELIB_UNITS];
        self.enc.forward_into(x, &mut d);
        relu(&mut d);
        let mut states = [[0.0; STATE_UNITS]; N_STATES];
        for (s, head) in states.iter_mut().zip(&self.candidates) {
            head.forward_into(&d, s);
            relu(s);
        }
        let mut gate = [0.0; N_STATES];
        self.gate.forward_into(&d, &mut gate);
        softmax_in_place(&mut gate);
        keep.apply(&mut gate);
        let mut repr = [0.0; DELIB_REPR];
        for k in 0..N_STATES {
            for j in 0..STATE_UNITS {
                repr[k * STATE_UNITS + j] = gate[k] * states[k][j];
            }
        }
        repr[N_STATES * STATE_UNITS..].copy_from_slice(&d);
        let mut dist = [0.0; N_RESPONSES];
        self.out.forward_into(&repr, &mut dist);
        softmax_in_place(&mut dist);
        let trace = DeliberationTrace {
            d,
            states,
            gate,
            winner: argmax(&gate),
            dist,
        };
        (trace, repr)
    }

    fn backward(
        &self,
        x: &[f64],
        trace: &DeliberationTrace,
        repr: &[f64; DELIB_REPR],
        dz: &Distribution,
        grads: &mut DeliberationPath,
    ) {
        let mut drepr = [0.0; DELIB_REPR];
        self.out.backward(repr, dz, &mut grads.out, Some(&mut drepr));

        let mut dd = [0.0; DELIB_UNITS];
        dd.copy_from_slice(&drepr[N_STATES * STATE_UNITS..]);

        // gated candidates: repr_kj = g_k * s_kj
        let mut dgate = [0.0; N_STATES];
        for k in 0..N_STATES {
            let mut ds = [0.0; STATE_UNITS];
            for j in 0..STATE_UNITS {
                let upstream = drepr[k * STATE_UNITS + j];
                dgate[k] += upstream * trace.states[k][j];
                ds[j] = if trace.states[k][j] > 0.0 {
                    upstream * trace.gate[k]
                } else {
                    0.0
                };
            }
            self.candidates[k].backward(&trace.d, &ds, &mut grads.candidates[k], Some(&mut dd));
        }
        let mut dlogits = [0.0; N_STATES];
        softmax_backward(&trace.gate, &dgate, &mut dlogits);
        self.gate.backward(&trace.d, &dlogits, &mut grads.gate, Some(&mut dd));

        for (g, &dv) in dd.iter_mut().zip(&trace.d) {
            if dv <= 0.0 {
                *g = 0.0;
            }
        }
        self.enc.backward(x, &dd, &mut grads.enc, None);
    }
}

impl Parameters for DeliberationPath {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut v = self.enc.tensors();
        for c in &self.candidates {
            v.extend(c.tensors());
        }
        v.extend(self.gate.tensors());
        v.extend(self.out.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.enc.tensors_mut();
        for c in &mut self.candidates {
            v.extend(c.tensors_mut());
        }
        v.extend(self.gate.tensors_mut());
        v.extend(self.out.tensors_mut());
        v
    }
}

impl DualPathModel {
    /// Initializes, from substream `("dualpath", 0)`, in order: intuition
    /// encoder, intuition output, deliberation encoder, candidate heads 1..5,
    /// gate, deliberation output.
    pub fn build(seed: u64) -> Self {
        let mut rng = RngStream::substream(seed, "dualpath", 0);
        let intuition = IntuitionPath {
            enc: DenseLayer::init(FEATURE_DIM, INTUITION_UNITS, &mut rng),
            out: DenseLayer::init(INTUITION_UNITS, N_RESPONSES, &mut rng),
        };
        let enc = DenseLayer::init(FEATURE_DIM, DELIB_UNITS, &mut rng);
        let candidates = (0..N_STATES)
            .map(|_| DenseLayer::init(DELIB_UNITS, STATE_UNITS, &mut rng))
            .collect();
        let gate = DenseLayer::init(DELIB_UNITS, N_STATES, &mut rng);
        let out = DenseLayer::init(DELIB_REPR, N_RESPONSES, &mut rng);
        DualPathModel {
            intuition,
            deliberation: DeliberationPath {
                enc,
                candidates,
                gate,
                out,
            },
        }
    }

    pub fn zeros_like(&self) -> Self {
        DualPathModel {
            intuition: IntuitionPath {
                enc: self.intuition.enc.zeros_like(),
                out: self.intuition.out.zeros_like(),
            },
            deliberation: DeliberationPath {
                enc: self.deliberation.enc.zeros_like(),
                candidates: self
                    .deliberation
                    .candidates
                    .iter()
                    .map(DenseLayer::zeros_like)
                    .collect(),
                gate: self.deliberation.gate.zeros_like(),
                out: self.deliberation.out.zeros_like(),
            },
        }
    }

    pub fn predict_intuition(&self, x: &FeatureVector) -> Distribution {
        self.intuition.forward(x.as_slice()).1
    }

    pub fn predict(&self, x: &FeatureVector) -> (Distribution, DeliberationTrace) {
        let int = self.predict_intuition(x);
        let (trace, _) = self.deliberation.forward(x.as_slice(), KeepSet::all());
        (int, trace)
    }

    pub fn predict_deliberation(&self, x: &FeatureVector) -> Distribution {
        self.deliberation.forward(x.as_slice(), KeepSet::all()).0.dist
    }

    pub fn trace_with_gate_override(&self, x: &FeatureVector, keep: KeepSet) -> DeliberationTrace {
        self.deliberation.forward(x.as_slice(), keep).0
    }

    /// Deliberation output with gate entries outside `keep` zeroed and the
    /// remainder renormalized.
    pub fn predict_with_gate_override(&self, x: &FeatureVector, keep: KeepSet) -> Distribution {
        self.trace_with_gate_override(x, keep).dist
    }

    /// Adds the gradient of `w_int * KL_int + w_delib * KL_delib` into
    /// `grads`; returns the two unweighted KL values.
    pub fn accumulate_grad(
        &self,
        x: &FeatureVector,
        target: &Distribution,
        weights: (f64, f64),
        grads: &mut DualPathModel,
    ) -> (f64, f64) {
        let x = x.as_slice();
        let (h, p_int) = self.intuition.forward(x);
        if weights.0 != 0.0 {
            let dz = kl_softmax_backward(target, &p_int, weights.0);
            self.intuition.backward(x, &h, &dz, &mut grads.intuition);
        }
        let (trace, repr) = self.deliberation.forward(x, KeepSet::all());
        if weights.1 != 0.0 {
            let dz = kl_softmax_backward(target, &trace.dist, weights.1);
            self.deliberation
                .backward(x, &trace, &repr, &dz, &mut grads.deliberation);
        }
        (kl_loss(target, &p_int), kl_loss(target, &trace.dist))
    }
}

impl Parameters for DualPathModel {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut v = self.intuition.tensors();
        v.extend(self.deliberation.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.intuition.tensors_mut();
        v.extend(self.deliberation.tensors_mut());
        v
    }
}

// ---------------------------------------------------------------------------
// Training

/// Items available for training: encodings and targets indexed in parallel.
#[derive(Debug, Clone, Copy)]
pub struct TrainingData<'a> {
    pub features: &'a [FeatureVector],
    pub targets: &'a [Distribution],
}

impl<'a> TrainingData<'a> {
    pub fn new(features: &'a [FeatureVector], targets: &'a [Distribution]) -> Self {
        assert_eq!(features.len(), targets.len(), "features and targets must align");
        TrainingData { features, targets }
    }

    fn check(&self, indices: &[usize]) -> Result<(), ModelError> {
        if indices.is_empty() {
            return Err(ModelError::EmptyTrainingSet);
        }
        match indices.iter().find(|&&i| i >= self.features.len()) {
            Some(&i) => Err(ModelError::ItemOutOfRange(i)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedDirect {
    pub model: DirectMlp,
    /// Mean training KL per epoch, measured before that epoch's update.
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainedDualPath {
    pub model: DualPathModel,
    pub intuition_losses: Vec<f64>,
    pub deliberation_losses: Vec<f64>,
}

/// Full-batch Adam on the mean KL, one step per epoch.
pub fn train_direct(
    data: TrainingData<'_>,
    train: &[usize],
    cfg: &TrainConfig,
) -> Result<TrainedDirect, ModelError> {
    cfg.validate()?;
    data.check(train)?;
    let mut model = DirectMlp::build(cfg.seed);
    let mut adam = AdamState::new(AdamConfig::with_lr(cfg.lr), &model.tensor_shapes());
    let w = 1.0 / train.len() as f64;
    let mut losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let mut grads = model.zeros_like();
        let mut total = 0.0;
        for &i in train {
            total += model.accumulate_grad(&data.features[i], &data.targets[i], w, &mut grads);
        }
        losses.push(total * w);
        adam_step(&mut model, &grads, &mut adam)?;
    }
    Ok(TrainedDirect { model, losses })
}

/// Full-batch Adam on `w_int * mean KL_int + w_delib * mean KL_delib`.
pub fn train_dualpath(
    data: TrainingData<'_>,
    train: &[usize],
    cfg: &TrainConfig,
) -> Result<TrainedDualPath, ModelError> {
    cfg.validate()?;
    data.check(train)?;
    let mut model = DualPathModel::build(cfg.seed);
    let mut adam = AdamState::new(AdamConfig::with_lr(cfg.lr), &model.tensor_shapes());
    let n = train.len() as f64;
    let weights = (cfg.loss_weights.0 / n, cfg.loss_weights.1 / n);
    let mut int_losses = Vec::with_capacity(cfg.epochs);
    let mut del_losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let mut grads = model.zeros_like();
        let (mut li, mut ld) = (0.0, 0.0);
        for &i in train {
            let (a, b) =
                model.accumulate_grad(&data.features[i], &data.targets[i], weights, &mut grads);
            li += a;
            ld += b;
        }
        int_losses.push(li / n);
        del_losses.push(ld / n);
        adam_step(&mut model, &grads, &mut adam)?;
    }
    Ok(TrainedDualPath {
        model,
        intuition_losses: int_losses,
        deliberation_losses: del_losses,
    })
}

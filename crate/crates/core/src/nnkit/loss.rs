use crate::syllogism::N_RESPONSES;
use crate::Distribution;

/// Lower clamp applied to predictions inside the log.
pub const PROB_FLOOR: f64 = 1e-12;

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

pub fn relu_in_place(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Numerically stable softmax: `exp(z - max z) / sum`.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let mut out = z.to_vec();
    softmax_in_place(&mut out);
    out
}

pub fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Vector-Jacobian product of softmax: `p_j (g_j - sum_k p_k g_k)`.
pub fn softmax_backward(p: &[f64], grad_p: &[f64], out: &mut [f64]) {
    let dot: f64 = p.iter().zip(grad_p).map(|(a, b)| a * b).sum();
    for ((o, &pj), &gj) in out.iter_mut().zip(p).zip(grad_p) {
        *o = pj * (gj - dot);
    }
}

/// KL(target || pred) with `0 log 0 = 0` and predictions clamped at
/// [`PROB_FLOOR`].
pub fn kl_loss(target: &[f64], pred: &[f64]) -> f64 {
    target
        .iter()
        .zip(pred)
        .filter(|(&t, _)| t > 0.0)
        .map(|(&t, &p)| t * (t.ln() - p.max(PROB_FLOOR).ln()))
        .sum()
}

/// Gradient of `weight * kl_loss(target, softmax(z))` with respect to the
/// logits `z`, given `pred = softmax(z)`. Equals `weight * (pred - target)`
/// when no prediction is clamped and the target sums to one.
pub fn kl_softmax_backward(target: &[f64], pred: &[f64], weight: f64) -> Distribution {
    let mut grad_p = [0.0; N_RESPONSES];
    for ((g, &t), &p) in grad_p.iter_mut().zip(target).zip(pred) {
        if t > 0.0 && p > PROB_FLOOR {
            *g = -weight * t / p;
        }
    }
    let mut out = [0.0; N_RESPONSES];
    softmax_backward(pred, &grad_p, &mut out);
    out
}

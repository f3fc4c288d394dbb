use super::rng::RngStream;
use super::{NnError, Parameters};

/// Fully connected layer `y = W x + b`, weights stored row-major
/// (`fan_out` rows of `fan_in`).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        DenseLayer {
            fan_in,
            fan_out,
            weights: vec![0.0; fan_in * fan_out],
            biases: vec![0.0; fan_out],
        }
    }

    pub fn from_parts(
        fan_in: usize,
        fan_out: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
    ) -> Result<Self, NnError> {
        if weights.len() != fan_in * fan_out {
            return Err(NnError::Shape {
                what: "weights",
                expected: fan_in * fan_out,
                got: weights.len(),
            });
        }
        if biases.len() != fan_out {
            return Err(NnError::Shape {
                what: "biases",
                expected: fan_out,
                got: biases.len(),
            });
        }
        Ok(DenseLayer {
            fan_in,
            fan_out,
            weights,
            biases,
        })
    }

    /// Weights uniform in `±sqrt(1/fan_in)` drawn row by row, zero biases.
    pub fn init(fan_in: usize, fan_out: usize, rng: &mut RngStream) -> Self {
        assert!(fan_in > 0 && fan_out > 0, "layer dimensions must be positive");
        let bound = (1.0 / fan_in as f64).sqrt();
        let weights = (0..fan_in * fan_out)
            .map(|_| rng.uniform(-bound, bound))
            .collect();
        DenseLayer {
            fan_in,
            fan_out,
            weights,
            biases: vec![0.0; fan_out],
        }
    }

    pub fn zeros_like(&self) -> Self {
        DenseLayer::zeros(self.fan_in, self.fan_out)
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.fan_in + col]
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        if x.len() != self.fan_in {
            return Err(NnError::Shape {
                what: "layer input",
                expected: self.fan_in,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.fan_out];
        self.forward_into(x, &mut out);
        Ok(out)
    }

    /// Unchecked forward pass; callers guarantee shapes.
    pub fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.fan_in);
        debug_assert_eq!(out.len(), self.fan_out);
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.fan_in).zip(&self.biases))
        {
            let mut acc = *b;
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            *o = acc;
        }
    }

    /// Accumulates parameter gradients into `grads` and, when requested, adds
    /// the input gradient into `grad_in`.
    pub fn backward(
        &self,
        x: &[f64],
        grad_out: &[f64],
        grads: &mut DenseLayer,
        grad_in: Option<&mut [f64]>,
    ) {
        debug_assert_eq!(grad_out.len(), self.fan_out);
        for (o, &g) in grad_out.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grads.biases[o] += g;
            let row = &mut grads.weights[o * self.fan_in..(o + 1) * self.fan_in];
            for (gw, xi) in row.iter_mut().zip(x) {
                *gw += g * xi;
            }
        }
        if let Some(gi) = grad_in {
            for (o, &g) in grad_out.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let row = &self.weights[o * self.fan_in..(o + 1) * self.fan_in];
                for (acc, w) in gi.iter_mut().zip(row) {
                    *acc += w * g;
                }
            }
        }
    }
}

impl Parameters for DenseLayer {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![&self.weights, &self.biases]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.weights, &mut self.biases]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_bias_cases() {
        let mut id = DenseLayer::zeros(3, 3);
        for i in 0..3 {
            id.weights[i * 3 + i] = 1.0;
        }
        assert_eq!(id.forward(&[1.5, -2.0, 0.25]).unwrap(), vec![1.5, -2.0, 0.25]);

        let mut b = DenseLayer::zeros(2, 3);
        b.biases = vec![0.1, 0.2, 0.3];
        assert_eq!(b.forward(&[9.0, -4.0]).unwrap(), vec![0.1, 0.2, 0.3]);
    }

    #[test]
    fn hand_computed_product() {
        // 3x2 layer: rows (1, 2), (-1, 0.5), (0, 3); b = (0.5, 0, -1); x = (2, -1)
        let l = DenseLayer::from_parts(
            2,
            3,
            vec![1.0, 2.0, -1.0, 0.5, 0.0, 3.0],
            vec![0.5, 0.0, -1.0],
        )
        .unwrap();
        assert_eq!(l.forward(&[2.0, -1.0]).unwrap(), vec![0.5, -2.5, -4.0]);
        assert!(matches!(l.forward(&[1.0]), Err(NnError::Shape { .. })));
    }

    #[test]
    fn init_contract() {
        let mut r1 = RngStream::new(9);
        let mut r2 = RngStream::new(9);
        let a = DenseLayer::init(29, 64, &mut r1);
        let b = DenseLayer::init(29, 64, &mut r2);
        assert_eq!(a, b);
        assert_eq!(a.parameter_count(), 1920);
        let bound = (1.0f64 / 29.0).sqrt();
        assert!(a.weights.iter().all(|w| w.abs() <= bound));
        assert!(a.biases.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn backward_matches_outer_product() {
        let l = DenseLayer::from_parts(2, 2, vec![1.0, 2.0, 3.0, 4.0], vec![0.0, 0.0]).unwrap();
        let mut g = l.zeros_like();
        let mut gi = vec![0.0; 2];
        l.backward(&[0.5, -1.0], &[1.0, 2.0], &mut g, Some(&mut gi));
        assert_eq!(g.weights, vec![0.5, -1.0, 1.0, -2.0]);
        assert_eq!(g.biases, vec![1.0, 2.0]);
        assert_eq!(gi, vec![1.0 + 6.0, 2.0 + 8.0]);
    }
}

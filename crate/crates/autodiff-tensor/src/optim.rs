use crate::error::AutodiffError;
use crate::tensor::Tensor;

/// ADAM hyperparameters. Weight decay is added to the raw gradient
/// (`g += wd·param`) before the moment updates.
#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.0 }
    }
}

/// Per-parameter first/second moment buffers plus the step counter, aligned
/// positionally with the parameter list given at construction.
#[derive(Debug, Clone)]
pub struct AdamState {
    hyper: AdamParams,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: u64,
}

impl AdamState {
    pub fn new(params: &[Tensor], hyper: AdamParams) -> Self {
        let m = params.iter().map(|p| Tensor::zeros(p.rows(), p.cols())).collect();
        let v = params.iter().map(|p| Tensor::zeros(p.rows(), p.cols())).collect();
        AdamState { hyper, m, v, step: 0 }
    }

    /// Rebuild from checkpointed pieces; moment shapes must pair up.
    pub fn from_parts(hyper: AdamParams, m: Vec<Tensor>, v: Vec<Tensor>, step: u64) -> Self {
        assert_eq!(m.len(), v.len(), "moment buffer counts differ: {} vs {}", m.len(), v.len());
        for (a, b) in m.iter().zip(&v) {
            assert_eq!(a.shape(), b.shape(), "moment buffer shapes differ");
        }
        AdamState { hyper, m, v, step }
    }

    pub fn hyper(&self) -> &AdamParams {
        &self.hyper
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&[Tensor], &[Tensor]) {
        (&self.m, &self.v)
    }

    /// One ADAM update over all parameters. Gradients must be finite; a
    /// non-finite gradient aborts with the offending parameter index before
    /// any state is touched.
    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<(), AutodiffError> {
        assert_eq!(
            params.len(),
            self.m.len(),
            "optimizer built for {} parameters, got {}",
            self.m.len(),
            params.len()
        );
        assert_eq!(params.len(), grads.len(), "parameter/gradient count mismatch");
        for (index, g) in grads.iter().enumerate() {
            assert_eq!(
                g.shape(),
                params[index].shape(),
                "gradient {} shape {:?} does not match parameter {:?}",
                index,
                g.shape(),
                params[index].shape()
            );
            if !g.is_finite() {
                return Err(AutodiffError::NonFiniteGradient { index });
            }
        }

        let t = self.step + 1;
        let h = self.hyper;
        let bc1 = 1.0 - h.beta1.powi(t as i32);
        let bc2 = 1.0 - h.beta2.powi(t as i32);
        for i in 0..params.len() {
            let p = params[i].data_mut();
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            let g = grads[i].data();
            for e in 0..p.len() {
                let grad = g[e] + h.weight_decay * p[e];
                m[e] = h.beta1 * m[e] + (1.0 - h.beta1) * grad;
                v[e] = h.beta2 * v[e] + (1.0 - h.beta2) * grad * grad;
                let m_hat = m[e] / bc1;
                let v_hat = v[e] / bc2;
                p[e] -= h.lr * m_hat / (v_hat.sqrt() + h.eps);
            }
        }
        self.step = t;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_matches_hand_derivation() {
        // g = 1, fresh state: m = 0.1, v = 0.001, m̂ = 1, v̂ = 1,
        // Δ = −lr·1/(1 + eps).
        let mut params = vec![Tensor::scalar(0.0)];
        let grads = vec![Tensor::scalar(1.0)];
        let mut state = AdamState::new(&params, AdamParams::default());
        state.step(&mut params, &grads).unwrap();
        let expected = -1e-3 * (1.0 / (1.0 + 1e-8));
        assert!((params[0].scalar_value() - expected).abs() < 1e-18);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn zero_gradient_without_decay_leaves_parameters_untouched() {
        let mut params = vec![Tensor::from_vec(1, 3, vec![0.5, -1.5, 2.0])];
        let before = params[0].clone();
        let grads = vec![Tensor::zeros(1, 3)];
        let mut state = AdamState::new(&params, AdamParams::default());
        for _ in 0..5 {
            state.step(&mut params, &grads).unwrap();
        }
        assert_eq!(params[0], before);
    }

    #[test]
    fn zero_gradient_with_decay_shrinks_toward_zero() {
        let hyper = AdamParams { weight_decay: 1e-6, ..AdamParams::default() };
        let mut params = vec![Tensor::scalar(1.0)];
        let grads = vec![Tensor::scalar(0.0)];
        let mut state = AdamState::new(&params, hyper);
        state.step(&mut params, &grads).unwrap();
        let p = params[0].scalar_value();
        assert!(p < 1.0 && p > 0.0, "decay-only step left {p}");
    }

    #[test]
    fn identical_gradients_produce_identical_updates() {
        let mut params = vec![Tensor::scalar(0.7), Tensor::scalar(0.7)];
        let grads = vec![Tensor::scalar(-0.3), Tensor::scalar(-0.3)];
        let mut state = AdamState::new(&params, AdamParams::default());
        for _ in 0..3 {
            state.step(&mut params, &grads).unwrap();
        }
        assert_eq!(
            params[0].scalar_value().to_bits(),
            params[1].scalar_value().to_bits()
        );
    }

    #[test]
    fn non_finite_gradient_is_rejected_before_mutation() {
        let mut params = vec![Tensor::scalar(1.0), Tensor::scalar(2.0)];
        let grads = vec![Tensor::scalar(0.1), Tensor::scalar(f64::NAN)];
        let mut state = AdamState::new(&params, AdamParams::default());
        let err = state.step(&mut params, &grads).unwrap_err();
        assert!(matches!(err, AutodiffError::NonFiniteGradient { index: 1 }));
        assert_eq!(params[0].scalar_value(), 1.0);
        assert_eq!(state.step_count(), 0);
    }
}

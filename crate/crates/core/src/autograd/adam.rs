use super::{Tensor, TensorError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Bias-corrected Adam over a fixed, ordered list of parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step_count: u64,
    shapes: Vec<Vec<usize>>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[Tensor]) -> Self {
        Self {
            config,
            first_moment: params.iter().map(|p| vec![0.0; p.numel()]).collect(),
            second_moment: params.iter().map(|p| vec![0.0; p.numel()]).collect(),
            step_count: 0,
            shapes: params.iter().map(|p| p.shape().to_vec()).collect(),
        }
    }

    /// Applies one update using the gradients currently stored on `params`.
    /// A parameter without a gradient is treated as having a zero gradient.
    /// Nothing is modified if any gradient is non-finite.
    pub fn step(&mut self, params: &[Tensor]) -> Result<(), TensorError> {
        if params.len() != self.shapes.len() {
            return Err(TensorError::OptimizerShape {
                param: params.len().min(self.shapes.len()),
                expected: vec![self.shapes.len()],
                actual: vec![params.len()],
            });
        }
        let grads: Vec<Option<Vec<f64>>> = params.iter().map(|p| p.grad()).collect();
        for (i, (p, g)) in params.iter().zip(&grads).enumerate() {
            if p.shape() != self.shapes[i].as_slice() {
                return Err(TensorError::OptimizerShape {
                    param: i,
                    expected: self.shapes[i].clone(),
                    actual: p.shape().to_vec(),
                });
            }
            if let Some(idx) = g.as_ref().and_then(|g| g.iter().position(|v| !v.is_finite())) {
                return Err(TensorError::NonFiniteGradient { param: i, index: idx });
            }
        }

        self.step_count += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step_count as i32;
        let bias1 = 1.0 - beta1.powi(t);
        let bias2 = 1.0 - beta2.powi(t);
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            let m = &mut self.first_moment[i];
            let v = &mut self.second_moment[i];
            let mut data = p.data_mut();
            match g {
                Some(g) => {
                    for j in 0..g.len() {
                        m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
                        v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
                        let m_hat = m[j] / bias1;
                        let v_hat = v[j] / bias2;
                        data[j] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
                    }
                }
                None => {
                    for j in 0..m.len() {
                        m[j] *= beta1;
                        v[j] *= beta2;
                        let m_hat = m[j] / bias1;
                        let v_hat = v[j] / bias2;
                        data[j] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
                    }
                }
            }
        }
        Ok(())
    }
}

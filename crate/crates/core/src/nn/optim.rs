use super::Mlp;
use crate::error::{check_dim, Result};

/// Adam moment accumulators for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl Adam {
    pub fn new(param_count: usize, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: vec![0.0; param_count],
            second: vec![0.0; param_count],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[f64] {
        &self.first
    }

    pub fn second_moments(&self) -> &[f64] {
        &self.second
    }

    /// Bias-corrected adaptive-moment update of `net` in place.
    pub fn step(&mut self, net: &mut Mlp, gradients: &[f64]) -> Result<()> {
        self.apply(net.params_mut(), gradients)
    }

    pub fn apply(&mut self, params: &mut [f64], gradients: &[f64]) -> Result<()> {
        check_dim(self.first.len(), params.len())?;
        check_dim(self.first.len(), gradients.len())?;
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = gradients[i];
            self.first[i] = self.beta1 * self.first[i] + (1.0 - self.beta1) * g;
            self.second[i] = self.beta2 * self.second[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.first[i] / bc1;
            let v_hat = self.second[i] / bc2;
            params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = vec![1.0, -2.0];
        let mut opt = Adam::new(2, 0.1);
        opt.apply(&mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(opt.step_count(), 1);
    }

    #[test]
    fn one_step_descends_quadratic() {
        let mut p = vec![3.0];
        let mut opt = Adam::new(1, 0.01);
        let before = p[0] * p[0];
        let g = [2.0 * p[0]];
        opt.apply(&mut p, &g).unwrap();
        assert!(p[0] * p[0] < before);
    }

    #[test]
    fn converges_on_two_dimensional_quadratic() {
        // f(a, b) = (a - 1)^2 + 3 (b + 2)^2
        let mut p = vec![0.0, 0.0];
        let mut opt = Adam::new(2, 0.05);
        for _ in 0..500 {
            let g = [2.0 * (p[0] - 1.0), 6.0 * (p[1] + 2.0)];
            opt.apply(&mut p, &g).unwrap();
        }
        assert!((p[0] - 1.0).abs() < 1e-3, "{p:?}");
        assert!((p[1] + 2.0).abs() < 1e-3, "{p:?}");
    }

    #[test]
    fn shape_mismatch() {
        let mut opt = Adam::new(2, 0.1);
        assert!(opt.apply(&mut [0.0; 3], &[0.0; 3]).is_err());
        assert!(opt.apply(&mut [0.0; 2], &[0.0; 1]).is_err());
    }
}

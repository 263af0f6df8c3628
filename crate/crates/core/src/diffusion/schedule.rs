use crate::error::{Error, Result};

pub const DEFAULT_TOTAL_STEPS: usize = 1000;
pub const DEFAULT_BETA_START: f64 = 1e-4;
pub const DEFAULT_BETA_END: f64 = 0.02;

/// Variance schedule `beta_t` and cumulative products `alpha_t = prod_{s<=t} (1 - beta_s)`.
///
/// Steps are 1-based: `t = 1..=T` index perturbed states and `t = 0` is clean
/// data, for which `alpha(0) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
}

impl NoiseSchedule {
    /// Betas linearly interpolated from `beta_start` to `beta_end` over `total_steps`.
    pub fn linear(total_steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if total_steps == 0 {
            return Err(Error::InvalidParameter("total_steps must be positive".into()));
        }
        if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})"
            )));
        }
        let betas = if total_steps == 1 {
            vec![beta_start]
        } else {
            let span = (total_steps - 1) as f64;
            (0..total_steps)
                .map(|i| beta_start + (beta_end - beta_start) * i as f64 / span)
                .collect()
        };
        Self::from_betas(betas)
    }

    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::Empty("betas"));
        }
        if let Some(b) = betas.iter().find(|b| !(**b > 0.0 && **b < 1.0)) {
            return Err(Error::InvalidParameter(format!("beta {b} outside (0, 1)")));
        }
        let mut alphas = Vec::with_capacity(betas.len());
        let mut acc = 1.0;
        for b in &betas {
            acc *= 1.0 - b;
            alphas.push(acc);
        }
        Ok(Self { betas, alphas })
    }

    pub fn default_linear() -> Self {
        Self::linear(DEFAULT_TOTAL_STEPS, DEFAULT_BETA_START, DEFAULT_BETA_END)
            .expect("default schedule is valid")
    }

    pub fn total_steps(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn check_step(&self, t: usize) -> Result<()> {
        if t >= 1 && t <= self.total_steps() {
            Ok(())
        } else {
            Err(Error::StepOutOfRange { t, total: self.total_steps() })
        }
    }

    /// `beta_t` for `1 <= t <= T`.
    pub fn beta(&self, t: usize) -> Result<f64> {
        self.check_step(t)?;
        Ok(self.betas[t - 1])
    }

    /// `alpha_t` for `0 <= t <= T`.
    pub fn alpha(&self, t: usize) -> Result<f64> {
        if t == 0 {
            return Ok(1.0);
        }
        self.check_step(t)?;
        Ok(self.alphas[t - 1])
    }

    /// Step nearest to `fraction * T`, clamped into `1..=T`.
    pub fn step_at_fraction(&self, fraction: f64) -> usize {
        let t = (fraction * self.total_steps() as f64).round() as usize;
        t.clamp(1, self.total_steps())
    }
}

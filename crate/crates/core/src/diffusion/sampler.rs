use rayon::prelude::*;

use super::{NoiseSchedule, SampleBatch};
use crate::error::{check_dim, Error, Result};
use crate::rng::{standard_normal, stream_rng};
use crate::score::ScoreProvider;

/// Strictly increasing subset of `1..=T` visited by the reverse sampler; always ends at `T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepPlan {
    indices: Vec<usize>,
}

impl StepPlan {
    pub fn new(indices: Vec<usize>, total_steps: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Empty("step plan"));
        }
        if indices[0] == 0 || indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("plan indices must be strictly increasing from 1".into()));
        }
        if *indices.last().unwrap() != total_steps {
            return Err(Error::InvalidParameter(format!("plan must end at T = {total_steps}")));
        }
        Ok(Self { indices })
    }

    pub fn full(total_steps: usize) -> Self {
        Self { indices: (1..=total_steps).collect() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Reverse transitions `(t, beta)` from `T` downwards.
    ///
    /// Consecutive indices use the schedule's own `beta_t`. Across a stride the
    /// step variance is `1 - alpha_t / alpha_prev`, so that the composed
    /// transitions reproduce the schedule's marginals at the visited indices.
    pub fn transitions(&self, schedule: &NoiseSchedule) -> Result<Vec<(usize, f64)>> {
        let total = schedule.total_steps();
        if *self.indices.last().unwrap() != total {
            return Err(Error::InvalidParameter(format!("plan does not end at T = {total}")));
        }
        let mut out = Vec::with_capacity(self.indices.len());
        for (k, &t) in self.indices.iter().enumerate().rev() {
            let prev = if k == 0 { 0 } else { self.indices[k - 1] };
            let beta = if prev + 1 == t {
                schedule.beta(t)?
            } else {
                1.0 - schedule.alpha(t)? / schedule.alpha(prev)?
            };
            out.push((t, beta));
        }
        Ok(out)
    }
}

/// `n` evenly strided indices ending at `T`: `floor(k T / n)` for `k = 1..=n`.
pub fn make_plan(total_steps: usize, n: usize) -> Result<StepPlan> {
    if n == 0 || n > total_steps {
        return Err(Error::InvalidParameter(format!(
            "plan length {n} must lie in 1..={total_steps}"
        )));
    }
    let indices = (1..=n).map(|k| k * total_steps / n).collect();
    StepPlan::new(indices, total_steps)
}

/// Forward perturbation `sqrt(alpha_t) x0 + sqrt(1 - alpha_t) noise`.
pub fn perturb(x0: &[f64], t: usize, noise: &[f64], schedule: &NoiseSchedule) -> Result<Vec<f64>> {
    check_dim(x0.len(), noise.len())?;
    let alpha = schedule.alpha(t)?;
    schedule.check_step(t)?;
    let (a, s) = (alpha.sqrt(), (1.0 - alpha).sqrt());
    Ok(x0.iter().zip(noise).map(|(x, z)| a * x + s * z).collect())
}

/// One reverse step at schedule index `t`.
pub fn ancestral_step(
    x_t: &[f64],
    t: usize,
    score: &[f64],
    schedule: &NoiseSchedule,
    noise: &[f64],
) -> Result<Vec<f64>> {
    let beta = schedule.beta(t)?;
    ancestral_update(x_t, beta, score, noise)
}

/// `(x + beta * score) / sqrt(1 - beta) + sqrt(beta) * noise`.
///
/// The injected noise has variance `beta`, matching the reverse transition
/// `N(mu, beta I)`.
pub fn ancestral_update(x: &[f64], beta: f64, score: &[f64], noise: &[f64]) -> Result<Vec<f64>> {
    check_dim(x.len(), score.len())?;
    check_dim(x.len(), noise.len())?;
    let scale = 1.0 / (1.0 - beta).sqrt();
    let sigma = beta.sqrt();
    Ok(x
        .iter()
        .zip(score)
        .zip(noise)
        .map(|((x, s), z)| (x + beta * s) * scale + sigma * z)
        .collect())
}

/// Runs one chain from `x_T` down the plan. The last step adds no noise.
pub fn run_chain<P, R>(
    provider: &P,
    transitions: &[(usize, f64)],
    mut x: Vec<f64>,
    rng: &mut R,
) -> Result<Vec<f64>>
where
    P: ScoreProvider + ?Sized,
    R: rand::Rng + ?Sized,
{
    let dim = x.len();
    let last = transitions.len().saturating_sub(1);
    for (k, &(t, beta)) in transitions.iter().enumerate() {
        let score = provider.score(&x, t)?;
        let noise = if k == last { vec![0.0; dim] } else { standard_normal(rng, dim) };
        x = ancestral_update(&x, beta, &score, &noise)?;
    }
    Ok(x)
}

/// Ancestral sampling of `count` points.
///
/// Sample `i` draws its initial point and all step noise from
/// `stream_rng(seed, i)`, so output is bit-reproducible and independent of
/// thread count.
pub fn generate<P: ScoreProvider + ?Sized>(
    provider: &P,
    schedule: &NoiseSchedule,
    plan: &StepPlan,
    count: usize,
    seed: u64,
) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    let dim = provider.dim();
    let transitions = plan.transitions(schedule)?;
    let rows: Vec<Vec<f64>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let x = standard_normal(&mut rng, dim);
            run_chain(provider, &transitions, x, &mut rng)
        })
        .collect::<Result<_>>()?;
    SampleBatch::from_rows(dim, &rows)
}

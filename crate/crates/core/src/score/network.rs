use rand::Rng;

use super::ScoreProvider;
use crate::diffusion::{perturb, NoiseSchedule, SampleBatch};
use crate::error::{check_dim, Error, Result};
use crate::nn::{sum_example_gradients, time_features, Activation, Adam, Mlp, TrainConfig};
use crate::rng::{derive_seed, standard_normal, stream_rng};

pub const DEFAULT_HIDDEN: [usize; 3] = [128, 128, 128];
pub const DEFAULT_TIME_WIDTH: usize = 5;

/// Noise predictor `eps(x_t, t)`; the network consumes `x_t` followed by `time_features(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonNet {
    net: Mlp,
    data_dim: usize,
    time_width: usize,
}

impl EpsilonNet {
    pub fn new(data_dim: usize, hidden: &[usize], time_width: usize, seed: u64) -> Result<Self> {
        let mut widths = vec![data_dim + time_width];
        widths.extend_from_slice(hidden);
        widths.push(data_dim);
        Self::from_net(Mlp::new(&widths, Activation::Silu, seed)?, data_dim)
    }

    /// Wraps an existing network whose output width is the data dimension.
    pub fn from_net(net: Mlp, data_dim: usize) -> Result<Self> {
        check_dim(data_dim, net.output_dim())?;
        if net.input_dim() <= data_dim {
            return Err(Error::InvalidParameter("network input must include time features".into()));
        }
        let time_width = net.input_dim() - data_dim;
        Ok(Self { net, data_dim, time_width })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn data_dim(&self) -> usize {
        self.data_dim
    }

    pub fn time_width(&self) -> usize {
        self.time_width
    }

    pub fn input(&self, x_t: &[f64], t: usize, total_steps: usize) -> Result<Vec<f64>> {
        check_dim(self.data_dim, x_t.len())?;
        let mut input = x_t.to_vec();
        input.extend(time_features(t, total_steps, self.time_width)?);
        Ok(input)
    }

    pub fn predict(&self, x_t: &[f64], t: usize, total_steps: usize) -> Result<Vec<f64>> {
        self.net.forward(&self.input(x_t, t, total_steps)?)
    }
}

/// Score implied by a noise prediction: `-eps / sqrt(1 - alpha_t)`.
pub fn network_score(x_t: &[f64], t: usize, net: &EpsilonNet, schedule: &NoiseSchedule) -> Result<Vec<f64>> {
    let alpha = schedule.alpha(t)?;
    let eps = net.predict(x_t, t, schedule.total_steps())?;
    let scale = -1.0 / (1.0 - alpha).sqrt();
    Ok(eps.into_iter().map(|e| e * scale).collect())
}

#[derive(Debug, Clone, Copy)]
pub struct NetworkScore<'a> {
    pub net: &'a EpsilonNet,
    pub schedule: &'a NoiseSchedule,
}

impl ScoreProvider for NetworkScore<'_> {
    fn dim(&self) -> usize {
        self.net.data_dim()
    }

    fn score(&self, x_t: &[f64], t: usize) -> Result<Vec<f64>> {
        network_score(x_t, t, self.net, self.schedule)
    }
}

/// Draws the `(t, z)` pair that example `i` of a DSM batch uses under `seed`.
pub fn dsm_draw(seed: u64, i: usize, dim: usize, total_steps: usize) -> (usize, Vec<f64>) {
    let mut rng = stream_rng(seed, i as u64);
    let t = rng.gen_range(1..=total_steps);
    (t, standard_normal(&mut rng, dim))
}

/// Mean over the batch of `||eps(x_t, t) - z||^2` and its parameter gradient.
///
/// Each example draws `t` uniformly from `1..=T` and `z ~ N(0, I)` via
/// [`dsm_draw`], and forms `x_t` by forward perturbation.
pub fn dsm_loss_and_grads(
    net: &EpsilonNet,
    batch: &SampleBatch,
    schedule: &NoiseSchedule,
    seed: u64,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Empty("training batch"));
    }
    check_dim(net.data_dim(), batch.dim())?;
    let n = batch.len();
    let total = schedule.total_steps();
    let (loss, grad) = sum_example_gradients(n, net.net.param_count(), |i, g| {
        let (t, z) = dsm_draw(seed, i, batch.dim(), total);
        let x_t = perturb(batch.row(i), t, &z, schedule)?;
        let input = net.input(&x_t, t, total)?;
        let pred = net.net.forward(&input)?;
        let resid: Vec<f64> = pred.iter().zip(&z).map(|(p, z)| p - z).collect();
        let upstream: Vec<f64> = resid.iter().map(|r| 2.0 * r / n as f64).collect();
        net.net.backward_into(&input, &upstream, g)?;
        Ok(resid.iter().map(|r| r * r).sum::<f64>())
    })?;
    Ok((loss / n as f64, grad))
}

/// DSM loss of an arbitrary noise predictor `predict(x_t, t)`, using the same
/// per-example draws as [`dsm_loss_and_grads`].
pub fn dsm_loss<F>(predict: F, batch: &SampleBatch, schedule: &NoiseSchedule, seed: u64) -> Result<f64>
where
    F: Fn(&[f64], usize) -> Result<Vec<f64>>,
{
    if batch.is_empty() {
        return Err(Error::Empty("training batch"));
    }
    let total = schedule.total_steps();
    let mut loss = 0.0;
    for (i, x0) in batch.rows().enumerate() {
        let (t, z) = dsm_draw(seed, i, batch.dim(), total);
        let x_t = perturb(x0, t, &z, schedule)?;
        let pred = predict(&x_t, t)?;
        check_dim(z.len(), pred.len())?;
        loss += pred.iter().zip(&z).map(|(p, z)| (p - z) * (p - z)).sum::<f64>();
    }
    Ok(loss / batch.len() as f64)
}

/// Minibatch Adam on the DSM objective. Returns the loss at every step.
pub fn train_score_net(
    net: &mut EpsilonNet,
    data: &SampleBatch,
    schedule: &NoiseSchedule,
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    let mut opt = Adam::new(net.net.param_count(), cfg.learning_rate);
    let mut picker = stream_rng(derive_seed(cfg.seed, 0x5c07e), 0);
    let mut history = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let idx: Vec<usize> = (0..cfg.batch_size).map(|_| picker.gen_range(0..data.len())).collect();
        let batch = data.select(&idx);
        let (loss, grad) = dsm_loss_and_grads(net, &batch, schedule, derive_seed(cfg.seed, step as u64 + 1))?;
        opt.learning_rate = cfg.learning_rate_at(step);
        opt.step(&mut net.net, &grad)?;
        history.push(loss);
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_gives_zero_score() {
        let s = NoiseSchedule::linear(20, 1e-3, 0.1).unwrap();
        let mut net = EpsilonNet::new(2, &[8], 3, 1).unwrap();
        net.net_mut().params_mut().iter_mut().for_each(|p| *p = 0.0);
        assert_eq!(network_score(&[0.3, 4.0], 7, &net, &s).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn known_noise_maps_to_conditional_score() {
        // A bias-only network that outputs exactly z.
        let s = NoiseSchedule::linear(20, 1e-3, 0.1).unwrap();
        let z = [0.7, -1.1];
        let mut net = EpsilonNet::new(2, &[4], 2, 1).unwrap();
        let p = net.net_mut().params_mut();
        p.iter_mut().for_each(|v| *v = 0.0);
        let n = p.len();
        p[n - 2] = z[0];
        p[n - 1] = z[1];
        let t = 12;
        let a = s.alpha(t).unwrap();
        let got = network_score(&[5.0, 5.0], t, &net, &s).unwrap();
        assert_eq!(got, vec![-z[0] / (1.0 - a).sqrt(), -z[1] / (1.0 - a).sqrt()]);
    }

    #[test]
    fn dimension_errors() {
        let s = NoiseSchedule::linear(20, 1e-3, 0.1).unwrap();
        let net = EpsilonNet::new(2, &[4], 2, 1).unwrap();
        assert!(network_score(&[0.0], 3, &net, &s).is_err());
        let empty = SampleBatch::new(2, vec![]).unwrap();
        assert!(dsm_loss_and_grads(&net, &empty, &s, 0).is_err());
        assert!(EpsilonNet::from_net(Mlp::new(&[2, 2], Activation::Silu, 0).unwrap(), 2).is_err());
    }
}

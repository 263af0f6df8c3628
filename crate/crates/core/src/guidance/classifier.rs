use rand::Rng;

use crate::diffusion::{perturb, NoiseSchedule, SampleBatch};
use crate::error::{check_dim, Error, Result};
use crate::minority::MinorityRecord;
use crate::nn::{
    log_softmax, softmax, sum_example_gradients, time_features, Activation, Adam, Mlp, ScalarHead,
    TrainConfig,
};
use crate::rng::{derive_seed, standard_normal, stream_rng};

/// Noise-conditioned classifier over ordinal minority classes.
///
/// The network maps `x_t` followed by `time_features(t, T)` to `L` logits.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    net: Mlp,
    data_dim: usize,
    total_steps: usize,
}

impl ClassifierModel {
    pub fn new(
        data_dim: usize,
        class_count: usize,
        hidden: &[usize],
        time_width: usize,
        total_steps: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut widths = vec![data_dim + time_width];
        widths.extend_from_slice(hidden);
        widths.push(class_count);
        Self::from_net(Mlp::new(&widths, Activation::Silu, seed)?, data_dim, total_steps)
    }

    pub fn from_net(net: Mlp, data_dim: usize, total_steps: usize) -> Result<Self> {
        if net.input_dim() <= data_dim {
            return Err(Error::InvalidParameter("classifier input must include time features".into()));
        }
        if total_steps == 0 {
            return Err(Error::InvalidParameter("total_steps must be positive".into()));
        }
        Ok(Self { net, data_dim, total_steps })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn class_count(&self) -> usize {
        self.net.output_dim()
    }

    pub fn data_dim(&self) -> usize {
        self.data_dim
    }

    pub fn time_width(&self) -> usize {
        self.net.input_dim() - self.data_dim
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }

    fn input(&self, x_t: &[f64], t: usize) -> Result<Vec<f64>> {
        check_dim(self.data_dim, x_t.len())?;
        let mut input = x_t.to_vec();
        input.extend(time_features(t, self.total_steps, self.time_width())?);
        Ok(input)
    }

    pub fn logits(&self, x_t: &[f64], t: usize) -> Result<Vec<f64>> {
        self.net.forward(&self.input(x_t, t)?)
    }

    pub fn probabilities(&self, x_t: &[f64], t: usize) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x_t, t)?))
    }

    pub fn predict(&self, x_t: &[f64], t: usize) -> Result<usize> {
        let logits = self.logits(x_t, t)?;
        Ok(argmax(&logits))
    }

    /// `grad_x log p(class | x_t)`.
    pub fn log_prob_gradient(&self, x_t: &[f64], t: usize, class: usize) -> Result<Vec<f64>> {
        if class >= self.class_count() {
            return Err(Error::InvalidClass { class, count: self.class_count() });
        }
        self.head_gradient(x_t, t, &ScalarHead::LogSoftmax { class })
    }

    /// `grad_x log sum_i weights[i] p(i | x_t)`.
    pub fn log_mixture_gradient(&self, x_t: &[f64], t: usize, weights: &[f64]) -> Result<Vec<f64>> {
        self.head_gradient(x_t, t, &ScalarHead::LogMixture { weights: weights.to_vec() })
    }

    fn head_gradient(&self, x_t: &[f64], t: usize, head: &ScalarHead) -> Result<Vec<f64>> {
        let mut g = self.net.input_gradient(&self.input(x_t, t)?, head)?;
        g.truncate(self.data_dim);
        Ok(g)
    }
}

fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
        .0
}

/// Architecture and budget for [`train_classifier`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierTraining {
    pub hidden: Vec<usize>,
    pub time_width: usize,
    pub train: TrainConfig,
}

/// Cross-entropy training on `(x_t, class)` pairs with `t` uniform over `1..=T`.
///
/// `records[i]` must describe row `i` of `data`, and every class in
/// `0..class_count` needs at least one record. With a single class the
/// network is returned untrained: its log-probability is identically zero.
pub fn train_classifier(
    records: &[MinorityRecord],
    data: &SampleBatch,
    class_count: usize,
    schedule: &NoiseSchedule,
    setup: &ClassifierTraining,
) -> Result<ClassifierModel> {
    if records.len() != data.len() {
        return Err(Error::InvalidParameter(format!(
            "{} records for {} samples",
            records.len(),
            data.len()
        )));
    }
    if let Some((i, _)) = records.iter().enumerate().find(|(i, r)| r.sample_index != *i) {
        return Err(Error::InvalidParameter(format!("record {i} is not aligned with its sample")));
    }
    if class_count == 0 {
        return Err(Error::InvalidParameter("class count must be positive".into()));
    }
    let mut counts = vec![0usize; class_count];
    for r in records {
        if r.ordinal_class >= class_count {
            return Err(Error::InvalidClass { class: r.ordinal_class, count: class_count });
        }
        counts[r.ordinal_class] += 1;
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::InvalidParameter(format!("class {c} has no samples")));
    }
    setup.train.validate()?;

    let total = schedule.total_steps();
    let mut model = ClassifierModel::new(
        data.dim(),
        class_count,
        &setup.hidden,
        setup.time_width,
        total,
        derive_seed(setup.train.seed, 0xc1a55),
    )?;
    if class_count == 1 {
        return Ok(model);
    }

    let labels: Vec<usize> = records.iter().map(|r| r.ordinal_class).collect();
    let mut opt = Adam::new(model.net.param_count(), setup.train.learning_rate);
    let mut picker = stream_rng(derive_seed(setup.train.seed, 0x91c4), 0);
    let n = setup.train.batch_size;
    for step in 0..setup.train.steps {
        let idx: Vec<usize> = (0..n).map(|_| picker.gen_range(0..data.len())).collect();
        let step_seed = derive_seed(setup.train.seed, step as u64 + 1);
        let model_ref = &model;
        let (_, grad) = sum_example_gradients(n, model.net.param_count(), |k, g| {
            let i = idx[k];
            let mut rng = stream_rng(step_seed, k as u64);
            let t = rng.gen_range(1..=total);
            let z = standard_normal(&mut rng, data.dim());
            let x_t = perturb(data.row(i), t, &z, schedule)?;
            let input = model_ref.input(&x_t, t)?;
            let logits = model_ref.net.forward(&input)?;
            let p = softmax(&logits);
            let upstream: Vec<f64> = p
                .iter()
                .enumerate()
                .map(|(c, pc)| (pc - if c == labels[i] { 1.0 } else { 0.0 }) / n as f64)
                .collect();
            model_ref.net.backward_into(&input, &upstream, g)?;
            Ok(-log_softmax(&logits)[labels[i]])
        })?;
        opt.learning_rate = setup.train.learning_rate_at(step);
        opt.step(&mut model.net, &grad)?;
    }
    Ok(model)
}

/// Fraction of rows whose perturbed version is classified as its label.
///
/// With `t = Some(step)` every row is perturbed to that step; with `None`
/// each row draws its own step uniformly. Row `i` uses `stream_rng(seed, i)`.
pub fn classifier_accuracy(
    model: &ClassifierModel,
    data: &SampleBatch,
    labels: &[usize],
    schedule: &NoiseSchedule,
    t: Option<usize>,
    seed: u64,
) -> Result<f64> {
    check_dim(data.len(), labels.len())?;
    if data.is_empty() {
        return Err(Error::Empty("evaluation data"));
    }
    let mut correct = 0usize;
    for (i, row) in data.rows().enumerate() {
        let mut rng = stream_rng(seed, i as u64);
        let step = match t {
            Some(s) => s,
            None => rng.gen_range(1..=schedule.total_steps()),
        };
        let z = standard_normal(&mut rng, data.dim());
        let x_t = perturb(row, step, &z, schedule)?;
        if model.predict(&x_t, step)? == labels[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

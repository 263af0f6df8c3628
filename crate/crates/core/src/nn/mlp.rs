use rand_distr::{Distribution, Normal};

use crate::error::{check_dim, check_finite, Error, Result};
use crate::rng::stream_rng;

/// Smooth hidden-layer nonlinearities. Both are C-infinity, so input
/// gradients used for guidance vary continuously.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Silu,
    Tanh,
}

impl Activation {
    pub fn id(self) -> u8 {
        match self {
            Activation::Silu => 0,
            Activation::Tanh => 1,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(Activation::Silu),
            1 => Some(Activation::Tanh),
            _ => None,
        }
    }

    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Silu => x / (1.0 + (-x).exp()),
            Activation::Tanh => x.tanh(),
        }
    }

    #[inline]
    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Silu => {
                let s = 1.0 / (1.0 + (-x).exp());
                s * (1.0 + x * (1.0 - s))
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
        }
    }
}

/// Dense feed-forward network: affine + activation on every layer except the
/// last, which is affine only.
///
/// Parameters live in one flat vector; for each layer the `out x in` weight
/// matrix (row-major) is followed by the `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    widths: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
}

/// Per-layer values kept from a forward pass for backpropagation.
struct Trace {
    /// `inputs[l]` is the input to layer `l`; the final entry is the output.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation values of each hidden layer.
    pre: Vec<Vec<f64>>,
}

fn param_count_for(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// Random initialization with weights `N(0, 1/fan_in)` and zero biases.
    pub fn new(widths: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        Self::validate_widths(widths)?;
        let mut rng = stream_rng(seed, 0);
        let mut params = Vec::with_capacity(param_count_for(widths));
        for w in widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let normal = Normal::new(0.0, (1.0 / fan_in as f64).sqrt()).unwrap();
            params.extend((0..fan_in * fan_out).map(|_| normal.sample(&mut rng)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Ok(Self { widths: widths.to_vec(), activation, params })
    }

    pub fn from_params(widths: &[usize], activation: Activation, params: Vec<f64>) -> Result<Self> {
        Self::validate_widths(widths)?;
        check_dim(param_count_for(widths), params.len())?;
        check_finite(&params, "network parameters")?;
        Ok(Self { widths: widths.to_vec(), activation, params })
    }

    fn validate_widths(widths: &[usize]) -> Result<()> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "network needs at least two positive layer widths, got {widths:?}"
            )));
        }
        Ok(())
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut offset = 0;
        self.widths.windows(2).map(move |w| {
            let start = offset;
            offset += w[0] * w[1] + w[1];
            (start, w[0], w[1])
        })
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), input.len())?;
        Ok(self.trace(input).inputs.pop().unwrap())
    }

    fn trace(&self, input: &[f64]) -> Trace {
        let n_layers = self.widths.len() - 1;
        let mut inputs = Vec::with_capacity(n_layers + 1);
        let mut pre = Vec::with_capacity(n_layers.saturating_sub(1));
        inputs.push(input.to_vec());
        for (l, (off, n_in, n_out)) in self.layers().enumerate() {
            let w = &self.params[off..off + n_in * n_out];
            let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            let x = &inputs[l];
            let z: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    b[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            if l + 1 < n_layers {
                let act = z.iter().map(|&v| self.activation.apply(v)).collect();
                pre.push(z);
                inputs.push(act);
            } else {
                inputs.push(z);
            }
        }
        Trace { inputs, pre }
    }

    /// Vector-Jacobian product of the output against `upstream`.
    ///
    /// Adds the parameter gradient of `<upstream, forward(input)>` into
    /// `param_grad` and returns the gradient with respect to `input`.
    pub fn backward_into(
        &self,
        input: &[f64],
        upstream: &[f64],
        param_grad: &mut [f64],
    ) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), input.len())?;
        check_dim(self.output_dim(), upstream.len())?;
        check_dim(self.param_count(), param_grad.len())?;
        let trace = self.trace(input);
        Ok(self.backprop(&trace, upstream.to_vec(), Some(param_grad)))
    }

    fn backprop(&self, trace: &Trace, mut delta: Vec<f64>, mut param_grad: Option<&mut [f64]>) -> Vec<f64> {
        let layers: Vec<_> = self.layers().collect();
        for (l, &(off, n_in, n_out)) in layers.iter().enumerate().rev() {
            let w = &self.params[off..off + n_in * n_out];
            let x = &trace.inputs[l];
            if let Some(g) = param_grad.as_deref_mut() {
                let (gw, gb) = g[off..off + n_in * n_out + n_out].split_at_mut(n_in * n_out);
                for o in 0..n_out {
                    let d = delta[o];
                    gb[o] += d;
                    if d != 0.0 {
                        for (gwi, xi) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(x) {
                            *gwi += d * xi;
                        }
                    }
                }
            }
            let mut next = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d != 0.0 {
                    for (ni, wi) in next.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *ni += d * wi;
                    }
                }
            }
            if l > 0 {
                for (ni, &z) in next.iter_mut().zip(&trace.pre[l - 1]) {
                    *ni *= self.activation.derivative(z);
                }
            }
            delta = next;
        }
        delta
    }

    /// Exact gradients of `<upstream, forward(input)>` with respect to all parameters.
    pub fn param_gradients(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.param_count()];
        self.backward_into(input, upstream, &mut g)?;
        Ok(g)
    }

    /// Gradient of a scalar functional of the output with respect to the input.
    pub fn input_gradient(&self, input: &[f64], head: &ScalarHead) -> Result<Vec<f64>> {
        Ok(self.head_value_and_input_gradient(input, head)?.1)
    }

    /// Value of `head(forward(input))` together with its input gradient.
    pub fn head_value_and_input_gradient(
        &self,
        input: &[f64],
        head: &ScalarHead,
    ) -> Result<(f64, Vec<f64>)> {
        check_dim(self.input_dim(), input.len())?;
        let trace = self.trace(input);
        let (value, upstream) = head.value_and_upstream(trace.inputs.last().unwrap())?;
        Ok((value, self.backprop(&trace, upstream, None)))
    }
}

/// Differentiable scalar reductions of a logit vector.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarHead {
    /// `log softmax(z)[class]`.
    LogSoftmax { class: usize },
    /// `log sum_i weights[i] * softmax(z)[i]` for positive weights.
    LogMixture { weights: Vec<f64> },
}

impl ScalarHead {
    /// Head value and its gradient with respect to the logits.
    pub fn value_and_upstream(&self, logits: &[f64]) -> Result<(f64, Vec<f64>)> {
        let p = softmax(logits);
        match self {
            ScalarHead::LogSoftmax { class } => {
                if *class >= logits.len() {
                    return Err(Error::InvalidClass { class: *class, count: logits.len() });
                }
                let value = log_softmax(logits)[*class];
                let grad = p
                    .iter()
                    .enumerate()
                    .map(|(j, pj)| if j == *class { 1.0 - pj } else { -pj })
                    .collect();
                Ok((value, grad))
            }
            ScalarHead::LogMixture { weights } => {
                check_dim(logits.len(), weights.len())?;
                if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
                    return Err(Error::InvalidParameter("mixture weights must be positive".into()));
                }
                // log sum_i w_i p_i = logsumexp(z + log w) - logsumexp(z)
                let shifted: Vec<f64> = logits.iter().zip(weights).map(|(z, w)| z + w.ln()).collect();
                let value = log_sum_exp(&shifted) - log_sum_exp(logits);
                let q = softmax(&shifted);
                let grad = q.iter().zip(&p).map(|(q, p)| q - p).collect();
                Ok((value, grad))
            }
        }
    }
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|z| (z - lse).exp()).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|z| z - lse).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_layer_passes_input_through() {
        let net = Mlp::from_params(&[2, 2], Activation::Silu, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(net.forward(&[0.3, -2.0]).unwrap(), vec![0.3, -2.0]);
    }

    #[test]
    fn zero_weights_output_bias() {
        let mut params = vec![0.0; param_count_for(&[3, 4, 2])];
        let n = params.len();
        params[n - 2] = 1.5;
        params[n - 1] = -0.5;
        let net = Mlp::from_params(&[3, 4, 2], Activation::Tanh, params).unwrap();
        assert_eq!(net.forward(&[1.0, 2.0, 3.0]).unwrap(), vec![1.5, -0.5]);
    }

    #[test]
    fn single_layer_weight_gradient_is_outer_product() {
        let net = Mlp::new(&[3, 2], Activation::Silu, 1).unwrap();
        let g = net.param_gradients(&[1.0, 2.0, 3.0], &[0.5, -1.0]).unwrap();
        assert_eq!(&g[..6], &[0.5, 1.0, 1.5, -1.0, -2.0, -3.0]);
        assert_eq!(&g[6..], &[0.5, -1.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let net = Mlp::new(&[3, 5, 2], Activation::Silu, 2).unwrap();
        let g = net.param_gradients(&[0.1, 0.2, 0.3], &[0.0, 0.0]).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn input_independent_net_has_zero_input_gradient() {
        let mut net = Mlp::new(&[2, 4, 3], Activation::Silu, 3).unwrap();
        net.params_mut()[..8].iter_mut().for_each(|w| *w = 0.0);
        let g = net.input_gradient(&[0.4, -0.7], &ScalarHead::LogSoftmax { class: 1 }).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn errors() {
        let net = Mlp::new(&[2, 3], Activation::Silu, 0).unwrap();
        assert!(net.forward(&[1.0]).is_err());
        assert!(net.param_gradients(&[1.0, 2.0], &[1.0]).is_err());
        assert!(matches!(
            net.input_gradient(&[1.0, 2.0], &ScalarHead::LogSoftmax { class: 3 }),
            Err(Error::InvalidClass { .. })
        ));
        assert!(net
            .input_gradient(&[1.0, 2.0], &ScalarHead::LogMixture { weights: vec![1.0, 0.0, 1.0] })
            .is_err());
        assert!(Mlp::new(&[2], Activation::Silu, 0).is_err());
        assert!(Mlp::new(&[2, 0, 1], Activation::Silu, 0).is_err());
        assert!(Mlp::from_params(&[2, 1], Activation::Silu, vec![0.0; 2]).is_err());
    }

    #[test]
    fn log_mixture_of_equal_weights_is_constant() {
        let head = ScalarHead::LogMixture { weights: vec![2.0, 2.0, 2.0] };
        let (v, g) = head.value_and_upstream(&[0.3, -1.0, 4.0]).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-14);
        assert!(g.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn activation_ids_round_trip() {
        for a in [Activation::Silu, Activation::Tanh] {
            assert_eq!(Activation::from_id(a.id()), Some(a));
        }
        assert_eq!(Activation::from_id(9), None);
    }
}

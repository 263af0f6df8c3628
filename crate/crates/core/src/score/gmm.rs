use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::ScoreProvider;
use crate::diffusion::{NoiseSchedule, SampleBatch};
use crate::error::{check_dim, check_finite, Error, Result};
use crate::nn::log_sum_exp;

/// One isotropic component `weight * N(mean, variance * I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub variance: f64,
}

/// Isotropic Gaussian mixture. Zero-variance components are point masses.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmSpec {
    components: Vec<GmmComponent>,
}

impl GmmSpec {
    pub fn new(components: Vec<GmmComponent>) -> Result<Self> {
        let first = components.first().ok_or(Error::Empty("mixture components"))?;
        let dim = first.mean.len();
        if dim == 0 {
            return Err(Error::InvalidParameter("component means must be non-empty".into()));
        }
        for c in &components {
            check_dim(dim, c.mean.len())?;
            check_finite(&c.mean, "component mean")?;
            if !(c.weight > 0.0 && c.weight <= 1.0) {
                return Err(Error::InvalidParameter(format!("weight {} outside (0, 1]", c.weight)));
            }
            if !(c.variance >= 0.0 && c.variance.is_finite()) {
                return Err(Error::InvalidParameter(format!("variance {} must be >= 0", c.variance)));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { components })
    }

    /// Equal-weight point masses at the rows of `data`: the empirical distribution.
    pub fn point_masses(data: &SampleBatch) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let w = 1.0 / data.len() as f64;
        let components = data
            .rows()
            .map(|r| GmmComponent { weight: w, mean: r.to_vec(), variance: 0.0 })
            .collect();
        Ok(Self { components })
    }

    pub fn components(&self) -> &[GmmComponent] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components[0].mean.len()
    }

    /// Draws one point and returns it with the index of its component.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, usize) {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut k = self.components.len() - 1;
        for (i, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                k = i;
                break;
            }
        }
        let c = &self.components[k];
        let sd = c.variance.sqrt();
        let x = c
            .mean
            .iter()
            .map(|m| {
                let z: f64 = StandardNormal.sample(rng);
                m + sd * z
            })
            .collect();
        (x, k)
    }
}

/// Exact score of the diffused mixture at step `t`.
///
/// Component `(mu, s^2)` diffuses to `N(sqrt(alpha_t) mu, (alpha_t s^2 + 1 - alpha_t) I)`;
/// responsibilities are normalized in log space.
pub fn gmm_score(x_t: &[f64], t: usize, gmm: &GmmSpec, schedule: &NoiseSchedule) -> Result<Vec<f64>> {
    check_dim(gmm.dim(), x_t.len())?;
    check_finite(x_t, "score input")?;
    let alpha = schedule.alpha(t)?;
    schedule.check_step(t)?;
    let root = alpha.sqrt();
    let d = x_t.len() as f64;
    let mut log_terms = Vec::with_capacity(gmm.components.len());
    let mut vars = Vec::with_capacity(gmm.components.len());
    for c in &gmm.components {
        let var = alpha * c.variance + 1.0 - alpha;
        let sq: f64 = x_t.iter().zip(&c.mean).map(|(x, m)| (x - root * m).powi(2)).sum();
        log_terms.push(c.weight.ln() - 0.5 * sq / var - 0.5 * d * var.ln());
        vars.push(var);
    }
    let lse = log_sum_exp(&log_terms);
    let mut score = vec![0.0; x_t.len()];
    for ((c, lt), var) in gmm.components.iter().zip(&log_terms).zip(&vars) {
        let r = (lt - lse).exp();
        if r == 0.0 {
            continue;
        }
        for ((s, x), m) in score.iter_mut().zip(x_t).zip(&c.mean) {
            *s += r * (root * m - x) / var;
        }
    }
    Ok(score)
}

/// Analytic-score provider for a known mixture.
#[derive(Debug, Clone, Copy)]
pub struct GmmScore<'a> {
    pub gmm: &'a GmmSpec,
    pub schedule: &'a NoiseSchedule,
}

impl<'a> GmmScore<'a> {
    pub fn new(gmm: &'a GmmSpec, schedule: &'a NoiseSchedule) -> Self {
        Self { gmm, schedule }
    }
}

impl ScoreProvider for GmmScore<'_> {
    fn dim(&self) -> usize {
        self.gmm.dim()
    }

    fn score(&self, x_t: &[f64], t: usize) -> Result<Vec<f64>> {
        gmm_score(x_t, t, self.gmm, self.schedule)
    }
}

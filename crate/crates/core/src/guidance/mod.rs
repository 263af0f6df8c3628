//! Minority guidance: a classifier over ordinal minority classes steers the
//! reverse sampler, either toward one class or toward high expected minority
//! score.

mod classifier;

pub use classifier::{classifier_accuracy, train_classifier, ClassifierModel, ClassifierTraining};

use crate::diffusion::{generate, NoiseSchedule, SampleBatch, StepPlan};
use crate::error::{check_dim, Error, Result};
use crate::minority::OrdinalBinning;
use crate::score::ScoreProvider;

pub const DEFAULT_CLASS_SCALE: f64 = 2.0;
pub const DEFAULT_MIXED_SCALE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuidanceMode {
    /// `s + w grad log p(target | x_t)`.
    ClassConditional,
    /// `s + w grad log sum_i tau_i p(i | x_t)`.
    MixedDensity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceConfig {
    pub target_class: usize,
    pub scale: f64,
    pub mode: GuidanceMode,
}

impl GuidanceConfig {
    pub fn class_conditional(target_class: usize, scale: f64) -> Self {
        Self { target_class, scale, mode: GuidanceMode::ClassConditional }
    }

    pub fn mixed_density(scale: f64) -> Self {
        Self { target_class: 0, scale, mode: GuidanceMode::MixedDensity }
    }
}

/// Class-conditional minority guidance at the current `x_t`.
pub fn guided_score<P: ScoreProvider + ?Sized>(
    provider: &P,
    clf: &ClassifierModel,
    x_t: &[f64],
    t: usize,
    cfg: &GuidanceConfig,
) -> Result<Vec<f64>> {
    if cfg.mode != GuidanceMode::ClassConditional {
        return Err(Error::InvalidParameter("guided_score requires class-conditional mode".into()));
    }
    if cfg.target_class >= clf.class_count() {
        return Err(Error::InvalidClass { class: cfg.target_class, count: clf.class_count() });
    }
    if !cfg.scale.is_finite() {
        return Err(Error::NonFinite("guidance scale"));
    }
    let score = provider.score(x_t, t)?;
    if cfg.scale == 0.0 {
        return Ok(score);
    }
    let g = clf.log_prob_gradient(x_t, t, cfg.target_class)?;
    Ok(blend(score, &g, cfg.scale))
}

/// Score of the data density reweighted by the classifier's expected minority
/// score `sum_i tau_i p(i | x_t)`, with `tau` the binning representatives.
pub fn mixed_density_score<P: ScoreProvider + ?Sized>(
    provider: &P,
    clf: &ClassifierModel,
    binning: &OrdinalBinning,
    x_t: &[f64],
    t: usize,
    scale: f64,
) -> Result<Vec<f64>> {
    check_dim(clf.class_count(), binning.class_count())?;
    if binning.representatives().iter().any(|tau| !(*tau > 0.0)) {
        return Err(Error::InvalidParameter("class representatives must be positive".into()));
    }
    if !scale.is_finite() {
        return Err(Error::NonFinite("guidance scale"));
    }
    let score = provider.score(x_t, t)?;
    if scale == 0.0 || clf.class_count() == 1 {
        return Ok(score);
    }
    let g = clf.log_mixture_gradient(x_t, t, binning.representatives())?;
    Ok(blend(score, &g, scale))
}

fn blend(mut score: Vec<f64>, gradient: &[f64], scale: f64) -> Vec<f64> {
    score.iter_mut().zip(gradient).for_each(|(s, g)| *s += scale * g);
    score
}

/// A provider with minority guidance applied, usable anywhere a score is.
pub struct GuidedScore<'a, P: ?Sized> {
    provider: &'a P,
    classifier: &'a ClassifierModel,
    binning: Option<&'a OrdinalBinning>,
    config: GuidanceConfig,
}

impl<'a, P: ScoreProvider + ?Sized> GuidedScore<'a, P> {
    pub fn new(
        provider: &'a P,
        classifier: &'a ClassifierModel,
        binning: Option<&'a OrdinalBinning>,
        config: GuidanceConfig,
    ) -> Result<Self> {
        check_dim(provider.dim(), classifier.data_dim())?;
        match config.mode {
            GuidanceMode::ClassConditional if config.target_class >= classifier.class_count() => {
                return Err(Error::InvalidClass {
                    class: config.target_class,
                    count: classifier.class_count(),
                })
            }
            GuidanceMode::MixedDensity if binning.is_none() => {
                return Err(Error::InvalidParameter("mixed-density guidance needs a binning".into()))
            }
            _ => {}
        }
        Ok(Self { provider, classifier, binning, config })
    }
}

impl<P: ScoreProvider + ?Sized> ScoreProvider for GuidedScore<'_, P> {
    fn dim(&self) -> usize {
        self.provider.dim()
    }

    fn score(&self, x_t: &[f64], t: usize) -> Result<Vec<f64>> {
        match self.config.mode {
            GuidanceMode::ClassConditional => {
                guided_score(self.provider, self.classifier, x_t, t, &self.config)
            }
            GuidanceMode::MixedDensity => mixed_density_score(
                self.provider,
                self.classifier,
                self.binning.expect("checked at construction"),
                x_t,
                t,
                self.config.scale,
            ),
        }
    }
}

/// Ancestral sampling with the guided score in place of the provider's.
///
/// The classifier sees the original schedule index of every plan element.
#[allow(clippy::too_many_arguments)]
pub fn guided_generate<P: ScoreProvider + ?Sized>(
    provider: &P,
    clf: &ClassifierModel,
    binning: Option<&OrdinalBinning>,
    schedule: &NoiseSchedule,
    plan: &StepPlan,
    cfg: &GuidanceConfig,
    count: usize,
    seed: u64,
) -> Result<SampleBatch> {
    if clf.total_steps() != schedule.total_steps() {
        return Err(Error::InvalidParameter("classifier was trained for a different schedule length".into()));
    }
    let guided = GuidedScore::new(provider, clf, binning, *cfg)?;
    generate(&guided, schedule, plan, count, seed)
}

//! Experiment configuration in TOML form.
//!
//! Every hyperparameter is a named key with a default, so a config file only
//! needs the dataset section. `validate` checks every precondition of the
//! downstream stages up front and names the stage that would have failed.

use std::path::{Path, PathBuf};

use minority_core::diffusion::NoiseSchedule;
use minority_core::guidance::{DEFAULT_CLASS_SCALE, DEFAULT_MIXED_SCALE};
use minority_core::minority::{DistanceKind, DEFAULT_DRAWS, DEFAULT_T_FRACTION};
use minority_core::nn::{Activation, TrainConfig};
use minority_core::score::{GmmComponent, GmmSpec, DEFAULT_HIDDEN, DEFAULT_TIME_WIDTH};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub score: ScoreConfig,
    #[serde(default)]
    pub minority: MinorityConfig,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    #[serde(default)]
    pub guidance: GuidanceSettings,
    #[serde(default)]
    pub metrics: MetricsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Training set size N.
    pub samples: usize,
    /// Held-out real points used as the metric reference.
    #[serde(default = "default_reference_samples")]
    pub reference_samples: usize,
    pub components: Vec<ComponentConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    /// Trained noise-prediction network.
    Network,
    /// Exact optimal score of the training set.
    Dataset,
    /// Analytic score of the generating mixture.
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationName {
    Silu,
    Tanh,
}

impl From<ActivationName> for Activation {
    fn from(a: ActivationName) -> Self {
        match a {
            ActivationName::Silu => Activation::Silu,
            ActivationName::Tanh => Activation::Tanh,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingBudget {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub final_lr_fraction: f64,
}

impl TrainingBudget {
    pub fn to_train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            steps: self.steps,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            final_lr_fraction: self.final_lr_fraction,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoreConfig {
    pub provider: ProviderKind,
    pub hidden: Vec<usize>,
    pub time_width: usize,
    pub activation: ActivationName,
    pub training: TrainingBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceName {
    L1,
    L2,
    Feature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinorityConfig {
    pub t_fraction: f64,
    /// Noise draws averaged per sample (M).
    pub draws: usize,
    pub distance: DistanceName,
    /// Projection width of the feature distance.
    pub feature_width: usize,
    /// Number of ordinal classes L.
    pub classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierConfig {
    pub hidden: Vec<usize>,
    pub time_width: usize,
    pub training: TrainingBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMode {
    ClassConditional,
    MixedDensity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GuidanceSettings {
    pub mode: SamplerMode,
    /// Target classes of the class-conditional grid; empty means {0, L/2, L-1}.
    pub targets: Vec<usize>,
    pub scales: Vec<f64>,
    /// Also draw an unguided batch for comparison.
    pub include_unguided: bool,
    pub plan_length: usize,
    pub samples_per_cell: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    pub k_avgknn: usize,
    pub k_lof: usize,
    pub k_precision: usize,
    pub histogram_bins: usize,
}

fn default_seed() -> u64 {
    0
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("artifacts")
}

fn default_reference_samples() -> usize {
    1000
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            steps: minority_core::diffusion::DEFAULT_TOTAL_STEPS,
            beta_start: minority_core::diffusion::DEFAULT_BETA_START,
            beta_end: minority_core::diffusion::DEFAULT_BETA_END,
        }
    }
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            provider: ProviderKind::Network,
            hidden: DEFAULT_HIDDEN.to_vec(),
            time_width: DEFAULT_TIME_WIDTH,
            activation: ActivationName::Silu,
            training: TrainingBudget { steps: 3000, batch_size: 128, learning_rate: 2e-3, final_lr_fraction: 0.05 },
        }
    }
}

impl Default for MinorityConfig {
    fn default() -> Self {
        Self {
            t_fraction: DEFAULT_T_FRACTION,
            draws: DEFAULT_DRAWS,
            distance: DistanceName::L2,
            feature_width: 16,
            classes: 10,
        }
    }
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64, 64],
            time_width: DEFAULT_TIME_WIDTH,
            training: TrainingBudget { steps: 2000, batch_size: 128, learning_rate: 2e-3, final_lr_fraction: 0.05 },
        }
    }
}

impl Default for GuidanceSettings {
    fn default() -> Self {
        Self {
            mode: SamplerMode::ClassConditional,
            targets: Vec::new(),
            scales: vec![DEFAULT_CLASS_SCALE],
            include_unguided: true,
            plan_length: 250,
            samples_per_cell: 500,
        }
    }
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { k_avgknn: 5, k_lof: 20, k_precision: 5, histogram_bins: 40 }
    }
}

fn invalid(stage: &'static str, message: impl Into<String>) -> HarnessError {
    HarnessError::Validation { stage, message: message.into() }
}

fn check_budget(stage: &'static str, b: &TrainingBudget) -> Result<()> {
    if b.steps == 0 || b.batch_size == 0 {
        return Err(invalid(stage, "training steps and batch size must be positive"));
    }
    if !(b.learning_rate > 0.0 && b.learning_rate.is_finite()) {
        return Err(invalid(stage, "learning rate must be positive"));
    }
    if !(0.0..=1.0).contains(&b.final_lr_fraction) {
        return Err(invalid(stage, "final_lr_fraction must lie in [0, 1]"));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| invalid("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn gmm(&self) -> Result<GmmSpec> {
        let comps = self
            .dataset
            .components
            .iter()
            .map(|c| GmmComponent { weight: c.weight, mean: c.mean.clone(), variance: c.variance })
            .collect();
        GmmSpec::new(comps).map_err(|e| invalid("synth", e.to_string()))
    }

    pub fn noise_schedule(&self) -> Result<NoiseSchedule> {
        let s = &self.schedule;
        NoiseSchedule::linear(s.steps, s.beta_start, s.beta_end).map_err(|e| invalid("schedule", e.to_string()))
    }

    pub fn distance(&self) -> DistanceKind {
        match self.minority.distance {
            DistanceName::L1 => DistanceKind::L1,
            DistanceName::L2 => DistanceKind::L2,
            DistanceName::Feature => DistanceKind::Feature {
                width: self.minority.feature_width,
                seed: crate::seeds::stage(self.seed, crate::seeds::FEATURE),
            },
        }
    }

    /// Target classes of the class-conditional grid.
    pub fn targets(&self) -> Vec<usize> {
        if !self.guidance.targets.is_empty() {
            return self.guidance.targets.clone();
        }
        let l = self.minority.classes;
        let mut t = vec![0, l / 2, l.saturating_sub(1)];
        t.dedup();
        t
    }

    /// Guidance scales, falling back to the mode's default.
    pub fn scales(&self) -> Vec<f64> {
        if !self.guidance.scales.is_empty() {
            return self.guidance.scales.clone();
        }
        match self.guidance.mode {
            SamplerMode::ClassConditional => vec![DEFAULT_CLASS_SCALE],
            SamplerMode::MixedDensity => vec![DEFAULT_MIXED_SCALE],
        }
    }

    /// Checks every downstream precondition.
    pub fn validate(&self) -> Result<()> {
        let d = &self.dataset;
        if d.samples == 0 {
            return Err(invalid("synth", "dataset.samples must be at least 1"));
        }
        if d.components.is_empty() {
            return Err(invalid("synth", "dataset needs at least one component"));
        }
        self.gmm()?;
        let schedule = self.noise_schedule()?;

        let sc = &self.score;
        if sc.provider == ProviderKind::Network {
            if sc.time_width == 0 {
                return Err(invalid("train-score", "time_width must be positive"));
            }
            check_budget("train-score", &sc.training)?;
        }

        let m = &self.minority;
        if !(m.t_fraction > 0.0 && m.t_fraction <= 1.0) {
            return Err(invalid("score-minority", "t_fraction must lie in (0, 1]"));
        }
        let t = schedule.step_at_fraction(m.t_fraction);
        if schedule.check_step(t).is_err() {
            return Err(invalid("score-minority", format!("t_fraction maps to step {t}")));
        }
        if m.draws == 0 {
            return Err(invalid("score-minority", "draws must be at least 1"));
        }
        if m.distance == DistanceName::Feature && m.feature_width == 0 {
            return Err(invalid("score-minority", "feature_width must be positive"));
        }
        if m.classes == 0 || m.classes > d.samples {
            return Err(invalid(
                "binning",
                format!("classes = {} must lie in 1..=N = {}", m.classes, d.samples),
            ));
        }

        let c = &self.classifier;
        if c.time_width == 0 {
            return Err(invalid("train-classifier", "time_width must be positive"));
        }
        check_budget("train-classifier", &c.training)?;

        let g = &self.guidance;
        if g.plan_length == 0 || g.plan_length > schedule.total_steps() {
            return Err(invalid("sample", format!("plan_length must lie in 1..={}", schedule.total_steps())));
        }
        if g.samples_per_cell == 0 {
            return Err(invalid("sample", "samples_per_cell must be at least 1"));
        }
        if self.scales().iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("sample", "guidance scales must be finite and non-negative"));
        }
        if g.mode == SamplerMode::ClassConditional {
            if let Some(t) = self.targets().iter().find(|t| **t >= m.classes) {
                return Err(invalid("sample", format!("target class {t} not below L = {}", m.classes)));
            }
        }

        let k = &self.metrics;
        let smallest = d.reference_samples.min(g.samples_per_cell);
        for (name, value) in [("k_avgknn", k.k_avgknn), ("k_lof", k.k_lof), ("k_precision", k.k_precision)] {
            if value == 0 || value >= smallest {
                return Err(invalid(
                    "evaluate",
                    format!("{name} = {value} must lie in 1..{smallest} (reference and batch sizes)"),
                ));
            }
        }
        if k.histogram_bins == 0 {
            return Err(invalid("evaluate", "histogram_bins must be positive"));
        }
        Ok(())
    }
}

//! Stage orchestration and artifact layout.
//!
//! Every stage reads its inputs from and writes its outputs to one artifact
//! directory, so stages can run one at a time from the command line or all
//! together through [`run_pipeline`].
//!
//! | stage              | writes                                                        |
//! |--------------------|---------------------------------------------------------------|
//! | `synth`            | `config.toml`, `dataset.csv`, `reference.csv`                 |
//! | `train-score`      | `score_net.ckpt`, `score_loss.csv` (network provider only)    |
//! | `score-minority`   | `minority_scores.csv`                                         |
//! | `bin`              | `minority_classes.csv`, `binning.csv`, `histograms/minority_scores.csv` |
//! | `train-classifier` | `classifier.ckpt`                                             |
//! | `sample`           | `cells.csv`, `samples/<cell>.csv`                              |
//! | `evaluate`         | `metrics.csv`, `eval/<cell>.csv`, `histograms/<cell>.csv`     |
//!
//! `status.json` records the outcome of each stage.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use minority_core::diffusion::{generate, make_plan, NoiseSchedule, SampleBatch};
use minority_core::guidance::{guided_generate, train_classifier, ClassifierTraining, GuidanceConfig};
use minority_core::metrics::{avg_knn_against, histogram, improved_precision_recall, lof_against, Histogram};
use minority_core::minority::{minority_scores, quantile_bins, MinorityParams, MinorityRecord, OrdinalBinning};
use minority_core::nn::Mlp;
use minority_core::score::{train_score_net, DatasetOracle, EpsilonNet, GmmScore, GmmSpec, NetworkScore, ScoreProvider};
use minority_core::stats::{interquartile_range, mean, quantile};
use serde::{Deserialize, Serialize};

use crate::checkpoint::{load_classifier, load_noise_predictor, save_classifier, save_noise_predictor};
use crate::config::{ExperimentConfig, ProviderKind, SamplerMode};
use crate::csv::{float_columns, format_float, read_table, write_table, Table};
use crate::dataset::{assign_modes, minority_mode, synth_dataset, LabeledBatch};
use crate::error::{HarnessError, Result};
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Synth,
    TrainScore,
    ScoreMinority,
    Bin,
    TrainClassifier,
    Sample,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Synth,
        Stage::TrainScore,
        Stage::ScoreMinority,
        Stage::Bin,
        Stage::TrainClassifier,
        Stage::Sample,
        Stage::Evaluate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::TrainScore => "train-score",
            Stage::ScoreMinority => "score-minority",
            Stage::Bin => "bin",
            Stage::TrainClassifier => "train-classifier",
            Stage::Sample => "sample",
            Stage::Evaluate => "evaluate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageState {
    Ok,
    Skipped,
    Failed { error: String },
}

/// Contents of `status.json`. Contains no timestamps.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Status {
    pub stages: BTreeMap<String, StageState>,
    pub failed_stage: Option<String>,
}

impl Status {
    pub fn load(out: &Path) -> Self {
        std::fs::read_to_string(out.join("status.json"))
            .ok()
            .and_then(|s| serde_json::from_str(&s).ok())
            .unwrap_or_default()
    }

    pub fn save(&self, out: &Path) -> Result<()> {
        let path = out.join("status.json");
        let mut text = serde_json::to_string_pretty(self).expect("status serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))
    }
}

/// One guided (or unguided) batch of the sampling grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub name: String,
    pub guidance: Option<GuidanceConfig>,
}

/// Configuration, schedule and artifact directory shared by all stages.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub out: PathBuf,
    schedule: NoiseSchedule,
    gmm: GmmSpec,
}

fn x_columns(dim: usize) -> Vec<String> {
    (0..dim).map(|d| format!("x{d}")).collect()
}

fn batch_table(batch: &SampleBatch, modes: Option<&[usize]>) -> Table {
    let mut header = x_columns(batch.dim());
    if modes.is_some() {
        header.push("mode".into());
    }
    let mut t = Table::new(header);
    for (i, row) in batch.rows().enumerate() {
        let mut cells: Vec<String> = row.iter().map(|v| format_float(*v)).collect();
        if let Some(m) = modes {
            cells.push(m[i].to_string());
        }
        t.push(cells);
    }
    t
}

impl Experiment {
    /// Validates `config` and prepares the artifact directory.
    pub fn new(config: ExperimentConfig, out: impl Into<PathBuf>) -> Result<Self> {
        config.validate()?;
        let schedule = config.noise_schedule()?;
        let gmm = config.gmm()?;
        let out = out.into();
        for dir in [out.clone(), out.join("samples"), out.join("eval"), out.join("histograms")] {
            std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
        }
        Ok(Self { config, out, schedule, gmm })
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        &self.schedule
    }

    pub fn gmm(&self) -> &GmmSpec {
        &self.gmm
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn require(&self, name: &str, stage: &'static str) -> Result<PathBuf> {
        let p = self.path(name);
        if !p.exists() {
            return Err(HarnessError::MissingArtifact { path: p, stage });
        }
        Ok(p)
    }

    fn seed(&self, tag: u64) -> u64 {
        seeds::stage(self.config.seed, tag)
    }

    fn read_batch(&self, name: &str, stage: &'static str) -> Result<SampleBatch> {
        let path = self.require(name, stage)?;
        let dim = self.gmm.dim();
        let cols = x_columns(dim);
        let names: Vec<&str> = cols.iter().map(String::as_str).collect();
        let rows = float_columns(&read_table(&path)?, &names, &path)?;
        Ok(SampleBatch::from_rows(dim, &rows)?)
    }

    pub fn dataset(&self) -> Result<SampleBatch> {
        self.read_batch("dataset.csv", "synth")
    }

    pub fn reference(&self) -> Result<SampleBatch> {
        self.read_batch("reference.csv", "synth")
    }

    /// Runs one stage and records its outcome in `status.json`.
    pub fn run_stage(&self, stage: Stage) -> Result<()> {
        let outcome = match stage {
            Stage::Synth => self.synth(),
            Stage::TrainScore => self.train_score(),
            Stage::ScoreMinority => self.score_minority(),
            Stage::Bin => self.bin(),
            Stage::TrainClassifier => self.train_classifier(),
            Stage::Sample => self.sample(),
            Stage::Evaluate => self.evaluate(),
        };
        let mut status = Status::load(&self.out);
        let state = match &outcome {
            Ok(true) => StageState::Ok,
            Ok(false) => StageState::Skipped,
            Err(e) => StageState::Failed { error: e.to_string() },
        };
        status.stages.insert(stage.name().into(), state);
        status.failed_stage = match &outcome {
            Err(_) => Some(stage.name().into()),
            Ok(_) if status.failed_stage.as_deref() == Some(stage.name()) => None,
            Ok(_) => status.failed_stage,
        };
        status.save(&self.out)?;
        outcome
            .map(|_| ())
            .map_err(|e| HarnessError::Stage { stage: stage.name(), source: Box::new(e) })
    }

    /// Stage bodies return `Ok(false)` when there is nothing to do.
    fn synth(&self) -> Result<bool> {
        let cfg_path = self.path("config.toml");
        std::fs::write(&cfg_path, self.config.to_toml_string()).map_err(|e| HarnessError::io(&cfg_path, e))?;
        let train = synth_dataset(&self.gmm, self.config.dataset.samples, self.seed(seeds::DATASET))?;
        let held = synth_dataset(&self.gmm, self.config.dataset.reference_samples, self.seed(seeds::REFERENCE))?;
        for (name, b) in [("dataset.csv", &train), ("reference.csv", &held)] {
            let LabeledBatch { data, modes } = b;
            write_table(&batch_table(data, Some(modes)), &self.path(name))?;
        }
        Ok(true)
    }

    fn train_score(&self) -> Result<bool> {
        if self.config.score.provider != ProviderKind::Network {
            return Ok(false);
        }
        let data = self.dataset()?;
        let sc = &self.config.score;
        let seed = self.seed(seeds::SCORE_NET);
        let mut widths = vec![data.dim() + sc.time_width];
        widths.extend(&sc.hidden);
        widths.push(data.dim());
        let mut net = EpsilonNet::from_net(Mlp::new(&widths, sc.activation.into(), seed)?, data.dim())?;
        let history = train_score_net(&mut net, &data, &self.schedule, &sc.training.to_train_config(seed))?;
        save_noise_predictor(&self.path("score_net.ckpt"), &net, &self.schedule)?;
        let mut t = Table::new(["step", "loss"]);
        for (i, l) in history.iter().enumerate() {
            t.push(vec![i.to_string(), format_float(*l)]);
        }
        write_table(&t, &self.path("score_loss.csv"))?;
        Ok(true)
    }

    /// Calls `f` with the configured score provider.
    pub fn with_provider<T>(&self, f: impl FnOnce(&dyn ScoreProvider) -> Result<T>) -> Result<T> {
        match self.config.score.provider {
            ProviderKind::Network => {
                let net = load_noise_predictor(&self.require("score_net.ckpt", "train-score")?, &self.schedule)?;
                f(&NetworkScore { net: &net, schedule: &self.schedule })
            }
            ProviderKind::Dataset => {
                let data = self.dataset()?;
                f(&DatasetOracle::new(&data, &self.schedule)?)
            }
            ProviderKind::Analytic => f(&GmmScore::new(&self.gmm, &self.schedule)),
        }
    }

    fn score_minority(&self) -> Result<bool> {
        let data = self.dataset()?;
        let m = &self.config.minority;
        let params = MinorityParams {
            t: self.schedule.step_at_fraction(m.t_fraction),
            draws: m.draws,
            distance: self.config.distance(),
        };
        let scores = self.with_provider(|p| {
            Ok(minority_scores(&data, p, &self.schedule, &params, self.seed(seeds::MINORITY))?)
        })?;
        let mut t = Table::new(["index", "score"]);
        for (i, s) in scores.iter().enumerate() {
            t.push(vec![i.to_string(), format_float(*s)]);
        }
        write_table(&t, &self.path("minority_scores.csv"))?;
        Ok(true)
    }

    fn read_scores(&self) -> Result<Vec<f64>> {
        let path = self.require("minority_scores.csv", "score-minority")?;
        Ok(float_columns(&read_table(&path)?, &["score"], &path)?.into_iter().map(|r| r[0]).collect())
    }

    fn bin(&self) -> Result<bool> {
        let scores = self.read_scores()?;
        let (binning, labels) = quantile_bins(&scores, self.config.minority.classes)?;
        let mut t = Table::new(["index", "score", "class"]);
        for (i, (s, c)) in scores.iter().zip(&labels).enumerate() {
            t.push(vec![i.to_string(), format_float(*s), c.to_string()]);
        }
        write_table(&t, &self.path("minority_classes.csv"))?;

        let mut t = Table::new(["class", "upper_edge", "representative", "count"]);
        for c in 0..binning.class_count() {
            let edge = binning.edges().get(c).copied().unwrap_or(f64::INFINITY);
            let count = labels.iter().filter(|&&l| l == c).count();
            t.push(vec![
                c.to_string(),
                format_float(edge),
                format_float(binning.representatives()[c]),
                count.to_string(),
            ]);
        }
        write_table(&t, &self.path("binning.csv"))?;
        let h = histogram(&scores, self.config.metrics.histogram_bins)?;
        write_table(&histogram_table(&h), &self.path("histograms/minority_scores.csv"))?;
        Ok(true)
    }

    pub fn read_binning(&self) -> Result<(OrdinalBinning, Vec<usize>)> {
        let path = self.require("binning.csv", "bin")?;
        let rows = float_columns(&read_table(&path)?, &["upper_edge", "representative"], &path)?;
        let edges = rows[..rows.len().saturating_sub(1)].iter().map(|r| r[0]).collect();
        let reps = rows.iter().map(|r| r[1]).collect();
        let binning = OrdinalBinning::new(edges, reps)?;
        let path = self.require("minority_classes.csv", "bin")?;
        let labels = float_columns(&read_table(&path)?, &["class"], &path)?
            .into_iter()
            .map(|r| r[0] as usize)
            .collect();
        Ok((binning, labels))
    }

    fn train_classifier(&self) -> Result<bool> {
        let data = self.dataset()?;
        let scores = self.read_scores()?;
        let (binning, labels) = self.read_binning()?;
        let records = MinorityRecord::zip(&scores, &labels);
        let c = &self.config.classifier;
        let setup = ClassifierTraining {
            hidden: c.hidden.clone(),
            time_width: c.time_width,
            train: c.training.to_train_config(self.seed(seeds::CLASSIFIER)),
        };
        let clf = train_classifier(&records, &data, binning.class_count(), &self.schedule, &setup)?;
        save_classifier(&self.path("classifier.ckpt"), &clf, &self.schedule)?;
        Ok(true)
    }

    /// The sampling grid, unguided cell first.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        if self.config.guidance.include_unguided {
            cells.push(Cell { name: "unguided".into(), guidance: None });
        }
        for w in self.config.scales() {
            match self.config.guidance.mode {
                SamplerMode::ClassConditional => {
                    for l in self.config.targets() {
                        cells.push(Cell {
                            name: format!("class_l{l}_w{}", format_float(w)),
                            guidance: Some(GuidanceConfig::class_conditional(l, w)),
                        });
                    }
                }
                SamplerMode::MixedDensity => cells.push(Cell {
                    name: format!("mixed_w{}", format_float(w)),
                    guidance: Some(GuidanceConfig::mixed_density(w)),
                }),
            }
        }
        cells
    }

    fn sample(&self) -> Result<bool> {
        let g = &self.config.guidance;
        let plan = make_plan(self.schedule.total_steps(), g.plan_length.min(self.schedule.total_steps()))?;
        let needs_classifier = self.cells().iter().any(|c| c.guidance.is_some());
        let clf = if needs_classifier {
            Some(load_classifier(&self.require("classifier.ckpt", "train-classifier")?, &self.schedule)?)
        } else {
            None
        };
        let binning = match g.mode {
            SamplerMode::MixedDensity if needs_classifier => Some(self.read_binning()?.0),
            _ => None,
        };
        let seed = self.seed(seeds::SAMPLE);
        let mut index = Table::new(["cell", "mode", "target", "scale"]);
        self.with_provider(|p| {
            for cell in self.cells() {
                // every cell shares the seed: batches differ only through guidance
                let batch = match (&cell.guidance, &clf) {
                    (Some(cfg), Some(clf)) => {
                        guided_generate(p, clf, binning.as_ref(), &self.schedule, &plan, cfg, g.samples_per_cell, seed)?
                    }
                    _ => generate(p, &self.schedule, &plan, g.samples_per_cell, seed)?,
                };
                write_table(&batch_table(&batch, None), &self.path(&format!("samples/{}.csv", cell.name)))?;
                index.push(cell_row(&cell));
            }
            Ok(())
        })?;
        write_table(&index, &self.path("cells.csv"))?;
        Ok(true)
    }

    fn evaluate(&self) -> Result<bool> {
        let reference = self.reference()?;
        let k = &self.config.metrics;
        let rare = minority_mode(&self.gmm);
        let mut report = Table::new([
            "cell",
            "mode",
            "target",
            "scale",
            "count",
            "avg_knn_mean",
            "lof_mean",
            "lof_median",
            "lof_iqr",
            "precision",
            "recall",
            "minority_fraction",
        ]);
        for cell in self.cells() {
            let batch = self.read_batch(&format!("samples/{}.csv", cell.name), "sample")?;
            let knn = avg_knn_against(&reference, &batch, k.k_avgknn)?;
            let lof = lof_against(&reference, &batch, k.k_lof)?;
            let pr = improved_precision_recall(&reference, &batch, k.k_precision)?;
            let modes = assign_modes(&self.gmm, &batch);
            let fraction = modes.iter().filter(|&&m| m == rare).count() as f64 / modes.len() as f64;

            let mut per = Table::new(["index", "avg_knn", "lof", "mode"]);
            for i in 0..batch.len() {
                per.push(vec![i.to_string(), format_float(knn[i]), format_float(lof[i]), modes[i].to_string()]);
            }
            write_table(&per, &self.path(&format!("eval/{}.csv", cell.name)))?;
            let h = histogram(&lof, k.histogram_bins)?;
            write_table(&histogram_table(&h), &self.path(&format!("histograms/{}.csv", cell.name)))?;

            let mut row = cell_row(&cell);
            row.extend([
                batch.len().to_string(),
                format_float(mean(&knn)),
                format_float(mean(&lof)),
                format_float(quantile(&lof, 0.5)),
                format_float(interquartile_range(&lof)),
                format_float(pr.precision),
                format_float(pr.recall),
                format_float(fraction),
            ]);
            report.push(row);
        }
        write_table(&report, &self.path("metrics.csv"))?;
        Ok(true)
    }
}

fn cell_row(cell: &Cell) -> Vec<String> {
    match &cell.guidance {
        None => vec![cell.name.clone(), "none".into(), String::new(), format_float(0.0)],
        Some(g) => match g.mode {
            minority_core::guidance::GuidanceMode::ClassConditional => vec![
                cell.name.clone(),
                "class_conditional".into(),
                g.target_class.to_string(),
                format_float(g.scale),
            ],
            minority_core::guidance::GuidanceMode::MixedDensity => {
                vec![cell.name.clone(), "mixed_density".into(), String::new(), format_float(g.scale)]
            }
        },
    }
}

fn histogram_table(h: &Histogram) -> Table {
    let mut t = Table::new(["bin_start", "bin_end", "density"]);
    for (i, d) in h.densities.iter().enumerate() {
        t.push(vec![format_float(h.edges[i]), format_float(h.edges[i + 1]), format_float(*d)]);
    }
    t
}

/// Runs every stage in order, stopping at the first failure.
pub fn run_pipeline(config: ExperimentConfig, out: impl Into<PathBuf>) -> Result<Experiment> {
    let exp = Experiment::new(config, out)?;
    // a fresh run starts from a clean status record
    Status::default().save(&exp.out)?;
    for stage in Stage::ALL {
        exp.run_stage(stage)?;
    }
    Ok(exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ExperimentConfig {
        let mut c = ExperimentConfig::from_toml_str(
            r#"
[dataset]
samples = 120
reference_samples = 100
components = [
  { weight = 0.9, mean = [0.0, 0.0], variance = 0.25 },
  { weight = 0.1, mean = [2.0, 2.0], variance = 0.0625 },
]
[schedule]
steps = 50
beta_start = 0.001
beta_end = 0.1
[score]
provider = "analytic"
[minority]
classes = 3
[classifier]
hidden = [8]
time_width = 2
training = { steps = 20, batch_size = 16, learning_rate = 0.01, final_lr_fraction = 0.1 }
[guidance]
plan_length = 10
samples_per_cell = 30
[metrics]
k_lof = 5
"#,
        )
        .unwrap();
        c.seed = 5;
        c
    }

    #[test]
    fn cells_follow_the_grid() {
        let dir = tempfile::tempdir().unwrap();
        let exp = Experiment::new(config(), dir.path()).unwrap();
        let names: Vec<String> = exp.cells().into_iter().map(|c| c.name).collect();
        assert_eq!(names, ["unguided", "class_l0_w2", "class_l1_w2", "class_l2_w2"]);
    }

    #[test]
    fn stages_need_their_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let exp = Experiment::new(config(), dir.path()).unwrap();
        let err = exp.run_stage(Stage::Bin).unwrap_err();
        assert_eq!(err.stage(), Some("bin"));
        let status = Status::load(dir.path());
        assert_eq!(status.failed_stage.as_deref(), Some("bin"));
        assert!(matches!(status.stages["bin"], StageState::Failed { .. }));
    }

    #[test]
    fn small_pipeline_writes_every_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let exp = run_pipeline(config(), dir.path()).unwrap();
        for f in [
            "config.toml",
            "dataset.csv",
            "reference.csv",
            "minority_scores.csv",
            "minority_classes.csv",
            "binning.csv",
            "classifier.ckpt",
            "cells.csv",
            "metrics.csv",
            "samples/class_l2_w2.csv",
            "eval/unguided.csv",
            "histograms/unguided.csv",
            "histograms/minority_scores.csv",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let status = Status::load(dir.path());
        assert_eq!(status.failed_stage, None);
        assert_eq!(status.stages["train-score"], StageState::Skipped);
        assert_eq!(status.stages["evaluate"], StageState::Ok);
        let (binning, labels) = exp.read_binning().unwrap();
        assert_eq!(binning.class_count(), 3);
        assert_eq!(labels.len(), 120);
    }
}

//! End-to-end runs of the staged pipeline and of the command-line surface.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use minority_harness::pipeline::{StageState, Status};
use minority_harness::{run_pipeline, ExperimentConfig};

fn minimal_config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/minimal.toml")
}

fn minimal() -> ExperimentConfig {
    ExperimentConfig::load(&minimal_config_path()).unwrap()
}

fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

#[test]
fn minimal_config_runs_quickly_and_reproducibly() {
    let cfg = minimal();
    assert_eq!((cfg.dataset.samples, cfg.schedule.steps, cfg.minority.classes), (500, 200, 5));
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let start = Instant::now();
    run_pipeline(cfg.clone(), a.path()).unwrap();
    assert!(start.elapsed() < Duration::from_secs(600), "{:?}", start.elapsed());
    run_pipeline(cfg, b.path()).unwrap();

    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    assert!(sa.len() > 15);
    assert_eq!(sa.keys().collect::<Vec<_>>(), sb.keys().collect::<Vec<_>>());
    for (k, v) in &sa {
        assert!(&sb[k] == v, "{} differs", k.display());
    }
    let status = Status::load(a.path());
    assert!(status.stages.values().all(|s| *s == StageState::Ok));
}

#[test]
fn different_seed_changes_the_artifacts() {
    let mut cfg = minimal();
    cfg.score.provider = minority_harness::config::ProviderKind::Analytic;
    cfg.guidance.samples_per_cell = 50;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(cfg.clone(), a.path()).unwrap();
    cfg.seed += 1;
    run_pipeline(cfg, b.path()).unwrap();
    let read = |d: &Path| std::fs::read(d.join("dataset.csv")).unwrap();
    assert_ne!(read(a.path()), read(b.path()));
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_minority")).args(args).output().unwrap()
}

#[test]
fn command_line_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();

    let mut cfg = minimal();
    cfg.score.provider = minority_harness::config::ProviderKind::Dataset;
    cfg.classifier.training.steps = 50;
    cfg.guidance.samples_per_cell = 40;
    cfg.guidance.plan_length = 20;
    let good = dir.path().join("good.toml");
    std::fs::write(&good, cfg.to_toml_string()).unwrap();

    cfg.minority.classes = 501;
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, cfg.to_toml_string()).unwrap();

    let r = cli(&["pipeline", "--config", bad.to_str().unwrap(), "--out", out_s]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("binning"));

    // stage run before its inputs exist
    let r = cli(&["bin", "--config", good.to_str().unwrap(), "--out", out_s]);
    assert_eq!(r.status.code(), Some(1));
    assert_eq!(Status::load(&out).failed_stage.as_deref(), Some("bin"));

    for stage in ["synth", "train-score", "score-minority", "bin", "train-classifier", "sample", "evaluate"] {
        let r = cli(&[stage, "--config", good.to_str().unwrap(), "--out", out_s, "--seed", "3"]);
        assert_eq!(r.status.code(), Some(0), "{stage}: {}", String::from_utf8_lossy(&r.stderr));
    }
    let status = Status::load(&out);
    assert_eq!(status.failed_stage, None);
    assert_eq!(status.stages["train-score"], StageState::Skipped);

    // stage by stage equals one pipeline call
    let whole = dir.path().join("whole");
    let r = cli(&["pipeline", "--config", good.to_str().unwrap(), "--out", whole.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(
        std::fs::read(out.join("metrics.csv")).unwrap(),
        std::fs::read(whole.join("metrics.csv")).unwrap()
    );

    let r = cli(&["pipeline", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
}

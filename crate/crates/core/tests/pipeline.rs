use std::collections::BTreeMap;
use std::path::Path;

use careercast::config::{data_paths_in, RunConfig};
use careercast::pipeline::{run, Command};

const SMALL: &str = "synth.n_players = 150
run.years = 7, 9
selection.retained = 10
grid.ridge.lambda = 0.1, 10
grid.mlp.alpha = 1
grid.mlp.layer1 = 4
grid.mlp.layer2 = 0
grid.forest.max_depth = 4
grid.forest.n_trees = 20
grid.svr.epsilon = 0.1
grid.svr.c = 10
grid.svr.gamma = 0.01
";

fn config(out: &Path, seed: u64) -> RunConfig {
    let text = format!("seed = {seed}\nout = {}\n{SMALL}", out.display());
    let mut cfg = RunConfig::from_text(&text, out).unwrap();
    run(&cfg, Command::Synth).unwrap();
    cfg.data = data_paths_in(&cfg.synth_dir());
    cfg
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(dir).unwrap().display().to_string(),
                    std::fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

#[test]
fn same_seed_reproduces_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), 3);
    let first = run(&cfg, Command::All).unwrap();
    let a = snapshot(tmp.path());
    let second = run(&cfg, Command::All).unwrap();
    let b = snapshot(tmp.path());
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (k, v) in &a {
        assert!(v == &b[k], "{k} changed between runs");
    }
    assert_eq!(first.artifacts, second.artifacts);

    let manifest = String::from_utf8(a["manifest.txt"].clone()).unwrap();
    assert!(manifest.starts_with("command = all\nseed = 3\n"));
    for line in manifest.lines().filter_map(|l| l.strip_prefix("artifact = ")) {
        assert!(a.contains_key(line), "{line} listed but missing");
    }
    for f in [
        "metrics.csv",
        "predictions_batters.csv",
        "heatmap_pitchers_forest.svg",
        "heatmap_batters_delta.svg",
        "rfe_batters_9.csv",
        "ranking_pitchers_7.txt",
        "models/batters_7_svr.txt",
        "tune_pitchers_9_mlp.csv",
        "cohort_report.txt",
    ] {
        assert!(a.contains_key(f), "{f} missing");
    }
    let metrics = String::from_utf8(a["metrics.csv"].clone()).unwrap();
    // 2 cohorts x 2 years x (4 models + delta)
    assert_eq!(metrics.lines().count(), 1 + 2 * 2 * 5);
    let report = first.evaluation.unwrap();
    assert_eq!(report.config_digest, cfg.digest());
    assert!(report.entries.iter().all(|e| e.r2.is_finite()));
}

#[test]
fn seed_changes_the_split() {
    let tmp = tempfile::tempdir().unwrap();
    let a = config(&tmp.path().join("a"), 3);
    let mut b = a.clone();
    b.seed = 4;
    b.out = tmp.path().join("b");
    run(&a, Command::Cohort).unwrap();
    run(&a, Command::Baseline).unwrap();
    run(&b, Command::Baseline).unwrap();
    let read = |p: &Path| std::fs::read_to_string(p.join("split_batters.csv")).unwrap();
    assert_ne!(read(&a.out), read(&b.out));
}

#[test]
fn commands_stop_at_their_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), 5);
    let files = |cmd| {
        let s = run(&cfg, cmd).unwrap();
        s.artifacts.iter().map(|p| p.display().to_string()).collect::<Vec<_>>()
    };
    let ingest = files(Command::Ingest);
    assert!(ingest.contains(&"rejects.csv".to_string()));
    assert!(!ingest.iter().any(|f| f.starts_with("cohort")));

    let baseline = files(Command::Baseline);
    assert!(baseline.contains(&"aging_curve_batters.csv".to_string()));
    assert!(baseline.contains(&"baseline_pitchers.csv".to_string()));
    assert!(!baseline.iter().any(|f| f.starts_with("features") || f == "metrics.csv"));

    let features = files(Command::Features);
    assert!(features.contains(&"features_batters.csv".to_string()));
    assert!(features.contains(&"targets_pitchers_y9.csv".to_string()));
    assert!(!features.iter().any(|f| f.starts_with("rfe_")));

    let tune = files(Command::Tune);
    assert!(tune.contains(&"tune_batters_7_ridge.csv".to_string()));
    assert!(!tune.iter().any(|f| f.starts_with("models/")));
}

#[test]
fn invalid_config_is_reported_before_any_work() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config(tmp.path(), 1);
    cfg.train_fraction = 1.5;
    cfg.out = tmp.path().join("never");
    let err = run(&cfg, Command::All).unwrap_err().to_string();
    assert!(err.contains("train_fraction"), "{err}");
    assert!(!cfg.out.exists());
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ppos_core::{simulate_stream, CorpusConfig, EffectComponent, ExperimentScenario};

fn ppos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppos"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

/// Streams under the model with a fixed effect for every experiment.
fn model_corpus(dir: &Path, n: u64, theta: f64, days: usize) -> PathBuf {
    let mut body = String::from("experiment_id,day,estimate,sigma\n");
    for id in 0..n {
        let scenario = ExperimentScenario {
            scenario_id: id,
            true_theta: theta,
            sigma: 1.0,
            horizon: days,
            interim_day: 1,
        };
        let s = simulate_stream(&scenario, 42).unwrap();
        for (d, x) in s.estimates().iter().enumerate() {
            body.push_str(&format!("e{id},{},{x:e},1\n", d + 1));
        }
    }
    write(dir, "streams.csv", &body)
}

/// Streams whose effects are drawn from `N(0, 1/7)`, matching the prior
/// the checks below are run with.
fn prior_corpus(dir: &Path, n: usize) -> PathBuf {
    let corpus = CorpusConfig {
        n_experiments: n,
        effect_mixture: vec![EffectComponent::Gaussian {
            mean: 0.0,
            sd: (1.0f64 / 7.0).sqrt(),
            weight: 1.0,
        }],
        sigma: 1.0,
        seed: 8,
        ..CorpusConfig::default()
    };
    let mut body = String::from("experiment_id,day,estimate,sigma\n");
    for id in 0..n as u64 {
        let s = simulate_stream(&corpus.scenario(id).1, corpus.seed).unwrap();
        for (d, x) in s.estimates().iter().enumerate() {
            body.push_str(&format!("e{id},{},{x:e},1\n", d + 1));
        }
    }
    write(dir, "prior.csv", &body)
}

fn zeros(dir: &Path) -> PathBuf {
    let mut body = String::from("experiment_id,day,estimate,sigma\n");
    for d in 1..=7 {
        body.push_str(&format!("a,{d},0,1\n"));
    }
    write(dir, "zeros.csv", &body)
}

#[test]
fn analyze_flat_interim_stops_for_failure() {
    let dir = tempfile::tempdir().unwrap();
    let input = zeros(dir.path());
    let log = dir.path().join("runs.jsonl");
    let o = ppos(&[
        "analyze",
        "--input",
        p(&input),
        "--rule",
        "ppos",
        "--log",
        p(&log),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("experiment_id,rule,statistic,verdict"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "a");
    assert_eq!(row[1], "ppos");
    let stat: f64 = row[2].parse().unwrap();
    assert!((stat - 0.05).abs() < 0.01, "{stat}");
    assert_eq!(row[3], "stop_failure");
    assert!(lines.next().is_none());
}

#[test]
fn analyze_closed_form_matches_reference_value() {
    let dir = tempfile::tempdir().unwrap();
    let input = zeros(dir.path());
    let o = ppos(&[
        "analyze",
        "--input",
        p(&input),
        "--rule",
        "ppos",
        "--ppos-method",
        "closed-form",
        "--log",
        p(&dir.path().join("l.jsonl")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stat: f64 = stdout(&o)
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!((stat - 0.05).abs() < 1e-10);
}

#[test]
fn default_rules_cover_all_three_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let input = zeros(dir.path());
    let o = ppos(&[
        "analyze",
        "--input",
        p(&input),
        "--log",
        p(&dir.path().join("l.jsonl")),
    ]);
    let rules: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().to_string())
        .collect();
    assert_eq!(rules, ["heuristic", "always-valid", "ppos"]);
}

#[test]
fn parse_errors_name_the_row_and_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let dup = write(
        dir.path(),
        "dup.csv",
        "experiment_id,day,estimate,sigma\na,1,0,1\na,2,0,1\na,2,0,1\n",
    );
    let o = ppos(&[
        "analyze",
        "--input",
        p(&dup),
        "--log",
        p(&dir.path().join("l.jsonl")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("row 4") && err.contains("duplicate"), "{err}");
    assert!(!dir.path().join("l.jsonl").exists());

    let gap = write(
        dir.path(),
        "gap.csv",
        "experiment_id,day,estimate,sigma\na,1,0,1\na,3,0,1\n",
    );
    let o = ppos(&[
        "analyze",
        "--input",
        p(&gap),
        "--log",
        p(&dir.path().join("l.jsonl")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 3"));

    let missing = dir.path().join("nope.csv");
    let o = ppos(&["analyze", "--input", p(&missing)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = zeros(dir.path());
    for extra in [
        &["--day", "14"][..],
        &["--day", "0"],
        &["--rule", "bayes"],
        &["--gamma-success", "0.05"],
        &["--alpha", "1.5"],
        &["--prior-mean", "0"],
        &["--l", "0.2", "--m", "0.1"],
    ] {
        let mut args = vec!["analyze", "--input", p(&input)];
        args.extend_from_slice(extra);
        let o = ppos(&args);
        assert_eq!(o.status.code(), Some(2), "{extra:?}: {}", stderr(&o));
    }
}

#[test]
fn short_experiments_are_skipped_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("experiment_id,day,estimate,sigma\n");
    for d in 1..=7 {
        body.push_str(&format!("long,{d},0.1,1\n"));
    }
    body.push_str("short,1,0.2,1\nshort,2,0.3,1\n");
    let input = write(dir.path(), "mixed.csv", &body);
    let o = ppos(&[
        "analyze",
        "--input",
        p(&input),
        "--rule",
        "heuristic",
        "--log",
        p(&dir.path().join("l.jsonl")),
    ]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("skipping experiment `short`"));
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn analyze_is_byte_identical_across_runs_and_logs_each_run() {
    let dir = tempfile::tempdir().unwrap();
    let input = model_corpus(dir.path(), 5, 0.2, 10);
    let mut bodies = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = ppos(&[
            "analyze",
            "--input",
            p(&input),
            "--seed",
            "9",
            "--output-dir",
            p(&out),
            "--log",
            p(&dir.path().join("runs.jsonl")),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        bodies.push(std::fs::read(out.join("analysis.csv")).unwrap());
        assert_eq!(o.stdout, *bodies.last().unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);

    let log = std::fs::read_to_string(dir.path().join("runs.jsonl")).unwrap();
    let records: Vec<serde_json::Value> = log
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), 2);
    let r = &records[0];
    assert_eq!(r["command"], "analyze");
    assert_eq!(r["config"]["seed"], 9);
    assert_eq!(r["config"]["model"]["horizon"], 14);
    assert_eq!(r["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(r["decisions"].as_array().unwrap().len(), 15);
    assert!(r["timestamp"].is_string() && r["version"].is_string());
}

#[test]
fn analyze_accepts_json_input() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<_> = (1..=7)
        .map(|d| serde_json::json!({"experiment_id": "j", "day": d, "estimate": 0.0, "sigma": 1.0}))
        .collect();
    let input = write(dir.path(), "s.json", &serde_json::to_string(&rows).unwrap());
    let o = ppos(&[
        "analyze",
        "--input",
        p(&input),
        "--format",
        "json",
        "--log",
        p(&dir.path().join("l.jsonl")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
    assert_eq!(v[2]["verdict"], "stop_failure");
}

fn matrix_total(path: &Path) -> u64 {
    let body = std::fs::read_to_string(path).unwrap();
    assert!(body.ends_with('\n'));
    body.lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum()
}

#[test]
fn simulate_default_corpus_writes_three_full_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let mut snapshots = Vec::new();
    for run in ["one", "two"] {
        let out = dir.path().join(run);
        let o = ppos(&["simulate", "--output-dir", p(&out), "--mc-draws", "2000"]);
        assert!(o.status.success(), "{}", stderr(&o));
        for rule in ["heuristic", "always-valid", "ppos"] {
            assert_eq!(
                matrix_total(&out.join(format!("confusion_{rule}.csv"))),
                345
            );
        }
        let summary: serde_json::Value =
            serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["rules"].as_array().unwrap().len(), 3);
        assert_eq!(summary["config"]["corpus"]["n_experiments"], 345);
        let plot = std::fs::read_to_string(out.join("plot_data.csv")).unwrap();
        assert!(plot.starts_with("rule,bin_lower,bin_upper,count\n"));
        assert_eq!(plot.lines().count(), 1 + 3 * 20);
        snapshots.push(
            [
                "confusion_ppos.csv",
                "plot_data.csv",
                "experiments.csv",
                "summary.json",
            ]
            .map(|f| std::fs::read(out.join(f)).unwrap()),
        );
    }
    assert_eq!(snapshots[0], snapshots[1]);
}

#[test]
fn simulate_rejects_empty_and_unbalanced_corpora_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = ppos(&["simulate", "--output-dir", p(&out), "--n-experiments", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    let cfg = CorpusConfig {
        effect_mixture: vec![
            EffectComponent::PointNull { weight: 0.5 },
            EffectComponent::Gaussian {
                mean: 0.1,
                sd: 0.1,
                weight: 0.4,
            },
        ],
        ..CorpusConfig::default()
    };
    let cfg_path = write(
        dir.path(),
        "corpus.json",
        &serde_json::to_string(&cfg).unwrap(),
    );
    let o = ppos(&[
        "simulate",
        "--config",
        p(&cfg_path),
        "--output-dir",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("weights"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn simulate_reads_a_corpus_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"n_experiments": 40, "sigma": 2.0, "seed": 5,
                  "effect_mixture": [{"kind": "point_null", "weight": 1.0}]}"#;
    let cfg_path = write(dir.path(), "corpus.json", cfg);
    let out = dir.path().join("out");
    let o = ppos(&[
        "simulate",
        "--config",
        p(&cfg_path),
        "--output-dir",
        p(&out),
        "--rule",
        "ppos",
        "--ppos-method",
        "closed-form",
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let conf: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("confusion.json")).unwrap()).unwrap();
    let total: u64 = conf[0]["cells"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["count"].as_u64().unwrap())
        .sum();
    assert_eq!(total, 40);
    let log = std::fs::read_to_string(out.join("runs.jsonl")).unwrap();
    let rec: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!(rec["config"]["corpus"]["seed"], 5);
    assert_eq!(rec["decisions"].as_array().unwrap().len(), 40);
}

fn check_report(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", stderr(o));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn check_on_model_generated_input_is_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let input = prior_corpus(dir.path(), 50);
    let out = dir.path().join("out");
    let o = ppos(&[
        "check",
        "--input",
        p(&input),
        "--statistic",
        "agreement",
        "--replicates",
        "500",
        "--ppos-method",
        "closed-form",
        "--prior-mean",
        "0",
        "--prior-var",
        "0.142857",
        "--output-dir",
        p(&out),
    ]);
    let r = check_report(&o);
    let t = r["tail_probability"].as_f64().unwrap();
    assert!(t > 0.0 && t < 1.0, "{t}");
    assert_eq!(r["replicates"], 500);
    assert_eq!(r["statistic"], "agreement");
    let samples = std::fs::read_to_string(out.join("check_samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 501);
    assert_eq!(std::fs::read(out.join("check.json")).unwrap(), o.stdout);
}

#[test]
fn check_with_one_replicate_has_binary_tail() {
    let dir = tempfile::tempdir().unwrap();
    let input = model_corpus(dir.path(), 20, 0.1, 14);
    for seed in ["0", "1", "2"] {
        let o = ppos(&[
            "check",
            "--input",
            p(&input),
            "--replicates",
            "1",
            "--seed",
            seed,
            "--ppos-method",
            "closed-form",
            "--log",
            p(&dir.path().join("l.jsonl")),
        ]);
        let t = check_report(&o)["tail_probability"].as_f64().unwrap();
        assert!(t == 0.0 || t == 1.0);
    }
}

#[test]
fn check_flags_a_grossly_shifted_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let input = model_corpus(dir.path(), 40, 10.0, 14);
    let o = ppos(&[
        "check",
        "--input",
        p(&input),
        "--statistic",
        "stop-success-rate",
        "--replicates",
        "200",
        "--ppos-method",
        "closed-form",
        "--prior-mean",
        "0",
        "--prior-var",
        "0.01",
        "--log",
        p(&dir.path().join("l.jsonl")),
    ]);
    let t = check_report(&o)["tail_probability"].as_f64().unwrap();
    assert!(t < 0.01, "{t}");
}

#[test]
fn check_unknown_statistic_lists_the_choices() {
    let dir = tempfile::tempdir().unwrap();
    let input = model_corpus(dir.path(), 2, 0.0, 14);
    let o = ppos(&["check", "--input", p(&input), "--statistic", "coverage"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for name in ["agreement", "stop-success-rate", "mean-statistic"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn check_reuses_decisions_from_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let input = model_corpus(dir.path(), 25, 0.3, 14);
    let log = dir.path().join("l.jsonl");
    let analysis = dir.path().join("analysis");
    let o = ppos(&[
        "analyze",
        "--input",
        p(&input),
        "--ppos-method",
        "closed-form",
        "--output-dir",
        p(&analysis),
        "--log",
        p(&log),
    ]);
    assert!(o.status.success());
    let decisions = analysis.join("analysis.csv");
    let common = [
        "check",
        "--input",
        p(&input),
        "--replicates",
        "50",
        "--ppos-method",
        "closed-form",
        "--log",
        p(&log),
    ];
    let supplied = check_report(&ppos(
        &[&common[..], &["--decisions", p(&decisions)]].concat(),
    ));
    let recomputed = check_report(&ppos(&common));
    // closed-form decisions carry no seed, so both paths see the same rows
    assert_eq!(supplied["observed"], recomputed["observed"]);
    assert_eq!(supplied["tail_probability"], recomputed["tail_probability"]);

    let partial = write(
        dir.path(),
        "partial.csv",
        "experiment_id,rule,statistic,verdict\ne0,ppos,0.5,continue\n",
    );
    let o = ppos(&[&common[..], &["--decisions", p(&partial)]].concat());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("e1"));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = zeros(dir.path());
    let blocker = write(dir.path(), "file", "x");
    let o = ppos(&[
        "analyze",
        "--input",
        p(&input),
        "--output-dir",
        p(&blocker.join("sub")),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

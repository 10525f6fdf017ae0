use std::collections::HashMap;
use std::path::{Path, PathBuf};

use ppos_core::check::{reference_check, CheckConfig, ObservedCorpus, StatisticKind};
use ppos_core::rng::{derive_seed, stable_hash, tag};
use ppos_core::{
    evaluate_rule, run_corpus, AlwaysValidConfig, CorpusConfig, CorpusReport, Decision,
    HeuristicConfig, ModelConfig, PposConfig, Prior, RuleKind, RuleSpec, Verdict,
};
use serde::{Deserialize, Serialize};

use crate::args::{AnalyzeArgs, CheckArgs, Format, ModelArgs, RuleArgs, SimulateArgs};
use crate::error::{CliError, CliResult};
use crate::input::{read_bytes, read_records, read_stream_file, Experiment};
use crate::output::{csv_bytes, fmt_num, json_bytes, Outputs};
use crate::record::{DecisionRow, RunRecord};

const DEFAULT_HORIZON: usize = 14;
const DEFAULT_LOG: &str = "ppos-runs.jsonl";

pub(crate) fn model_config(args: &ModelArgs, default_horizon: usize) -> CliResult<ModelConfig> {
    let prior = match (args.prior_mean, args.prior_var) {
        (Some(mean), Some(variance)) => Prior::Proper { mean, variance },
        _ => Prior::FlatLimit,
    };
    let cfg = ModelConfig {
        alpha: args.alpha,
        horizon: args.horizon.unwrap_or(default_horizon),
        prior,
        predictive_mode: args.predictive_mode.into(),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub(crate) fn rule_specs(args: &RuleArgs) -> CliResult<Vec<RuleSpec>> {
    let mut kinds: Vec<RuleKind> = Vec::new();
    let requested = if args.rules.is_empty() {
        RuleKind::ALL.to_vec()
    } else {
        args.rules.clone()
    };
    for k in requested {
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    kinds
        .into_iter()
        .map(|kind| {
            let spec = match kind {
                RuleKind::Heuristic => RuleSpec::Heuristic(HeuristicConfig {
                    lower_fail: args.lower_fail,
                    lower_success: args.lower_success,
                    interval_level: args.interval_level,
                }),
                RuleKind::AlwaysValid => RuleSpec::AlwaysValid(AlwaysValidConfig {
                    p_fail: args.p_fail,
                    p_success: args.p_success,
                    mixture_variance: args.mixture_variance,
                }),
                RuleKind::Ppos => RuleSpec::Ppos {
                    method: args.ppos_method.into(),
                },
            };
            spec.validate()?;
            Ok(spec)
        })
        .collect()
}

pub(crate) fn ppos_config(args: &RuleArgs, seed: u64) -> CliResult<PposConfig> {
    let cfg = PposConfig {
        gamma_success: args.gamma_success,
        gamma_failure: args.gamma_failure,
        mc_draws: args.mc_draws,
        seed,
        ..PposConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn check_day(day: usize, horizon: usize) -> CliResult<()> {
    if day == 0 || day >= horizon {
        return Err(CliError::Config(format!(
            "--day must satisfy 1 <= day < horizon, got {day} with horizon {horizon}"
        )));
    }
    Ok(())
}

fn log_path(log: &Option<PathBuf>, output_dir: Option<&Path>) -> PathBuf {
    match (log, output_dir) {
        (Some(p), _) => p.clone(),
        (None, Some(dir)) => dir.join("runs.jsonl"),
        (None, None) => PathBuf::from(DEFAULT_LOG),
    }
}

fn to_value<T: Serialize>(v: &T) -> CliResult<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| CliError::Runtime(format!("json encoding failed: {e}")))
}

/// Seed for the PPoS Monte-Carlo run of one analyzed experiment.
pub fn analyze_seed(seed: u64, experiment_id: &str) -> u64 {
    derive_seed(seed, &[tag::ANALYZE_PPOS, stable_hash(experiment_id)])
}

fn decision_row(id: &str, d: &Decision) -> DecisionRow {
    DecisionRow {
        experiment_id: id.to_string(),
        rule: d.rule_name.as_str().to_string(),
        statistic: d.statistic,
        verdict: d.verdict.label().to_string(),
    }
}

fn decision_table(rows: &[DecisionRow], format: Format) -> CliResult<Vec<u8>> {
    match format {
        Format::Csv => csv_bytes(
            &["experiment_id", "rule", "statistic", "verdict"],
            rows.iter().map(|r| {
                vec![
                    r.experiment_id.clone(),
                    r.rule.clone(),
                    fmt_num(r.statistic),
                    r.verdict.clone(),
                ]
            }),
        ),
        Format::Json => json_bytes(&rows),
    }
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

#[derive(Serialize)]
struct AnalyzeConfig<'a> {
    input: &'a Path,
    day: usize,
    seed: u64,
    model: ModelConfig,
    rules: &'a [RuleSpec],
    ppos: PposConfig,
}

pub fn analyze(a: &AnalyzeArgs, argv: &[String]) -> CliResult<Vec<u8>> {
    let model = model_config(&a.model, DEFAULT_HORIZON)?;
    check_day(a.day, model.horizon)?;
    let rules = rule_specs(&a.rules)?;
    let ppos = ppos_config(&a.rules, a.seed)?;
    let file = read_stream_file(&a.input)?;

    let mut rows = Vec::new();
    for Experiment { id, stream } in &file.experiments {
        if stream.len() < a.day {
            eprintln!(
                "warning: skipping experiment `{id}`: {} days available, interim day is {}",
                stream.len(),
                a.day
            );
            continue;
        }
        let interim = stream.prefix(a.day);
        let pcfg = PposConfig {
            seed: analyze_seed(a.seed, id),
            ..ppos
        };
        for rule in &rules {
            let d = evaluate_rule(rule, &interim, &model, &pcfg)?;
            rows.push(decision_row(id, &d));
        }
    }

    let body = decision_table(&rows, a.format)?;
    let mut outputs = Outputs::default();
    if let Some(dir) = &a.output_dir {
        outputs.add(
            dir.join(format!("analysis.{}", extension(a.format))),
            body.clone(),
        );
    }
    let config = AnalyzeConfig {
        input: &a.input,
        day: a.day,
        seed: a.seed,
        model,
        rules: &rules,
        ppos,
    };
    let mut record = RunRecord::new("analyze", argv, to_value(&config)?);
    record.inputs.push(file.digest);
    record.decisions = rows;
    record.outputs = outputs.paths();
    outputs.commit()?;
    record.append_to(&log_path(&a.log, a.output_dir.as_deref()))?;
    Ok(body)
}

fn load_corpus(path: &Path) -> CliResult<CorpusConfig> {
    let (bytes, _) = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| {
        CliError::parse(
            &path.display().to_string(),
            e.line() as u64,
            format!("invalid corpus configuration: {e}"),
        )
    })
}

#[derive(Serialize)]
struct SimulateConfig<'a> {
    corpus: &'a CorpusConfig,
    model: ModelConfig,
    rules: &'a [RuleSpec],
    ppos: PposConfig,
    bins: usize,
}

#[derive(Serialize)]
struct CellOut {
    interim: &'static str,
    #[serde(rename = "final")]
    final_outcome: &'static str,
    count: u64,
}

#[derive(Serialize)]
struct RuleSummary<'a> {
    rule: RuleKind,
    spec: RuleSpec,
    characteristics: &'a ppos_core::corpus::OperatingCharacteristics,
    confusion: Vec<CellOut>,
}

fn cells(report: &ppos_core::corpus::RuleReport) -> Vec<CellOut> {
    report
        .matrix
        .cells()
        .map(|(v, o, count)| CellOut {
            interim: v.label(),
            final_outcome: o.label(),
            count,
        })
        .collect()
}

fn opt_num(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn simulation_outputs(
    report: &CorpusReport,
    dir: &Path,
    format: Format,
    bins: usize,
    config: &serde_json::Value,
) -> CliResult<Outputs> {
    let mut out = Outputs::default();
    match format {
        Format::Csv => {
            for r in &report.rules {
                let kind = r.rule.kind();
                let body = csv_bytes(
                    &["rule", "interim", "final", "count"],
                    r.matrix.cells().map(|(v, o, n)| {
                        vec![
                            kind.as_str().to_string(),
                            v.label().to_string(),
                            o.label().to_string(),
                            n.to_string(),
                        ]
                    }),
                )?;
                out.add(dir.join(format!("confusion_{kind}.csv")), body);
            }
        }
        Format::Json => {
            let all: Vec<_> = report
                .rules
                .iter()
                .map(|r| serde_json::json!({ "rule": r.rule.kind(), "cells": cells(r) }))
                .collect();
            out.add(dir.join("confusion.json"), json_bytes(&all)?);
        }
    }

    let summaries: Vec<_> = report
        .rules
        .iter()
        .map(|r| RuleSummary {
            rule: r.rule.kind(),
            spec: r.rule,
            characteristics: &r.characteristics,
            confusion: cells(r),
        })
        .collect();
    out.add(
        dir.join("summary.json"),
        json_bytes(&serde_json::json!({ "config": config, "rules": summaries }))?,
    );

    let mut plot = Vec::new();
    for (j, r) in report.rules.iter().enumerate() {
        for b in report.statistic_histogram(j, bins) {
            plot.push(vec![
                r.rule.kind().as_str().to_string(),
                fmt_num(b.lower),
                fmt_num(b.upper),
                b.count.to_string(),
            ]);
        }
    }
    out.add(
        dir.join("plot_data.csv"),
        csv_bytes(&["rule", "bin_lower", "bin_upper", "count"], plot)?,
    );

    let mut per_exp = Vec::new();
    for e in &report.experiments {
        for d in &e.decisions {
            per_exp.push(vec![
                e.scenario.scenario_id.to_string(),
                e.component.to_string(),
                fmt_num(e.scenario.true_theta),
                e.final_outcome.label().to_string(),
                d.rule_name.as_str().to_string(),
                fmt_num(d.statistic),
                d.verdict.label().to_string(),
            ]);
        }
    }
    out.add(
        dir.join("experiments.csv"),
        csv_bytes(
            &[
                "experiment_id",
                "component",
                "true_theta",
                "final",
                "rule",
                "statistic",
                "verdict",
            ],
            per_exp,
        )?,
    );
    Ok(out)
}

pub fn simulate(a: &SimulateArgs, argv: &[String]) -> CliResult<Vec<u8>> {
    let mut corpus = match &a.config {
        Some(p) => load_corpus(p)?,
        None => CorpusConfig::default(),
    };
    if let Some(n) = a.n_experiments {
        corpus.n_experiments = n;
    }
    if let Some(day) = a.day {
        corpus.interim_day = day;
    }
    if let Some(seed) = a.seed {
        corpus.seed = seed;
    }
    if let Some(h) = a.model.horizon {
        corpus.horizon = h;
    }
    corpus.validate()?;
    let model = model_config(&a.model, corpus.horizon)?;
    let rules = rule_specs(&a.rules)?;
    let ppos = ppos_config(&a.rules, corpus.seed)?;
    if a.bins == 0 {
        return Err(CliError::Config("--bins must be at least 1".into()));
    }

    let report = run_corpus(&corpus, &rules, &model, &ppos)?;
    let config = to_value(&SimulateConfig {
        corpus: &corpus,
        model,
        rules: &rules,
        ppos,
        bins: a.bins,
    })?;
    let outputs = simulation_outputs(&report, &a.output_dir, a.format, a.bins, &config)?;

    let stdout = csv_bytes(
        &[
            "rule",
            "stop_success",
            "stop_failure",
            "continue",
            "false_positive_fraction",
            "type_i_rate",
            "power_proxy",
            "curtailment_rate",
        ],
        report.rules.iter().map(|r| {
            let c = &r.characteristics;
            vec![
                r.rule.kind().as_str().to_string(),
                c.stop_success.to_string(),
                r.matrix.verdict_total(Verdict::StopFailure).to_string(),
                c.continued.to_string(),
                opt_num(c.false_positive_fraction),
                opt_num(c.type_i_rate),
                opt_num(c.power_proxy),
                fmt_num(c.curtailment_rate),
            ]
        }),
    )?;

    let mut record = RunRecord::new("simulate", argv, config);
    if let Some(p) = &a.config {
        record.inputs.push(read_bytes(p)?.1);
    }
    record.decisions = report
        .experiments
        .iter()
        .flat_map(|e| {
            let id = e.scenario.scenario_id.to_string();
            e.decisions.iter().map(move |d| decision_row(&id, d))
        })
        .collect();
    record.outputs = outputs.paths();
    outputs.commit()?;
    record.append_to(&log_path(&a.log, Some(&a.output_dir)))?;
    Ok(stdout)
}

#[derive(Deserialize)]
struct DecisionIn {
    experiment_id: String,
    rule: String,
    statistic: f64,
    verdict: String,
}

/// Reads an analyze report and keeps the rows for `rule`.
fn read_decisions(path: &Path, rule: RuleKind) -> CliResult<HashMap<String, Decision>> {
    let (bytes, _) = read_bytes(path)?;
    let rows: Vec<(u64, DecisionIn)> = read_records(
        path,
        &bytes,
        &["experiment_id", "rule", "statistic", "verdict"],
    )?;
    let name = path.display().to_string();
    let mut out = HashMap::new();
    for (row, r) in rows {
        let kind: RuleKind = r
            .rule
            .parse()
            .map_err(|e: ppos_core::Error| CliError::parse(&name, row, e.to_string()))?;
        if kind != rule {
            continue;
        }
        let verdict: Verdict = r
            .verdict
            .parse()
            .map_err(|e: ppos_core::Error| CliError::parse(&name, row, e.to_string()))?;
        let d = Decision {
            verdict,
            rule_name: kind,
            statistic: r.statistic,
        };
        if out.insert(r.experiment_id.clone(), d).is_some() {
            return Err(CliError::parse(
                &name,
                row,
                format!(
                    "duplicate `{kind}` decision for experiment `{}`",
                    r.experiment_id
                ),
            ));
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct CheckReport {
    statistic: StatisticKind,
    n_experiments: usize,
    observed: f64,
    reference_center: f64,
    observed_discrepancy: f64,
    replicates: usize,
    tail_probability: f64,
}

#[derive(Serialize)]
struct CheckRunConfig<'a> {
    input: &'a Path,
    decisions: Option<&'a Path>,
    model: ModelConfig,
    check: CheckConfig,
}

pub fn check(a: &CheckArgs, argv: &[String]) -> CliResult<Vec<u8>> {
    let model = model_config(&a.model, DEFAULT_HORIZON)?;
    check_day(a.day, model.horizon)?;
    if a.rules.rules.len() > 1 {
        return Err(CliError::Config("check takes at most one --rule".into()));
    }
    let rule_args = RuleArgs {
        rules: if a.rules.rules.is_empty() {
            vec![RuleKind::Ppos]
        } else {
            a.rules.rules.clone()
        },
        ..a.rules.clone()
    };
    let rule = rule_specs(&rule_args)?[0];
    let ppos = ppos_config(&a.rules, a.seed)?;
    if a.replicates == 0 {
        return Err(CliError::Config("--replicates must be at least 1".into()));
    }

    let file = read_stream_file(&a.input)?;
    let mut kept = Vec::new();
    for exp in &file.experiments {
        let n = exp.stream.len();
        if n < model.horizon {
            eprintln!(
                "warning: skipping experiment `{}`: {n} days available, horizon is {}",
                exp.id, model.horizon
            );
        } else if n > model.horizon {
            return Err(CliError::Config(format!(
                "experiment `{}` has {n} days, more than the horizon {}",
                exp.id, model.horizon
            )));
        } else {
            kept.push(exp);
        }
    }
    if kept.is_empty() {
        return Err(CliError::Config(
            "no experiment covers the full horizon".into(),
        ));
    }

    let mut inputs = vec![file.digest.clone()];
    let decisions = match &a.decisions {
        Some(path) => {
            let table = read_decisions(path, rule.kind())?;
            inputs.push(read_bytes(path)?.1);
            let ds = kept
                .iter()
                .map(|e| {
                    table.get(&e.id).copied().ok_or_else(|| {
                        CliError::Config(format!(
                            "{} has no `{}` decision for experiment `{}`",
                            path.display(),
                            rule.kind(),
                            e.id
                        ))
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            Some(ds)
        }
        None => None,
    };

    let observed = ObservedCorpus {
        streams: kept.iter().map(|e| e.stream.clone()).collect(),
        decisions,
    };
    let cfg = CheckConfig {
        statistic: a.statistic,
        replicates: a.replicates,
        seed: a.seed,
        interim_day: a.day,
        rule,
        ppos,
        exec: Default::default(),
    };
    let dist = reference_check(&observed, &model, &cfg)?;

    let report = CheckReport {
        statistic: dist.statistic,
        n_experiments: kept.len(),
        observed: dist.observed,
        reference_center: dist.reference_center,
        observed_discrepancy: dist.observed_discrepancy,
        replicates: a.replicates,
        tail_probability: dist.tail_probability,
    };
    let body = json_bytes(&report)?;
    let mut outputs = Outputs::default();
    if let Some(dir) = &a.output_dir {
        outputs.add(dir.join("check.json"), body.clone());
        let samples = dist
            .replicated
            .iter()
            .zip(&dist.samples)
            .enumerate()
            .map(|(r, (f, d))| vec![r.to_string(), fmt_num(*f), fmt_num(*d)]);
        outputs.add(
            dir.join("check_samples.csv"),
            csv_bytes(&["replicate", "statistic", "discrepancy"], samples)?,
        );
    }

    let config = CheckRunConfig {
        input: &a.input,
        decisions: a.decisions.as_deref(),
        model,
        check: cfg,
    };
    let mut record = RunRecord::new("check", argv, to_value(&config)?);
    record.inputs = inputs;
    record.decisions = kept
        .iter()
        .zip(&dist.observed_decisions)
        .map(|(e, d)| decision_row(&e.id, d))
        .collect();
    record.outputs = outputs.paths();
    outputs.commit()?;
    record.append_to(&log_path(&a.log, a.output_dir.as_deref()))?;
    Ok(body)
}

//! Posterior predictive checking of a corpus of experiments.
//!
//! For each observed experiment the full stream is condensed into its
//! posterior under the model. A replicated corpus draws, per experiment, an
//! effect from that posterior and then a fresh full-horizon stream. A
//! corpus-level statistic `f` (built from interim verdicts and final
//! outcomes) is computed on the observed corpus and on each replicate.
//!
//! The reference distribution is the set of replicated discrepancies
//! `g(f_rep, f̄_rep)` around the replicate mean `f̄_rep`; the observed
//! discrepancy is `g(f_obs, f̄_rep)`, and the tail probability is the share
//! of replicated discrepancies at least as large (ties count as extreme).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{final_outcome, FinalOutcome};
use crate::error::{invalid, Error, Result};
use crate::exec::{map_indexed, ExecPolicy};
use crate::model::{posterior, EffectStream, GaussianDist, ModelConfig};
use crate::numeric::exact_sum;
use crate::ppos::PposConfig;
use crate::rng::{derive_seed, substream, tag};
use crate::rules::{evaluate_rule, Decision, RuleSpec, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StatisticKind {
    /// Share of interim stops whose direction matches the completed experiment.
    #[serde(rename = "agreement")]
    AgreementRate,
    #[serde(rename = "stop-success-rate")]
    StopSuccessRate,
    #[serde(rename = "mean-statistic")]
    MeanStatistic,
}

impl StatisticKind {
    pub const ALL: [StatisticKind; 3] = [
        StatisticKind::AgreementRate,
        StatisticKind::StopSuccessRate,
        StatisticKind::MeanStatistic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StatisticKind::AgreementRate => "agreement",
            StatisticKind::StopSuccessRate => "stop-success-rate",
            StatisticKind::MeanStatistic => "mean-statistic",
        }
    }

    /// Evaluates the statistic on paired interim decisions and final outcomes.
    pub fn evaluate(self, rows: &[(Decision, FinalOutcome)]) -> CheckStatistic {
        let value = match self {
            StatisticKind::AgreementRate => {
                let (mut stopped, mut agree) = (0u64, 0u64);
                for (d, o) in rows {
                    match d.verdict {
                        Verdict::StopSuccess => {
                            stopped += 1;
                            agree += u64::from(*o == FinalOutcome::SignificantPositive);
                        }
                        Verdict::StopFailure => {
                            stopped += 1;
                            agree += u64::from(*o != FinalOutcome::SignificantPositive);
                        }
                        Verdict::ContinueExperiment => {}
                    }
                }
                // nothing stopped: vacuously in agreement
                if stopped == 0 {
                    1.0
                } else {
                    agree as f64 / stopped as f64
                }
            }
            StatisticKind::StopSuccessRate => {
                let n = rows
                    .iter()
                    .filter(|(d, _)| d.verdict == Verdict::StopSuccess)
                    .count();
                n as f64 / rows.len().max(1) as f64
            }
            StatisticKind::MeanStatistic => {
                let stats: Vec<f64> = rows.iter().map(|(d, _)| d.statistic).collect();
                exact_sum(&stats) / rows.len().max(1) as f64
            }
        };
        CheckStatistic { name: self, value }
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StatisticKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = StatisticKind::ALL.iter().map(|k| k.as_str()).collect();
                invalid(format!(
                    "unknown statistic `{s}` (available: {})",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckStatistic {
    pub name: StatisticKind,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DiscrepancyKind {
    #[default]
    Absolute,
    Signed,
}

pub fn discrepancy_with(
    kind: DiscrepancyKind,
    f_rep: &CheckStatistic,
    f_obs: &CheckStatistic,
) -> Result<f64> {
    if f_rep.name != f_obs.name {
        return Err(Error::InvalidComparison {
            observed: f_obs.name.to_string(),
            replicated: f_rep.name.to_string(),
        });
    }
    let d = f_rep.value - f_obs.value;
    Ok(match kind {
        DiscrepancyKind::Absolute => d.abs(),
        DiscrepancyKind::Signed => d,
    })
}

/// `|f_rep − f_obs|`.
pub fn discrepancy(f_rep: &CheckStatistic, f_obs: &CheckStatistic) -> Result<f64> {
    discrepancy_with(DiscrepancyKind::Absolute, f_rep, f_obs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDistribution {
    pub statistic: StatisticKind,
    pub observed: f64,
    /// Mean of the replicated statistic values; the discrepancy centre.
    pub reference_center: f64,
    pub replicated: Vec<f64>,
    pub samples: Vec<f64>,
    pub observed_discrepancy: f64,
    pub tail_probability: f64,
    /// Interim decisions on the observed corpus, supplied or recomputed.
    pub observed_decisions: Vec<Decision>,
}

/// Share of `samples` at least as large as `observed`.
pub fn tail_probability(samples: &[f64], observed: f64) -> f64 {
    let extreme = samples.iter().filter(|&&s| s >= observed).count();
    extreme as f64 / samples.len() as f64
}

/// One fitted experiment: effect posterior plus its sampling scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedExperiment {
    pub posterior: GaussianDist,
    pub sigma: f64,
}

pub fn fit_corpus(streams: &[EffectStream], model: &ModelConfig) -> Result<Vec<FittedExperiment>> {
    streams
        .iter()
        .map(|s| {
            Ok(FittedExperiment {
                posterior: posterior(s, model)?,
                sigma: s.sigma(),
            })
        })
        .collect()
}

fn replicate_one(
    fitted: &[FittedExperiment],
    horizon: usize,
    seed: u64,
    replicate: u64,
) -> Result<Vec<EffectStream>> {
    fitted
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut rng = substream(seed, &[tag::REPLICATE, replicate, i as u64]);
            let z: f64 = rng.sample(StandardNormal);
            let theta = f.posterior.mean + f.posterior.sd() * z;
            let estimates = (0..horizon)
                .map(|_| {
                    let e: f64 = rng.sample(StandardNormal);
                    theta + f.sigma * e
                })
                .collect();
            EffectStream::new(estimates, f.sigma)
        })
        .collect()
}

/// `replicates` posterior-predictive copies of a fitted corpus. Experiment
/// `i` of replicate `r` draws from substream `(seed, REPLICATE, r, i)`.
pub fn replicate_corpus(
    model: &ModelConfig,
    fitted: &[FittedExperiment],
    replicates: usize,
    seed: u64,
) -> Result<Vec<Vec<EffectStream>>> {
    model.validate()?;
    if replicates == 0 {
        return Err(invalid("replicate count must be at least 1"));
    }
    (0..replicates)
        .map(|r| replicate_one(fitted, model.horizon, seed, r as u64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub statistic: StatisticKind,
    pub replicates: usize,
    pub seed: u64,
    pub interim_day: usize,
    pub rule: RuleSpec,
    pub ppos: PposConfig,
    #[serde(skip)]
    pub exec: ExecPolicy,
}

/// Observed full-horizon streams, optionally with interim decisions that
/// were already taken on them.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedCorpus {
    pub streams: Vec<EffectStream>,
    pub decisions: Option<Vec<Decision>>,
}

fn score_corpus(
    streams: &[EffectStream],
    model: &ModelConfig,
    cfg: &CheckConfig,
    ppos_seed: impl Fn(u64) -> u64,
) -> Result<Vec<(Decision, FinalOutcome)>> {
    streams
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let pcfg = PposConfig {
                seed: ppos_seed(i as u64),
                exec: ExecPolicy::Sequential,
                ..cfg.ppos
            };
            let decision = evaluate_rule(&cfg.rule, &s.prefix(cfg.interim_day), model, &pcfg)?;
            Ok((decision, final_outcome(s, model)?))
        })
        .collect()
}

pub fn reference_check(
    observed: &ObservedCorpus,
    model: &ModelConfig,
    cfg: &CheckConfig,
) -> Result<ReferenceDistribution> {
    model.validate()?;
    cfg.rule.validate()?;
    cfg.ppos.validate()?;
    if cfg.replicates == 0 {
        return Err(invalid("replicate count must be at least 1"));
    }
    if observed.streams.is_empty() {
        return Err(invalid("observed corpus is empty"));
    }
    if cfg.interim_day == 0 || cfg.interim_day >= model.horizon {
        return Err(invalid(format!(
            "interim day must satisfy 1 <= day < horizon, got {} with horizon {}",
            cfg.interim_day, model.horizon
        )));
    }

    let rows = match &observed.decisions {
        Some(decisions) => {
            if decisions.len() != observed.streams.len() {
                return Err(invalid(format!(
                    "{} decisions supplied for {} experiments",
                    decisions.len(),
                    observed.streams.len()
                )));
            }
            decisions
                .iter()
                .zip(&observed.streams)
                .map(|(d, s)| Ok((*d, final_outcome(s, model)?)))
                .collect::<Result<Vec<_>>>()?
        }
        None => score_corpus(&observed.streams, model, cfg, |i| {
            derive_seed(cfg.seed, &[tag::OBSERVED_PPOS, i])
        })?,
    };
    let f_obs = cfg.statistic.evaluate(&rows);

    let fitted = fit_corpus(&observed.streams, model)?;
    let replicated = map_indexed(cfg.exec, cfg.replicates, |r| {
        let streams = replicate_one(&fitted, model.horizon, cfg.seed, r as u64)?;
        let rows = score_corpus(&streams, model, cfg, |i| {
            derive_seed(cfg.seed, &[tag::REPLICATE_PPOS, r as u64, i])
        })?;
        Ok(cfg.statistic.evaluate(&rows))
    })
    .into_iter()
    .collect::<Result<Vec<CheckStatistic>>>()?;

    let values: Vec<f64> = replicated.iter().map(|s| s.value).collect();
    let center = CheckStatistic {
        name: cfg.statistic,
        value: exact_sum(&values) / values.len() as f64,
    };
    let samples = replicated
        .iter()
        .map(|s| discrepancy(s, &center))
        .collect::<Result<Vec<_>>>()?;
    let observed_discrepancy = discrepancy(&f_obs, &center)?;

    Ok(ReferenceDistribution {
        statistic: cfg.statistic,
        observed: f_obs.value,
        reference_center: center.value,
        tail_probability: tail_probability(&samples, observed_discrepancy),
        replicated: values,
        samples,
        observed_discrepancy,
        observed_decisions: rows.iter().map(|(d, _)| *d).collect(),
    })
}

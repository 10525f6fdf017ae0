//! Synthetic experiment corpora and interim-versus-final scoring.
//!
//! Each experiment draws its true effect from a weighted mixture, simulates
//! a full-horizon stream, evaluates every rule on the interim prefix and
//! compares the verdict with the outcome of the completed experiment. All
//! rules see the same streams. Experiment `i` owns the substreams
//! `(seed, EFFECT, i)`, `(seed, STREAM, i)` and `(seed, CORPUS_PPOS, i)`,
//! so changing one mixture parameter leaves every other draw untouched.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::{map_indexed, ExecPolicy};
use crate::model::{check_full_horizon, posterior, EffectStream, ModelConfig};
use crate::ppos::PposConfig;
use crate::rng::{derive_seed, substream, tag};
use crate::rules::{evaluate_rule, Decision, RuleKind, RuleSpec, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentScenario {
    pub scenario_id: u64,
    pub true_theta: f64,
    pub sigma: f64,
    pub horizon: usize,
    pub interim_day: usize,
}

impl ExperimentScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidScale(self.sigma));
        }
        if !self.true_theta.is_finite() {
            return Err(invalid("true effect must be finite"));
        }
        validate_days(self.interim_day, self.horizon)
    }
}

fn validate_days(interim_day: usize, horizon: usize) -> Result<()> {
    if interim_day == 0 || interim_day >= horizon {
        return Err(invalid(format!(
            "interim day must satisfy 1 <= day < horizon, got day {interim_day} with horizon {horizon}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EffectComponent {
    PointNull { weight: f64 },
    Gaussian { mean: f64, sd: f64, weight: f64 },
}

impl EffectComponent {
    pub fn weight(&self) -> f64 {
        match *self {
            EffectComponent::PointNull { weight } | EffectComponent::Gaussian { weight, .. } => {
                weight
            }
        }
    }

    fn effect(&self, z: f64) -> f64 {
        match *self {
            EffectComponent::PointNull { .. } => 0.0,
            EffectComponent::Gaussian { mean, sd, .. } => mean + sd * z,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub n_experiments: usize,
    pub effect_mixture: Vec<EffectComponent>,
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_interim")]
    pub interim_day: usize,
    #[serde(skip)]
    pub exec: ExecPolicy,
}

fn default_horizon() -> usize {
    14
}

fn default_interim() -> usize {
    7
}

impl Default for CorpusConfig {
    /// 345 experiments: 60% exact nulls, 25% positive and 15% negative
    /// effects centred one standard error of the final mean from zero.
    fn default() -> Self {
        let sigma = 1.0;
        let horizon = default_horizon();
        let se = sigma / (horizon as f64).sqrt();
        Self {
            n_experiments: 345,
            effect_mixture: vec![
                EffectComponent::PointNull { weight: 0.60 },
                EffectComponent::Gaussian {
                    mean: se,
                    sd: 0.5 * se,
                    weight: 0.25,
                },
                EffectComponent::Gaussian {
                    mean: -se,
                    sd: 0.5 * se,
                    weight: 0.15,
                },
            ],
            sigma,
            seed: 0,
            horizon,
            interim_day: default_interim(),
            exec: ExecPolicy::default(),
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_experiments == 0 {
            return Err(invalid("corpus must contain at least one experiment"));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidScale(self.sigma));
        }
        validate_days(self.interim_day, self.horizon)?;
        if self.effect_mixture.is_empty() {
            return Err(invalid("effect mixture has no components"));
        }
        let mut total = 0.0;
        for (i, c) in self.effect_mixture.iter().enumerate() {
            let w = c.weight();
            if !(w.is_finite() && w >= 0.0) {
                return Err(invalid(format!(
                    "mixture component {i} has invalid weight {w}"
                )));
            }
            if let EffectComponent::Gaussian { mean, sd, .. } = *c {
                if !mean.is_finite() || !(sd.is_finite() && sd >= 0.0) {
                    return Err(invalid(format!(
                        "mixture component {i} needs a finite mean and nonnegative sd"
                    )));
                }
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    fn pick_component(&self, u: f64) -> usize {
        let mut cumulative = 0.0;
        let mut last_live = 0;
        for (i, c) in self.effect_mixture.iter().enumerate() {
            if c.weight() > 0.0 {
                last_live = i;
                cumulative += c.weight();
                if u < cumulative {
                    return i;
                }
            }
        }
        last_live
    }

    /// Mixture component and true effect for experiment `id`.
    pub fn draw_effect(&self, id: u64) -> (usize, f64) {
        let mut rng = substream(self.seed, &[tag::EFFECT, id]);
        let u: f64 = rng.random();
        let z: f64 = rng.sample(StandardNormal);
        let component = self.pick_component(u);
        (component, self.effect_mixture[component].effect(z))
    }

    pub fn scenario(&self, id: u64) -> (usize, ExperimentScenario) {
        let (component, true_theta) = self.draw_effect(id);
        (
            component,
            ExperimentScenario {
                scenario_id: id,
                true_theta,
                sigma: self.sigma,
                horizon: self.horizon,
                interim_day: self.interim_day,
            },
        )
    }
}

/// `horizon` i.i.d. draws from `N(true_theta, σ²)` on substream
/// `(seed, STREAM, scenario_id)`.
pub fn simulate_stream(scenario: &ExperimentScenario, seed: u64) -> Result<EffectStream> {
    scenario.validate()?;
    let mut rng = substream(seed, &[tag::STREAM, scenario.scenario_id]);
    let estimates = (0..scenario.horizon)
        .map(|_| {
            let e: f64 = rng.sample(StandardNormal);
            scenario.true_theta + scenario.sigma * e
        })
        .collect();
    EffectStream::new(estimates, scenario.sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalOutcome {
    SignificantPositive,
    Neutral,
    SignificantNegative,
}

impl FinalOutcome {
    pub const ALL: [FinalOutcome; 3] = [
        FinalOutcome::SignificantPositive,
        FinalOutcome::Neutral,
        FinalOutcome::SignificantNegative,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FinalOutcome::SignificantPositive => "significant_positive",
            FinalOutcome::Neutral => "neutral",
            FinalOutcome::SignificantNegative => "significant_negative",
        }
    }

    fn index(self) -> usize {
        match self {
            FinalOutcome::SignificantPositive => 0,
            FinalOutcome::Neutral => 1,
            FinalOutcome::SignificantNegative => 2,
        }
    }
}

pub fn final_outcome(stream: &EffectStream, config: &ModelConfig) -> Result<FinalOutcome> {
    check_full_horizon(stream, config)?;
    let z = posterior(stream, config)?.z_score();
    let critical = config.critical_value();
    Ok(if z > critical {
        FinalOutcome::SignificantPositive
    } else if -z > critical {
        FinalOutcome::SignificantNegative
    } else {
        FinalOutcome::Neutral
    })
}

/// Interim verdicts (rows) against final outcomes (columns).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub rule: RuleKind,
    counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn new(rule: RuleKind) -> Self {
        Self {
            rule,
            counts: [[0; 3]; 3],
        }
    }

    pub fn record(&mut self, verdict: Verdict, outcome: FinalOutcome) {
        self.counts[verdict.index()][outcome.index()] += 1;
    }

    pub fn count(&self, verdict: Verdict, outcome: FinalOutcome) -> u64 {
        self.counts[verdict.index()][outcome.index()]
    }

    pub fn verdict_total(&self, verdict: Verdict) -> u64 {
        self.counts[verdict.index()].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// All nine cells in fixed order: verdicts (success, failure, continue)
    /// by outcomes (positive, neutral, negative).
    pub fn cells(&self) -> impl Iterator<Item = (Verdict, FinalOutcome, u64)> + '_ {
        Verdict::ALL.into_iter().flat_map(move |v| {
            FinalOutcome::ALL
                .into_iter()
                .map(move |o| (v, o, self.count(v, o)))
        })
    }

    /// Share of success stops whose completed experiment was not a
    /// significant positive; `None` when the rule never stopped for success.
    pub fn false_positive_fraction(&self) -> Option<f64> {
        let stops = self.verdict_total(Verdict::StopSuccess);
        (stops > 0).then(|| {
            let wrong = stops - self.count(Verdict::StopSuccess, FinalOutcome::SignificantPositive);
            wrong as f64 / stops as f64
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingCharacteristics {
    pub n_experiments: u64,
    pub n_null: u64,
    pub n_positive: u64,
    /// Success stops among exact-null experiments.
    pub type_i_rate: Option<f64>,
    /// Success stops among experiments with a positive true effect.
    pub power_proxy: Option<f64>,
    pub curtailed: u64,
    pub continued: u64,
    pub curtailment_rate: f64,
    pub stop_success: u64,
    pub false_positive_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub scenario: ExperimentScenario,
    /// Index into the effect mixture.
    pub component: usize,
    pub is_point_null: bool,
    pub final_outcome: FinalOutcome,
    pub decisions: Vec<Decision>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleReport {
    pub rule: RuleSpec,
    pub matrix: ConfusionMatrix,
    pub characteristics: OperatingCharacteristics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub n_experiments: usize,
    pub seed: u64,
    pub rules: Vec<RuleReport>,
    pub experiments: Vec<ExperimentRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: u64,
}

impl CorpusReport {
    pub fn rule(&self, kind: RuleKind) -> Option<&RuleReport> {
        self.rules.iter().find(|r| r.rule.kind() == kind)
    }

    /// Histogram of the interim statistic of rule number `rule_index`.
    /// Probability-valued statistics use `[0, 1]`; the heuristic's interval
    /// endpoint uses the observed range.
    pub fn statistic_histogram(&self, rule_index: usize, bins: usize) -> Vec<HistogramBin> {
        let bins = bins.max(1);
        let values: Vec<f64> = self
            .experiments
            .iter()
            .map(|e| e.decisions[rule_index].statistic)
            .collect();
        let (lo, hi) = match self.rules[rule_index].rule.kind() {
            RuleKind::Heuristic => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                    (a.min(v), b.max(v))
                }),
            _ => (0.0, 1.0),
        };
        let width = if hi > lo {
            (hi - lo) / bins as f64
        } else {
            1.0
        };
        let mut counts = vec![0u64; bins];
        for v in values {
            let idx = (((v - lo) / width).floor().max(0.0) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(i, count)| HistogramBin {
                lower: lo + i as f64 * width,
                upper: lo + (i + 1) as f64 * width,
                count,
            })
            .collect()
    }
}

/// Seed for the PPoS Monte-Carlo run of experiment `id`.
pub fn experiment_ppos_seed(corpus_seed: u64, id: u64) -> u64 {
    derive_seed(corpus_seed, &[tag::CORPUS_PPOS, id])
}

pub fn run_corpus(
    corpus: &CorpusConfig,
    rules: &[RuleSpec],
    model: &ModelConfig,
    pcfg: &PposConfig,
) -> Result<CorpusReport> {
    corpus.validate()?;
    model.validate()?;
    pcfg.validate()?;
    if rules.is_empty() {
        return Err(invalid("at least one rule is required"));
    }
    for r in rules {
        r.validate()?;
    }
    if model.horizon != corpus.horizon {
        return Err(Error::HorizonMismatch {
            expected: corpus.horizon,
            actual: model.horizon,
        });
    }

    let experiments = map_indexed(corpus.exec, corpus.n_experiments, |i| {
        let id = i as u64;
        let (component, scenario) = corpus.scenario(id);
        let stream = simulate_stream(&scenario, corpus.seed)?;
        let interim = stream.prefix(corpus.interim_day);
        let exp_pcfg = PposConfig {
            seed: experiment_ppos_seed(corpus.seed, id),
            ..*pcfg
        };
        let decisions = rules
            .iter()
            .map(|r| evaluate_rule(r, &interim, model, &exp_pcfg))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExperimentRecord {
            scenario,
            component,
            is_point_null: matches!(
                corpus.effect_mixture[component],
                EffectComponent::PointNull { .. }
            ),
            final_outcome: final_outcome(&stream, model)?,
            decisions,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let reports = rules
        .iter()
        .enumerate()
        .map(|(j, rule)| summarize(rule, j, &experiments))
        .collect();

    Ok(CorpusReport {
        n_experiments: corpus.n_experiments,
        seed: corpus.seed,
        rules: reports,
        experiments,
    })
}

fn rate(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn summarize(rule: &RuleSpec, j: usize, experiments: &[ExperimentRecord]) -> RuleReport {
    let mut matrix = ConfusionMatrix::new(rule.kind());
    let (mut n_null, mut null_success, mut n_pos, mut pos_success) = (0, 0, 0, 0);
    for e in experiments {
        let verdict = e.decisions[j].verdict;
        matrix.record(verdict, e.final_outcome);
        let success = u64::from(verdict == Verdict::StopSuccess);
        if e.is_point_null {
            n_null += 1;
            null_success += success;
        } else if e.scenario.true_theta > 0.0 {
            n_pos += 1;
            pos_success += success;
        }
    }
    let n = matrix.total();
    let continued = matrix.verdict_total(Verdict::ContinueExperiment);
    let curtailed = n - continued;
    let characteristics = OperatingCharacteristics {
        n_experiments: n,
        n_null,
        n_positive: n_pos,
        type_i_rate: rate(null_success, n_null),
        power_proxy: rate(pos_success, n_pos),
        curtailed,
        continued,
        curtailment_rate: curtailed as f64 / n as f64,
        stop_success: matrix.verdict_total(Verdict::StopSuccess),
        false_positive_fraction: matrix.false_positive_fraction(),
    };
    RuleReport {
        rule: *rule,
        matrix,
        characteristics,
    }
}

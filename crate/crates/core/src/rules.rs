//! Interim decision rules behind one interface.
//!
//! * `heuristic`: lower end of a central credible interval against two
//!   fixed effect thresholds.
//! * `always-valid`: normal-mixture mSPRT p-value with a running minimum.
//! * `ppos`: predictive probability of success against two probability
//!   thresholds.
//!
//! Every rule reports its driving statistic next to the verdict.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{posterior, EffectStream, GaussianDist, ModelConfig};
use crate::numeric::{std_normal_quantile, ExactSum};
use crate::ppos::{ppos, ppos_decision, PposConfig, PposMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ContinueExperiment,
    StopSuccess,
    StopFailure,
}

impl Verdict {
    pub const ALL: [Verdict; 3] = [
        Verdict::StopSuccess,
        Verdict::StopFailure,
        Verdict::ContinueExperiment,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Verdict::StopSuccess => "stop_success",
            Verdict::StopFailure => "stop_failure",
            Verdict::ContinueExperiment => "continue",
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Verdict::StopSuccess => 0,
            Verdict::StopFailure => 1,
            Verdict::ContinueExperiment => 2,
        }
    }

    pub fn is_stop(self) -> bool {
        self != Verdict::ContinueExperiment
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Verdict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Verdict::ALL
            .into_iter()
            .find(|v| v.label() == s)
            .ok_or_else(|| {
                invalid(format!(
                    "unknown verdict `{s}` (expected one of: stop_success, stop_failure, continue)"
                ))
            })
    }
}

/// Stable rule identifiers used on the command line and in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleKind {
    #[serde(rename = "heuristic")]
    Heuristic,
    #[serde(rename = "always-valid")]
    AlwaysValid,
    #[serde(rename = "ppos")]
    Ppos,
}

impl RuleKind {
    pub const ALL: [RuleKind; 3] = [RuleKind::Heuristic, RuleKind::AlwaysValid, RuleKind::Ppos];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleKind::Heuristic => "heuristic",
            RuleKind::AlwaysValid => "always-valid",
            RuleKind::Ppos => "ppos",
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RuleKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                invalid(format!(
                    "unknown rule `{s}` (expected one of: heuristic, always-valid, ppos)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Verdict,
    pub rule_name: RuleKind,
    pub statistic: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    /// Fail when the interval's lower end is below this.
    pub lower_fail: f64,
    /// Succeed when the interval's lower end is above this.
    pub lower_success: f64,
    pub interval_level: f64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self {
            lower_fail: 0.0,
            lower_success: 0.0,
            interval_level: 0.90,
        }
    }
}

impl HeuristicConfig {
    pub fn validate(&self) -> Result<()> {
        let (l, m) = (self.lower_fail, self.lower_success);
        if !(l.is_finite() && m.is_finite()) || l > m {
            return Err(invalid(format!(
                "heuristic thresholds need finite l <= m, got l={l}, m={m}"
            )));
        }
        check_level(self.interval_level)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlwaysValidConfig {
    pub p_fail: f64,
    pub p_success: f64,
    /// Variance of the normal mixing distribution; `None` uses the stream's σ².
    #[serde(default)]
    pub mixture_variance: Option<f64>,
}

impl Default for AlwaysValidConfig {
    fn default() -> Self {
        Self {
            p_fail: 0.95,
            p_success: 0.05,
            mixture_variance: None,
        }
    }
}

impl AlwaysValidConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.p_success && self.p_success < self.p_fail && self.p_fail <= 1.0) {
            return Err(invalid(format!(
                "always-valid thresholds need 0 <= p_success < p_fail <= 1, got {} and {}",
                self.p_success, self.p_fail
            )));
        }
        if let Some(v) = self.mixture_variance {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!(
                    "mixture variance must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// A rule together with its configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule")]
pub enum RuleSpec {
    #[serde(rename = "heuristic")]
    Heuristic(HeuristicConfig),
    #[serde(rename = "always-valid")]
    AlwaysValid(AlwaysValidConfig),
    #[serde(rename = "ppos")]
    Ppos {
        #[serde(default)]
        method: PposMethod,
    },
}

impl RuleSpec {
    pub fn kind(&self) -> RuleKind {
        match self {
            RuleSpec::Heuristic(_) => RuleKind::Heuristic,
            RuleSpec::AlwaysValid(_) => RuleKind::AlwaysValid,
            RuleSpec::Ppos { .. } => RuleKind::Ppos,
        }
    }

    pub fn default_for(kind: RuleKind) -> RuleSpec {
        match kind {
            RuleKind::Heuristic => RuleSpec::Heuristic(HeuristicConfig::default()),
            RuleKind::AlwaysValid => RuleSpec::AlwaysValid(AlwaysValidConfig::default()),
            RuleKind::Ppos => RuleSpec::Ppos {
                method: PposMethod::default(),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RuleSpec::Heuristic(h) => h.validate(),
            RuleSpec::AlwaysValid(a) => a.validate(),
            RuleSpec::Ppos { .. } => Ok(()),
        }
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "interval level must lie in (0, 1), got {level}"
        )))
    }
}

/// Central interval holding `level` of the posterior mass.
pub fn credible_interval(posterior: &GaussianDist, level: f64) -> Result<(f64, f64)> {
    check_level(level)?;
    if posterior.variance == 0.0 {
        return Ok((posterior.mean, posterior.mean));
    }
    let half = std_normal_quantile(0.5 + level / 2.0) * posterior.sd();
    Ok((posterior.mean - half, posterior.mean + half))
}

pub fn heuristic_rule(
    stream: &EffectStream,
    config: &ModelConfig,
    hcfg: &HeuristicConfig,
) -> Result<Decision> {
    hcfg.validate()?;
    let post = posterior(stream, config)?;
    let (lower, _) = credible_interval(&post, hcfg.interval_level)?;
    let verdict = if lower < hcfg.lower_fail {
        Verdict::StopFailure
    } else if lower > hcfg.lower_success {
        Verdict::StopSuccess
    } else {
        Verdict::ContinueExperiment
    };
    Ok(Decision {
        verdict,
        rule_name: RuleKind::Heuristic,
        statistic: lower,
    })
}

/// Always-valid p-values after each period: `p_n = min(p_{n−1}, 1/Λ_n)`
/// with `p_0 = 1`, where
///
/// ```text
/// Λ_n = √(σ² / (σ² + nτ²)) · exp(n²τ² θ̄_n² / (2σ²(σ² + nτ²)))
/// ```
///
/// is the normal-mixture likelihood ratio against `θ = 0` and `θ̄_n` the
/// running mean.
pub fn always_valid_path(stream: &EffectStream, avcfg: &AlwaysValidConfig) -> Result<Vec<f64>> {
    avcfg.validate()?;
    if stream.is_empty() {
        return Err(Error::EmptyStream);
    }
    let s2 = stream.sigma() * stream.sigma();
    let tau2 = avcfg.mixture_variance.unwrap_or(s2);
    let mut sum = ExactSum::with_capacity(8);
    let mut p = 1.0_f64;
    let mut path = Vec::with_capacity(stream.len());
    for (i, &x) in stream.estimates().iter().enumerate() {
        sum.add(x);
        let n = (i + 1) as f64;
        let mean = sum.value() / n;
        let spread = s2 + n * tau2;
        let log_lr = 0.5 * (s2 / spread).ln() + n * n * tau2 * mean * mean / (2.0 * s2 * spread);
        p = p.min((-log_lr).exp()).max(f64::MIN_POSITIVE);
        path.push(p);
    }
    Ok(path)
}

pub fn always_valid_p(stream: &EffectStream, avcfg: &AlwaysValidConfig) -> Result<f64> {
    Ok(*always_valid_path(stream, avcfg)?
        .last()
        .expect("path is nonempty for a nonempty stream"))
}

pub fn always_valid_verdict(p: f64, avcfg: &AlwaysValidConfig) -> Verdict {
    if p > avcfg.p_fail {
        Verdict::StopFailure
    } else if p < avcfg.p_success {
        Verdict::StopSuccess
    } else {
        Verdict::ContinueExperiment
    }
}

pub fn always_valid_rule(stream: &EffectStream, avcfg: &AlwaysValidConfig) -> Result<Decision> {
    let p = always_valid_p(stream, avcfg)?;
    Ok(Decision {
        verdict: always_valid_verdict(p, avcfg),
        rule_name: RuleKind::AlwaysValid,
        statistic: p,
    })
}

pub fn ppos_rule(
    stream: &EffectStream,
    config: &ModelConfig,
    pcfg: &PposConfig,
    method: PposMethod,
) -> Result<Decision> {
    let result = ppos(stream, config, pcfg, method)?;
    Ok(Decision {
        verdict: ppos_decision(&result, pcfg),
        rule_name: RuleKind::Ppos,
        statistic: result.estimate,
    })
}

pub fn evaluate_rule(
    rule: &RuleSpec,
    stream: &EffectStream,
    config: &ModelConfig,
    pcfg: &PposConfig,
) -> Result<Decision> {
    match rule {
        RuleSpec::Heuristic(h) => heuristic_rule(stream, config, h),
        RuleSpec::AlwaysValid(a) => always_valid_rule(stream, a),
        RuleSpec::Ppos { method } => ppos_rule(stream, config, pcfg, *method),
    }
}

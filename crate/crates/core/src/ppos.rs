//! Predictive probability of success at an interim look.
//!
//! Two estimators are provided over the same model:
//!
//! * [`ppos_monte_carlo`] simulates the rest of the experiment `K` times:
//!   draw θ from the interim posterior, draw the `T − T′` missing daily
//!   estimates around it, append them to the observed stream and score the
//!   completed stream with the final success criterion. The posterior at the
//!   hypothetical conclusion is conjugate, so it is evaluated in closed form
//!   from the completed sum.
//! * [`ppos_closed_form`] integrates the same indicator analytically over
//!   the predictive distribution of the final overall mean.
//!
//! Replicates are split into fixed chunks of 4096 and chunk `c` draws from
//! ChaCha stream `c` of a key derived from the seed, so the estimate is a
//! pure function of `(seed, K)` for any scheduling.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::{sum_chunked, ExecPolicy};
use crate::model::{
    exceeds, final_success, posterior, posterior_from_sum, predictive_end_state, success_boundary,
    EffectStream, ModelConfig,
};
use crate::numeric::std_normal_cdf;
use crate::rng::{substream, tag};
use crate::rules::Verdict;

const MC_CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PposConfig {
    pub gamma_success: f64,
    pub gamma_failure: f64,
    pub mc_draws: u64,
    pub seed: u64,
    #[serde(skip)]
    pub exec: ExecPolicy,
}

impl Default for PposConfig {
    fn default() -> Self {
        Self {
            gamma_success: 0.9,
            gamma_failure: 0.1,
            mc_draws: 10_000,
            seed: 0,
            exec: ExecPolicy::default(),
        }
    }
}

impl PposConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.gamma_failure, self.gamma_success);
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(invalid(format!(
                "PPoS thresholds need 0 <= gamma_failure < gamma_success <= 1, got {lo} and {hi}"
            )));
        }
        if self.mc_draws == 0 {
            return Err(invalid("Monte-Carlo draw count must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PposMethod {
    #[default]
    MonteCarlo,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PposResult {
    pub estimate: f64,
    pub mc_std_error: f64,
    pub method: PposMethod,
    pub draws_used: u64,
}

/// Interim stream length relative to the horizon.
enum Look {
    Interim,
    Terminal(bool),
}

fn classify(stream: &EffectStream, config: &ModelConfig) -> Result<Look> {
    // validates the config and rejects empty streams
    posterior(stream, config)?;
    match stream.len().cmp(&config.horizon) {
        std::cmp::Ordering::Less => Ok(Look::Interim),
        std::cmp::Ordering::Equal => Ok(Look::Terminal(final_success(stream, config)?)),
        std::cmp::Ordering::Greater => Err(Error::HorizonMismatch {
            expected: config.horizon,
            actual: stream.len(),
        }),
    }
}

fn indicator(hit: bool) -> f64 {
    if hit {
        1.0
    } else {
        0.0
    }
}

pub fn ppos_monte_carlo(
    stream: &EffectStream,
    config: &ModelConfig,
    pcfg: &PposConfig,
) -> Result<PposResult> {
    pcfg.validate()?;
    if let Look::Terminal(hit) = classify(stream, config)? {
        return Ok(PposResult {
            estimate: indicator(hit),
            mc_std_error: 0.0,
            method: PposMethod::MonteCarlo,
            draws_used: 0,
        });
    }

    let interim = posterior(stream, config)?;
    let interim_sd = interim.sd();
    let sigma = stream.sigma();
    let horizon = config.horizon;
    let future = horizon - stream.len();
    let critical = config.critical_value();
    let prior = config.prior;

    let observed = stream.sum();
    let base = substream(pcfg.seed, &[tag::PPOS_MC]);

    let k = pcfg.mc_draws;
    let successes = sum_chunked(pcfg.exec, k, MC_CHUNK, |start, end| {
        let mut hits = 0;
        let mut rng = base.clone();
        rng.set_stream(start / MC_CHUNK);
        for _ in start..end {
            let z: f64 = rng.sample(StandardNormal);
            let theta = interim.mean + interim_sd * z;
            // fixed summation order, so compensated addition is enough here
            let (mut total, mut carry) = (observed, 0.0);
            for _ in 0..future {
                let e: f64 = rng.sample(StandardNormal);
                let x = theta + sigma * e;
                let t = total + x;
                carry += if total.abs() >= x.abs() {
                    (total - t) + x
                } else {
                    (x - t) + total
                };
                total = t;
            }
            let end_post = posterior_from_sum(total + carry, horizon, sigma, prior);
            if exceeds(&end_post, critical) {
                hits += 1;
            }
        }
        hits
    });

    let p = successes as f64 / k as f64;
    Ok(PposResult {
        estimate: p,
        mc_std_error: (p * (1.0 - p) / k as f64).sqrt(),
        method: PposMethod::MonteCarlo,
        draws_used: k,
    })
}

/// Exact PPoS: `Φ((μ − b) / s)` where `N(μ, s²)` is the predictive
/// distribution of the final overall mean under the configured predictive
/// mode and `b` the final success boundary on that mean.
pub fn ppos_closed_form(stream: &EffectStream, config: &ModelConfig) -> Result<PposResult> {
    let estimate = match classify(stream, config)? {
        Look::Terminal(hit) => indicator(hit),
        Look::Interim => {
            let pred = predictive_end_state(stream, config)?;
            let boundary = success_boundary(config, stream.sigma());
            if pred.variance == 0.0 {
                indicator(pred.mean > boundary)
            } else {
                std_normal_cdf((pred.mean - boundary) / pred.sd())
            }
        }
    };
    Ok(PposResult {
        estimate,
        mc_std_error: 0.0,
        method: PposMethod::ClosedForm,
        draws_used: 0,
    })
}

pub fn ppos(
    stream: &EffectStream,
    config: &ModelConfig,
    pcfg: &PposConfig,
    method: PposMethod,
) -> Result<PposResult> {
    match method {
        PposMethod::MonteCarlo => ppos_monte_carlo(stream, config, pcfg),
        PposMethod::ClosedForm => ppos_closed_form(stream, config),
    }
}

/// Maps a PPoS estimate onto a verdict. Both thresholds are strict, so an
/// estimate sitting exactly on either one continues the experiment.
pub fn ppos_decision(result: &PposResult, pcfg: &PposConfig) -> Verdict {
    if result.estimate < pcfg.gamma_failure {
        Verdict::StopFailure
    } else if result.estimate > pcfg.gamma_success {
        Verdict::StopSuccess
    } else {
        Verdict::ContinueExperiment
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(xs: &[f64], sigma: f64) -> EffectStream {
        EffectStream::new(xs.to_vec(), sigma).unwrap()
    }

    fn result(estimate: f64) -> PposResult {
        PposResult {
            estimate,
            mc_std_error: 0.0,
            method: PposMethod::ClosedForm,
            draws_used: 0,
        }
    }

    #[test]
    fn decision_thresholds_are_strict() {
        let pcfg = PposConfig::default();
        assert_eq!(ppos_decision(&result(0.05), &pcfg), Verdict::StopFailure);
        assert_eq!(ppos_decision(&result(0.95), &pcfg), Verdict::StopSuccess);
        assert_eq!(
            ppos_decision(&result(0.9), &pcfg),
            Verdict::ContinueExperiment
        );
        assert_eq!(
            ppos_decision(&result(0.1), &pcfg),
            Verdict::ContinueExperiment
        );
        assert_eq!(
            ppos_decision(&result(0.5), &pcfg),
            Verdict::ContinueExperiment
        );
    }

    #[test]
    fn config_validation() {
        let zero_k = PposConfig {
            mc_draws: 0,
            ..PposConfig::default()
        };
        let s = stream(&[0.0; 7], 1.0);
        assert!(matches!(
            ppos_monte_carlo(&s, &ModelConfig::default(), &zero_k),
            Err(Error::InvalidConfig(_))
        ));
        let crossed = PposConfig {
            gamma_failure: 0.9,
            gamma_success: 0.1,
            ..PposConfig::default()
        };
        assert!(crossed.validate().is_err());
    }

    #[test]
    fn overwhelming_interim_effect() {
        let cfg = ModelConfig::default();
        for n in [1, 7, 13] {
            let s = stream(&vec![10.0; n], 1.0);
            let mc = ppos_monte_carlo(&s, &cfg, &PposConfig::default()).unwrap();
            assert!(mc.estimate >= 0.999, "n={n}: {}", mc.estimate);
            assert!(ppos_closed_form(&s, &cfg).unwrap().estimate >= 0.999);
        }
    }

    #[test]
    fn monte_carlo_is_reproducible_and_policy_independent() {
        let s = stream(&[0.1, -0.3, 0.4, 0.2, 0.0, 0.25, -0.05], 1.0);
        let cfg = ModelConfig::default();
        let seq = PposConfig {
            mc_draws: 20_000,
            seed: 11,
            exec: ExecPolicy::Sequential,
            ..PposConfig::default()
        };
        let par = PposConfig {
            exec: ExecPolicy::Parallel,
            ..seq
        };
        let a = ppos_monte_carlo(&s, &cfg, &seq).unwrap();
        let b = ppos_monte_carlo(&s, &cfg, &seq).unwrap();
        let c = ppos_monte_carlo(&s, &cfg, &par).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.estimate.to_bits(), c.estimate.to_bits());
        let other_seed = ppos_monte_carlo(&s, &cfg, &PposConfig { seed: 12, ..seq }).unwrap();
        assert_ne!(a.estimate, other_seed.estimate);
    }

    #[test]
    fn standard_error_matches_estimate() {
        let s = stream(&[0.3; 7], 1.0);
        let pcfg = PposConfig {
            mc_draws: 5000,
            ..PposConfig::default()
        };
        let r = ppos_monte_carlo(&s, &ModelConfig::default(), &pcfg).unwrap();
        let p = r.estimate;
        assert_eq!(r.mc_std_error, (p * (1.0 - p) / 5000.0).sqrt());
        assert_eq!(r.draws_used, 5000);
    }

    #[test]
    fn terminal_look_is_an_indicator() {
        let cfg = ModelConfig::default();
        let above = stream(&[1.0; 14], 1.0);
        let below = stream(&[0.1; 14], 1.0);
        for s in [&above, &below] {
            let expect = indicator(final_success(s, &cfg).unwrap());
            assert_eq!(ppos_closed_form(s, &cfg).unwrap().estimate, expect);
            let mc = ppos_monte_carlo(s, &cfg, &PposConfig::default()).unwrap();
            assert_eq!(mc.estimate, expect);
        }
        assert_eq!(ppos_closed_form(&above, &cfg).unwrap().estimate, 1.0);
        assert_eq!(ppos_closed_form(&below, &cfg).unwrap().estimate, 0.0);
    }

    #[test]
    fn longer_than_horizon_is_rejected() {
        let s = stream(&[0.0; 15], 1.0);
        assert_eq!(
            ppos_closed_form(&s, &ModelConfig::default()).unwrap_err(),
            Error::HorizonMismatch {
                expected: 14,
                actual: 15
            }
        );
    }
}

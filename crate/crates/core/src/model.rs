//! Conjugate Gaussian model of a stream of per-period effect estimates.
//!
//! Each estimate is modelled as `θ̂_t | θ ~ N(θ, σ²)` with σ known, and the
//! effect carries either a proper normal prior `N(m₀, τ)` or the flat
//! `τ → ∞` limit. Posterior, predictive and success computations are all
//! closed form.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{exact_sum, std_normal_cdf, upper_critical_value};

/// Ordered per-period effect estimates sharing one known sampling scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectStream {
    estimates: Vec<f64>,
    sigma: f64,
}

impl EffectStream {
    pub fn new(estimates: Vec<f64>, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidScale(sigma));
        }
        if let Some(i) = estimates.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteEstimate { period: i + 1 });
        }
        Ok(Self { estimates, sigma })
    }

    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    /// The first `periods` estimates (all of them if the stream is shorter).
    pub fn prefix(&self, periods: usize) -> EffectStream {
        EffectStream {
            estimates: self.estimates[..periods.min(self.len())].to_vec(),
            sigma: self.sigma,
        }
    }

    /// Correctly rounded sum of the estimates.
    pub fn sum(&self) -> f64 {
        exact_sum(&self.estimates)
    }
}

/// Normal distribution by mean and variance. Zero variance is a point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianDist {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianDist {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(invalid(format!("mean must be finite, got {mean}")));
        }
        if !(variance.is_finite() && variance >= 0.0) {
            return Err(invalid(format!(
                "variance must be finite and nonnegative, got {variance}"
            )));
        }
        Ok(Self { mean, variance })
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if self.variance == 0.0 {
            return if x >= self.mean { 1.0 } else { 0.0 };
        }
        std_normal_cdf((x - self.mean) / self.sd())
    }

    /// Standardized mean `mean / sd`; infinite with the sign of the mean for
    /// a point mass away from zero.
    pub(crate) fn z_score(&self) -> f64 {
        if self.variance == 0.0 {
            match self.mean.partial_cmp(&0.0) {
                Some(std::cmp::Ordering::Greater) => f64::INFINITY,
                Some(std::cmp::Ordering::Less) => f64::NEG_INFINITY,
                _ => 0.0,
            }
        } else {
            self.mean / self.sd()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prior {
    /// The `τ → ∞` limit of the normal prior.
    #[default]
    FlatLimit,
    /// `θ ~ N(mean, variance)`.
    Proper { mean: f64, variance: f64 },
}

/// How the end-of-experiment state is summarized from an interim look.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PredictiveMode {
    /// `N(m, σ²/T + σ²/T′)`, the textbook formula taken at face value.
    PaperFormula,
    /// Distribution of the final overall mean implied by drawing θ from the
    /// interim posterior and then `T − T′` future estimates around it.
    #[default]
    GenerativeAggregate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub alpha: f64,
    pub horizon: usize,
    #[serde(default)]
    pub prior: Prior,
    #[serde(default)]
    pub predictive_mode: PredictiveMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            horizon: 14,
            prior: Prior::FlatLimit,
            predictive_mode: PredictiveMode::GenerativeAggregate,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        if let Prior::Proper { mean, variance } = self.prior {
            if !mean.is_finite() {
                return Err(invalid("prior mean must be finite"));
            }
            if !(variance.is_finite() && variance > 0.0) {
                return Err(invalid(format!(
                    "prior variance must be positive, got {variance}"
                )));
            }
        }
        Ok(())
    }

    /// `z_{1−α}`: the standardized posterior mean must exceed this for a
    /// success.
    pub fn critical_value(&self) -> f64 {
        upper_critical_value(self.alpha)
    }
}

/// Posterior of θ from `n` estimates summing to `sum`.
pub(crate) fn posterior_from_sum(sum: f64, n: usize, sigma: f64, prior: Prior) -> GaussianDist {
    let s2 = sigma * sigma;
    match prior {
        Prior::FlatLimit => GaussianDist {
            mean: sum / n as f64,
            variance: s2 / n as f64,
        },
        Prior::Proper { mean, variance } => {
            let post_var = 1.0 / (1.0 / variance + n as f64 / s2);
            GaussianDist {
                mean: post_var * (mean / variance + sum / s2),
                variance: post_var,
            }
        }
    }
}

pub fn posterior(stream: &EffectStream, config: &ModelConfig) -> Result<GaussianDist> {
    config.validate()?;
    if stream.is_empty() {
        return Err(Error::EmptyStream);
    }
    Ok(posterior_from_sum(
        stream.sum(),
        stream.len(),
        stream.sigma(),
        config.prior,
    ))
}

/// `P(θ > 0)` under `posterior`; a point mass gives `1[mean > 0]`.
pub fn prob_positive(posterior: &GaussianDist) -> f64 {
    if posterior.variance == 0.0 {
        return if posterior.mean > 0.0 { 1.0 } else { 0.0 };
    }
    std_normal_cdf(posterior.mean / posterior.sd())
}

/// `P(θ > 0) > 1 − α`, decided as `mean / sd > z_{1−α}` so that the strict
/// boundary is not blurred by rounding in Φ.
pub(crate) fn exceeds(posterior: &GaussianDist, critical: f64) -> bool {
    posterior.z_score() > critical
}

pub fn final_success(stream: &EffectStream, config: &ModelConfig) -> Result<bool> {
    check_full_horizon(stream, config)?;
    let post = posterior(stream, config)?;
    Ok(exceeds(&post, config.critical_value()))
}

pub(crate) fn check_full_horizon(stream: &EffectStream, config: &ModelConfig) -> Result<()> {
    if stream.len() != config.horizon {
        return Err(Error::HorizonMismatch {
            expected: config.horizon,
            actual: stream.len(),
        });
    }
    Ok(())
}

/// Predictive distribution of the end-of-experiment overall mean given the
/// interim stream (`n = T′ < T`).
pub fn predictive_end_state(stream: &EffectStream, config: &ModelConfig) -> Result<GaussianDist> {
    let interim = posterior(stream, config)?;
    let (t_int, t_end) = (stream.len(), config.horizon);
    if t_int >= t_end {
        return Err(Error::NothingToPredict {
            interim: t_int,
            horizon: t_end,
        });
    }
    let s2 = stream.sigma() * stream.sigma();
    let (tp, t) = (t_int as f64, t_end as f64);
    let remaining = t - tp;
    let dist = match (config.predictive_mode, config.prior) {
        (PredictiveMode::PaperFormula, _) => GaussianDist {
            mean: interim.mean,
            variance: s2 / t + interim.variance,
        },
        (PredictiveMode::GenerativeAggregate, Prior::FlatLimit) => {
            let frac = remaining / t;
            GaussianDist {
                mean: interim.mean,
                variance: frac * frac * (s2 / tp + s2 / remaining),
            }
        }
        (PredictiveMode::GenerativeAggregate, Prior::Proper { .. }) => GaussianDist {
            mean: (stream.sum() + remaining * interim.mean) / t,
            variance: (remaining * remaining * interim.variance + remaining * s2) / (t * t),
        },
    };
    Ok(dist)
}

/// Threshold on the end-of-experiment overall mean above which the final
/// posterior is a success.
pub(crate) fn success_boundary(config: &ModelConfig, sigma: f64) -> f64 {
    let z = config.critical_value();
    let t = config.horizon as f64;
    let s2 = sigma * sigma;
    match config.prior {
        Prior::FlatLimit => z * sigma / t.sqrt(),
        Prior::Proper { mean, variance } => {
            let post_var = 1.0 / (1.0 / variance + t / s2);
            (s2 / t) * (z / post_var.sqrt() - mean / variance)
        }
    }
}

//! Interim analysis of sequential experiments with Bayesian predictive
//! probabilities of success.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: conjugate Gaussian posterior, predictive and success criterion.
//! * [`ppos`]: predictive probability of success by simulation and in closed form.
//! * [`rules`]: heuristic, always-valid and PPoS interim decision rules.
//! * [`corpus`]: synthetic corpora scored interim-versus-final.
//! * [`check`]: posterior predictive checks with a reference distribution.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is on (the
//! default) and sequentially otherwise; see [`ExecPolicy`]. Outputs do not
//! depend on the policy.

pub mod check;
pub mod corpus;
mod error;
mod exec;
pub mod model;
pub mod numeric;
pub mod ppos;
pub mod rng;
pub mod rules;

pub use error::{Error, Result};
pub use exec::ExecPolicy;

pub use check::{
    discrepancy, reference_check, replicate_corpus, CheckConfig, CheckStatistic, ObservedCorpus,
    ReferenceDistribution, StatisticKind,
};
pub use corpus::{
    final_outcome, run_corpus, simulate_stream, ConfusionMatrix, CorpusConfig, CorpusReport,
    EffectComponent, ExperimentScenario, FinalOutcome, OperatingCharacteristics,
};
pub use model::{
    final_success, posterior, predictive_end_state, prob_positive, EffectStream, GaussianDist,
    ModelConfig, PredictiveMode, Prior,
};
pub use ppos::{
    ppos, ppos_closed_form, ppos_decision, ppos_monte_carlo, PposConfig, PposMethod, PposResult,
};
pub use rules::{
    always_valid_p, always_valid_path, always_valid_rule, credible_interval, evaluate_rule,
    heuristic_rule, AlwaysValidConfig, Decision, HeuristicConfig, RuleKind, RuleSpec, Verdict,
};

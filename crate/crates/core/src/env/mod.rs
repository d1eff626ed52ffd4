//! Bandit instances with a cheap, improving low-fidelity source and a costly,
//! unbiased high-fidelity source.

mod envelope;
mod generators;
mod instance;

pub use envelope::{envelope_bound, EnvelopeKind, MismatchEnvelope};
pub use generators::{
    make_proxy_judge_instance, make_synthetic, make_synthetic_set, MeanDistribution, ProxyParams,
    ProxyRegime, SyntheticPreset, SyntheticSpec, CHECKPOINT_MEANS, DEFAULT_PROXY_MEANS,
};
pub use instance::{
    instance_rng, instantaneous_low_mean, sample_observation, ArmSpec, BanditInstance,
    BiasProfile, ObservationStreams,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fidelity {
    Low,
    High,
}

impl Fidelity {
    pub fn index(self) -> usize {
        match self {
            Fidelity::Low => 0,
            Fidelity::High => 1,
        }
    }
}

impl std::fmt::Display for Fidelity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Fidelity::Low => f.write_str("L"),
            Fidelity::High => f.write_str("H"),
        }
    }
}

/// Per-query costs `λ^(L) < λ^(H)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    pub low: f64,
    pub high: f64,
}

impl CostModel {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        let costs = CostModel { low, high };
        costs.validate()?;
        Ok(costs)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.low.is_finite() && self.low > 0.0) {
            return Err(Error::config("costs.low", "must be finite and > 0"));
        }
        if !(self.high.is_finite() && self.high > self.low) {
            return Err(Error::config(
                "costs.high",
                format!("must exceed the low-fidelity cost {}", self.low),
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn of(&self, fidelity: Fidelity) -> f64 {
        match fidelity {
            Fidelity::Low => self.low,
            Fidelity::High => self.high,
        }
    }

    /// Query upper bound `T_Λ = ⌈Λ / λ^(L)⌉` induced by a budget.
    pub fn query_horizon(&self, budget: f64) -> u64 {
        (budget / self.low).ceil().max(1.0) as u64
    }

    /// Cost of the one-low-one-high warm start over `arms` arms.
    pub fn warm_start(&self, arms: usize) -> f64 {
        arms as f64 * (self.low + self.high)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NoiseModel {
    Gaussian { sigma: f64 },
    Bernoulli,
}

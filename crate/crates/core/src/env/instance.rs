use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{CostModel, Fidelity, MismatchEnvelope, NoiseModel};
use crate::error::{Error, Result};

/// Signed low-fidelity bias `μ^(L)(τ) − μ^(H)` as a function of the arm's
/// low-fidelity query count `τ ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BiasProfile {
    /// `s·ζ·τ^(−r)`.
    PowerLaw { sign: f64, zeta: f64, r: f64 },
    /// `b + a·(τ+n0)^(−r)`.
    Residual { b: f64, a: f64, n0: u64, r: f64 },
    Constant { offset: f64 },
    /// Explicit values; the last one is held beyond the end.
    Tabulated { bias: Vec<f64> },
}

impl BiasProfile {
    pub fn bias(&self, tau: u64) -> f64 {
        debug_assert!(tau >= 1);
        let t = tau as f64;
        match *self {
            BiasProfile::PowerLaw { sign, zeta, r } => sign * zeta * t.powf(-r),
            BiasProfile::Residual { b, a, n0, r } => b + a * (t + n0 as f64).powf(-r),
            BiasProfile::Constant { offset } => offset,
            BiasProfile::Tabulated { ref bias } => {
                let i = ((tau - 1) as usize).min(bias.len().saturating_sub(1));
                bias.get(i).copied().unwrap_or(0.0)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ArmSpec {
    pub mu_high: f64,
    pub bias_sign: i8,
    pub envelope: Arc<MismatchEnvelope>,
    pub trajectory: BiasProfile,
}

impl ArmSpec {
    pub fn new(mu_high: f64, envelope: Arc<MismatchEnvelope>, trajectory: BiasProfile) -> Self {
        let bias_sign = match trajectory {
            BiasProfile::PowerLaw { sign, .. } if sign < 0.0 => -1,
            BiasProfile::Residual { a, .. } if a < 0.0 => -1,
            _ => 1,
        };
        ArmSpec {
            mu_high,
            bias_sign,
            envelope,
            trajectory,
        }
    }

    /// Whether `Σ_{τ≤n} |μ^(L)(τ) − μ^(H)| ≤ U(n)` for every `n ≤ horizon`.
    ///
    /// `slack` absorbs floating-point summation differences between the
    /// trajectory and the envelope table.
    pub fn certificate_holds(&self, clip: bool, slack: f64) -> bool {
        let mut acc = 0.0;
        for n in 1..=self.envelope.horizon() {
            acc += (instantaneous_low_mean(self, n, clip) - self.mu_high).abs();
            let u = self.envelope.cumulative(n).expect("n within horizon");
            if acc > u + slack * (1.0 + u) {
                return false;
            }
        }
        true
    }
}

/// `μ^(L)(τ)` of an arm, optionally clipped to `[0, 1]`.
#[inline]
pub fn instantaneous_low_mean(arm: &ArmSpec, tau: u64, clip: bool) -> f64 {
    let m = arm.mu_high + arm.trajectory.bias(tau.max(1));
    if clip {
        m.clamp(0.0, 1.0)
    } else {
        m
    }
}

#[derive(Debug, Clone)]
pub struct BanditInstance {
    pub arms: Vec<ArmSpec>,
    pub costs: CostModel,
    pub noise: NoiseModel,
    pub clip_means: bool,
}

impl BanditInstance {
    pub fn new(
        arms: Vec<ArmSpec>,
        costs: CostModel,
        noise: NoiseModel,
        clip_means: bool,
    ) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::config("environment.arms", "at least one arm is required"));
        }
        costs.validate()?;
        match noise {
            NoiseModel::Gaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                return Err(Error::config("environment.noise.sigma", "must be finite and >= 0"));
            }
            NoiseModel::Bernoulli if !clip_means => {
                return Err(Error::config(
                    "environment.clip",
                    "Bernoulli rewards require clipped means",
                ));
            }
            NoiseModel::Bernoulli => {
                if let Some(k) = arms.iter().position(|a| !(0.0..=1.0).contains(&a.mu_high)) {
                    return Err(Error::config(
                        format!("environment.mu_high[{}]", k),
                        "Bernoulli means must lie in [0, 1]",
                    ));
                }
            }
            _ => {}
        }
        Ok(BanditInstance {
            arms,
            costs,
            noise,
            clip_means,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    /// `k* = argmax μ^(H)`, lowest index on ties.
    pub fn best_arm(&self) -> usize {
        let mut best = 0;
        for (k, arm) in self.arms.iter().enumerate() {
            if arm.mu_high > self.arms[best].mu_high {
                best = k;
            }
        }
        best
    }

    pub fn mu_star(&self) -> f64 {
        self.arms[self.best_arm()].mu_high
    }

    /// `Δ_k = μ* − μ_k^(H)`.
    pub fn gap(&self, arm: usize) -> f64 {
        self.mu_star() - self.arms[arm].mu_high
    }

    pub fn gaps(&self) -> Vec<f64> {
        let star = self.mu_star();
        self.arms.iter().map(|a| star - a.mu_high).collect()
    }

    pub fn envelopes(&self) -> Vec<Arc<MismatchEnvelope>> {
        self.arms.iter().map(|a| Arc::clone(&a.envelope)).collect()
    }

    /// Mean of the next observation of `arm` at `fidelity`.
    pub fn mean_of(&self, arm: usize, fidelity: Fidelity, low_count_so_far: u64) -> f64 {
        let spec = &self.arms[arm];
        match fidelity {
            Fidelity::High => spec.mu_high,
            Fidelity::Low => instantaneous_low_mean(spec, low_count_so_far + 1, self.clip_means),
        }
    }
}

/// Draws one observation. The low-fidelity sample uses `τ = low_count_so_far + 1`.
pub fn sample_observation<R: Rng + ?Sized>(
    instance: &BanditInstance,
    arm_index: usize,
    fidelity: Fidelity,
    low_count_so_far: u64,
    rng: &mut R,
) -> Result<f64> {
    if arm_index >= instance.num_arms() {
        return Err(Error::domain(format!(
            "arm index {} out of range for {} arms",
            arm_index,
            instance.num_arms()
        )));
    }
    let mean = instance.mean_of(arm_index, fidelity, low_count_so_far);
    Ok(match instance.noise {
        NoiseModel::Gaussian { sigma } => {
            let z: f64 = rng.sample(StandardNormal);
            mean + sigma * z
        }
        NoiseModel::Bernoulli => {
            if rng.random::<f64>() < mean {
                1.0
            } else {
                0.0
            }
        }
    })
}

const OBSERVATION_DOMAIN: u64 = 1 << 40;

/// Independent random streams per (arm, fidelity), derived from a run seed.
///
/// The u-th query of arm k at fidelity m consumes the same randomness under every
/// policy, so paired comparisons on a common seed share their noise.
#[derive(Debug, Clone)]
pub struct ObservationStreams {
    streams: Vec<ChaCha8Rng>,
}

impl ObservationStreams {
    pub fn new(seed: u64, arms: usize) -> Self {
        let streams = (0..2 * arms as u64)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(OBSERVATION_DOMAIN + i);
                rng
            })
            .collect();
        ObservationStreams { streams }
    }

    pub fn sample(
        &mut self,
        instance: &BanditInstance,
        arm: usize,
        fidelity: Fidelity,
        low_count_so_far: u64,
    ) -> Result<f64> {
        let idx = 2 * arm + fidelity.index();
        let rng = self
            .streams
            .get_mut(idx)
            .ok_or_else(|| Error::domain(format!("arm index {} has no observation stream", arm)))?;
        sample_observation(instance, arm, fidelity, low_count_so_far, rng)
    }
}

/// Generator used to build instances from a run seed.
pub fn instance_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::{ArmSpec, BanditInstance, BiasProfile, CostModel, EnvelopeKind, MismatchEnvelope, NoiseModel};
use crate::error::{Error, Result};

/// High-fidelity means of the published five-arm checkpoint benchmark.
pub const CHECKPOINT_MEANS: [f64; 5] = [0.5568, 0.5376, 0.5376, 0.5364, 0.5060];

/// Default four-arm means for the residual and vanishing proxy-judge regimes.
pub const DEFAULT_PROXY_MEANS: [f64; 4] = [0.62, 0.55, 0.50, 0.42];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeanDistribution {
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, std: f64 },
}

impl MeanDistribution {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match *self {
            MeanDistribution::Uniform { low, high } => {
                let d = Uniform::new(low, high)
                    .map_err(|e| Error::config("environment.mean_dist", e.to_string()))?;
                Ok(d.sample(rng))
            }
            MeanDistribution::Normal { mean, std } => {
                let d = Normal::new(mean, std)
                    .map_err(|e| Error::config("environment.mean_dist", e.to_string()))?;
                Ok(d.sample(rng))
            }
        }
    }
}

/// Parameters of a synthetic power-law instance family.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub arms: usize,
    pub means: MeanDistribution,
    pub zeta: f64,
    pub costs: CostModel,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticPreset {
    SetA,
    SetB,
}

impl SyntheticPreset {
    pub fn spec(self) -> SyntheticSpec {
        match self {
            SyntheticPreset::SetA => SyntheticSpec {
                arms: 200,
                means: MeanDistribution::Uniform { low: 0.1, high: 0.9 },
                zeta: 0.2,
                costs: CostModel { low: 1.0, high: 10.0 },
                sigma: 1.0,
            },
            SyntheticPreset::SetB => SyntheticSpec {
                arms: 500,
                means: MeanDistribution::Normal { mean: 0.0, std: 1.0 },
                zeta: 1.0,
                costs: CostModel { low: 1.0, high: 50.0 },
                sigma: 1.0,
            },
        }
    }
}

/// Builds a synthetic instance with trajectories `μ^(H) + s·ζ·τ^(−r)`.
///
/// Means are drawn first for every arm, then bias signs, so changing the
/// sign convention never perturbs the means.
pub fn make_synthetic<R: Rng + ?Sized>(
    spec: &SyntheticSpec,
    decay_r: f64,
    horizon: u64,
    rng: &mut R,
) -> Result<BanditInstance> {
    if !(decay_r > 0.0 && decay_r.is_finite()) {
        return Err(Error::config("environment.decay_r", "must be > 0"));
    }
    if spec.arms == 0 {
        return Err(Error::config("environment.arms", "must be >= 1"));
    }
    // |s·ζ·τ^(−r)| does not depend on the sign, so all arms share one table.
    let envelope = Arc::new(MismatchEnvelope::new(
        EnvelopeKind::PowerLaw { zeta: spec.zeta, r: decay_r },
        horizon,
    )?);
    let means = (0..spec.arms)
        .map(|_| spec.means.sample(rng))
        .collect::<Result<Vec<_>>>()?;
    let arms = means
        .into_iter()
        .map(|mu| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            ArmSpec::new(
                mu,
                Arc::clone(&envelope),
                BiasProfile::PowerLaw { sign, zeta: spec.zeta, r: decay_r },
            )
        })
        .collect();
    BanditInstance::new(arms, spec.costs, NoiseModel::Gaussian { sigma: spec.sigma }, false)
}

pub fn make_synthetic_set<R: Rng + ?Sized>(
    preset: SyntheticPreset,
    decay_r: f64,
    horizon: u64,
    rng: &mut R,
) -> Result<BanditInstance> {
    make_synthetic(&preset.spec(), decay_r, horizon, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProxyRegime {
    Residual,
    Vanishing,
    #[serde(rename = "checkpoint-5arm")]
    Checkpoint5Arm,
}

/// Parameters of the proxy-judge model `μ^(L)(n) = μ^(H) + b + s·ζ·(n+n0)^(−r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyParams {
    pub zeta: f64,
    pub r: f64,
    pub b: f64,
    pub n0: u64,
    /// Means for the four-arm regimes; ignored by the checkpoint regime.
    pub mu_high: Option<Vec<f64>>,
    pub costs: CostModel,
}

impl Default for ProxyParams {
    fn default() -> Self {
        ProxyParams {
            zeta: 0.4,
            r: 0.75,
            b: 0.05,
            n0: 0,
            mu_high: Some(DEFAULT_PROXY_MEANS.to_vec()),
            costs: CostModel { low: 1.0, high: 500.0 },
        }
    }
}

/// Builds a Bernoulli, clipped proxy-judge instance. Transient signs are drawn from `rng`.
pub fn make_proxy_judge_instance<R: Rng + ?Sized>(
    regime: ProxyRegime,
    params: &ProxyParams,
    horizon: u64,
    rng: &mut R,
) -> Result<BanditInstance> {
    let means: Vec<f64> = match regime {
        ProxyRegime::Checkpoint5Arm => CHECKPOINT_MEANS.to_vec(),
        ProxyRegime::Residual | ProxyRegime::Vanishing => params.mu_high.clone().ok_or_else(|| {
            Error::config("environment.mu_high", "four-arm proxy regimes need high-fidelity means")
        })?,
    };
    let b = match regime {
        ProxyRegime::Vanishing => 0.0,
        _ => {
            if !(params.b > 0.0) {
                return Err(Error::config("environment.b", "residual regimes require b > 0"));
            }
            params.b
        }
    };
    if !(params.zeta >= 0.0) {
        return Err(Error::config("environment.zeta", "must be >= 0"));
    }
    let mut tables: [Option<Arc<MismatchEnvelope>>; 2] = [None, None];
    let mut arms = Vec::with_capacity(means.len());
    for mu in means {
        let positive = rng.random::<bool>();
        let a = if positive { params.zeta } else { -params.zeta };
        let kind = EnvelopeKind::Residual { b, a, n0: params.n0, r: params.r };
        let slot = &mut tables[positive as usize];
        let envelope = match slot {
            Some(e) => Arc::clone(e),
            None => {
                let e = Arc::new(MismatchEnvelope::new(kind, horizon)?);
                *slot = Some(Arc::clone(&e));
                e
            }
        };
        arms.push(ArmSpec::new(
            mu,
            envelope,
            BiasProfile::Residual { b, a, n0: params.n0, r: params.r },
        ));
    }
    BanditInstance::new(arms, params.costs, NoiseModel::Bernoulli, true)
}

//! Experiment configuration: a TOML document with `environment`, `costs`,
//! `algorithm`, `budget` and `run` tables. A top-level `preset = "<name>"` key
//! starts from a registered preset and overlays the remaining keys on it.
//!
//! ```toml
//! preset = "set-a"
//! environment.arms = 20
//! budget.total = 20000.0
//! run.seeds = "0..25"
//! run.methods = ["tacc", "ucb"]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::confidence::ConfidenceConfig;
use crate::env::{
    instance_rng, make_proxy_judge_instance, make_synthetic, ArmSpec, BanditInstance, BiasProfile,
    CostModel, EnvelopeKind, MeanDistribution, MismatchEnvelope, NoiseModel, ProxyParams, ProxyRegime,
    SyntheticSpec, DEFAULT_PROXY_MEANS,
};
use crate::error::{Error, Result};
use crate::policy::{Method, TaccParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub environment: EnvironmentSpec,
    pub costs: CostModel,
    pub algorithm: AlgorithmConfig,
    pub budget: BudgetConfig,
    #[serde(default)]
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    /// Power-law trajectories with random means and random bias signs.
    Synthetic {
        arms: usize,
        means: MeanDistribution,
        zeta: f64,
        r: f64,
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    /// Bernoulli proxy-judge model `μ^(H) + b + s·ζ·(n+n0)^(−r)`.
    Proxy {
        regime: ProxyRegime,
        zeta: f64,
        r: f64,
        #[serde(default)]
        b: f64,
        #[serde(default)]
        n0: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu_high: Option<Vec<f64>>,
    },
    /// Fully specified arms.
    Explicit {
        arms: Vec<ExplicitArm>,
        noise: NoiseModel,
        #[serde(default)]
        clip: bool,
    },
}

fn default_sigma() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitArm {
    pub mu_high: f64,
    pub envelope: EnvelopeKind,
    pub trajectory: BiasProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub gamma: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    pub s0: u64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Per-arm static bias for MF-UCB and static elimination; defaults to `B_k(1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_bias: Option<Vec<f64>>,
    /// Largest acceptable dyadic cost ratio before `diagnose` flags an arm.
    #[serde(default = "default_dyadic")]
    pub dyadic_limit: f64,
}

fn default_eta() -> f64 {
    1e-4
}
fn default_rho() -> f64 {
    2.0
}
fn default_delta() -> f64 {
    0.05
}
fn default_dyadic() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub total: f64,
    /// Ascending cost levels ending at `total`; defaults to `[total]`.
    #[serde(default)]
    pub checkpoints: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seeds")]
    pub seeds: SeedRange,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub jobs: usize,
}

fn default_seeds() -> SeedRange {
    SeedRange { start: 0, end: 10 }
}
fn default_methods() -> Vec<Method> {
    vec![Method::Tacc, Method::Dnc, Method::MfUcb, Method::Ucb]
}
fn default_out() -> PathBuf {
    PathBuf::from("results")
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seeds: default_seeds(),
            methods: default_methods(),
            out: default_out(),
            jobs: 0,
        }
    }
}

/// Half-open seed range written `a..b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SeedRange {
    pub start: u64,
    pub end: u64,
}

impl SeedRange {
    pub fn iter(&self) -> std::ops::Range<u64> {
        self.start..self.end
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl FromStr for SeedRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config("run.seeds", format!("expected `a..b` with a < b, got `{}`", s));
        let (a, b) = s.trim().split_once("..").ok_or_else(bad)?;
        let start = a.trim().parse().map_err(|_| bad())?;
        let end = b.trim().parse().map_err(|_| bad())?;
        if start >= end {
            return Err(bad());
        }
        Ok(SeedRange { start, end })
    }
}

impl TryFrom<String> for SeedRange {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SeedRange> for String {
    fn from(r: SeedRange) -> String {
        r.to_string()
    }
}

impl fmt::Display for SeedRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut value: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        if let Some(name) = value.get("preset").cloned() {
            let name = name
                .as_str()
                .ok_or_else(|| Error::config("preset", "must be a string"))?;
            let preset: Preset = name.parse()?;
            let mut base = toml::Table::try_from(preset.config())
                .map_err(|e| Error::Parse(e.to_string()))?;
            if let Some(toml::Value::Table(env)) = value.get("environment") {
                // Switching environment kinds replaces the preset's table.
                if env.contains_key("kind") {
                    base.remove("environment");
                }
            }
            merge(&mut base, std::mem::take(&mut value));
            value = base;
        }
        let config: ExperimentConfig = toml::Value::Table(value)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.costs.validate()?;
        let a = &self.algorithm;
        if !(a.gamma > 0.0 && a.gamma < 1.0) {
            return Err(Error::config("algorithm.gamma", "must lie in (0, 1)"));
        }
        self.tacc_params()?;
        self.confidence()?;
        if let Some(b) = &a.fixed_bias {
            if b.len() != self.num_arms() || b.iter().any(|x| !(*x >= 0.0)) {
                return Err(Error::config(
                    "algorithm.fixed_bias",
                    format!("expected {} nonnegative values", self.num_arms()),
                ));
            }
        }
        let warm = self.costs.warm_start(self.num_arms());
        if warm > self.budget.total {
            return Err(Error::config(
                "budget.total",
                format!("budget {} does not cover the warm start cost {}", self.budget.total, warm),
            ));
        }
        let cps = &self.budget.checkpoints;
        if cps.windows(2).any(|w| !(w[0] < w[1])) || cps.iter().any(|c| !(*c > 0.0)) {
            return Err(Error::config("budget.checkpoints", "must be positive and strictly ascending"));
        }
        if let Some(&last) = cps.last() {
            if last != self.budget.total {
                return Err(Error::config("budget.checkpoints", "last checkpoint must equal budget.total"));
            }
        }
        if self.run.methods.is_empty() {
            return Err(Error::config("run.methods", "at least one method is required"));
        }
        if self.run.seeds.is_empty() {
            return Err(Error::config("run.seeds", "seed range is empty"));
        }
        match &self.environment {
            EnvironmentSpec::Synthetic { arms, zeta, r, sigma, .. } => {
                if *arms == 0 {
                    return Err(Error::config("environment.arms", "must be >= 1"));
                }
                if !(*zeta >= 0.0) || !(*r >= 0.0) || !(*sigma >= 0.0) {
                    return Err(Error::config("environment", "zeta, r and sigma must be >= 0"));
                }
            }
            EnvironmentSpec::Proxy { regime, zeta, r, b, mu_high, .. } => {
                if !(*zeta >= 0.0) || !(*r >= 0.0) {
                    return Err(Error::config("environment", "zeta and r must be >= 0"));
                }
                if *regime == ProxyRegime::Residual && !(*b > 0.0) {
                    return Err(Error::config("environment.b", "residual regime requires b > 0"));
                }
                if let Some(m) = mu_high {
                    if m.is_empty() {
                        return Err(Error::config("environment.mu_high", "must not be empty"));
                    }
                }
            }
            EnvironmentSpec::Explicit { arms, .. } => {
                if arms.is_empty() {
                    return Err(Error::config("environment.arms", "at least one arm is required"));
                }
            }
        }
        Ok(())
    }

    pub fn num_arms(&self) -> usize {
        match &self.environment {
            EnvironmentSpec::Synthetic { arms, .. } => *arms,
            EnvironmentSpec::Proxy { regime: ProxyRegime::Checkpoint5Arm, .. } => crate::env::CHECKPOINT_MEANS.len(),
            EnvironmentSpec::Proxy { mu_high, .. } => mu_high.as_ref().map_or(DEFAULT_PROXY_MEANS.len(), Vec::len),
            EnvironmentSpec::Explicit { arms, .. } => arms.len(),
        }
    }

    /// `T_Λ`.
    pub fn horizon(&self) -> u64 {
        self.costs.query_horizon(self.budget.total)
    }

    pub fn confidence(&self) -> Result<ConfidenceConfig> {
        let a = &self.algorithm;
        ConfidenceConfig::for_budget(a.rho, a.delta, self.num_arms(), &self.costs, self.budget.total)
    }

    pub fn tacc_params(&self) -> Result<TaccParams> {
        let a = &self.algorithm;
        TaccParams::new(a.gamma, a.eta, a.s0, self.budget.total, &self.costs)
    }

    pub fn checkpoints(&self) -> Vec<f64> {
        if self.budget.checkpoints.is_empty() {
            vec![self.budget.total]
        } else {
            self.budget.checkpoints.clone()
        }
    }

    /// Builds the instance for `seed`; every method run on that seed sees it.
    pub fn build_instance(&self, seed: u64) -> Result<BanditInstance> {
        let horizon = self.horizon();
        let mut rng = instance_rng(seed);
        match &self.environment {
            EnvironmentSpec::Synthetic { arms, means, zeta, r, sigma } => {
                let spec = SyntheticSpec {
                    arms: *arms,
                    means: *means,
                    zeta: *zeta,
                    costs: self.costs,
                    sigma: *sigma,
                };
                make_synthetic(&spec, *r, horizon, &mut rng)
            }
            EnvironmentSpec::Proxy { regime, zeta, r, b, n0, mu_high } => {
                let params = ProxyParams {
                    zeta: *zeta,
                    r: *r,
                    b: *b,
                    n0: *n0,
                    mu_high: Some(mu_high.clone().unwrap_or_else(|| DEFAULT_PROXY_MEANS.to_vec())),
                    costs: self.costs,
                };
                make_proxy_judge_instance(*regime, &params, horizon, &mut rng)
            }
            EnvironmentSpec::Explicit { arms, noise, clip } => {
                let specs = arms
                    .iter()
                    .map(|a| {
                        let env = MismatchEnvelope::new(a.envelope.clone(), horizon)?;
                        Ok(ArmSpec::new(a.mu_high, std::sync::Arc::new(env), a.trajectory.clone()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                BanditInstance::new(specs, self.costs, *noise, *clip)
            }
        }
    }

    /// Hex SHA-256 of the canonical TOML form, ignoring run-only settings.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.run = RunConfig::default();
        canonical.preset = None;
        let text = canonical.to_toml_string().unwrap_or_default();
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// Stable identifier of one `(config, seed, method)` run.
    pub fn run_id(&self, seed: u64, method: Method) -> String {
        let mut h = Sha256::new();
        h.update(self.digest().as_bytes());
        h.update(seed.to_le_bytes());
        h.update(method.name().as_bytes());
        hex::encode(&h.finalize()[..8])
    }
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (k, v) in overlay {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Registered parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    SetA,
    SetB,
    Residual200,
    Residual500,
    Residual1000,
    Vanishing500,
    Checkpoint5Arm,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::SetA,
        Preset::SetB,
        Preset::Residual200,
        Preset::Residual500,
        Preset::Residual1000,
        Preset::Vanishing500,
        Preset::Checkpoint5Arm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::SetA => "set-a",
            Preset::SetB => "set-b",
            Preset::Residual200 => "residual-200",
            Preset::Residual500 => "residual-500",
            Preset::Residual1000 => "residual-1000",
            Preset::Vanishing500 => "vanishing-500",
            Preset::Checkpoint5Arm => "checkpoint-5arm",
        }
    }

    pub fn config(self) -> ExperimentConfig {
        let synthetic = |arms, means, zeta, high: f64, gamma, s0, total: f64| ExperimentConfig {
            preset: Some(self.name().to_string()),
            environment: EnvironmentSpec::Synthetic { arms, means, zeta, r: 0.5, sigma: 1.0 },
            costs: CostModel { low: 1.0, high },
            algorithm: AlgorithmConfig {
                gamma,
                eta: 1e-4,
                s0,
                rho: 2.0,
                delta: 0.05,
                fixed_bias: None,
                dyadic_limit: default_dyadic(),
            },
            budget: BudgetConfig { total, checkpoints: dyadic_checkpoints(total, 5) },
            run: RunConfig {
                seeds: SeedRange { start: 0, end: 10 },
                methods: vec![Method::Tacc, Method::MfUcb, Method::Ucb],
                ..RunConfig::default()
            },
        };
        let proxy = |regime, high: f64, b, gamma, total: f64, seeds| ExperimentConfig {
            preset: Some(self.name().to_string()),
            environment: EnvironmentSpec::Proxy {
                regime,
                zeta: 0.4,
                r: 0.75,
                b,
                n0: 0,
                mu_high: (regime != ProxyRegime::Checkpoint5Arm).then(|| DEFAULT_PROXY_MEANS.to_vec()),
            },
            costs: CostModel { low: 1.0, high },
            algorithm: AlgorithmConfig {
                gamma,
                eta: 1e-4,
                s0: 128,
                rho: PROXY_RHO,
                delta: 0.05,
                fixed_bias: None,
                dyadic_limit: default_dyadic(),
            },
            budget: BudgetConfig { total, checkpoints: dyadic_checkpoints(total, 6) },
            run: RunConfig {
                seeds: SeedRange { start: 0, end: seeds },
                methods: vec![Method::Tacc, Method::Dnc, Method::MfUcb, Method::Ucb],
                ..RunConfig::default()
            },
        };
        match self {
            Preset::SetA => synthetic(200, MeanDistribution::Uniform { low: 0.1, high: 0.9 }, 0.2, 10.0, 0.063, 10, 200_000.0),
            Preset::SetB => synthetic(500, MeanDistribution::Normal { mean: 0.0, std: 1.0 }, 1.0, 50.0, 0.141, 50, 1_000_000.0),
            Preset::Residual200 => proxy(ProxyRegime::Residual, 200.0, 0.05, 0.025, 128_000.0, 200),
            Preset::Residual500 => proxy(ProxyRegime::Residual, 500.0, 0.05, 0.025, 128_000.0, 200),
            Preset::Residual1000 => proxy(ProxyRegime::Residual, 1000.0, 0.05, 0.025, 128_000.0, 200),
            Preset::Vanishing500 => proxy(ProxyRegime::Vanishing, 500.0, 0.0, 0.025, 128_000.0, 200),
            Preset::Checkpoint5Arm => proxy(ProxyRegime::Checkpoint5Arm, 500.0, 0.05, 0.03, 256_000.0, 120),
        }
    }
}

/// `ρ` for Bernoulli rewards, which are 1/2-sub-Gaussian (`ρ = 2σ²`).
pub const PROXY_RHO: f64 = 0.5;

/// `total/2^{n-1}, …, total/2, total`.
fn dyadic_checkpoints(total: f64, n: u32) -> Vec<f64> {
    (0..n).rev().map(|i| total / f64::from(1u32 << i)).collect()
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL.iter().copied().find(|p| p.name() == s.trim()).ok_or_else(|| {
            Error::config(
                "preset",
                format!(
                    "unknown preset `{}` (expected one of: {})",
                    s,
                    Preset::ALL.map(Preset::name).join(", ")
                ),
            )
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_a_preset_values() {
        let c = Preset::SetA.config();
        assert_eq!(c.algorithm.gamma, 0.063);
        assert_eq!(c.algorithm.s0, 10);
        assert_eq!(c.algorithm.eta, 1e-4);
        assert_eq!((c.costs.low, c.costs.high), (1.0, 10.0));
        c.validate().unwrap();
    }

    #[test]
    fn set_b_preset_values() {
        let c = Preset::SetB.config();
        assert_eq!(c.num_arms(), 500);
        assert_eq!(c.algorithm.gamma, 0.141);
        assert_eq!(c.algorithm.s0, 50);
        assert_eq!((c.costs.low, c.costs.high), (1.0, 50.0));
        c.validate().unwrap();
    }

    #[test]
    fn residual_500_preset_values() {
        let c = Preset::Residual500.config();
        assert_eq!(c.costs.high, 500.0);
        let EnvironmentSpec::Proxy { regime, zeta, r, b, .. } = &c.environment else { panic!() };
        assert_eq!((*regime, *zeta, *r, *b), (ProxyRegime::Residual, 0.4, 0.75, 0.05));
        assert_eq!(c.algorithm.gamma, 0.025);
        assert_eq!(c.algorithm.eta, 1e-4);
        assert_eq!(c.algorithm.s0, 128);
        assert_eq!(c.budget.total, 128_000.0);
        assert_eq!(c.run.seeds.len(), 200);
        c.validate().unwrap();
    }

    #[test]
    fn every_preset_validates_and_round_trips() {
        for p in Preset::ALL {
            let c = p.config();
            c.validate().unwrap();
            let text = c.to_toml_string().unwrap();
            assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c, "{}", p);
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
    }

    #[test]
    fn overlay_on_preset() {
        let c = ExperimentConfig::from_toml_str(
            "preset = \"set-a\"\nenvironment.arms = 20\nbudget.total = 20000.0\nbudget.checkpoints = []\nrun.seeds = \"3..5\"\n",
        )
        .unwrap();
        assert_eq!(c.num_arms(), 20);
        assert_eq!(c.algorithm.gamma, 0.063);
        assert_eq!(c.run.seeds, SeedRange { start: 3, end: 5 });
        assert_eq!(c.checkpoints(), vec![20000.0]);
    }

    #[test]
    fn rejects_unknown_keys() {
        let err = ExperimentConfig::from_toml_str("preset = \"set-a\"\nalgorithm.gama = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("gama"), "{}", err);
    }

    #[test]
    fn rejects_oversized_continuation_block() {
        let err = ExperimentConfig::from_toml_str("preset = \"set-a\"\nalgorithm.s0 = 11\n").unwrap_err();
        assert!(err.to_string().contains("continuation block"), "{}", err);
        assert!(err.to_string().contains("algorithm.s0"), "{}", err);
    }

    #[test]
    fn rejects_bad_checkpoints_and_ranges() {
        assert!(ExperimentConfig::from_toml_str("preset = \"set-a\"\nbudget.checkpoints = [10.0, 5.0]\n").is_err());
        assert!(ExperimentConfig::from_toml_str("preset = \"set-a\"\nbudget.checkpoints = [1000.0]\n").is_err());
        assert!(ExperimentConfig::from_toml_str("preset = \"set-a\"\nalgorithm.delta = 1.5\n").is_err());
        assert!(ExperimentConfig::from_toml_str("preset = \"set-a\"\nalgorithm.gamma = 1.5\n").is_err());
        assert!(ExperimentConfig::from_toml_str("preset = \"nope\"\n").is_err());
        assert!("5..5".parse::<SeedRange>().is_err());
    }

    #[test]
    fn run_ids_are_stable_and_distinct() {
        let c = Preset::SetA.config();
        assert_eq!(c.run_id(1, Method::Tacc), c.run_id(1, Method::Tacc));
        assert_ne!(c.run_id(1, Method::Tacc), c.run_id(2, Method::Tacc));
        assert_ne!(c.run_id(1, Method::Tacc), c.run_id(1, Method::Ucb));
        assert_eq!(c.run_id(1, Method::Tacc).len(), 16);
    }

    #[test]
    fn same_seed_same_instance() {
        let c = Preset::Residual500.config();
        let a = c.build_instance(4).unwrap();
        let b = c.build_instance(4).unwrap();
        for (x, y) in a.arms.iter().zip(&b.arms) {
            assert_eq!(x.mu_high.to_bits(), y.mu_high.to_bits());
            assert_eq!(x.trajectory, y.trajectory);
        }
    }
}

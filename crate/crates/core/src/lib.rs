//! Two-fidelity multi-armed bandits with an improving low-fidelity source.
//!
//! The crate is organized in four layers:
//!
//! - [`env`]: bandit instances, low-fidelity bias trajectories, mismatch
//!   envelopes and seeded observation sampling.
//! - [`confidence`]: budget-uniform radii and the fidelity-specific
//!   confidence intervals for the high-fidelity target.
//! - [`policy`]: TACC (optimistic selection with bounded low-fidelity
//!   continuation), its no-continuation ablation, static baselines and the
//!   RDFE phase-elimination reference scheme.
//! - [`harness`]: seeded simulation, cost-weighted regret bookkeeping,
//!   theory diagnostics and summary statistics.
//!
//! [`config`] ties them together into reproducible experiment descriptions.

pub mod config;
pub mod confidence;
pub mod env;
mod error;
pub mod harness;
pub mod policy;

pub use confidence::{ConfidenceConfig, FidelityStats, Interval};
pub use config::{ExperimentConfig, Preset};
pub use env::{
    ArmSpec, BanditInstance, BiasProfile, CostModel, EnvelopeKind, Fidelity, MismatchEnvelope,
    NoiseModel,
};
pub use error::{Error, Result};
pub use harness::{RunRecord, SummaryStats};
pub use policy::{Action, Method, Policy, PolicyState, Reason, TaccParams};

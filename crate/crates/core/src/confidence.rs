//! Budget-uniform confidence radii and the fidelity-specific intervals for the
//! high-fidelity target mean.
//!
//! With `ℓ = ρ·ln(2·K·T/δ)` the radius after `n` samples is `G(n) = sqrt(ℓ/n)`.
//! High-fidelity intervals are `mean ± G(n)`; low-fidelity intervals are widened
//! by the mismatch bound, `mean ± (G(n) + B(n))`, so both cover `μ^(H)`.

use serde::{Deserialize, Serialize};

use crate::env::{CostModel, MismatchEnvelope};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceConfig {
    pub rho: f64,
    pub delta: f64,
    pub arms: usize,
    /// Query horizon `T_Λ`.
    pub horizon: u64,
    log_term: f64,
}

impl ConfidenceConfig {
    pub fn new(rho: f64, delta: f64, arms: usize, horizon: u64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::config("algorithm.rho", "must be finite and > 0"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::config("algorithm.delta", "must lie in (0, 1)"));
        }
        if arms == 0 || horizon == 0 {
            return Err(Error::config("algorithm", "arm count and horizon must be >= 1"));
        }
        let arg = 2.0 * arms as f64 * horizon as f64 / delta;
        if !(arg > 1.0) {
            return Err(Error::config("algorithm.delta", "log argument 2KT/delta must exceed 1"));
        }
        Ok(ConfidenceConfig {
            rho,
            delta,
            arms,
            horizon,
            log_term: rho * arg.ln(),
        })
    }

    /// Config for a budget `Λ`, using `T_Λ = ⌈Λ/λ^(L)⌉`.
    pub fn for_budget(rho: f64, delta: f64, arms: usize, costs: &CostModel, budget: f64) -> Result<Self> {
        Self::new(rho, delta, arms, costs.query_horizon(budget))
    }

    /// Builds a config directly from `ℓ`; used where only the log factor matters.
    pub fn from_log_term(log_term: f64) -> Result<Self> {
        if !(log_term > 0.0 && log_term.is_finite()) {
            return Err(Error::domain("log term must be finite and > 0"));
        }
        Ok(ConfidenceConfig {
            rho: log_term,
            delta: 0.5,
            arms: 1,
            horizon: 1,
            log_term,
        })
    }

    /// `ℓ_Λ`.
    #[inline]
    pub fn log_term(&self) -> f64 {
        self.log_term
    }

    /// `G_Λ(n, δ)`; `n = 0` is a domain error.
    pub fn radius(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::domain("confidence radius needs at least one sample"));
        }
        Ok(self.radius_unchecked(n))
    }

    #[inline]
    pub(crate) fn radius_unchecked(&self, n: u64) -> f64 {
        (self.log_term / n as f64).sqrt()
    }

    /// `N_γ = min{n ≥ 1 : G(n) < γ}`.
    pub fn n_gamma(&self, gamma: f64) -> Result<u64> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::domain("gamma must be finite and > 0"));
        }
        let closed = (self.log_term / (gamma * gamma)).floor();
        if closed >= u64::MAX as f64 {
            return Err(Error::domain("gamma too small: N_gamma overflows"));
        }
        let mut n = closed as u64 + 1;
        // Settle floating-point ties against the defining predicate.
        while self.radius_unchecked(n) >= gamma {
            n += 1;
        }
        while n > 1 && self.radius_unchecked(n - 1) < gamma {
            n -= 1;
        }
        Ok(n)
    }

    /// `1 + ⌈4ℓ/Δ²⌉`, the high-fidelity pull cap of a suboptimal arm with gap `Δ`.
    pub fn high_pull_cap(&self, gap: f64) -> f64 {
        1.0 + (4.0 * self.log_term / (gap * gap)).ceil()
    }
}

/// Count and running mean of one arm at one fidelity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FidelityStats {
    pub count: u64,
    mean: f64,
}

impl FidelityStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.mean += (x - self.mean) / self.count as f64;
    }

    /// Empirical mean; `None` before the first sample.
    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then_some(self.mean)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lcb: f64,
    pub ucb: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.ucb - self.lcb
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lcb <= x && x <= self.ucb
    }
}

fn checked_mean(stats: &FidelityStats) -> Result<f64> {
    stats
        .mean()
        .ok_or_else(|| Error::domain("confidence bounds need at least one sample"))
}

/// Low-fidelity interval `mean ± (G(n) + B(n))` for the high-fidelity target.
pub fn low_bounds(cfg: &ConfidenceConfig, stats: &FidelityStats, envelope: &MismatchEnvelope) -> Result<Interval> {
    let mean = checked_mean(stats)?;
    let half = cfg.radius_unchecked(stats.count) + envelope.bound_clamped(stats.count);
    Ok(Interval { lcb: mean - half, ucb: mean + half })
}

/// Low-fidelity interval with a fixed bias allowance instead of `B(n)`.
pub fn low_bounds_fixed(cfg: &ConfidenceConfig, stats: &FidelityStats, bias: f64) -> Result<Interval> {
    let mean = checked_mean(stats)?;
    let half = cfg.radius_unchecked(stats.count) + bias;
    Ok(Interval { lcb: mean - half, ucb: mean + half })
}

/// High-fidelity interval `mean ± G(n)`.
pub fn high_bounds(cfg: &ConfidenceConfig, stats: &FidelityStats) -> Result<Interval> {
    let mean = checked_mean(stats)?;
    let half = cfg.radius_unchecked(stats.count);
    Ok(Interval { lcb: mean - half, ucb: mean + half })
}

/// The aggregate optimistic score: the smaller of the two upper bounds.
#[inline]
pub fn aggregate_ucb(low_ucb: f64, high_ucb: f64) -> f64 {
    low_ucb.min(high_ucb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvelopeKind;
    use approx::assert_relative_eq;

    fn unit_log() -> ConfidenceConfig {
        ConfidenceConfig::from_log_term(1.0).unwrap()
    }

    fn stats_with_mean(mean: f64, count: u64) -> FidelityStats {
        let mut s = FidelityStats::default();
        for _ in 0..count {
            s.push(mean);
        }
        s
    }

    #[test]
    fn radius_examples() {
        // ρ = 1 and 2KT/δ = e.
        let cfg = ConfidenceConfig::new(1.0, 2.0 / std::f64::consts::E, 1, 1).unwrap();
        assert_relative_eq!(cfg.radius(1).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(cfg.radius(4).unwrap(), 0.5, epsilon = 1e-12);
        assert!(cfg.radius(0).is_err());
    }

    #[test]
    fn radius_set_a_scale() {
        let cfg = ConfidenceConfig::new(2.0, 0.05, 200, 10_000).unwrap();
        // sqrt(2 ln(8e7) / 100), evaluated independently.
        assert_relative_eq!(cfg.radius(100).unwrap(), 0.603_283_303_144_354_5, epsilon = 1e-9);
    }

    #[test]
    fn radius_times_sqrt_n_is_constant() {
        let cfg = ConfidenceConfig::new(2.0, 0.05, 5, 1000).unwrap();
        let c = cfg.radius(1).unwrap();
        for n in [2u64, 3, 10, 999, 1_000_000] {
            assert_relative_eq!(cfg.radius(n).unwrap() * (n as f64).sqrt(), c, max_relative = 1e-12);
        }
    }

    #[test]
    fn n_gamma_examples() {
        assert_eq!(unit_log().n_gamma(1.0).unwrap(), 2);
        assert_eq!(unit_log().n_gamma(2.0).unwrap(), 1);
        assert!(unit_log().n_gamma(0.0).is_err());
        assert!(unit_log().n_gamma(-1.0).is_err());
    }

    #[test]
    fn low_and_high_bounds() {
        let cfg = ConfidenceConfig::from_log_term(0.01).unwrap(); // radius(1) = 0.1
        let env = MismatchEnvelope::new(EnvelopeKind::Constant { zeta: 0.05 }, 10).unwrap();
        let s = stats_with_mean(0.5, 1);
        let lo = low_bounds(&cfg, &s, &env).unwrap();
        assert_relative_eq!(lo.lcb, 0.35, epsilon = 1e-12);
        assert_relative_eq!(lo.ucb, 0.65, epsilon = 1e-12);
        let hi = high_bounds(&cfg, &s).unwrap();
        assert_relative_eq!(hi.lcb, 0.4, epsilon = 1e-12);
        assert_relative_eq!(hi.ucb, 0.6, epsilon = 1e-12);
        assert_relative_eq!(hi.width(), 2.0 * cfg.radius(1).unwrap(), epsilon = 1e-15);

        let zero = MismatchEnvelope::new(EnvelopeKind::Constant { zeta: 0.0 }, 10).unwrap();
        assert_eq!(low_bounds(&cfg, &s, &zero).unwrap(), hi);
        assert!(low_bounds(&cfg, &FidelityStats::default(), &env).is_err());
        assert!(high_bounds(&cfg, &FidelityStats::default()).is_err());
    }

    #[test]
    fn width_vanishes() {
        let cfg = ConfidenceConfig::new(2.0, 0.05, 2, 100).unwrap();
        let s = stats_with_mean(0.0, 1);
        let mut big = s;
        big.count = 1 << 50;
        assert!(high_bounds(&cfg, &big).unwrap().width() < 1e-6);
    }

    #[test]
    fn aggregate_is_min() {
        assert_eq!(aggregate_ucb(0.65, 0.60), 0.60);
        assert_eq!(aggregate_ucb(0.60, 0.60), 0.60);
    }

    #[test]
    fn running_mean_matches_shadow_sum() {
        let mut s = FidelityStats::default();
        let mut sum = 0.0;
        for i in 0..1000 {
            let x = ((i * 7919) % 101) as f64 / 17.0 - 2.0;
            s.push(x);
            sum += x;
        }
        assert_relative_eq!(s.mean().unwrap(), sum / 1000.0, epsilon = 1e-12);
        assert_eq!(FidelityStats::default().mean(), None);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(ConfidenceConfig::new(0.0, 0.05, 2, 10).is_err());
        assert!(ConfidenceConfig::new(2.0, 1.0, 2, 10).is_err());
        assert!(ConfidenceConfig::new(2.0, 0.05, 0, 10).is_err());
        assert!(ConfidenceConfig::new(2.0, 0.99, 1, 1).is_ok());
    }
}

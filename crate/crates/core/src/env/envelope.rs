use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed-form or tabulated description of a cumulative mismatch certificate
/// `U(n) = Σ_{τ≤n} u(τ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvelopeKind {
    /// `u(τ) = ζ·τ^(−r)`.
    PowerLaw { zeta: f64, r: f64 },
    /// `u(τ) = |b + a·(τ+n0)^(−r)|`.
    Residual { b: f64, a: f64, n0: u64, r: f64 },
    /// `u(τ) = ζ`.
    Constant { zeta: f64 },
    /// `U(n) = prefix_sums[n-1]`.
    TabulatedPrefix { prefix_sums: Vec<f64> },
}

impl EnvelopeKind {
    fn validate(&self, horizon: u64) -> Result<()> {
        let bad = |msg: &str| Err(Error::config("envelope", msg.to_string()));
        match *self {
            EnvelopeKind::PowerLaw { zeta, r } => {
                if !(zeta >= 0.0 && zeta.is_finite()) {
                    return bad("power-law zeta must be finite and >= 0");
                }
                if !(r > 0.0 && r.is_finite()) {
                    return bad("power-law r must be > 0");
                }
            }
            EnvelopeKind::Residual { b, a, r, .. } => {
                if !(b.is_finite() && a.is_finite()) {
                    return bad("residual b and a must be finite");
                }
                if !(r > 0.0 && r.is_finite()) {
                    return bad("residual r must be > 0");
                }
            }
            EnvelopeKind::Constant { zeta } => {
                if !(zeta >= 0.0 && zeta.is_finite()) {
                    return bad("constant zeta must be finite and >= 0");
                }
            }
            EnvelopeKind::TabulatedPrefix { ref prefix_sums } => {
                if (prefix_sums.len() as u64) < horizon {
                    return bad("tabulated prefix sums are shorter than the horizon");
                }
                let mut prev = 0.0;
                for &u in prefix_sums {
                    if !(u.is_finite() && u >= prev) {
                        return bad("tabulated prefix sums must be finite, >= 0 and nondecreasing");
                    }
                    prev = u;
                }
            }
        }
        Ok(())
    }

    /// Per-query increment `u(τ)`; `tau >= 1`.
    fn increment(&self, tau: u64) -> f64 {
        let t = tau as f64;
        match *self {
            EnvelopeKind::PowerLaw { zeta, r } => zeta * t.powf(-r),
            EnvelopeKind::Residual { b, a, n0, r } => (b + a * (t + n0 as f64).powf(-r)).abs(),
            EnvelopeKind::Constant { zeta } => zeta,
            EnvelopeKind::TabulatedPrefix { ref prefix_sums } => {
                let i = (tau - 1) as usize;
                let prev = if i == 0 { 0.0 } else { prefix_sums[i - 1] };
                prefix_sums[i] - prev
            }
        }
    }
}

/// A mismatch certificate tabulated over `1..=horizon`.
///
/// Holds `U(n)` and the selected-average bound `B(n) = sup_{n≤s≤horizon} U(s)/s`.
/// Instances are immutable after construction and shared between arms and runs.
#[derive(Debug)]
pub struct MismatchEnvelope {
    kind: EnvelopeKind,
    cumulative: Vec<f64>,
    bound: Vec<f64>,
    clamped: AtomicU64,
}

impl MismatchEnvelope {
    pub fn new(kind: EnvelopeKind, horizon: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::config("envelope.horizon", "must be >= 1"));
        }
        kind.validate(horizon)?;
        let h = horizon as usize;
        let mut cumulative = Vec::with_capacity(h);
        match &kind {
            EnvelopeKind::TabulatedPrefix { prefix_sums } => {
                cumulative.extend_from_slice(&prefix_sums[..h]);
            }
            _ => {
                let mut acc = 0.0;
                for tau in 1..=horizon {
                    acc += kind.increment(tau);
                    cumulative.push(acc);
                }
            }
        }
        let mut bound = vec![0.0; h];
        let mut running = f64::NEG_INFINITY;
        for i in (0..h).rev() {
            running = running.max(cumulative[i] / (i + 1) as f64);
            bound[i] = running;
        }
        let envelope = MismatchEnvelope {
            kind,
            cumulative,
            bound,
            clamped: AtomicU64::new(0),
        };
        if envelope.has_monotone_averages() {
            debug_assert!(envelope.sup_attained_at_start());
        }
        Ok(envelope)
    }

    pub fn kind(&self) -> &EnvelopeKind {
        &self.kind
    }

    pub fn horizon(&self) -> u64 {
        self.cumulative.len() as u64
    }

    /// Per-query certified discrepancy `u(τ) = U(τ) − U(τ−1)`.
    pub fn increment(&self, tau: u64) -> Result<f64> {
        let u = self.cumulative(tau)?;
        let prev = if tau == 1 { 0.0 } else { self.cumulative[(tau - 2) as usize] };
        Ok(u - prev)
    }

    /// `U(n)` for `1 ≤ n ≤ horizon`.
    pub fn cumulative(&self, n: u64) -> Result<f64> {
        self.check(n)?;
        Ok(self.cumulative[(n - 1) as usize])
    }

    /// `B(n)` for `1 ≤ n ≤ horizon`.
    pub fn bound(&self, n: u64) -> Result<f64> {
        self.check(n)?;
        Ok(self.bound[(n - 1) as usize])
    }

    /// `B(n)` with `n` beyond the horizon clamped to `B(horizon)`.
    ///
    /// Clamped lookups are counted (see [`Self::clamped_lookups`]) and logged once.
    /// `n = 0` carries no information and yields `+∞`.
    #[inline]
    pub fn bound_clamped(&self, n: u64) -> f64 {
        if n == 0 {
            return f64::INFINITY;
        }
        let h = self.bound.len() as u64;
        if n > h {
            if self.clamped.fetch_add(1, Ordering::Relaxed) == 0 {
                log::warn!(
                    "mismatch bound queried at n={} beyond horizon {}; using B(horizon)",
                    n,
                    h
                );
            }
            return self.bound[(h - 1) as usize];
        }
        self.bound[(n - 1) as usize]
    }

    pub fn clamped_lookups(&self) -> u64 {
        self.clamped.load(Ordering::Relaxed)
    }

    /// Closed-form families whose running averages `U(n)/n` are nonincreasing.
    pub fn has_monotone_averages(&self) -> bool {
        match self.kind {
            EnvelopeKind::PowerLaw { .. } | EnvelopeKind::Constant { .. } => true,
            // |b + a x| with x decreasing stays monotone unless the sum changes sign.
            EnvelopeKind::Residual { b, a, .. } => b * a >= 0.0,
            EnvelopeKind::TabulatedPrefix { .. } => false,
        }
    }

    /// Whether `B(n) = U(n)/n` for every tabulated `n`, up to rounding in the
    /// prefix sums.
    pub fn sup_attained_at_start(&self) -> bool {
        self.cumulative
            .iter()
            .zip(&self.bound)
            .enumerate()
            .all(|(i, (&u, &b))| (b - u / (i + 1) as f64) <= 1e-9 * b.abs().max(1.0))
    }

    fn check(&self, n: u64) -> Result<()> {
        if n == 0 || n > self.horizon() {
            return Err(Error::domain(format!(
                "envelope index {} outside [1, {}]",
                n,
                self.horizon()
            )));
        }
        Ok(())
    }
}

impl PartialEq for MismatchEnvelope {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.cumulative == other.cumulative && self.bound == other.bound
    }
}

/// `B(n)` of an envelope (`envelope_B`).
pub fn envelope_bound(envelope: &MismatchEnvelope, n: u64) -> Result<f64> {
    envelope.bound(n)
}

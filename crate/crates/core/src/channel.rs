//! Impulse responses of the unbounded 3-D diffusion channel seen by a fully
//! absorbing or a passive (transparent) spherical receiver.
//!
//! All quantities are SI: meters, seconds, m²/s, m³.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{McvdError, Result};
use crate::special::erf;

/// Upper bound on `r/(r+d)` for the passive point-observation model.
pub const PASSIVE_VALIDITY_LIMIT: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReceiverKind {
    Absorbing,
    Passive,
}

impl std::fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReceiverKind::Absorbing => "absorbing",
            ReceiverKind::Passive => "passive",
        })
    }
}

/// Geometry and diffusion constants of a link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Transmitter to nearest receiver surface point (m).
    pub d: f64,
    /// Receiver radius (m).
    pub r: f64,
    /// Diffusion coefficient (m²/s).
    pub diffusion: f64,
    /// Receiver volume (m³), `4/3·π·r³`.
    pub volume: f64,
    pub kind: ReceiverKind,
    /// Set when a passive receiver was accepted outside `r/(r+d) < 0.15`.
    pub validity_override: bool,
}

impl ChannelParams {
    /// Builds and validates a parameter set. Passive receivers must satisfy
    /// `r/(r+d) < 0.15` unless `override_validity` is set.
    pub fn new(kind: ReceiverKind, d: f64, r: f64, diffusion: f64, override_validity: bool) -> Result<Self> {
        for (name, v) in [("d", d), ("r", r), ("D", diffusion)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(McvdError::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        let p = ChannelParams {
            d,
            r,
            diffusion,
            volume: 4.0 / 3.0 * PI * r.powi(3),
            kind,
            validity_override: false,
        };
        if kind == ReceiverKind::Passive && p.validity_ratio() >= PASSIVE_VALIDITY_LIMIT {
            if !override_validity {
                return Err(McvdError::Validity { ratio: p.validity_ratio() });
            }
            return Ok(ChannelParams { validity_override: true, ..p });
        }
        Ok(p)
    }

    pub fn absorbing(d: f64, r: f64, diffusion: f64) -> Result<Self> {
        Self::new(ReceiverKind::Absorbing, d, r, diffusion, false)
    }

    pub fn passive(d: f64, r: f64, diffusion: f64) -> Result<Self> {
        Self::new(ReceiverKind::Passive, d, r, diffusion, false)
    }

    /// d = 5 µm, r = 5 µm, D = 79.4 µm²/s.
    pub fn default_absorbing() -> Self {
        Self::absorbing(5e-6, 5e-6, 79.4e-12).expect("valid defaults")
    }

    /// d = 10 µm, r = 5 µm, D = 79.4 µm²/s. These sit outside the passive
    /// validity region (ratio 1/3), so the override flag is set.
    pub fn default_passive() -> Self {
        Self::new(ReceiverKind::Passive, 10e-6, 5e-6, 79.4e-12, true).expect("valid defaults")
    }

    pub fn default_for(kind: ReceiverKind) -> Self {
        match kind {
            ReceiverKind::Absorbing => Self::default_absorbing(),
            ReceiverKind::Passive => Self::default_passive(),
        }
    }

    /// `r/(r+d)`.
    pub fn validity_ratio(&self) -> f64 {
        self.r / (self.r + self.d)
    }

    fn require(&self, kind: ReceiverKind, what: &'static str) -> Result<()> {
        if self.kind != kind {
            return Err(McvdError::KindMismatch(what));
        }
        Ok(())
    }

    /// Absorption rate density `h(t)`.
    pub fn hit_rate(&self, t: f64) -> Result<f64> {
        self.require(ReceiverKind::Absorbing, "hit_rate (absorbing only)")?;
        if !(t > 0.0) {
            return Err(McvdError::Domain(format!("hit_rate needs t > 0, got {t}")));
        }
        Ok(self.h(t))
    }

    /// `h(t)` without checks; `t <= 0` maps to the limit value 0.
    #[inline]
    pub(crate) fn h(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let d = self.d;
        self.r / (d + self.r) * d / (4.0 * PI * self.diffusion * t * t * t).sqrt()
            * (-d * d / (4.0 * self.diffusion * t)).exp()
    }

    /// `erf(d/√(4Dt))` with `t = 0` read as `erf(+∞) = 1` and `t = ∞` as 0.
    #[inline]
    pub(crate) fn erf_term(&self, t: f64) -> f64 {
        if t <= 0.0 {
            1.0
        } else {
            erf(self.d / (4.0 * self.diffusion * t).sqrt())
        }
    }

    /// Expected fraction of molecules absorbed in `[t1, t2]`.
    pub fn hit_fraction(&self, t1: f64, t2: f64) -> Result<f64> {
        self.require(ReceiverKind::Absorbing, "hit_fraction (absorbing only)")?;
        if t1 < 0.0 || t2 < 0.0 || t1.is_nan() || t2.is_nan() {
            return Err(McvdError::Domain(format!("negative time in [{t1}, {t2}]")));
        }
        if t1 > t2 {
            return Err(McvdError::Argument(format!("t1 = {t1} > t2 = {t2}")));
        }
        Ok(self.f(t1, t2))
    }

    #[inline]
    pub(crate) fn f(&self, t1: f64, t2: f64) -> f64 {
        if t1 == t2 {
            return 0.0;
        }
        self.r / (self.d + self.r) * (self.erf_term(t1) - self.erf_term(t2))
    }

    /// `F(t1 + i·Ts, t2 + i·Ts)`.
    pub fn tap_fraction(&self, i: usize, t1: f64, t2: f64, ts: f64) -> Result<f64> {
        let shift = i as f64 * ts;
        self.hit_fraction(t1 + shift, t2 + shift)
    }

    /// Probability of finding a molecule inside the passive volume at `t`.
    pub fn passive_prob(&self, t: f64) -> Result<f64> {
        self.require(ReceiverKind::Passive, "passive_prob (passive only)")?;
        if !(t > 0.0) {
            return Err(McvdError::Domain(format!("passive_prob needs t > 0, got {t}")));
        }
        Ok(self.p(t))
    }

    #[inline]
    pub(crate) fn p(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let dr = self.d + self.r;
        self.volume / (4.0 * PI * self.diffusion * t).powf(1.5)
            * (-dr * dr / (4.0 * self.diffusion * t)).exp()
    }

    /// Kind-dispatched impulse response, `h(t)` or `p(t)`, with value 0 at `t <= 0`.
    pub fn cir(&self, t: f64) -> f64 {
        match self.kind {
            ReceiverKind::Absorbing => self.h(t),
            ReceiverKind::Passive => self.p(t),
        }
    }

    /// Time of the CIR maximum: `d²/(6D)` (absorbing) or `(d+r)²/(6D)` (passive).
    pub fn peak_time(&self) -> f64 {
        let x = match self.kind {
            ReceiverKind::Absorbing => self.d,
            ReceiverKind::Passive => self.d + self.r,
        };
        x * x / (6.0 * self.diffusion)
    }
}

//! Per-tap Gaussian statistics of the received molecule count.
//!
//! Tap `i` of a [`TapStats`] holds the per-molecule mean and variance
//! contributed by a bit sent `i` symbols ago, so the count for a bit
//! pattern `b` is Gaussian with mean `Q·Σ b_i·mean_i` and variance
//! `Q·Σ b_i·var_i`.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, ReceiverKind};
use crate::error::{McvdError, Result};

/// Transmission parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    /// Molecules released for a '1'.
    pub q: u64,
    /// Symbol duration (s).
    pub ts: f64,
    /// Number of interfering past symbols.
    pub isi_len: usize,
    /// Samples per symbol (passive receiver), sample indices run over `0..=n`.
    pub samples: usize,
    /// Sampling interval (s).
    pub t_s: f64,
}

impl LinkConfig {
    /// Link with a single sample per symbol (`t_s = Ts`), the usual choice
    /// for an absorbing receiver.
    pub fn new(q: u64, ts: f64, isi_len: usize) -> Self {
        LinkConfig { q, ts, isi_len, samples: 1, t_s: ts }
    }

    /// Link with the sampling grid tied to the channel: for a passive receiver
    /// `t_s = t_max/6` and `N = ⌊Ts/t_s⌋`.
    pub fn for_channel(q: u64, ts: f64, isi_len: usize, p: &ChannelParams) -> Self {
        match p.kind {
            ReceiverKind::Absorbing => Self::new(q, ts, isi_len),
            ReceiverKind::Passive => {
                let t_s = p.peak_time() / 6.0;
                let samples = ((ts / t_s).floor() as usize).max(1);
                LinkConfig { q, ts, isi_len, samples, t_s }
            }
        }
    }

    pub fn with_q(self, q: u64) -> Self {
        LinkConfig { q, ..self }
    }

    pub fn with_isi_len(self, isi_len: usize) -> Self {
        LinkConfig { isi_len, ..self }
    }

    /// Every violated invariant, empty when valid. `Ts > t_max` is skipped
    /// when `allow_short_symbol` is set.
    pub fn violations(&self, p: &ChannelParams, allow_short_symbol: bool) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.ts.is_finite() && self.ts > 0.0) {
            v.push(format!("Ts must be positive, got {}", self.ts));
        }
        if self.samples < 1 {
            v.push("N must be at least 1".into());
        }
        if !(self.t_s > 0.0 && self.t_s <= self.ts * (1.0 + 1e-12)) {
            v.push(format!("sampling interval {} must lie in (0, Ts]", self.t_s));
        }
        if !allow_short_symbol && self.ts <= p.peak_time() {
            v.push(format!("Ts = {} s must exceed the CIR peak time {:.6} s", self.ts, p.peak_time()));
        }
        v
    }

    pub fn validate(&self, p: &ChannelParams, allow_short_symbol: bool) -> Result<()> {
        let v = self.violations(p, allow_short_symbol);
        if v.is_empty() {
            Ok(())
        } else {
            Err(McvdError::InvalidConfig(v))
        }
    }

    /// Sample instant `n·t_s`.
    pub fn sample_time(&self, n: usize) -> f64 {
        n as f64 * self.t_s
    }
}

/// `p_{n,i} = p(n·t_s + i·Ts)`, with `p(0) = 0`.
pub fn sample_prob(n: usize, i: usize, cfg: &LinkConfig, p: &ChannelParams) -> Result<f64> {
    if p.kind != ReceiverKind::Passive {
        return Err(McvdError::KindMismatch("sample_prob (passive only)"));
    }
    if n > cfg.samples {
        return Err(McvdError::Argument(format!("sample {n} beyond N = {}", cfg.samples)));
    }
    Ok(p.p(cfg.sample_time(n) + i as f64 * cfg.ts))
}

/// Detection interval inside a symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DetectionWindow {
    /// `[t1, t2]` in seconds (absorbing receiver).
    Continuous { t1: f64, t2: f64 },
    /// Samples `n1..=n2` (passive receiver).
    Sampled { n1: usize, n2: usize },
}

impl DetectionWindow {
    pub fn full(cfg: &LinkConfig, kind: ReceiverKind) -> Self {
        match kind {
            ReceiverKind::Absorbing => DetectionWindow::Continuous { t1: 0.0, t2: cfg.ts },
            ReceiverKind::Passive => DetectionWindow::Sampled { n1: 0, n2: cfg.samples },
        }
    }

    pub fn kind(&self) -> ReceiverKind {
        match self {
            DetectionWindow::Continuous { .. } => ReceiverKind::Absorbing,
            DetectionWindow::Sampled { .. } => ReceiverKind::Passive,
        }
    }

    /// Start and end of the window in seconds.
    pub fn bounds_s(&self, cfg: &LinkConfig) -> (f64, f64) {
        match *self {
            DetectionWindow::Continuous { t1, t2 } => (t1, t2),
            DetectionWindow::Sampled { n1, n2 } => (cfg.sample_time(n1), cfg.sample_time(n2)),
        }
    }

    pub fn validate(&self, cfg: &LinkConfig) -> Result<()> {
        match *self {
            DetectionWindow::Continuous { t1, t2 } => {
                if !(t1 >= 0.0 && t1 < t2 && t2 <= cfg.ts * (1.0 + 1e-12)) {
                    return Err(McvdError::Argument(format!(
                        "window [{t1}, {t2}] must satisfy 0 <= t1 < t2 <= Ts = {}",
                        cfg.ts
                    )));
                }
            }
            DetectionWindow::Sampled { n1, n2 } => {
                if !(n1 <= n2 && n2 <= cfg.samples) {
                    return Err(McvdError::Argument(format!(
                        "window [{n1}, {n2}] must satisfy n1 <= n2 <= N = {}",
                        cfg.samples
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Prefix `[0, t_u]` (or samples `0..=n_u`) of the discarded duration whose
/// count is subtracted from the detection-window count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ReusableWindow {
    Empty,
    Continuous { tu: f64 },
    Sampled { nu: usize },
}

impl ReusableWindow {
    pub fn is_empty(&self) -> bool {
        matches!(self, ReusableWindow::Empty)
    }

    /// Checks the pairing with a detection window: the reuse window has to
    /// end strictly before the detection window starts.
    pub fn validate_pairing(&self, w: &DetectionWindow) -> Result<()> {
        match (*self, *w) {
            (ReusableWindow::Empty, _) => Ok(()),
            (ReusableWindow::Continuous { tu }, DetectionWindow::Continuous { t1, .. }) => {
                if tu >= 0.0 && (tu < t1 || tu == 0.0) {
                    Ok(())
                } else {
                    Err(McvdError::Argument(format!("reuse end {tu} must lie in [0, t1 = {t1})")))
                }
            }
            (ReusableWindow::Sampled { nu }, DetectionWindow::Sampled { n1, .. }) => {
                if nu < n1 {
                    Ok(())
                } else {
                    Err(McvdError::Argument(format!("reuse end sample {nu} must be < n1 = {n1}")))
                }
            }
            _ => Err(McvdError::KindMismatch("reuse window / detection window pairing")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub mean: f64,
    pub var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapStats {
    /// Tap 0 is the current symbol, tap `i` the symbol sent `i` slots earlier.
    pub taps: Vec<Tap>,
    pub kind: ReceiverKind,
    /// True when built by [`reuse_adjusted_stats`] with a non-empty reuse window.
    pub reuse_adjusted: bool,
}

impl TapStats {
    pub fn isi_len(&self) -> usize {
        self.taps.len().saturating_sub(1)
    }

    pub fn means(&self) -> impl Iterator<Item = f64> + '_ {
        self.taps.iter().map(|t| t.mean)
    }
}

fn sampled_sums(range: std::ops::RangeInclusive<usize>, cfg: &LinkConfig, p: &ChannelParams) -> Vec<f64> {
    (0..=cfg.isi_len)
        .map(|i| {
            let shift = i as f64 * cfg.ts;
            range.clone().map(|n| p.p(cfg.sample_time(n) + shift)).sum()
        })
        .collect()
}

/// Plain detection-window statistics: `(F^i, F^i(1-F^i))` for the absorbing
/// receiver and `(Σ p_{n,i}, Σ p_{n,i})` for the passive one.
pub fn window_stats(w: &DetectionWindow, cfg: &LinkConfig, p: &ChannelParams) -> Result<TapStats> {
    if w.kind() != p.kind {
        return Err(McvdError::KindMismatch("detection window form"));
    }
    w.validate(cfg)?;
    let taps = match *w {
        DetectionWindow::Continuous { t1, t2 } => (0..=cfg.isi_len)
            .map(|i| {
                let shift = i as f64 * cfg.ts;
                let f = p.f(t1 + shift, t2 + shift);
                Tap { mean: f, var: f * (1.0 - f) }
            })
            .collect(),
        DetectionWindow::Sampled { n1, n2 } => {
            sampled_sums(n1..=n2, cfg, p).into_iter().map(|s| Tap { mean: s, var: s }).collect()
        }
    };
    Ok(TapStats { taps, kind: p.kind, reuse_adjusted: false })
}

/// Statistics of the reuse window alone; all-zero taps for an empty window.
pub fn reuse_window_stats(r: &ReusableWindow, cfg: &LinkConfig, p: &ChannelParams) -> Result<TapStats> {
    let taps = match *r {
        ReusableWindow::Empty => vec![Tap { mean: 0.0, var: 0.0 }; cfg.isi_len + 1],
        ReusableWindow::Continuous { tu } => {
            if p.kind != ReceiverKind::Absorbing {
                return Err(McvdError::KindMismatch("continuous reuse window"));
            }
            (0..=cfg.isi_len)
                .map(|i| {
                    let shift = i as f64 * cfg.ts;
                    let f = p.f(shift, tu + shift);
                    Tap { mean: f, var: f * (1.0 - f) }
                })
                .collect()
        }
        ReusableWindow::Sampled { nu } => {
            if p.kind != ReceiverKind::Passive {
                return Err(McvdError::KindMismatch("sampled reuse window"));
            }
            sampled_sums(0..=nu, cfg, p).into_iter().map(|s| Tap { mean: s, var: s }).collect()
        }
    };
    Ok(TapStats { taps, kind: p.kind, reuse_adjusted: false })
}

/// Statistics after subtracting the reuse-window count from the detection
/// count: means subtract, variances add. Means may go negative.
pub fn reuse_adjusted_stats(
    w: &DetectionWindow,
    r: &ReusableWindow,
    cfg: &LinkConfig,
    p: &ChannelParams,
) -> Result<TapStats> {
    r.validate_pairing(w)?;
    let plain = window_stats(w, cfg, p)?;
    if r.is_empty() {
        return Ok(plain);
    }
    let reuse = reuse_window_stats(r, cfg, p)?;
    let taps = plain
        .taps
        .iter()
        .zip(&reuse.taps)
        .map(|(a, b)| Tap { mean: a.mean - b.mean, var: a.var + b.var })
        .collect();
    Ok(TapStats { taps, kind: p.kind, reuse_adjusted: true })
}

//! mSINAR (modified signal-to-interference-and-noise amplitude ratio), its
//! cutoff `Q̂`, and the reuse-duration objectives built from it.
//!
//! With `A = ½·mean_0`, `B = Σ_{k≥1} ½·mean_k` and `C = Σ_k √(var_k/2)`:
//!
//! ```text
//! mSINAR(Q) = A / (B + C/√Q),      Q̂ = (C / (A − B))²   (A > B)
//! ```
//!
//! For `Q ≥ Q̂` the metric is pinned at 1 and the objectives evaluate their
//! noise term with `Q̂` in place of `Q`.

use crate::channel::ChannelParams;
use crate::error::{McvdError, Result};
use crate::quad;
use crate::stats::{
    reuse_adjusted_stats, reuse_window_stats, window_stats, DetectionWindow, LinkConfig, ReusableWindow,
    TapStats,
};

/// Ratio above which the reuse-window noise is no longer negligible
/// relative to the detection-window noise.
pub const NOISE_NEGLECT_WARN_RATIO: f64 = 0.1;

fn abc(ts: &TapStats) -> (f64, f64, f64) {
    let a = 0.5 * ts.taps[0].mean;
    let b: f64 = ts.taps[1..].iter().map(|t| 0.5 * t.mean).sum();
    let c: f64 = ts.taps.iter().map(|t| (t.var.max(0.0) / 2.0).sqrt()).sum();
    (a, b, c)
}

/// mSINAR without the cutoff or clipping.
pub fn raw_msinar(ts: &TapStats, q: f64) -> f64 {
    let (a, b, c) = abc(ts);
    a / (b + c / q.sqrt())
}

/// Molecule count at which mSINAR reaches 1, or `+∞` when the desired
/// mean never exceeds the summed ISI means.
pub fn q_cutoff(ts: &TapStats) -> f64 {
    let (a, b, c) = abc(ts);
    if a > b {
        let r = c / (a - b);
        r * r
    } else {
        f64::INFINITY
    }
}

/// mSINAR in `(0, 1]`.
pub fn msinar(ts: &TapStats, q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(McvdError::Argument(format!("mSINAR needs Q > 0, got {q}")));
    }
    if q >= q_cutoff(ts) {
        return Ok(1.0);
    }
    Ok(raw_msinar(ts, q).clamp(f64::MIN_POSITIVE, 1.0))
}

/// Molecule count used in the noise term: `min(Q, Q̂)`.
pub fn effective_q(plain: &TapStats, q: f64) -> f64 {
    q.min(q_cutoff(plain))
}

/// Reuse objective: mSINAR of the reuse-adjusted statistics with the noise
/// term frozen at the plain window's `Q̂` once `Q ≥ Q̂`. Not clipped.
pub fn msinar_objective(plain: &TapStats, adjusted: &TapStats, q: f64) -> f64 {
    let qe = effective_q(plain, q);
    if qe == 0.0 {
        return 0.0;
    }
    raw_msinar(adjusted, qe)
}

/// Largest ratio over taps of reuse-window variance to detection-window
/// variance.
pub fn noise_neglect_ratio(plain: &TapStats, reuse: &TapStats) -> f64 {
    plain
        .taps
        .iter()
        .zip(&reuse.taps)
        .map(|(w, u)| {
            if w.var > 0.0 {
                u.var / w.var
            } else if u.var > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Reuse objective for the absorbing receiver as a function of `t_u`.
pub fn msinar_objective_tu(tu: f64, w: &DetectionWindow, cfg: &LinkConfig, p: &ChannelParams) -> Result<f64> {
    let DetectionWindow::Continuous { t1, .. } = *w else {
        return Err(McvdError::KindMismatch("continuous detection window"));
    };
    if !(tu >= 0.0 && (tu < t1 || tu == 0.0)) {
        return Err(McvdError::Argument(format!("t_u = {tu} outside [0, t1 = {t1})")));
    }
    let plain = window_stats(w, cfg, p)?;
    let adj = reuse_adjusted_stats(w, &ReusableWindow::Continuous { tu }, cfg, p)?;
    Ok(msinar_objective(&plain, &adj, cfg.q as f64))
}

/// Reuse objective for the passive receiver as a function of `n_u`.
pub fn msinar_objective_nu(
    nu: usize,
    w: &DetectionWindow,
    cfg: &LinkConfig,
    p: &ChannelParams,
) -> Result<f64> {
    let DetectionWindow::Sampled { n1, .. } = *w else {
        return Err(McvdError::KindMismatch("sampled detection window"));
    };
    if nu >= n1 {
        return Err(McvdError::Argument(format!("n_u = {nu} outside [0, n1 = {n1})")));
    }
    let plain = window_stats(w, cfg, p)?;
    let adj = reuse_adjusted_stats(w, &ReusableWindow::Sampled { nu }, cfg, p)?;
    Ok(msinar_objective(&plain, &adj, cfg.q as f64))
}

/// Difference form of the reuse objective (signal minus ISI minus the
/// detection-window noise amplitude), dropping the reuse-window noise.
pub fn msid_with_noise_tu(tu: f64, w: &DetectionWindow, cfg: &LinkConfig, p: &ChannelParams) -> Result<f64> {
    let plain = window_stats(w, cfg, p)?;
    let reuse = reuse_window_stats(&ReusableWindow::Continuous { tu }, cfg, p)?;
    let qe = effective_q(&plain, cfg.q as f64);
    let mut v = 0.0;
    for (k, (fw, fu)) in plain.taps.iter().zip(&reuse.taps).enumerate() {
        let sign = if k == 0 { -1.0 } else { 1.0 };
        v += sign * (fu.mean - fw.mean);
    }
    let noise: f64 = plain.taps.iter().map(|t| t.var.max(0.0).sqrt()).sum();
    Ok(v - (2.0 / qe).sqrt() * noise)
}

/// `Σ_{k=1..L} h(t + k·Ts) − h(t)`; positive while ISI dominates.
pub(crate) fn residual_unchecked(t: f64, cfg: &LinkConfig, p: &ChannelParams) -> f64 {
    let isi: f64 = (1..=cfg.isi_len).map(|k| p.cir(t + k as f64 * cfg.ts)).sum();
    isi - p.cir(t)
}

/// `∫₀^{t_u} [Σ_k h(t + k·Ts) − h(t)] dt` by adaptive quadrature.
pub fn msid_objective_tu(tu: f64, cfg: &LinkConfig, p: &ChannelParams) -> Result<f64> {
    if p.kind != crate::channel::ReceiverKind::Absorbing {
        return Err(McvdError::KindMismatch("msid_objective_tu (absorbing only)"));
    }
    if !(tu >= 0.0) {
        return Err(McvdError::Argument(format!("t_u = {tu} must be >= 0")));
    }
    Ok(quad::integrate(|t| residual_unchecked(t, cfg, p), 0.0, tu, 1e-10))
}

/// `Σ_{k=1..L} Σ_{n=0..n_u} p_{n,k} − Σ_{n=0..n_u} p_{n,0}`.
pub fn msid_objective_nu(nu: usize, cfg: &LinkConfig, p: &ChannelParams) -> Result<f64> {
    if p.kind != crate::channel::ReceiverKind::Passive {
        return Err(McvdError::KindMismatch("msid_objective_nu (passive only)"));
    }
    Ok((0..=nu).map(|n| residual_unchecked(cfg.sample_time(n), cfg, p)).sum())
}

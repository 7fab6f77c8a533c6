//! Detection-window search and the four routes to the reusable duration:
//! exhaustive BER search ("ideal"), grid maximization of the mSINAR
//! objective ("numerical"), the root of the ISI-versus-signal residual
//! ("root") and the closed-form quadratic approximation ("closed form").

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, ReceiverKind};
use crate::detection::{optimal_threshold, ThresholdChoice, DEFAULT_THRESHOLD_POINTS};
use crate::error::{McvdError, Result};
use crate::metric::{
    msinar_objective, noise_neglect_ratio, q_cutoff, residual_unchecked, NOISE_NEGLECT_WARN_RATIO,
};
use crate::stats::{
    reuse_adjusted_stats, reuse_window_stats, window_stats, DetectionWindow, LinkConfig, ReusableWindow,
};

/// Lower end of the bisection bracket for the residual root (s).
pub const ROOT_EPS: f64 = 1e-6;
/// Bisection stops once the bracket is narrower than this (s).
pub const ROOT_TOL: f64 = 1e-9;

/// Grid resolutions shared by the searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    /// Continuous window grid has `window_steps + 1` points over `[0, Ts]`.
    pub window_steps: usize,
    /// Number of `t_u` candidates over `[0, t1)`.
    pub tu_points: usize,
    pub threshold_points: usize,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings { window_steps: 2000, tu_points: 400, threshold_points: DEFAULT_THRESHOLD_POINTS }
    }
}

/// Result of a detection-window search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowChoice {
    pub window: DetectionWindow,
    /// mSINAR of the chosen window at the requested `Q` (1 when frozen).
    pub msinar: f64,
    /// Smallest `Q̂` over the grid; `+∞` when no window reaches mSINAR = 1.
    pub q_hat_min: f64,
    /// `Q ≥ q_hat_min`, so the window is the frozen (converged) one.
    pub frozen: bool,
}

#[derive(Clone, Copy)]
struct Cand {
    val: f64,
    width: usize,
    start: usize,
    end: usize,
}

impl Cand {
    const NONE: Cand = Cand { val: f64::NEG_INFINITY, width: 0, start: usize::MAX, end: 0 };

    // larger value, then wider, then earlier start
    fn beats(&self, o: &Cand) -> bool {
        self.val > o.val
            || (self.val == o.val
                && (self.width > o.width || (self.width == o.width && self.start < o.start)))
    }
}

struct Scan {
    by_q: Cand,
    by_cutoff: Cand,
    by_ratio: Cand,
}

/// Visits every grid window and tracks the best one under three criteria:
/// raw mSINAR at `q`, smallest `Q̂`, and largest signal/ISI ratio.
fn scan_windows(cfg: &LinkConfig, p: &ChannelParams, steps: usize, q: f64) -> Result<Scan> {
    let taps = cfg.isi_len + 1;
    // cumulative per-tap quantities on the grid; window (a, b) has
    // F^i = cum[i][a] - cum[i][b] (continuous) or cum[i][b+1] - cum[i][a] (sampled)
    let (cum, n_pts, sampled): (Vec<Vec<f64>>, usize, bool) = match p.kind {
        ReceiverKind::Absorbing => {
            if steps == 0 {
                return Err(McvdError::EmptyGrid("window grid"));
            }
            let dt = cfg.ts / steps as f64;
            let c = p.r / (p.d + p.r);
            let cum = (0..taps)
                .map(|i| {
                    (0..=steps)
                        .map(|j| {
                            let t = if j == steps { cfg.ts } else { j as f64 * dt };
                            c * p.erf_term(t + i as f64 * cfg.ts)
                        })
                        .collect()
                })
                .collect();
            (cum, steps + 1, false)
        }
        ReceiverKind::Passive => {
            let cum = (0..taps)
                .map(|i| {
                    let mut acc = vec![0.0];
                    let mut s = 0.0;
                    for n in 0..=cfg.samples {
                        s += p.p(cfg.sample_time(n) + i as f64 * cfg.ts);
                        acc.push(s);
                    }
                    acc
                })
                .collect();
            (cum, cfg.samples + 1, true)
        }
    };
    let mut scan = Scan { by_q: Cand::NONE, by_cutoff: Cand::NONE, by_ratio: Cand::NONE };
    let sqrt_q = q.sqrt();
    for a in 0..n_pts {
        let b_start = if sampled { a } else { a + 1 };
        for b in b_start..n_pts {
            let (mut big_a, mut big_b, mut big_c) = (0.0, 0.0, 0.0);
            for (i, col) in cum.iter().enumerate() {
                let f = if sampled { col[b + 1] - col[a] } else { col[a] - col[b] };
                let var = if sampled { f } else { f * (1.0 - f) };
                if i == 0 {
                    big_a = 0.5 * f;
                } else {
                    big_b += 0.5 * f;
                }
                big_c += (var.max(0.0) / 2.0).sqrt();
            }
            let width = b - a;
            let mk = |val: f64| Cand { val, width, start: a, end: b };
            let raw = if q > 0.0 { big_a / (big_b + big_c / sqrt_q) } else { 0.0 };
            let c1 = mk(if raw.is_nan() { f64::NEG_INFINITY } else { raw });
            if c1.beats(&scan.by_q) {
                scan.by_q = c1;
            }
            let qh = if big_a > big_b { (big_c / (big_a - big_b)).powi(2) } else { f64::INFINITY };
            let c2 = mk(-qh);
            if c2.beats(&scan.by_cutoff) {
                scan.by_cutoff = c2;
            }
            let ratio = if big_b > 0.0 {
                big_a / big_b
            } else if big_a > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            let c3 = mk(ratio);
            if c3.beats(&scan.by_ratio) {
                scan.by_ratio = c3;
            }
        }
    }
    if scan.by_q.start == usize::MAX {
        return Err(McvdError::EmptyGrid("no feasible detection window"));
    }
    Ok(scan)
}

fn to_window(c: &Cand, cfg: &LinkConfig, p: &ChannelParams, steps: usize) -> DetectionWindow {
    match p.kind {
        ReceiverKind::Absorbing => {
            let at = |j: usize| if j == steps { cfg.ts } else { j as f64 * cfg.ts / steps as f64 };
            DetectionWindow::Continuous { t1: at(c.start), t2: at(c.end) }
        }
        ReceiverKind::Passive => DetectionWindow::Sampled { n1: c.start, n2: c.end },
    }
}

/// Window maximizing mSINAR over the grid of `(t1, t2)` (or `(n1, n2)`)
/// pairs. Once `Q` reaches the smallest achievable `Q̂` the objective is
/// frozen and the window with that `Q̂` is returned. Ties go to the widest
/// window, then the smallest start.
pub fn optimal_window(cfg: &LinkConfig, p: &ChannelParams, steps: usize) -> Result<WindowChoice> {
    let q = cfg.q as f64;
    let scan = scan_windows(cfg, p, steps, q)?;
    let q_hat_min = -scan.by_cutoff.val;
    if q_hat_min.is_finite() && q >= q_hat_min {
        return Ok(WindowChoice {
            window: to_window(&scan.by_cutoff, cfg, p, steps),
            msinar: 1.0,
            q_hat_min,
            frozen: true,
        });
    }
    Ok(WindowChoice {
        window: to_window(&scan.by_q, cfg, p, steps),
        msinar: scan.by_q.val.clamp(f64::MIN_POSITIVE, 1.0),
        q_hat_min,
        frozen: false,
    })
}

/// The window the optimum converges to as `Q` grows: the frozen-`Q̂`
/// window, or the best signal/ISI ratio when no window ever reaches
/// mSINAR = 1.
pub fn limit_window(cfg: &LinkConfig, p: &ChannelParams, steps: usize) -> Result<WindowChoice> {
    let scan = scan_windows(cfg, p, steps, 1.0)?;
    let q_hat_min = -scan.by_cutoff.val;
    let best = if q_hat_min.is_finite() { &scan.by_cutoff } else { &scan.by_ratio };
    Ok(WindowChoice {
        window: to_window(best, cfg, p, steps),
        msinar: if q_hat_min.is_finite() { 1.0 } else { best.val / (1.0 + best.val) },
        q_hat_min,
        frozen: q_hat_min.is_finite(),
    })
}

/// Converged lower edge of the continuous detection window (s).
pub fn bar_t1(cfg: &LinkConfig, p: &ChannelParams, steps: usize) -> Result<f64> {
    match limit_window(cfg, p, steps)?.window {
        DetectionWindow::Continuous { t1, .. } => Ok(t1),
        DetectionWindow::Sampled { .. } => Err(McvdError::KindMismatch("bar_t1 (absorbing only)")),
    }
}

/// Converged first sample of the passive detection window.
pub fn bar_n1(cfg: &LinkConfig, p: &ChannelParams) -> Result<usize> {
    match limit_window(cfg, p, 0)?.window {
        DetectionWindow::Sampled { n1, .. } => Ok(n1),
        DetectionWindow::Continuous { .. } => Err(McvdError::KindMismatch("bar_n1 (passive only)")),
    }
}

fn continuous_t1(w: &DetectionWindow) -> Result<f64> {
    match *w {
        DetectionWindow::Continuous { t1, .. } => Ok(t1),
        _ => Err(McvdError::KindMismatch("continuous detection window")),
    }
}

fn sampled_n1(w: &DetectionWindow) -> Result<usize> {
    match *w {
        DetectionWindow::Sampled { n1, .. } => Ok(n1),
        _ => Err(McvdError::KindMismatch("sampled detection window")),
    }
}

/// `t_u` candidates `j·t1/points` for `j = 0..points`.
pub fn tu_grid(t1: f64, points: usize) -> Vec<f64> {
    (0..points).map(|j| j as f64 * t1 / points as f64).collect()
}

/// Grid maximizer of the mSINAR reuse objective; ties go to the smallest `t_u`.
pub fn numerical_tu(w: &DetectionWindow, cfg: &LinkConfig, p: &ChannelParams, points: usize) -> Result<f64> {
    let t1 = continuous_t1(w)?;
    if points == 0 {
        return Err(McvdError::EmptyGrid("t_u grid"));
    }
    let plain = window_stats(w, cfg, p)?;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for tu in tu_grid(t1, points) {
        let adj = reuse_adjusted_stats(w, &ReusableWindow::Continuous { tu }, cfg, p)?;
        let v = msinar_objective(&plain, &adj, cfg.q as f64);
        if v > best.0 {
            best = (v, tu);
        }
    }
    Ok(best.1)
}

fn argmin_ber<T: Copy + Send + Sync>(
    cands: &[T],
    reuse: impl Fn(T) -> ReusableWindow + Sync,
    w: &DetectionWindow,
    cfg: &LinkConfig,
    p: &ChannelParams,
    threshold_points: usize,
) -> Result<Option<(T, ThresholdChoice)>> {
    let evals: Vec<Result<ThresholdChoice>> = cands
        .par_iter()
        .map(|&c| {
            let ts = reuse_adjusted_stats(w, &reuse(c), cfg, p)?;
            optimal_threshold(&ts, cfg.q, None, threshold_points)
        })
        .collect();
    let mut best: Option<(T, ThresholdChoice)> = None;
    for (c, e) in cands.iter().zip(evals) {
        let e = e?;
        if best.as_ref().is_none_or(|b| e.ln_pe < b.1.ln_pe) {
            best = Some((*c, e));
        }
    }
    Ok(best)
}

/// Exhaustive search of `t_u` minimizing the analytic BER, each candidate
/// with its own optimal threshold.
pub fn ideal_tu(
    w: &DetectionWindow,
    cfg: &LinkConfig,
    p: &ChannelParams,
    settings: &SearchSettings,
) -> Result<(f64, ThresholdChoice)> {
    let t1 = continuous_t1(w)?;
    let grid = tu_grid(t1, settings.tu_points);
    argmin_ber(&grid, |tu| ReusableWindow::Continuous { tu }, w, cfg, p, settings.threshold_points)?
        .ok_or(McvdError::EmptyGrid("t_u grid"))
}

/// Passive counterpart of [`numerical_tu`] over `n_u ∈ [0, n1)`; `None`
/// when the window starts at sample 0.
pub fn numerical_nu(w: &DetectionWindow, cfg: &LinkConfig, p: &ChannelParams) -> Result<Option<usize>> {
    let n1 = sampled_n1(w)?;
    let plain = window_stats(w, cfg, p)?;
    let mut best: Option<(f64, usize)> = None;
    for nu in 0..n1 {
        let adj = reuse_adjusted_stats(w, &ReusableWindow::Sampled { nu }, cfg, p)?;
        let v = msinar_objective(&plain, &adj, cfg.q as f64);
        if best.is_none_or(|b| v > b.0) {
            best = Some((v, nu));
        }
    }
    Ok(best.map(|b| b.1))
}

/// Passive counterpart of [`ideal_tu`].
pub fn ideal_nu(
    w: &DetectionWindow,
    cfg: &LinkConfig,
    p: &ChannelParams,
    threshold_points: usize,
) -> Result<Option<(usize, ThresholdChoice)>> {
    let n1 = sampled_n1(w)?;
    let cands: Vec<usize> = (0..n1).collect();
    argmin_ber(&cands, |nu| ReusableWindow::Sampled { nu }, w, cfg, p, threshold_points)
}

/// `Σ_{k=1..L} h(t + k·Ts) − h(t)` (or the passive `p` analog).
pub fn root_residual(t: f64, cfg: &LinkConfig, p: &ChannelParams) -> Result<f64> {
    if !(t > 0.0) {
        return Err(McvdError::Domain(format!("residual needs t > 0, got {t}")));
    }
    Ok(residual_unchecked(t, cfg, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootTu {
    pub tu: f64,
    /// Final bracket; `residual(lo) > 0 ≥ residual(hi)` when a root was found.
    pub lo: f64,
    pub hi: f64,
    pub clamp_applied: bool,
}

/// Bisection for the sign change of the residual on `(ε, t_max]`, capped
/// at `cap` (normally `t̄1*`). Without a sign change the cap is returned.
pub fn root_tu(cfg: &LinkConfig, p: &ChannelParams, cap: f64) -> Result<RootTu> {
    if p.kind != ReceiverKind::Absorbing {
        return Err(McvdError::KindMismatch("root_tu (absorbing only)"));
    }
    let mut lo = ROOT_EPS;
    let mut hi = p.peak_time();
    let f = |t: f64| residual_unchecked(t, cfg, p);
    if !(f(lo) > 0.0 && f(hi) <= 0.0) {
        return Ok(RootTu { tu: cap, lo, hi, clamp_applied: true });
    }
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    if root > cap {
        return Ok(RootTu { tu: cap, lo, hi, clamp_applied: true });
    }
    Ok(RootTu { tu: root, lo, hi, clamp_applied: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootNu {
    pub nu: usize,
    pub clamp_applied: bool,
}

/// Last sample of the initial run where `Σ_k p_{n,k} ≥ p_{n,0}`, capped at
/// `bar_n1 − 1`.
pub fn root_nu(cfg: &LinkConfig, p: &ChannelParams, bar_n1: usize) -> Result<RootNu> {
    if p.kind != ReceiverKind::Passive {
        return Err(McvdError::KindMismatch("root_nu (passive only)"));
    }
    if bar_n1 == 0 {
        return Err(McvdError::Argument("no reusable samples before n1 = 0".into()));
    }
    let holds = |n: usize| residual_unchecked(cfg.sample_time(n), cfg, p) >= 0.0;
    let mut n = 0;
    while n < cfg.samples && holds(n + 1) {
        n += 1;
    }
    if n > bar_n1 - 1 {
        return Ok(RootNu { nu: bar_n1 - 1, clamp_applied: true });
    }
    Ok(RootNu { nu: n, clamp_applied: false })
}

/// Intermediates of the closed-form reusable duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    /// `d/√(4D)` (absorbing) or `(d+r)/√(4D)` (passive), in √s.
    pub m: f64,
    /// Pre-approximation point, `t̂_u*` in seconds or `n̂_u*` as a sample index.
    pub t_hat: f64,
    /// `ln I` or `ln W`.
    pub ln_ratio: f64,
    pub alpha: f64,
    pub beta: f64,
    pub discriminant: f64,
    /// Unclamped quadratic root (seconds, or samples before flooring).
    pub root: f64,
    /// Final value: `t_u` in seconds or `n_u` as a sample index.
    pub value: f64,
    pub clamp_applied: bool,
}

fn breakdown(reason: impl Into<String>, v: &[(&'static str, f64)]) -> McvdError {
    McvdError::ApproximationBreakdown { reason: reason.into(), intermediates: v.to_vec() }
}

/// Pre-approximation point and the `(60Ts − 37m²)`, `(51Ts − 15m²Ts)` terms.
fn pre_point(ts: f64, m2: f64) -> Result<(f64, f64, f64)> {
    let b = 60.0 * ts - 37.0 * m2;
    let x = 51.0 * ts - 15.0 * m2 * ts;
    let disc = b * b + 56.0 * x * m2 * ts;
    if disc < 0.0 || x == 0.0 {
        return Err(breakdown("pre-approximation point is not real", &[("b", b), ("x", x), ("disc", disc)]));
    }
    Ok(((-b + disc.sqrt()) / x, b, x))
}

fn quadratic(ts: f64, m2: f64, ln_ratio: f64) -> (f64, f64, f64) {
    let alpha = (51.0 * ts - 51.0 * ts * ln_ratio - 15.0 * m2 * ts) / (14.0 * m2 * ts * ts);
    let beta = (60.0 * ts - 14.0 * ts * ln_ratio - 37.0 * m2) / (14.0 * m2 * ts);
    (alpha, beta, beta * beta + 4.0 * alpha)
}

/// Closed-form reusable duration for the absorbing receiver,
/// `min[(−β + √(β² + 4α))/(2α), t̄1*]`.
pub fn closed_form_tu(cfg: &LinkConfig, p: &ChannelParams, bar_t1: f64) -> Result<ClosedForm> {
    if p.kind != ReceiverKind::Absorbing {
        return Err(McvdError::KindMismatch("closed_form_tu (absorbing only)"));
    }
    if cfg.isi_len == 0 {
        return Err(McvdError::Argument("closed form needs L >= 1".into()));
    }
    let ts = cfg.ts;
    let m2 = p.d * p.d / (4.0 * p.diffusion);
    let (t_hat, _, _) = pre_point(ts, m2)?;
    let h1 = p.h(ts + t_hat);
    if !(h1 > 0.0) {
        return Err(breakdown("h(Ts + t_hat) vanishes", &[("t_hat", t_hat)]));
    }
    let ratio: f64 = (1..=cfg.isi_len).map(|k| p.h(k as f64 * ts + t_hat) / h1).sum();
    let ln_ratio = ratio.ln();
    let (alpha, beta, disc) = quadratic(ts, m2, ln_ratio);
    let vals =
        [("m2", m2), ("t_hat", t_hat), ("ln_I", ln_ratio), ("alpha", alpha), ("beta", beta), ("disc", disc)];
    if disc < 0.0 {
        return Err(breakdown("negative discriminant beta^2 + 4 alpha", &vals));
    }
    if alpha == 0.0 {
        return Err(breakdown("alpha is zero", &vals));
    }
    let root = (-beta + disc.sqrt()) / (2.0 * alpha);
    if !(root >= 0.0) {
        return Err(breakdown("quadratic root is negative", &vals));
    }
    let clamp_applied = root > bar_t1;
    Ok(ClosedForm {
        m: m2.sqrt(),
        t_hat,
        ln_ratio,
        alpha,
        beta,
        discriminant: disc,
        root,
        value: root.min(bar_t1),
        clamp_applied,
    })
}

/// Closed-form reusable sample count for the passive receiver,
/// `min[⌊(−β̂ + √(β̂² + 4α̂))/(2α̂·t_s)⌋, n̄1* − 1]`.
pub fn closed_form_nu(cfg: &LinkConfig, p: &ChannelParams, bar_n1: usize) -> Result<ClosedForm> {
    if p.kind != ReceiverKind::Passive {
        return Err(McvdError::KindMismatch("closed_form_nu (passive only)"));
    }
    if cfg.isi_len == 0 {
        return Err(McvdError::Argument("closed form needs L >= 1".into()));
    }
    if bar_n1 == 0 {
        return Err(McvdError::Argument("no reusable samples before n1 = 0".into()));
    }
    let ts = cfg.ts;
    let dr = p.d + p.r;
    let m2 = dr * dr / (4.0 * p.diffusion);
    let (t_hat, _, _) = pre_point(ts, m2)?;
    let n_hat = (t_hat / cfg.t_s).floor();
    if !(n_hat >= 0.0) {
        return Err(breakdown("pre-approximation sample is negative", &[("n_hat", n_hat)]));
    }
    let at = |k: usize| p.p(n_hat * cfg.t_s + k as f64 * ts);
    let p1 = at(1);
    if p1 == 0.0 {
        return Err(McvdError::DegenerateW(n_hat as i64));
    }
    let ratio: f64 = (1..=cfg.isi_len).map(|k| at(k) / p1).sum();
    let ln_ratio = ratio.ln();
    let (alpha, beta, disc) = quadratic(ts, m2, ln_ratio);
    let vals =
        [("m2", m2), ("n_hat", n_hat), ("ln_W", ln_ratio), ("alpha", alpha), ("beta", beta), ("disc", disc)];
    if disc < 0.0 {
        return Err(breakdown("negative discriminant beta^2 + 4 alpha", &vals));
    }
    if alpha == 0.0 {
        return Err(breakdown("alpha is zero", &vals));
    }
    let root = (-beta + disc.sqrt()) / (2.0 * alpha * cfg.t_s);
    if !(root >= 0.0) {
        return Err(breakdown("quadratic root is negative", &vals));
    }
    let floored = root.floor();
    let cap = (bar_n1 - 1) as f64;
    Ok(ClosedForm {
        m: m2.sqrt(),
        t_hat: n_hat,
        ln_ratio,
        alpha,
        beta,
        discriminant: disc,
        root,
        value: floored.min(cap),
        clamp_applied: floored > cap,
    })
}

/// Reusable-duration candidates from every route, in seconds (absorbing)
/// or sample indices (passive).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Candidates {
    pub ideal: Option<f64>,
    pub numerical: Option<f64>,
    pub root: Option<f64>,
    pub closed_form: Option<f64>,
}

/// Everything the optimizer computed for one `(cfg, p)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub kind: ReceiverKind,
    pub q: u64,
    pub window: WindowChoice,
    /// `t̄1*` (s) or `n̄1*` (sample index).
    pub bar_start: f64,
    /// `Q̂` of the chosen plain window.
    pub q_hat: f64,
    pub candidates: Candidates,
    pub closed_form: Option<ClosedForm>,
    pub closed_form_error: Option<String>,
    pub root_clamp_applied: bool,
    pub ideal_threshold: Option<ThresholdChoice>,
    /// Worst ratio of reuse-window to detection-window noise at the
    /// numerical candidate.
    pub noise_ratio: f64,
    pub warnings: Vec<String>,
}

/// Runs the window search and all four reuse routes.
pub fn optimize(cfg: &LinkConfig, p: &ChannelParams, s: &SearchSettings) -> Result<OptimizationResult> {
    let window = optimal_window(cfg, p, s.window_steps)?;
    let plain = window_stats(&window.window, cfg, p)?;
    let mut warnings = Vec::new();
    let mut c = Candidates::default();
    let (bar_start, closed, root_clamp, ideal_thr, reuse);
    match p.kind {
        ReceiverKind::Absorbing => {
            let bt1 = bar_t1(cfg, p, s.window_steps)?;
            if residual_unchecked(bt1, cfg, p) > 0.0 {
                warnings.push(format!("ISI still dominates at the converged window start {bt1:.6e} s"));
            }
            let num = numerical_tu(&window.window, cfg, p, s.tu_points)?;
            let (ideal, thr) = ideal_tu(&window.window, cfg, p, s)?;
            let root = root_tu(cfg, p, bt1)?;
            c.numerical = Some(num);
            c.ideal = Some(ideal);
            c.root = Some(root.tu);
            bar_start = bt1;
            root_clamp = root.clamp_applied;
            ideal_thr = Some(thr);
            closed = if cfg.isi_len > 0 { Some(closed_form_tu(cfg, p, bt1)) } else { None };
            reuse = ReusableWindow::Continuous { tu: num };
        }
        ReceiverKind::Passive => {
            let bn1 = bar_n1(cfg, p)?;
            let num = numerical_nu(&window.window, cfg, p)?;
            let ideal = ideal_nu(&window.window, cfg, p, s.threshold_points)?;
            c.numerical = num.map(|n| n as f64);
            c.ideal = ideal.map(|(n, _)| n as f64);
            ideal_thr = ideal.map(|(_, t)| t);
            bar_start = bn1 as f64;
            let (root, clamp) = match root_nu(cfg, p, bn1) {
                Ok(r) => (Some(r.nu as f64), r.clamp_applied),
                Err(e) => {
                    warnings.push(format!("root_nu: {e}"));
                    (None, false)
                }
            };
            c.root = root;
            root_clamp = clamp;
            closed = if cfg.isi_len > 0 && bn1 > 0 { Some(closed_form_nu(cfg, p, bn1)) } else { None };
            reuse = num.map_or(ReusableWindow::Empty, |nu| ReusableWindow::Sampled { nu });
        }
    }
    let (closed_form, closed_form_error) = match closed {
        Some(Ok(cf)) => {
            c.closed_form = Some(cf.value);
            (Some(cf), None)
        }
        Some(Err(e)) => (None, Some(e.to_string())),
        None => (None, None),
    };
    let noise_ratio = noise_neglect_ratio(&plain, &reuse_window_stats(&reuse, cfg, p)?);
    if noise_ratio > NOISE_NEGLECT_WARN_RATIO {
        warnings.push(format!(
            "reuse-window noise is {noise_ratio:.3} of the detection-window noise (> {NOISE_NEGLECT_WARN_RATIO})"
        ));
    }
    Ok(OptimizationResult {
        kind: p.kind,
        q: cfg.q,
        window,
        bar_start,
        q_hat: q_cutoff(&plain),
        candidates: c,
        closed_form,
        closed_form_error,
        root_clamp_applied: root_clamp,
        ideal_threshold: ideal_thr,
        noise_ratio,
        warnings,
    })
}

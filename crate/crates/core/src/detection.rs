//! Single-threshold detection over the Gaussian mixture induced by the ISI
//! bit patterns, plus a Monte Carlo estimator of the bit error rate.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, ReceiverKind};
use crate::error::{McvdError, Result};
use crate::special::{ln_normal_cdf, log_sum_exp};
use crate::stats::{reuse_window_stats, window_stats, DetectionWindow, LinkConfig, ReusableWindow, TapStats};

pub const MAX_ENUMERATED_ISI: usize = 20;
pub const DEFAULT_THRESHOLD_POINTS: usize = 2048;

/// One Gaussian component of the received-count mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    /// Bit `i` is `x_{k-i}`; bit 0 is the current symbol.
    pub pattern: u32,
    pub mean: f64,
    pub var: f64,
}

impl Component {
    pub fn current_bit(&self) -> bool {
        self.pattern & 1 == 1
    }

    /// `ln Pr(error | pattern)` for a decision "1 iff count ≥ ξ".
    pub fn ln_error(&self, xi: f64) -> f64 {
        if self.var <= 0.0 {
            let says_one = self.mean >= xi;
            return if says_one != self.current_bit() { 0.0 } else { f64::NEG_INFINITY };
        }
        let z = (xi - self.mean) / self.var.sqrt();
        if self.current_bit() {
            ln_normal_cdf(z)
        } else {
            ln_normal_cdf(-z)
        }
    }
}

/// Expands the tap statistics over all `2^(L+1)` equiprobable bit patterns.
pub fn mixture_components(ts: &TapStats, q: u64) -> Result<Vec<Component>> {
    let l = ts.isi_len();
    if l > MAX_ENUMERATED_ISI {
        return Err(McvdError::EnumerationTooLarge(l));
    }
    let q = q as f64;
    Ok((0..1u32 << (l + 1))
        .map(|pattern| {
            let (mut mean, mut var) = (0.0, 0.0);
            for (i, t) in ts.taps.iter().enumerate() {
                if pattern >> i & 1 == 1 {
                    mean += t.mean;
                    var += t.var;
                }
            }
            Component { pattern, mean: q * mean, var: q * var }
        })
        .collect())
}

/// Components above this many nats below the dominant one are dropped
/// from the sum; their combined weight is below `f64` resolution.
const LN_PRUNE_MARGIN: f64 = 50.0;

/// Precomputed per-component quantities for repeated BER evaluation.
struct Mixture {
    mean: Vec<f64>,
    inv_sd: Vec<f64>,
    // +1 for current bit 1 (error below ξ), -1 for bit 0, 0 if deterministic
    sign: Vec<f64>,
    det: Vec<(f64, bool)>,
    ln_count: f64,
}

impl Mixture {
    fn new(components: &[Component]) -> Self {
        let mut m = Mixture {
            mean: Vec::new(),
            inv_sd: Vec::new(),
            sign: Vec::new(),
            det: Vec::new(),
            ln_count: (components.len() as f64).ln(),
        };
        for c in components {
            if c.var > 0.0 {
                m.mean.push(c.mean);
                m.inv_sd.push(1.0 / c.var.sqrt());
                m.sign.push(if c.current_bit() { 1.0 } else { -1.0 });
            } else {
                m.det.push((c.mean, c.current_bit()));
            }
        }
        m
    }

    fn ln_ber(&self, xi: f64, buf: &mut Vec<f64>) -> f64 {
        buf.clear();
        for &(mean, bit) in &self.det {
            if (mean >= xi) != bit {
                buf.push(0.0);
            }
        }
        // ln Pr(error) = ln Φ(s) with s = ±(ξ − μ)/σ
        let s_of = |i: usize| self.sign[i] * (xi - self.mean[i]) * self.inv_sd[i];
        let s_max = (0..self.mean.len()).map(s_of).fold(f64::NEG_INFINITY, f64::max);
        if s_max > f64::NEG_INFINITY {
            let mut floor = ln_normal_cdf(s_max);
            if !buf.is_empty() {
                floor = floor.max(0.0);
            }
            floor -= LN_PRUNE_MARGIN;
            for i in 0..self.mean.len() {
                let s = s_of(i);
                // Φ(s) ≤ exp(−s²/2)/2 for s ≤ 0
                if s >= 0.0 || -0.5 * s * s - std::f64::consts::LN_2 >= floor {
                    buf.push(ln_normal_cdf(s));
                }
            }
        }
        log_sum_exp(buf) - self.ln_count
    }

    /// Unnormalized `ln` error mass of the bit-1 and bit-0 components.
    /// The first is nondecreasing in `ξ`, the second nonincreasing.
    fn ln_sides(&self, xi: f64, ones: &mut Vec<f64>, zeros: &mut Vec<f64>) -> (f64, f64) {
        ones.clear();
        zeros.clear();
        for &(mean, bit) in &self.det {
            if (mean >= xi) != bit {
                if bit {
                    ones.push(0.0)
                } else {
                    zeros.push(0.0)
                }
            }
        }
        for i in 0..self.mean.len() {
            let s = self.sign[i] * (xi - self.mean[i]) * self.inv_sd[i];
            if self.sign[i] > 0.0 {
                ones.push(ln_normal_cdf(s))
            } else {
                zeros.push(ln_normal_cdf(s))
            }
        }
        (log_sum_exp(ones), log_sum_exp(zeros))
    }
}

/// Coarse stride of the branch-and-bound threshold search.
const THRESHOLD_STRIDE: usize = 32;

/// `ln P_e` at threshold `ξ`; stays finite far below `f64` underflow.
pub fn ln_analytic_ber(ts: &TapStats, q: u64, xi: f64) -> Result<f64> {
    let comps = mixture_components(ts, q)?;
    Ok(Mixture::new(&comps).ln_ber(xi, &mut Vec::new()))
}

/// Average bit error probability with equiprobable bits.
pub fn analytic_ber(ts: &TapStats, q: u64, xi: f64) -> Result<f64> {
    Ok(ln_analytic_ber(ts, q, xi)?.exp())
}

/// Uniform threshold grid, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl ThresholdGrid {
    /// Spans `[min mean − 6σ_max, max mean + 6σ_max]`; a degenerate span is
    /// widened to unit width.
    pub fn covering(components: &[Component], points: usize) -> Self {
        let sd_max = components.iter().map(|c| c.var.max(0.0).sqrt()).fold(0.0, f64::max);
        let lo = components.iter().map(|c| c.mean).fold(f64::INFINITY, f64::min) - 6.0 * sd_max;
        let hi = components.iter().map(|c| c.mean).fold(f64::NEG_INFINITY, f64::max) + 6.0 * sd_max;
        if hi - lo > 0.0 {
            ThresholdGrid { lo, hi, points }
        } else {
            ThresholdGrid { lo: lo - 0.5, hi: hi + 0.5, points }
        }
    }

    pub fn step(&self) -> f64 {
        if self.points > 1 {
            (self.hi - self.lo) / (self.points - 1) as f64
        } else {
            0.0
        }
    }

    pub fn point(&self, j: usize) -> f64 {
        if j + 1 == self.points {
            self.hi
        } else {
            self.lo + j as f64 * self.step()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub pe: f64,
    pub ln_pe: f64,
}

/// Exhaustive grid search for the BER-minimizing threshold; ties go to the
/// smallest threshold. `grid = None` uses the covering grid with
/// `points` points.
pub fn optimal_threshold(
    ts: &TapStats,
    q: u64,
    grid: Option<ThresholdGrid>,
    points: usize,
) -> Result<ThresholdChoice> {
    let comps = mixture_components(ts, q)?;
    let grid = grid.unwrap_or_else(|| ThresholdGrid::covering(&comps, points));
    if grid.points == 0 {
        return Err(McvdError::EmptyGrid("threshold grid"));
    }
    let mix = Mixture::new(&comps);
    let mut buf = Vec::with_capacity(comps.len());
    let (mut ones, mut zeros) = (Vec::new(), Vec::new());
    // Evaluate every STRIDE-th point, then only the coarse cells whose lower
    // bound (bit-1 mass at the left edge plus bit-0 mass at the right edge)
    // can still beat the incumbent. The result equals a full scan.
    let last = grid.points - 1;
    let mut coarse: Vec<usize> = (0..=last).step_by(THRESHOLD_STRIDE).chain(std::iter::once(last)).collect();
    coarse.dedup();
    let mut vals: Vec<(usize, f64)> = Vec::new();
    let mut sides = Vec::with_capacity(coarse.len());
    for &j in &coarse {
        let xi = grid.point(j);
        vals.push((j, mix.ln_ber(xi, &mut buf)));
        sides.push(mix.ln_sides(xi, &mut ones, &mut zeros));
    }
    let incumbent = |vals: &[(usize, f64)]| vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let mut cells: Vec<(f64, usize)> = (1..coarse.len())
        .filter(|&c| coarse[c] > coarse[c - 1] + 1)
        .map(|c| (log_sum_exp(&[sides[c - 1].0, sides[c].1]) - mix.ln_count, c))
        .collect();
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (bound, c) in cells {
        if bound > incumbent(&vals) + 1e-9 {
            break;
        }
        for j in coarse[c - 1] + 1..coarse[c] {
            vals.push((j, mix.ln_ber(grid.point(j), &mut buf)));
        }
    }
    let (j, v) = vals
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .ok_or(McvdError::EmptyGrid("threshold grid"))?;
    Ok(ThresholdChoice { threshold: grid.point(j), pe: v.exp(), ln_pe: v })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    /// Samples the Gaussian count model.
    Gaussian,
    /// Particle-level counts: binomial absorption, Poisson passive samples.
    Binomial,
}

impl std::str::FromStr for SimMode {
    type Err = McvdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(SimMode::Gaussian),
            "binomial" => Ok(SimMode::Binomial),
            other => Err(McvdError::Argument(format!("unknown simulation mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for SimMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SimMode::Gaussian => "gaussian",
            SimMode::Binomial => "binomial",
        })
    }
}

/// Error-frequency estimate from a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub errors: u64,
    pub trials: u64,
    pub pe: f64,
    /// Half-width of the 95% normal-approximation interval.
    pub ci95: f64,
}

impl McEstimate {
    pub fn from_counts(errors: u64, trials: u64) -> Self {
        let pe = errors as f64 / trials as f64;
        McEstimate { errors, trials, pe, ci95: 1.96 * (pe * (1.0 - pe) / trials as f64).sqrt() }
    }

    /// `√(p̂(1−p̂)/n)`.
    pub fn std_error(&self) -> f64 {
        self.ci95 / 1.96
    }
}

/// One evaluated operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub scheme: String,
    pub q: u64,
    pub threshold: f64,
    pub analytic_pe: f64,
    pub empirical_pe: Option<f64>,
    pub trials: u64,
    pub ci95: f64,
}

const CHUNK: u64 = 4096;

enum Sampler {
    Gaussian { window: Vec<(f64, f64)>, reuse: Option<Vec<(f64, f64)>> },
    Absorbing { q: u64, window: Vec<f64>, reuse: Vec<f64> },
    Passive { window: Vec<Vec<Poisson<f64>>>, reuse: Vec<Vec<Poisson<f64>>> },
}

impl Sampler {
    fn count<R: RngCore>(&self, pattern: u32, rng: &mut R) -> f64 {
        match self {
            Sampler::Gaussian { window, reuse } => {
                let draw = |taps: &[(f64, f64)], rng: &mut R| {
                    let (mut m, mut v) = (0.0, 0.0);
                    for (i, &(tm, tv)) in taps.iter().enumerate() {
                        if pattern >> i & 1 == 1 {
                            m += tm;
                            v += tv;
                        }
                    }
                    let z: f64 = StandardNormal.sample(rng);
                    m + v.sqrt() * z
                };
                let y = draw(window, rng);
                match reuse {
                    Some(u) => y - draw(u, rng),
                    None => y,
                }
            }
            Sampler::Absorbing { q, window, reuse } => {
                let mut y = 0i64;
                for (i, (&fw, &fu)) in window.iter().zip(reuse).enumerate() {
                    if pattern >> i & 1 == 0 || *q == 0 {
                        continue;
                    }
                    // each molecule lands in at most one of the two disjoint intervals
                    let nu = if fu > 0.0 {
                        Binomial::new(*q, fu.min(1.0)).expect("valid p").sample(rng)
                    } else {
                        0
                    };
                    let rest = q - nu;
                    let pw = if fu < 1.0 { (fw / (1.0 - fu)).clamp(0.0, 1.0) } else { 0.0 };
                    let nw = if rest > 0 && pw > 0.0 {
                        Binomial::new(rest, pw).expect("valid p").sample(rng)
                    } else {
                        0
                    };
                    y += nw as i64 - nu as i64;
                }
                y as f64
            }
            Sampler::Passive { window, reuse } => {
                let mut y = 0.0;
                for (i, (w, u)) in window.iter().zip(reuse).enumerate() {
                    if pattern >> i & 1 == 0 {
                        continue;
                    }
                    for d in w {
                        y += d.sample(rng);
                    }
                    for d in u {
                        y -= d.sample(rng);
                    }
                }
                y
            }
        }
    }
}

fn poissons(means: impl Iterator<Item = f64>) -> Vec<Poisson<f64>> {
    means.filter(|&m| m > 0.0).map(|m| Poisson::new(m).expect("positive mean")).collect()
}

fn build_sampler(
    cfg: &LinkConfig,
    p: &ChannelParams,
    w: &DetectionWindow,
    r: &ReusableWindow,
    mode: SimMode,
) -> Result<Sampler> {
    r.validate_pairing(w)?;
    let ws = window_stats(w, cfg, p)?;
    let rs = reuse_window_stats(r, cfg, p)?;
    let q = cfg.q as f64;
    Ok(match (mode, p.kind) {
        (SimMode::Gaussian, _) => Sampler::Gaussian {
            window: ws.taps.iter().map(|t| (q * t.mean, q * t.var)).collect(),
            reuse: (!r.is_empty()).then(|| rs.taps.iter().map(|t| (q * t.mean, q * t.var)).collect()),
        },
        (SimMode::Binomial, ReceiverKind::Absorbing) => Sampler::Absorbing {
            q: cfg.q,
            window: ws.taps.iter().map(|t| t.mean).collect(),
            reuse: rs.taps.iter().map(|t| t.mean).collect(),
        },
        (SimMode::Binomial, ReceiverKind::Passive) => {
            let DetectionWindow::Sampled { n1, n2 } = *w else {
                return Err(McvdError::KindMismatch("sampled detection window"));
            };
            let reuse_end = match *r {
                ReusableWindow::Sampled { nu } => Some(nu),
                _ => None,
            };
            let mut window = Vec::new();
            let mut reuse = Vec::new();
            for i in 0..=cfg.isi_len {
                let shift = i as f64 * cfg.ts;
                let at = |n: usize| q * p.p(cfg.sample_time(n) + shift);
                window.push(poissons((n1..=n2).map(at)));
                reuse.push(match reuse_end {
                    Some(nu) => poissons((0..=nu).map(at)),
                    None => Vec::new(),
                });
            }
            Sampler::Passive { window, reuse }
        }
    })
}

/// Per-trial generator: a ChaCha8 keyed by `seed` and positioned on stream
/// `trial`, so every trial draws the same numbers no matter how the trials
/// are split across threads.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Monte Carlo BER of an i.i.d. equiprobable bit stream. Each trial draws
/// the current bit and its `L` predecessors, the detection-window count and,
/// when reuse is active, the reuse-window count, then decides "1" iff the
/// difference is at least `ξ`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_ber(
    cfg: &LinkConfig,
    p: &ChannelParams,
    w: &DetectionWindow,
    r: &ReusableWindow,
    xi: f64,
    trials: u64,
    seed: u64,
    mode: SimMode,
) -> Result<McEstimate> {
    if trials == 0 {
        return Err(McvdError::Argument("trials must be at least 1".into()));
    }
    if cfg.isi_len > MAX_ENUMERATED_ISI {
        return Err(McvdError::EnumerationTooLarge(cfg.isi_len));
    }
    let sampler = build_sampler(cfg, p, w, r, mode)?;
    let mask = (1u32 << (cfg.isi_len + 1)) - 1;
    let chunks = trials.div_ceil(CHUNK);
    let errors: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(trials);
            let mut errs = 0u64;
            for trial in start..end {
                let mut rng = trial_rng(seed, trial);
                let pattern = rng.next_u32() & mask;
                let y = sampler.count(pattern, &mut rng);
                if (y >= xi) != (pattern & 1 == 1) {
                    errs += 1;
                }
            }
            errs
        })
        .sum();
    Ok(McEstimate::from_counts(errors, trials))
}

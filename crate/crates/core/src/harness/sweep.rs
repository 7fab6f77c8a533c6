//! Scheme-comparison sweeps over the molecule count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Scheme};
use crate::channel::{ChannelParams, ReceiverKind};
use crate::detection::{optimal_threshold, simulate_ber, BerPoint, ThresholdChoice};
use crate::error::{McvdError, Result};
use crate::metric::noise_neglect_ratio;
use crate::optimizer::{
    bar_n1, bar_t1, closed_form_nu, closed_form_tu, ideal_nu, ideal_tu, numerical_nu, numerical_tu,
    optimal_window, root_nu, root_tu, ClosedForm, SearchSettings, WindowChoice,
};
use crate::stats::{
    reuse_adjusted_stats, reuse_window_stats, window_stats, DetectionWindow, LinkConfig, ReusableWindow,
};

/// Optimizer by-products recorded with each row.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Intermediates {
    pub window_msinar: Option<f64>,
    pub q_hat_min: Option<f64>,
    pub window_frozen: bool,
    /// `t̄1*` (s) or `n̄1*`.
    pub bar_start: Option<f64>,
    /// Root-method reuse duration (s) or sample index.
    pub root: Option<f64>,
    pub root_clamp_applied: bool,
    pub closed_form: Option<ClosedForm>,
    pub closed_form_error: Option<String>,
    /// The closed-form duration reached the window start and was moved to
    /// the last reusable grid point.
    pub reuse_projected: bool,
    pub noise_ratio: Option<f64>,
}

/// One scheme at one molecule count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub receiver: ReceiverKind,
    pub ts_s: f64,
    pub isi_len: usize,
    /// Sampling interval (s); used to report passive windows in seconds.
    pub t_s: f64,
    pub window: Option<DetectionWindow>,
    pub reuse: ReusableWindow,
    pub point: BerPoint,
    pub intermediates: Intermediates,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub scheme: Scheme,
    pub q: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<PointFailure>,
}

/// Quantities that do not depend on `Q`.
struct Shared {
    p: ChannelParams,
    bar_start: Result<f64>,
    root: Option<Result<(f64, bool)>>,
    closed: Option<Result<ClosedForm>>,
}

fn shared(cfg: &ExperimentConfig, s: &SearchSettings) -> Result<Shared> {
    let p = cfg.channel()?;
    let link = cfg.link(1)?;
    let needs_opt = cfg.schemes.iter().any(|&k| k != Scheme::ConventionalOok);
    let wants_cf = cfg.schemes.contains(&Scheme::ProposedTheoretical);
    if !needs_opt {
        return Ok(Shared { p, bar_start: Ok(f64::NAN), root: None, closed: None });
    }
    let (bar_start, root, closed) = match p.kind {
        ReceiverKind::Absorbing => {
            let bar = bar_t1(&link, &p, s.window_steps);
            let root = bar.clone().map(|b| root_tu(&link, &p, b).map(|r| (r.tu, r.clamp_applied)));
            let closed = bar.clone().map(|b| closed_form_tu(&link, &p, b));
            (bar, root.ok(), closed.ok())
        }
        ReceiverKind::Passive => {
            let bar = bar_n1(&link, &p);
            let root = bar.clone().map(|b| root_nu(&link, &p, b).map(|r| (r.nu as f64, r.clamp_applied)));
            let closed = bar.clone().map(|b| closed_form_nu(&link, &p, b));
            (bar.map(|b| b as f64), root.ok(), closed.ok())
        }
    };
    Ok(Shared { p, bar_start, root, closed: if wants_cf { closed } else { None } })
}

/// Seed of the Monte Carlo stream for one (scheme, Q) point.
pub fn point_seed(seed: u64, scheme: Scheme, q: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(mix(seed) ^ scheme as u64) ^ q)
}

/// Moves a reuse duration that reached the window start onto the last
/// reusable grid point. Returns the window and whether it moved.
fn project_reuse(cf: f64, w: &DetectionWindow, tu_points: usize) -> (ReusableWindow, bool) {
    match *w {
        DetectionWindow::Continuous { t1, .. } => {
            if cf < t1 {
                (ReusableWindow::Continuous { tu: cf }, false)
            } else {
                let last = t1 * (tu_points.saturating_sub(1)) as f64 / tu_points.max(1) as f64;
                (ReusableWindow::Continuous { tu: last }, true)
            }
        }
        DetectionWindow::Sampled { n1, .. } => {
            let nu = cf as usize;
            if nu < n1 {
                (ReusableWindow::Sampled { nu }, false)
            } else if n1 > 0 {
                (ReusableWindow::Sampled { nu: n1 - 1 }, true)
            } else {
                (ReusableWindow::Empty, true)
            }
        }
    }
}

struct Resolved {
    window: DetectionWindow,
    reuse: ReusableWindow,
    threshold: Option<ThresholdChoice>,
}

fn resolve(
    scheme: Scheme,
    link: &LinkConfig,
    sh: &Shared,
    wc: Option<&WindowChoice>,
    s: &SearchSettings,
    im: &mut Intermediates,
) -> Result<Resolved> {
    let p = &sh.p;
    if scheme == Scheme::ConventionalOok {
        let window = DetectionWindow::full(link, p.kind);
        return Ok(Resolved { window, reuse: ReusableWindow::Empty, threshold: None });
    }
    let wc = wc.ok_or(McvdError::Argument("missing optimal window".into()))?;
    let w = wc.window;
    let plain = |reuse| Resolved { window: w, reuse, threshold: None };
    Ok(match scheme {
        Scheme::ConventionalOok => unreachable!(),
        Scheme::OptimalWindow => plain(ReusableWindow::Empty),
        Scheme::ProposedNumerical => match p.kind {
            ReceiverKind::Absorbing => {
                plain(ReusableWindow::Continuous { tu: numerical_tu(&w, link, p, s.tu_points)? })
            }
            ReceiverKind::Passive => plain(
                numerical_nu(&w, link, p)?.map_or(ReusableWindow::Empty, |nu| ReusableWindow::Sampled { nu }),
            ),
        },
        Scheme::ProposedTheoretical => {
            let cf = match &sh.closed {
                Some(Ok(cf)) => cf.value,
                Some(Err(e)) => return Err(e.clone()),
                None => return Err(McvdError::Argument("closed form unavailable".into())),
            };
            let (reuse, moved) = project_reuse(cf, &w, s.tu_points);
            im.reuse_projected = moved;
            plain(reuse)
        }
        Scheme::Ideal => match p.kind {
            ReceiverKind::Absorbing => {
                let (tu, thr) = ideal_tu(&w, link, p, s)?;
                Resolved { window: w, reuse: ReusableWindow::Continuous { tu }, threshold: Some(thr) }
            }
            ReceiverKind::Passive => match ideal_nu(&w, link, p, s.threshold_points)? {
                Some((nu, thr)) => {
                    Resolved { window: w, reuse: ReusableWindow::Sampled { nu }, threshold: Some(thr) }
                }
                None => plain(ReusableWindow::Empty),
            },
        },
    })
}

fn evaluate(
    cfg: &ExperimentConfig,
    scheme: Scheme,
    q: u64,
    sh: &Shared,
    wc: Option<&Result<WindowChoice>>,
) -> SweepRow {
    let s = cfg.search_settings();
    let link = LinkConfig::for_channel(q, cfg.ts_s, cfg.isi_len, &sh.p);
    let mut im = Intermediates::default();
    let mut row = SweepRow {
        scheme,
        receiver: sh.p.kind,
        ts_s: cfg.ts_s,
        isi_len: cfg.isi_len,
        t_s: link.t_s,
        window: None,
        reuse: ReusableWindow::Empty,
        point: BerPoint {
            scheme: scheme.to_string(),
            q,
            threshold: f64::NAN,
            analytic_pe: f64::NAN,
            empirical_pe: None,
            trials: 0,
            ci95: f64::NAN,
        },
        intermediates: Intermediates::default(),
        error: None,
    };
    let result = (|| -> Result<()> {
        let wc = match wc {
            Some(Ok(w)) => Some(w),
            Some(Err(e)) => return Err(e.clone()),
            None => None,
        };
        if let Some(w) = wc {
            im.window_msinar = Some(w.msinar);
            im.q_hat_min = Some(w.q_hat_min);
            im.window_frozen = w.frozen;
            im.bar_start = sh.bar_start.as_ref().ok().copied();
            if let Some(Ok((r, clamp))) = &sh.root {
                im.root = Some(*r);
                im.root_clamp_applied = *clamp;
            }
            match &sh.closed {
                Some(Ok(cf)) => im.closed_form = Some(*cf),
                Some(Err(e)) => im.closed_form_error = Some(e.to_string()),
                None => {}
            }
        }
        let res = resolve(scheme, &link, sh, wc, &s, &mut im)?;
        row.window = Some(res.window);
        row.reuse = res.reuse;
        let stats = reuse_adjusted_stats(&res.window, &res.reuse, &link, &sh.p)?;
        if !res.reuse.is_empty() {
            let plain = window_stats(&res.window, &link, &sh.p)?;
            let reuse = reuse_window_stats(&res.reuse, &link, &sh.p)?;
            im.noise_ratio = Some(noise_neglect_ratio(&plain, &reuse));
        }
        let thr = match res.threshold {
            Some(t) => t,
            None => optimal_threshold(&stats, q, None, s.threshold_points)?,
        };
        row.point.threshold = thr.threshold;
        row.point.analytic_pe = thr.pe;
        let seed = point_seed(cfg.seed, scheme, q);
        let mc =
            simulate_ber(&link, &sh.p, &res.window, &res.reuse, thr.threshold, cfg.trials, seed, cfg.mode)?;
        row.point.empirical_pe = Some(mc.pe);
        row.point.trials = mc.trials;
        row.point.ci95 = mc.ci95;
        Ok(())
    })();
    row.intermediates = im;
    if let Err(e) = result {
        row.error = Some(e.to_string());
    }
    row
}

/// Evaluates every scheme at every `Q`. Rows come back ordered by scheme
/// (canonical order) and then by ascending `Q`; a failing point keeps its
/// row with `NaN` metrics and is listed in `failures`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let s = cfg.search_settings();
    let sh = shared(cfg, &s)?;
    let mut schemes = cfg.schemes.clone();
    schemes.sort();
    let mut qs = cfg.q.clone();
    qs.sort_unstable();
    qs.dedup();
    let needs_opt = schemes.iter().any(|&k| k != Scheme::ConventionalOok);
    let windows: Vec<Option<Result<WindowChoice>>> = qs
        .par_iter()
        .map(|&q| {
            needs_opt.then(|| {
                let link = LinkConfig::for_channel(q, cfg.ts_s, cfg.isi_len, &sh.p);
                optimal_window(&link, &sh.p, s.window_steps)
            })
        })
        .collect();
    let points: Vec<(Scheme, usize)> =
        schemes.iter().flat_map(|&k| (0..qs.len()).map(move |i| (k, i))).collect();
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|&(k, i)| {
            let wc = if k == Scheme::ConventionalOok { None } else { windows[i].as_ref() };
            evaluate(cfg, k, qs[i], &sh, wc)
        })
        .collect();
    let failures = rows
        .iter()
        .filter_map(|r| {
            r.error.as_ref().map(|m| PointFailure { scheme: r.scheme, q: r.point.q, message: m.clone() })
        })
        .collect();
    Ok(SweepReport { rows, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::GridConfig;

    fn small(receiver: ReceiverKind, l: usize) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(receiver);
        cfg.isi_len = l;
        cfg.q = vec![1000, 100];
        cfg.trials = 10_000;
        cfg.override_validity = true;
        cfg.grid = GridConfig { tu_points: 60, threshold_points: 256, window_steps: 200 };
        cfg
    }

    #[test]
    fn rows_are_canonically_ordered() {
        let mut cfg = small(ReceiverKind::Absorbing, 1);
        cfg.schemes = vec![Scheme::Ideal, Scheme::ConventionalOok, Scheme::ProposedNumerical];
        let rep = run_sweep(&cfg).unwrap();
        assert!(rep.failures.is_empty(), "{:?}", rep.failures);
        let order: Vec<(Scheme, u64)> = rep.rows.iter().map(|r| (r.scheme, r.point.q)).collect();
        assert_eq!(
            order,
            vec![
                (Scheme::ConventionalOok, 100),
                (Scheme::ConventionalOok, 1000),
                (Scheme::ProposedNumerical, 100),
                (Scheme::ProposedNumerical, 1000),
                (Scheme::Ideal, 100),
                (Scheme::Ideal, 1000),
            ]
        );
    }

    #[test]
    fn failing_points_keep_their_rows() {
        let mut cfg = small(ReceiverKind::Passive, 10);
        cfg.schemes = vec![Scheme::OptimalWindow, Scheme::ProposedTheoretical];
        let rep = run_sweep(&cfg).unwrap();
        assert_eq!(rep.rows.len(), 4);
        assert_eq!(rep.failures.len(), 2);
        assert!(rep.failures.iter().all(|f| f.scheme == Scheme::ProposedTheoretical));
        let bad = &rep.rows[2];
        assert!(bad.point.analytic_pe.is_nan());
        assert!(bad.intermediates.closed_form_error.is_some());
        assert!(rep.rows[0].error.is_none() && rep.rows[0].point.analytic_pe.is_finite());
    }

    #[test]
    fn projection_moves_reuse_before_window() {
        let w = DetectionWindow::Continuous { t1: 0.04, t2: 0.2 };
        assert_eq!(project_reuse(0.01, &w, 400), (ReusableWindow::Continuous { tu: 0.01 }, false));
        let (r, moved) = project_reuse(0.04, &w, 400);
        assert!(moved);
        assert_eq!(r, ReusableWindow::Continuous { tu: 0.04 * 399.0 / 400.0 });
        let s = DetectionWindow::Sampled { n1: 3, n2: 9 };
        assert_eq!(project_reuse(5.0, &s, 400), (ReusableWindow::Sampled { nu: 2 }, true));
        let s0 = DetectionWindow::Sampled { n1: 0, n2: 9 };
        assert_eq!(project_reuse(1.0, &s0, 400), (ReusableWindow::Empty, true));
    }

    #[test]
    fn point_seeds_differ() {
        let a = point_seed(1, Scheme::Ideal, 100);
        assert_ne!(a, point_seed(1, Scheme::Ideal, 300));
        assert_ne!(a, point_seed(1, Scheme::OptimalWindow, 100));
        assert_ne!(a, point_seed(2, Scheme::Ideal, 100));
        assert_eq!(a, point_seed(1, Scheme::Ideal, 100));
    }
}

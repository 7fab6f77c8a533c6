//! Experiment configuration: TOML schema, defaults and validation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, ReceiverKind};
use crate::detection::{SimMode, DEFAULT_THRESHOLD_POINTS, MAX_ENUMERATED_ISI};
use crate::error::{McvdError, Result};
use crate::optimizer::SearchSettings;
use crate::stats::LinkConfig;

/// Smallest Monte Carlo trial count accepted for BER output.
pub const MIN_TRIALS: u64 = 10_000;

/// Default molecule-count sweep.
pub const DEFAULT_Q_SWEEP: [u64; 7] = [100, 300, 1_000, 3_000, 10_000, 30_000, 100_000];

/// Detection schemes compared by a sweep, in canonical output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Full-symbol window, no reuse.
    ConventionalOok,
    /// Optimized window, no reuse.
    OptimalWindow,
    /// Optimized window, reuse duration from the mSINAR grid search.
    ProposedNumerical,
    /// Optimized window, reuse duration from the closed form.
    ProposedTheoretical,
    /// Optimized window, reuse duration minimizing the analytic BER.
    Ideal,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::ConventionalOok,
        Scheme::OptimalWindow,
        Scheme::ProposedNumerical,
        Scheme::ProposedTheoretical,
        Scheme::Ideal,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::ConventionalOok => "conventional_ook",
            Scheme::OptimalWindow => "optimal_window",
            Scheme::ProposedNumerical => "proposed_numerical",
            Scheme::ProposedTheoretical => "proposed_theoretical",
            Scheme::Ideal => "ideal",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = McvdError;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| McvdError::Argument(format!("unknown scheme '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub tu_points: usize,
    pub threshold_points: usize,
    pub window_steps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { tu_points: 400, threshold_points: DEFAULT_THRESHOLD_POINTS, window_steps: 2000 }
    }
}

/// A complete experiment description. Lengths are kept in the units of the
/// file (µm, µm²/s) so that a load/serialize round trip is exact; use
/// [`ExperimentConfig::channel`] for SI parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub receiver: ReceiverKind,
    pub d_um: f64,
    pub r_um: f64,
    #[serde(rename = "D_um2_per_s")]
    pub diffusion_um2_per_s: f64,
    #[serde(rename = "Ts_s")]
    pub ts_s: f64,
    #[serde(rename = "L")]
    pub isi_len: usize,
    #[serde(rename = "Q")]
    pub q: Vec<u64>,
    pub trials: u64,
    pub seed: u64,
    pub mode: SimMode,
    pub schemes: Vec<Scheme>,
    pub delta_t_s: f64,
    pub override_validity: bool,
    /// Output directory for `mcvd run`; `None` means the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    pub grid: GridConfig,
}

/// Same keys as [`ExperimentConfig`], all optional except `receiver`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    receiver: ReceiverKind,
    d_um: Option<f64>,
    r_um: Option<f64>,
    #[serde(rename = "D_um2_per_s")]
    diffusion_um2_per_s: Option<f64>,
    #[serde(rename = "Ts_s")]
    ts_s: Option<f64>,
    #[serde(rename = "L")]
    isi_len: Option<usize>,
    #[serde(rename = "Q")]
    q: Option<Vec<u64>>,
    trials: Option<u64>,
    seed: Option<u64>,
    mode: Option<SimMode>,
    schemes: Option<Vec<Scheme>>,
    delta_t_s: Option<f64>,
    override_validity: Option<bool>,
    out_dir: Option<String>,
    #[serde(default)]
    grid: RawGrid,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    tu_points: Option<usize>,
    threshold_points: Option<usize>,
    window_steps: Option<usize>,
}

impl ExperimentConfig {
    /// Defaults for a receiver kind. The passive geometry (d = 10 µm,
    /// r = 5 µm) lies outside the passive validity range, so the passive
    /// defaults need `override_validity = true` to validate.
    pub fn defaults(receiver: ReceiverKind) -> Self {
        let (d_um, r_um, ts_s) = match receiver {
            ReceiverKind::Absorbing => (5.0, 5.0, 0.2),
            ReceiverKind::Passive => (10.0, 5.0, 1.0),
        };
        ExperimentConfig {
            receiver,
            d_um,
            r_um,
            diffusion_um2_per_s: 79.4,
            ts_s,
            isi_len: 3,
            q: DEFAULT_Q_SWEEP.to_vec(),
            trials: 100_000,
            seed: 1,
            mode: SimMode::Gaussian,
            schemes: Scheme::ALL.to_vec(),
            delta_t_s: 1e-4,
            override_validity: false,
            out_dir: None,
            grid: GridConfig::default(),
        }
    }

    fn from_raw(raw: RawConfig) -> Self {
        let d = Self::defaults(raw.receiver);
        let g = GridConfig::default();
        ExperimentConfig {
            receiver: raw.receiver,
            d_um: raw.d_um.unwrap_or(d.d_um),
            r_um: raw.r_um.unwrap_or(d.r_um),
            diffusion_um2_per_s: raw.diffusion_um2_per_s.unwrap_or(d.diffusion_um2_per_s),
            ts_s: raw.ts_s.unwrap_or(d.ts_s),
            isi_len: raw.isi_len.unwrap_or(d.isi_len),
            q: raw.q.unwrap_or(d.q),
            trials: raw.trials.unwrap_or(d.trials),
            seed: raw.seed.unwrap_or(d.seed),
            mode: raw.mode.unwrap_or(d.mode),
            schemes: raw.schemes.unwrap_or(d.schemes),
            delta_t_s: raw.delta_t_s.unwrap_or(d.delta_t_s),
            override_validity: raw.override_validity.unwrap_or(d.override_validity),
            out_dir: raw.out_dir,
            grid: GridConfig {
                tu_points: raw.grid.tu_points.unwrap_or(g.tu_points),
                threshold_points: raw.grid.threshold_points.unwrap_or(g.threshold_points),
                window_steps: raw.grid.window_steps.unwrap_or(g.window_steps),
            },
        }
    }

    /// Channel parameters in SI units.
    pub fn channel(&self) -> Result<ChannelParams> {
        ChannelParams::new(
            self.receiver,
            self.d_um / 1e6,
            self.r_um / 1e6,
            self.diffusion_um2_per_s / 1e12,
            self.override_validity,
        )
    }

    /// Link parameters at molecule count `q`.
    pub fn link(&self, q: u64) -> Result<LinkConfig> {
        Ok(LinkConfig::for_channel(q, self.ts_s, self.isi_len, &self.channel()?))
    }

    pub fn search_settings(&self) -> SearchSettings {
        SearchSettings {
            window_steps: self.grid.window_steps,
            tu_points: self.grid.tu_points,
            threshold_points: self.grid.threshold_points,
        }
    }

    /// Every violated invariant, empty when the config is usable.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, x) in [
            ("d_um", self.d_um),
            ("r_um", self.r_um),
            ("D_um2_per_s", self.diffusion_um2_per_s),
            ("Ts_s", self.ts_s),
            ("delta_t_s", self.delta_t_s),
        ] {
            if !(x.is_finite() && x > 0.0) {
                v.push(format!("{name} must be positive, got {x}"));
            }
        }
        if self.isi_len > MAX_ENUMERATED_ISI {
            v.push(format!("L = {} exceeds the enumeration limit {MAX_ENUMERATED_ISI}", self.isi_len));
        }
        if self.q.is_empty() {
            v.push("Q list is empty".into());
        }
        let mut qs = self.q.clone();
        qs.sort_unstable();
        qs.dedup();
        if qs.len() != self.q.len() {
            v.push("Q list has duplicates".into());
        }
        if self.q.contains(&0) {
            v.push("Q values must be at least 1".into());
        }
        if self.schemes.is_empty() {
            v.push("schemes list is empty".into());
        }
        let mut seen = self.schemes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.schemes.len() {
            v.push("schemes list has duplicates".into());
        }
        if self.trials < MIN_TRIALS {
            v.push(format!("trials = {} is below the minimum {MIN_TRIALS}", self.trials));
        }
        for (name, n) in [
            ("grid.tu_points", self.grid.tu_points),
            ("grid.threshold_points", self.grid.threshold_points),
            ("grid.window_steps", self.grid.window_steps),
        ] {
            if n == 0 {
                v.push(format!("{name} must be at least 1"));
            }
        }
        if v.iter().any(|m| m.starts_with("d_um") || m.starts_with("r_um") || m.starts_with("D_um")) {
            return v;
        }
        match self.channel() {
            Ok(p) => {
                if self.ts_s > 0.0 {
                    let link = LinkConfig::for_channel(1, self.ts_s, self.isi_len, &p);
                    v.extend(link.violations(&p, false));
                }
            }
            Err(e) => v.push(format!("{e} (set override_validity to bypass)")),
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(McvdError::InvalidConfig(v))
        }
    }

    /// Canonical TOML with every key spelled out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

impl FromStr for ExperimentConfig {
    type Err = McvdError;

    /// Parses TOML and fills defaults without validating.
    fn from_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| McvdError::Parse(e.to_string()))?;
        Ok(ExperimentConfig::from_raw(raw))
    }
}

/// Parses and validates a config from TOML text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = text.parse()?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a config file without validating it, so that command
/// line overrides can be applied first.
pub fn read_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| McvdError::Io(format!("{}: {e}", path.display())))?;
    text.parse()
}

/// Reads, parses and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let cfg = read_config(path)?;
    cfg.validate()?;
    Ok(cfg)
}

//! Desired/ISI decomposition of the channel response on a fixed time grid.

use std::fmt::Write as _;
use std::path::Path;

use super::config::ExperimentConfig;
use super::output::{fmt_f64, write_file};
use crate::channel::ReceiverKind;
use crate::error::{McvdError, Result};
use crate::optimizer::{bar_n1, bar_t1, limit_window, root_nu, root_tu};

/// Sampled CIR columns plus the optimizer markers, in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct CirTable {
    /// `t_s, desired, isi_1..isi_L, total_isi`.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub markers: Vec<(String, f64)>,
}

impl CirTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn marker(&self, name: &str) -> Option<f64> {
        self.markers.iter().find(|m| m.0 == name).map(|m| m.1)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.markers {
            let _ = writeln!(out, "# {k} = {}", fmt_f64(*v));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|&x| fmt_f64(x)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Tabulates the desired response and each ISI tap over `[0, Ts]` with
/// step `delta_t_s`. Markers give the converged window, `t̄1*` (or `n̄1*`)
/// and the root-method reuse duration.
pub fn cir_table(cfg: &ExperimentConfig) -> Result<CirTable> {
    cfg.validate()?;
    let p = cfg.channel()?;
    let link = cfg.link(1)?;
    let l = cfg.isi_len;
    let steps = (cfg.ts_s / cfg.delta_t_s).round() as usize;
    if steps == 0 {
        return Err(McvdError::Argument("delta_t_s exceeds Ts_s".into()));
    }
    let mut columns = vec!["t_s".to_string(), "desired".to_string()];
    columns.extend((1..=l).map(|k| format!("isi_{k}")));
    columns.push("total_isi".into());
    let rows = (0..=steps)
        .map(|j| {
            let t = j as f64 * cfg.delta_t_s;
            let mut row = Vec::with_capacity(l + 3);
            row.push(t);
            row.push(p.cir(t));
            let mut total = 0.0;
            for k in 1..=l {
                let v = p.cir(t + k as f64 * cfg.ts_s);
                total += v;
                row.push(v);
            }
            row.push(total);
            row
        })
        .collect();
    let mut markers = vec![("peak_time_s".to_string(), p.peak_time())];
    let lw = limit_window(&link, &p, cfg.grid.window_steps)?;
    let (a, b) = lw.window.bounds_s(&link);
    markers.push(("window_t1_s".into(), a));
    markers.push(("window_t2_s".into(), b));
    match p.kind {
        ReceiverKind::Absorbing => {
            let bar = bar_t1(&link, &p, cfg.grid.window_steps)?;
            markers.push(("bar_t1_s".into(), bar));
            let root = root_tu(&link, &p, bar)?;
            markers.push(("tu_root_s".into(), root.tu));
        }
        ReceiverKind::Passive => {
            markers.push(("sample_interval_s".into(), link.t_s));
            let bar = bar_n1(&link, &p)?;
            markers.push(("bar_n1_s".into(), bar as f64 * link.t_s));
            if bar > 0 {
                let root = root_nu(&link, &p, bar)?;
                markers.push(("nu_root_s".into(), root.nu as f64 * link.t_s));
            }
        }
    }
    Ok(CirTable { columns, rows, markers })
}

/// Writes [`cir_table`] as CSV with `# name = value` marker lines on top.
pub fn export_cir(cfg: &ExperimentConfig, out: impl AsRef<Path>) -> Result<CirTable> {
    let table = cir_table(cfg)?;
    write_file(out.as_ref(), &table.to_csv())?;
    Ok(table)
}

//! CSV and plot-data writers for sweep results.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::config::Scheme;
use super::sweep::SweepRow;
use crate::channel::ReceiverKind;
use crate::error::{McvdError, Result};
use crate::stats::{DetectionWindow, ReusableWindow};

pub const CSV_HEADER: &str =
    "scheme,receiver,Ts_s,L,Q,t1_s,t2_s,tu_s,n1,n2,nu,threshold,pe_analytic,pe_mc,trials,ci95";

/// Flat CSV view of a [`SweepRow`]. Index columns that do not apply are
/// `-1`; failed metrics are `NaN`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CsvRecord {
    pub scheme: Scheme,
    pub receiver: ReceiverKind,
    #[serde(rename = "Ts_s")]
    pub ts_s: f64,
    #[serde(rename = "L")]
    pub isi_len: usize,
    #[serde(rename = "Q")]
    pub q: u64,
    pub t1_s: f64,
    pub t2_s: f64,
    pub tu_s: f64,
    pub n1: i64,
    pub n2: i64,
    pub nu: i64,
    pub threshold: f64,
    pub pe_analytic: f64,
    pub pe_mc: f64,
    pub trials: u64,
    pub ci95: f64,
}

impl From<&SweepRow> for CsvRecord {
    fn from(row: &SweepRow) -> Self {
        let (mut t1_s, mut t2_s, mut tu_s) = (f64::NAN, f64::NAN, f64::NAN);
        let (mut n1, mut n2, mut nu) = (-1, -1, -1);
        match row.window {
            Some(DetectionWindow::Continuous { t1, t2 }) => {
                t1_s = t1;
                t2_s = t2;
                tu_s = 0.0;
            }
            Some(DetectionWindow::Sampled { n1: a, n2: b }) => {
                t1_s = a as f64 * row.t_s;
                t2_s = b as f64 * row.t_s;
                n1 = a as i64;
                n2 = b as i64;
                tu_s = -1.0;
            }
            None => {}
        }
        match row.reuse {
            ReusableWindow::Continuous { tu } => tu_s = tu,
            ReusableWindow::Sampled { nu: n } => {
                nu = n as i64;
                tu_s = n as f64 * row.t_s;
            }
            ReusableWindow::Empty => {}
        }
        CsvRecord {
            scheme: row.scheme,
            receiver: row.receiver,
            ts_s: row.ts_s,
            isi_len: row.isi_len,
            q: row.point.q,
            t1_s,
            t2_s,
            tu_s,
            n1,
            n2,
            nu,
            threshold: row.point.threshold,
            pe_analytic: row.point.analytic_pe,
            pe_mc: row.point.empirical_pe.unwrap_or(f64::NAN),
            trials: row.point.trials,
            ci95: row.point.ci95,
        }
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

impl CsvRecord {
    fn fields(&self) -> [String; 16] {
        [
            self.scheme.to_string(),
            self.receiver.to_string(),
            fmt_f64(self.ts_s),
            self.isi_len.to_string(),
            self.q.to_string(),
            fmt_f64(self.t1_s),
            fmt_f64(self.t2_s),
            fmt_f64(self.tu_s),
            self.n1.to_string(),
            self.n2.to_string(),
            self.nu.to_string(),
            fmt_f64(self.threshold),
            fmt_f64(self.pe_analytic),
            fmt_f64(self.pe_mc),
            self.trials.to_string(),
            fmt_f64(self.ci95),
        ]
    }
}

fn csv_err(e: csv::Error) -> McvdError {
    McvdError::Parse(e.to_string())
}

pub fn csv_string(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::with_capacity(64 + rows.len() * 256));
    w.write_record(CSV_HEADER.split(',')).expect("in-memory write");
    for r in rows {
        w.write_record(CsvRecord::from(r).fields()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
}

/// Parses CSV text produced by [`write_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<CsvRecord>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(csv_err)?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(McvdError::Parse(format!("unexpected CSV header '{header}'")));
    }
    rdr.deserialize().map(|r| r.map_err(csv_err)).collect()
}

pub fn write_csv(rows: &[SweepRow], out: impl AsRef<Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(McvdError::Argument("no rows to write".into()));
    }
    write_file(out.as_ref(), &csv_string(rows))
}

/// One whitespace-separated block per scheme, `Q analytic_pe empirical_pe
/// ci95`, blocks separated by two blank lines (gnuplot `index` layout).
pub fn plotdata_string(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let mut current: Option<Scheme> = None;
    for r in rows {
        if current != Some(r.scheme) {
            if current.is_some() {
                out.push_str("\n\n");
            }
            let _ = writeln!(out, "# scheme {}", r.scheme);
            let _ = writeln!(out, "# Q analytic_pe empirical_pe ci95");
            current = Some(r.scheme);
        }
        let _ = writeln!(
            out,
            "{} {} {} {}",
            r.point.q,
            fmt_f64(r.point.analytic_pe),
            fmt_f64(r.point.empirical_pe.unwrap_or(f64::NAN)),
            fmt_f64(r.point.ci95)
        );
    }
    out
}

pub fn emit_plotdata(rows: &[SweepRow], out: impl AsRef<Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(McvdError::Argument("no rows to write".into()));
    }
    write_file(out.as_ref(), &plotdata_string(rows))
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| McvdError::Io(format!("{}: {e}", path.display())))
}

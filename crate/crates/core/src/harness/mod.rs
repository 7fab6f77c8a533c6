//! Experiment orchestration: configuration, sweeps, CIR export and output.

mod cir;
mod config;
mod output;
mod sweep;

pub use cir::{cir_table, export_cir, CirTable};
pub use config::{
    load_config, parse_config, read_config, ExperimentConfig, GridConfig, Scheme, DEFAULT_Q_SWEEP, MIN_TRIALS,
};
pub use output::{
    csv_string, emit_plotdata, fmt_f64, parse_csv, plotdata_string, write_csv, CsvRecord, CSV_HEADER,
};
pub use sweep::{point_seed, run_sweep, Intermediates, PointFailure, SweepReport, SweepRow};

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mcvd_core::detection::SimMode;
use mcvd_core::harness::{emit_plotdata, export_cir, read_config, run_sweep, write_csv, ExperimentConfig};
use mcvd_core::optimizer::optimize;
use mcvd_core::{McvdError, Result};

#[derive(Parser)]
#[command(name = "mcvd", version, about = "Molecular communication link simulator with ISI reuse")]
struct Cli {
    /// Accept a passive receiver outside r/(r+d) < 0.15.
    #[arg(long, global = true)]
    override_validity: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scheme comparison sweep and write results.csv,
    /// plotdata.dat and intermediates.json.
    Run(RunArgs),
    /// Export the desired/ISI decomposition of the channel response.
    Cir {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the optimizer results for every Q of the config as JSON.
    Optimize {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to out_dir from the config, then ".").
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    mode: Option<SimMode>,
}

fn load(path: &Path, override_validity: bool) -> Result<ExperimentConfig> {
    let mut cfg = read_config(path)?;
    cfg.override_validity |= override_validity;
    Ok(cfg)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| McvdError::Io(format!("{}: {e}", path.display())))
}

fn run(args: RunArgs, override_validity: bool) -> Result<()> {
    let mut cfg = load(&args.config, override_validity)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    cfg.validate()?;
    let out =
        args.out.or_else(|| cfg.out_dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out).map_err(|e| McvdError::Io(format!("{}: {e}", out.display())))?;

    let report = run_sweep(&cfg)?;
    write_csv(&report.rows, out.join("results.csv"))?;
    emit_plotdata(&report.rows, out.join("plotdata.dat"))?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| McvdError::Io(e.to_string()))?;
    write_text(&out.join("intermediates.json"), &json)?;

    eprintln!("wrote {} rows to {}", report.rows.len(), out.join("results.csv").display());
    if let Some(first) = report.failures.first() {
        for f in &report.failures {
            eprintln!("failed: {} at Q = {}: {}", f.scheme, f.q, f.message);
        }
        return Err(McvdError::Argument(format!(
            "{} of {} points failed (first: {})",
            report.failures.len(),
            report.rows.len(),
            first.message
        )));
    }
    Ok(())
}

fn optimize_json(config: &Path, override_validity: bool) -> Result<String> {
    let cfg = load(config, override_validity)?;
    cfg.validate()?;
    let p = cfg.channel()?;
    let s = cfg.search_settings();
    let results = cfg.q.iter().map(|&q| optimize(&cfg.link(q)?, &p, &s)).collect::<Result<Vec<_>>>()?;
    serde_json::to_string_pretty(&results).map_err(|e| McvdError::Io(e.to_string()))
}

fn optimize_all(config: &Path, override_validity: bool) -> Result<()> {
    println!("{}", optimize_json(config, override_validity)?);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => run(args, cli.override_validity),
        Command::Cir { config, out } => load(&config, cli.override_validity).and_then(|cfg| {
            let table = export_cir(&cfg, &out)?;
            eprintln!("wrote {} rows to {}", table.rows.len(), out.display());
            Ok(())
        }),
        Command::Optimize { config } => optimize_all(&config, cli.override_validity),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

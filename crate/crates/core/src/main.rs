use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use latticefibers::experiment::{output_dir, run, write_outputs, Experiment, Mode, RunOptions};

/// Spectra of two-particle lattice fiber Hamiltonians.
#[derive(Debug, Parser)]
#[command(name = "latticefibers", version)]
struct Cli {
    /// What to compute.
    #[arg(value_enum)]
    mode: Mode,
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (capped by LATTICEFIBERS_THREADS).
    #[arg(long)]
    jobs: Option<usize>,
    /// Omit timings so identical configs give byte-identical reports.
    #[arg(long)]
    stable_output: bool,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let base = cli.config.parent().map(PathBuf::from).unwrap_or_default();
    let exp = match Experiment::parse(&text, &base).and_then(|e| e.check_mode(cli.mode, &text).map(|_| e)) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("{}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions { jobs: cli.jobs, stable_output: cli.stable_output };
    let report = match run(&exp, cli.mode, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let out = output_dir(&exp, cli.out, &base);
    if let Err(e) = write_outputs(&report, &exp, &out) {
        eprintln!("error: writing {}: {e}", out.display());
        return ExitCode::from(1);
    }
    let failed = report.results.iter().filter(|t| t.status != "ok").count();
    eprintln!(
        "{}: {} tasks ({} failed), report at {}",
        cli.mode.name(),
        report.results.len(),
        failed,
        out.join("report.json").display()
    );
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    ExitCode::SUCCESS
}

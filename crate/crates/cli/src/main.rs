//! `renyi`: run verification sweeps, inspect reports and run the acceptance battery.
//!
//! Exit codes: 0 when every record passes (or every selftest criterion holds), 1 when
//! counterexample candidates remain, 2 on usage, configuration or I/O errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use renyi_core::error::{Error, Result};
use renyi_core::report::{emit_report, records_from_csv, report_from_json, write_report};
use renyi_core::selftest::{run_selftest, SelftestOptions};
use renyi_core::sweep::{run_sweep, summarize, OutputFormat, Provenance, SuiteSummary, SweepConfig, SweepReport};

#[derive(Parser, Debug)]
#[command(name = "renyi", version, about = "Numerical verification of Renyi mutual information relations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a randomized sweep of one suite (or `all`) and emit a report.
    Verify {
        /// thm1, cor1, chain, gbur, exclusion, sanity or all. Overrides the config file.
        #[arg(id = "suite_name", value_name = "SUITE")]
        suite: Option<String>,
        #[command(flatten)]
        flags: SweepFlags,
    },
    /// Summarize a CSV or JSON report, optionally converting it.
    Report {
        /// Report to read; JSON is recognized by a leading `{`.
        path: PathBuf,
        /// Margin threshold used when the input carries no summary (CSV input).
        #[arg(long = "tol-bits")]
        tol_bits: Option<f64>,
        /// Write the report in `--format` to this path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// csv or json.
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Run the full acceptance battery twice and check determinism.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Write the records of the first run as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Sweep settings; each flag overrides the field of the same name in `--config`.
#[derive(Args, Debug, Default)]
struct SweepFlags {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    suite: Option<String>,
    /// Bipartite shapes, e.g. `2x2,2x3`.
    #[arg(long)]
    dims: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Explicit order groups separated by `;`, e.g. `2,0.5,1.25; 4/3,2,2`.
    #[arg(long, conflicts_with = "order_samples")]
    orders: Option<String>,
    #[arg(long = "order-samples")]
    order_samples: Option<String>,
    #[arg(long = "tol-bits")]
    tol_bits: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    workers: Option<String>,
}

impl SweepFlags {
    fn to_config(&self, positional_suite: Option<&str>) -> Result<SweepConfig> {
        let mut cfg = match &self.config {
            Some(path) => SweepConfig::from_kv_text(&read_text(path)?)?,
            None => SweepConfig::default(),
        };
        let overrides = [
            ("suite", self.suite.as_deref().or(positional_suite)),
            ("dims", self.dims.as_deref()),
            ("trials", self.trials.as_deref()),
            ("seed", self.seed.as_deref()),
            ("orders", self.orders.as_deref()),
            ("order_samples", self.order_samples.as_deref()),
            ("tolerance_bits", self.tol_bits.as_deref()),
            ("output_format", self.format.as_deref()),
            ("workers", self.workers.as_deref()),
        ];
        for (key, value) in overrides {
            if let Some(value) = value {
                cfg.set_field(key, value)?;
            }
        }
        if let Some(out) = &self.out {
            cfg.output_path = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))
}

fn print_summary(summary: &[SuiteSummary]) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(
        err,
        "{:<10} {:>8} {:>8} {:>8} {:>10} {:>14} {:>14} {:>11}",
        "suite", "records", "passed", "failed", "certified", "min_margin", "mean_margin", "candidates"
    );
    for s in summary {
        let _ = writeln!(
            err,
            "{:<10} {:>8} {:>8} {:>8} {:>10} {:>14.6e} {:>14.6e} {:>11}",
            s.suite, s.records, s.passed, s.failed, s.certified, s.min_margin_bits, s.mean_margin_bits, s.counterexample_candidates
        );
    }
}

fn exit_for(candidates: usize) -> ExitCode {
    if candidates == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn emit(report: &SweepReport, format: OutputFormat, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_report(report, format, path),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(emit_report(report, format).as_bytes())?;
            Ok(())
        }
    }
}

fn verify(suite: Option<&str>, flags: &SweepFlags) -> Result<ExitCode> {
    let cfg = flags.to_config(suite)?;
    let report = run_sweep(&cfg)?;
    emit(&report, cfg.output_format, cfg.output_path.as_deref())?;
    print_summary(&report.summary);
    eprintln!("wall time {:.1} s", report.provenance.wall_time_seconds);
    Ok(exit_for(report.counterexample_candidates()))
}

fn load_report(path: &Path, tolerance_bits: f64) -> Result<SweepReport> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('{') {
        return report_from_json(&text);
    }
    let records = records_from_csv(&text)?;
    Ok(SweepReport {
        summary: summarize(&records, tolerance_bits),
        records,
        provenance: Provenance {
            config: String::new(),
            library_version: String::new(),
            wall_time_seconds: 0.0,
        },
    })
}

fn report(path: &Path, tol_bits: Option<f64>, out: Option<&Path>, format: &str) -> Result<ExitCode> {
    let tolerance = tol_bits.unwrap_or(renyi_core::relations::DEFAULT_TOLERANCE_BITS);
    if !(tolerance >= 0.0 && tolerance.is_finite()) {
        return Err(Error::Config {
            field: "tolerance_bits".into(),
            message: "must be a finite non-negative number".into(),
        });
    }
    let format: OutputFormat = format.parse()?;
    let report = load_report(path, tolerance)?;
    print_summary(&report.summary);
    if let Some(out) = out {
        write_report(&report, format, out)?;
    }
    Ok(exit_for(report.counterexample_candidates()))
}

fn selftest(seed: u64, workers: usize, out: Option<&Path>) -> Result<ExitCode> {
    let options = SelftestOptions {
        seed,
        workers: (workers > 0).then_some(workers),
    };
    let outcome = run_selftest(&options, |c| println!("{}", c.line()))?;
    if let Some(out) = out {
        std::fs::write(out, outcome.csv()).map_err(|e| Error::Io(format!("cannot write {}: {e}", out.display())))?;
    }
    let failed = outcome.criteria.iter().filter(|c| !c.passed).count();
    println!("{} of {} criteria passed", outcome.criteria.len() - failed, outcome.criteria.len());
    Ok(exit_for(failed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify { suite, flags } => verify(suite.as_deref(), flags),
        Command::Report { path, tol_bits, out, format } => report(path, *tol_bits, out.as_deref(), format),
        Command::Selftest { seed, workers, out } => selftest(*seed, *workers, out.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

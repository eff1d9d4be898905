use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand};
use matsumoto::expansion::OddBReading;
use matsumoto_cli::generate::{generate_instance, InstanceClass};
use matsumoto_cli::report::Report;
use matsumoto_cli::run_scenario;
use matsumoto_cli::scenario::load_scenario;
use matsumoto_cli::suite::{table_tags, theorem_suite, verify_appendix, AppendixOptions};

#[derive(Parser)]
#[command(
    name = "matsumoto",
    version,
    about = "Curvature checks for Matsumoto-type (α,β)-metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Override the expansion and identity tolerances (detector tolerance for theorem-suite)
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Write the output here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks listed in a scenario file
    Run { scenario: PathBuf },
    /// Print a generated scenario
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        dim: usize,
        #[arg(long, value_enum)]
        class: InstanceClass,
    },
    /// Check printed coefficient tables on generated instances
    VerifyAppendix {
        /// t, d, dp, dpp, tp, A, Ap, closed or all
        #[arg(long, default_value = "all")]
        table: String,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        /// Restrict to one instance class
        #[arg(long, value_enum)]
        class: Option<InstanceClass>,
        /// halved or verbatim
        #[arg(long, default_value = "halved", value_parser = parse_reading)]
        reading: OddBReading,
    },
    /// Check that reversibility and quadraticity agree on generated instances
    TheoremSuite {
        #[arg(long, default_value_t = 10)]
        seeds: u64,
    },
}

fn parse_reading(s: &str) -> Result<OddBReading, String> {
    match s {
        "halved" => Ok(OddBReading::Halved),
        "verbatim" => Ok(OddBReading::Verbatim),
        _ => Err(format!("expected `halved` or `verbatim`, got `{s}`")),
    }
}

enum Failure {
    Usage(anyhow::Error),
    Io(anyhow::Error),
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::Io),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn finish(report: Report, common: &Common) -> Result<u8, Failure> {
    let s = &report.summary;
    eprintln!(
        "{}: {} checks, {} pass, {} suspect, {} fail, {} error, {} skipped, {} info",
        report.command,
        report.checks.len(),
        s.pass,
        s.suspect,
        s.fail,
        s.error,
        s.skipped,
        s.info
    );
    emit(&common.out, &report.to_json())?;
    Ok(report.exit_code() as u8)
}

fn execute(cli: Cli) -> Result<u8, Failure> {
    let common = &cli.common;
    let usage = |e: matsumoto_cli::ScenarioError| Failure::Usage(e.into());
    match cli.command {
        Command::Run { scenario } => {
            let config = load_scenario(&scenario).map_err(usage)?;
            finish(
                run_scenario(&config, common.tol, common.threads).map_err(usage)?,
                common,
            )
        }
        Command::Gen { seed, dim, class } => {
            let config = generate_instance(seed, dim, class).map_err(usage)?;
            emit(&common.out, &config.to_json())?;
            Ok(0)
        }
        Command::VerifyAppendix {
            table,
            seeds,
            class,
            reading,
        } => {
            let tables = if table == "all" {
                table_tags().into_iter().map(String::from).collect()
            } else {
                table.split(',').map(|t| t.trim().to_string()).collect()
            };
            let opts = AppendixOptions {
                tables,
                seeds,
                classes: class
                    .map(|c| vec![c])
                    .unwrap_or_else(|| InstanceClass::ALL.to_vec()),
                reading,
                tol: common.tol,
                threads: common.threads,
            };
            finish(verify_appendix(&opts).map_err(usage)?, common)
        }
        Command::TheoremSuite { seeds } => finish(
            theorem_suite(seeds, common.tol, common.threads).map_err(usage)?,
            common,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.common.tol {
        if !(t.is_finite() && t > 0.0) {
            eprintln!("error: --tol must be a positive number");
            return ExitCode::from(2);
        }
    }
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

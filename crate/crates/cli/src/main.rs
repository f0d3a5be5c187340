use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use infogeo_cli::ball::{self, BallRequest};
use infogeo_cli::compute::{self, ComputeKind, ComputeRequest};
use infogeo_cli::config::RunConfig;
use infogeo_cli::{registry, suites, CliError, EXIT_FAILURE, EXIT_PASS};

#[derive(Parser)]
#[command(
    name = "infogeo",
    version,
    about = "Numerical certification of statistical-manifold structure"
)]
struct Cli {
    /// Flat key = value configuration file (`#` starts a comment).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and print a JSON report.
    Verify {
        /// dual-core, simplex, families, divergence, geodesic, warped, main-theorem, counterexample or all
        suite: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Threshold override for one check, e.g. `--tol simplex/duality=1e-6`.
        #[arg(long = "tol", value_name = "NAME=VALUE")]
        tol: Vec<String>,
        /// Include per-check runtimes (makes reports non-reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Evaluate a metric, tensor, divergence or distance.
    Compute {
        /// metric, tensor, divergence or distance
        kind: String,
        #[arg(long)]
        model: String,
        /// JSON point `[x…]` or point pair `[[p…], [q…]]`.
        #[arg(long)]
        points: String,
        /// Write the distance-realising geodesic as CSV.
        #[arg(long)]
        emit_path: Option<PathBuf>,
    },
    /// Sample the boundary of a geodesic ball as CSV.
    Ball {
        #[arg(long)]
        model: String,
        #[arg(long)]
        center: String,
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let mut cfg = load_config(cli.config.as_ref())?;
    let stdout = io::stdout();
    match cli.command {
        Command::Verify {
            suite,
            seed,
            tol,
            timings,
        } => {
            if let Some(s) = seed {
                cfg.seed = s;
            }
            for t in &tol {
                cfg.set_tolerance(t)?;
            }
            cfg.timings |= timings;
            let report = suites::run_suite(&suite, &cfg)?;
            writeln!(stdout.lock(), "{}", report.to_json())?;
            Ok(if report.pass { EXIT_PASS } else { EXIT_FAILURE })
        }
        Command::Compute {
            kind,
            model,
            points,
            emit_path,
        } => {
            let kind: ComputeKind = kind.parse()?;
            let doc = compute::compute(
                &ComputeRequest {
                    kind,
                    model,
                    points,
                    emit_path,
                },
                &cfg,
            )?;
            writeln!(
                stdout.lock(),
                "{}",
                serde_json::to_string_pretty(&doc).expect("plain JSON")
            )?;
            Ok(EXIT_PASS)
        }
        Command::Ball {
            model,
            center,
            radius,
            samples,
            out,
            seed,
        } => {
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dim = registry::model(&model)?.dim();
            let rows = ball::ball(
                &BallRequest {
                    model,
                    center,
                    radius,
                    samples,
                },
                &cfg,
            )?;
            match out {
                Some(path) => ball::write_csv(&rows, dim, BufWriter::new(File::create(path)?))?,
                None => ball::write_csv(&rows, dim, stdout.lock())?,
            }
            Ok(EXIT_PASS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            println!("{}", e.to_json());
            eprintln!("infogeo: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

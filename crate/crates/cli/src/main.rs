mod commands;
mod input;
mod render;

use std::fs;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cpa::model::ExactConfig;
use cpa::pointprocess::{PointProcessSpec, DEFAULT_RESOLUTION};
use cpa::verify::{Suite, VerifyOptions};

use render::Format;

const EXIT_VALIDATION: u8 = 1;
const EXIT_VERIFICATION: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

#[derive(Parser)]
#[command(name = "cpa", version, about = "Compound Poisson approximation bounds and exact distances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct FormatArg {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every upper and lower bound for a model.
    Bounds {
        /// Model JSON file, or `paper-example`.
        #[arg(long)]
        input: String,
        #[arg(long, default_value_t = 4)]
        lmax: usize,
        #[command(flatten)]
        fmt: FormatArg,
    },
    /// Exact ‖F − G_ℓ‖ on a small model, next to the bounds.
    Exact {
        /// Model JSON file; omit to draw a random model with --n/--d/--seed.
        #[arg(long, conflicts_with_all = ["n", "d"])]
        input: Option<String>,
        #[arg(long, requires = "d")]
        n: Option<usize>,
        #[arg(long, requires = "n")]
        d: Option<usize>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        lmax: usize,
        /// Norm tolerance of each truncated exponential.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Split convolutions across threads (results agree up to reassociation).
        #[arg(long)]
        parallel: bool,
        #[command(flatten)]
        fmt: FormatArg,
    },
    /// Run a seeded verification suite.
    Verify {
        /// measure-algebra, newton, charlier, lemmas, bounds-vs-oracle or all.
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Random instances per property (suite default if omitted).
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        parallel: bool,
        #[command(flatten)]
        fmt: FormatArg,
    },
    /// Point-process bounds (distances d_TV).
    Pointprocess {
        #[arg(long)]
        input: String,
        /// Midpoint nodes for exponential sources.
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
        #[command(flatten)]
        fmt: FormatArg,
    },
    /// The reference comparison table for the banded example model.
    Table1 {
        #[command(flatten)]
        fmt: FormatArg,
    },
}

/// Output plus whether a verification failed.
fn run(cli: Cli) -> Result<(String, bool)> {
    match cli.command {
        Command::Bounds { input, lmax, fmt } => {
            let spec = input::load_model(&input)?;
            Ok((commands::bounds(&spec, lmax)?.render(fmt.format)?, true))
        }
        Command::Exact {
            input,
            n,
            d,
            seed,
            lmax,
            tol,
            parallel,
            fmt,
        } => {
            let spec = match (input, n, d) {
                (Some(path), _, _) => input::load_model(&path)?,
                (None, Some(n), Some(d)) => input::random_model(n, d, seed)?,
                _ => bail!("exact needs --input or both --n and --d"),
            };
            if !(tol > 0.0) {
                bail!(cpa::Error::InvalidTolerance(tol));
            }
            let cfg = ExactConfig {
                tol,
                parallel,
                ..ExactConfig::default()
            };
            Ok((commands::exact(&spec, lmax, &cfg)?.render(fmt.format)?, true))
        }
        Command::Verify {
            suite,
            seed,
            instances,
            parallel,
            fmt,
        } => {
            let suites = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                vec![suite.parse::<Suite>()?]
            };
            let opts = VerifyOptions {
                seed,
                instances,
                parallel,
            };
            let (out, passed) = commands::verify(&suites, &opts)?;
            Ok((out.render(fmt.format)?, passed))
        }
        Command::Pointprocess { input, resolution, fmt } => {
            let text = fs::read_to_string(&input).with_context(|| format!("reading {input}"))?;
            let spec: PointProcessSpec<f64> = serde_json::from_str(&text).with_context(|| format!("in {input}"))?;
            Ok((commands::pointprocess(&spec, resolution)?.render(fmt.format)?, true))
        }
        Command::Table1 { fmt } => {
            let spec = input::load_model(input::PAPER_EXAMPLE)?;
            Ok((commands::table1(&spec)?.render(fmt.format)?, true))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<cpa::Error>()) {
        Some(cpa::Error::ResourceCap { .. } | cpa::Error::DimensionCap { .. } | cpa::Error::CoordinateOverflow { .. }) => EXIT_RESOURCE,
        _ => EXIT_VALIDATION,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok((out, passed)) => {
            print!("{out}");
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VERIFICATION)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

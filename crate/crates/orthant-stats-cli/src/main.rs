//! `orthant-stats`: batch computations on orthant spaces.
//!
//! Every subcommand prints one JSON report to stdout (or `--output`).
//! Exit codes: 0 success, 1 error, 2 validation or verification failure,
//! 64 usage error.

mod commands;
mod input;
mod output;
mod schema;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use orthant_stats::frechet::VerifyOptions;
use serde_json::Value;

use commands::Report;

#[derive(Parser, Debug)]
#[command(name = "orthant-stats", version, about = "Geodesics, log maps, Fréchet means and limit laws on orthant spaces")]
struct Cli {
    /// Verification tolerance, scaled by 1 + |∫Φ dμ| [default: 1e-7]
    #[arg(long, global = true, value_name = "TOL", value_parser = positive)]
    tol: Option<f64>,

    /// Worker threads [default: available cores]
    #[arg(long, global = true, env = "ORTHANT_STATS_THREADS", value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    /// Write the JSON report here instead of stdout
    #[arg(long, short, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct SchemaFlag {
    /// Print the JSON schema of this subcommand's report and exit
    #[arg(long)]
    schema: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check closure and the flag condition of a space file
    Validate {
        #[arg(long, required_unless_present = "schema")]
        space: Option<PathBuf>,
        #[command(flatten)]
        schema: SchemaFlag,
    },
    /// Geodesic support, length and breakpoints between two points
    Geodesic {
        #[arg(long, required_unless_present = "schema")]
        space: Option<PathBuf>,
        #[arg(long, required_unless_present = "schema")]
        from: Option<PathBuf>,
        #[arg(long, required_unless_present = "schema")]
        to: Option<PathBuf>,
        /// Also evaluate the geodesic at this parameter in [0, 1]
        #[arg(long)]
        t: Option<f64>,
        /// Also compute the brute-force oracle distance
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        schema: SchemaFlag,
    },
    /// Translated log map, and optionally its directional limit and derivative
    Logmap {
        #[arg(long, required_unless_present = "schema")]
        space: Option<PathBuf>,
        /// The base point x*
        #[arg(long, required_unless_present = "schema")]
        base: Option<PathBuf>,
        #[arg(long, required_unless_present = "schema")]
        point: Option<PathBuf>,
        /// Tangent direction at the base point, as a coordinate file
        #[arg(long)]
        direction: Option<PathBuf>,
        /// Include the derivative matrix (directional when --direction is given)
        #[arg(long)]
        derivative: bool,
        #[command(flatten)]
        schema: SchemaFlag,
    },
    /// Compute and certify the Fréchet mean of a measure
    FrechetMean {
        #[arg(long, required_unless_present = "schema")]
        space: Option<PathBuf>,
        #[arg(long, required_unless_present = "schema")]
        measure: Option<PathBuf>,
        /// Certify this point instead of computing the mean
        #[arg(long, value_name = "POINT")]
        verify_only: Option<PathBuf>,
        /// Also estimate the equality set on this co-bounding stratum, e.g. 0,4
        #[arg(long, value_name = "TAU")]
        theta: Option<String>,
        /// Seed of the inductive start
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sphere grid points per angular dimension
        #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..))]
        grid: u32,
        #[command(flatten)]
        schema: SchemaFlag,
    },
    /// Certify that a point is the Fréchet mean of a measure
    VerifyMean {
        #[arg(long, required_unless_present = "schema")]
        space: Option<PathBuf>,
        #[arg(long, required_unless_present = "schema")]
        measure: Option<PathBuf>,
        #[arg(long, required_unless_present = "schema")]
        point: Option<PathBuf>,
        /// Sphere grid points per angular dimension
        #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..))]
        grid: u32,
        #[command(flatten)]
        schema: SchemaFlag,
    },
    /// Grid estimate of the equality set of directions on a co-bounding stratum
    Theta {
        #[arg(long, required_unless_present = "schema")]
        space: Option<PathBuf>,
        #[arg(long, required_unless_present = "schema")]
        measure: Option<PathBuf>,
        /// The mean x*
        #[arg(long, required_unless_present = "schema")]
        point: Option<PathBuf>,
        /// Co-bounding stratum, e.g. 0,4
        #[arg(long, required_unless_present = "schema")]
        tau: Option<String>,
        /// Sphere grid points per angular dimension
        #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..))]
        grid: u32,
        #[command(flatten)]
        schema: SchemaFlag,
    },
    /// Monte-Carlo draws of scaled sample means, with an optional prediction
    CltSim {
        #[arg(long, required_unless_present = "schema")]
        space: Option<PathBuf>,
        #[arg(long, required_unless_present = "schema")]
        measure: Option<PathBuf>,
        /// Sample size per replicate
        #[arg(long, default_value_t = 200)]
        n: usize,
        /// Number of replicates
        #[arg(long, default_value_t = 2000)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also compute the predicted limit and compare supports
        #[arg(long)]
        predict: bool,
        /// Write the draws to this CSV file
        #[arg(long, value_name = "CSV")]
        out: Option<PathBuf>,
        /// Sphere grid points per angular dimension
        #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..))]
        grid: u32,
        #[command(flatten)]
        schema: SchemaFlag,
    },
}

fn positive(text: &str) -> Result<f64, String> {
    match text.parse::<f64>() {
        Ok(t) if t > 0.0 && t.is_finite() => Ok(t),
        Ok(_) => Err("must be positive and finite".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn verify_options(tol: Option<f64>, grid: u32) -> VerifyOptions {
    let defaults = VerifyOptions::default();
    VerifyOptions { grid: grid as usize, tol: tol.unwrap_or(defaults.tol), ..defaults }
}

/// Either a schema to print or a report.
enum Outcome {
    Schema(Value),
    Report(Report),
}

fn required<T>(x: Option<T>) -> T {
    x.expect("clap enforces required arguments")
}

fn run(cli: Cli) -> Result<Outcome> {
    let tol = cli.tol;
    let report = match cli.command {
        Command::Validate { schema, .. } if schema.schema => return Ok(Outcome::Schema(schema::validate())),
        Command::Validate { space, .. } => commands::validate(&required(space))?,
        Command::Geodesic { schema, .. } if schema.schema => return Ok(Outcome::Schema(schema::geodesic())),
        Command::Geodesic { space, from, to, t, oracle, .. } => commands::geodesic(commands::GeodesicArgs {
            space: &required(space),
            from: &required(from),
            to: &required(to),
            t,
            oracle,
        })?,
        Command::Logmap { schema, .. } if schema.schema => return Ok(Outcome::Schema(schema::logmap())),
        Command::Logmap { space, base, point, direction, derivative, .. } => commands::logmap(commands::LogmapArgs {
            space: &required(space),
            base: &required(base),
            point: &required(point),
            direction: direction.as_deref(),
            derivative,
        })?,
        Command::FrechetMean { schema, .. } if schema.schema => return Ok(Outcome::Schema(schema::frechet_mean())),
        Command::FrechetMean { space, measure, verify_only, theta, seed, grid, .. } => {
            commands::frechet_mean(commands::MeanArgs {
                space: &required(space),
                measure: &required(measure),
                verify_only: verify_only.as_deref(),
                theta: theta.as_deref(),
                seed,
                verify: verify_options(tol, grid),
            })?
        }
        Command::VerifyMean { schema, .. } if schema.schema => return Ok(Outcome::Schema(schema::verify_mean())),
        Command::VerifyMean { space, measure, point, grid, .. } => commands::verify_mean(
            &required(space),
            &required(measure),
            &required(point),
            verify_options(tol, grid),
        )?,
        Command::Theta { schema, .. } if schema.schema => return Ok(Outcome::Schema(schema::theta_report())),
        Command::Theta { space, measure, point, tau, grid, .. } => commands::theta(
            &required(space),
            &required(measure),
            &required(point),
            &required(tau),
            verify_options(tol, grid),
        )?,
        Command::CltSim { schema, .. } if schema.schema => return Ok(Outcome::Schema(schema::clt_sim())),
        Command::CltSim { space, measure, n, reps, seed, predict, out, grid, .. } => commands::clt_sim(commands::CltArgs {
            space: &required(space),
            measure: &required(measure),
            n,
            reps,
            seed,
            predict,
            out: out.as_deref(),
            verify: verify_options(tol, grid),
        })?,
    };
    Ok(Outcome::Report(report))
}

fn emit(value: &Value, path: Option<&PathBuf>) -> Result<()> {
    let text = output::render(value);
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(64),
            };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.into()).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let output = cli.output.clone();
    let result = run(cli).and_then(|outcome| match outcome {
        Outcome::Schema(s) => emit(&s, output.as_ref()).map(|_| false),
        Outcome::Report(r) => emit(&r.value, output.as_ref()).map(|_| r.failed),
    });
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

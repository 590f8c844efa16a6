//! Command-line front end for the famdyn engine: construction generation,
//! classification, density sweeps, exhaustive finite checks, and exact
//! simulations, all with machine-readable artifacts.
//!
//! Exit codes separate the failure modes: `0` clean, `1` usage or
//! configuration error, `2` a violated mathematical invariant (a claim
//! mismatch, an enclosure that leaks, or a counterexample).

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

mod artifact;
mod run;

#[derive(Parser)]
#[command(
    name = "famdyn",
    version,
    about = "Exact return-time combinatorics of weighted backward shifts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a construction's weight program as JSON
    Generate(GenerateArgs),
    /// Classify a construction against every membership class
    Classify(ClassifyArgs),
    /// Sweep exact prefix densities of a return-time set into CSV
    Density(DensityArgs),
    /// Decide family memberships of a return-time set, with evidence
    Families(FamiliesArgs),
    /// Exhaustive checks on small finite universes
    #[command(subcommand)]
    Algebra(AlgebraCommand),
    /// Exact simulations with re-verified enclosures
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Cross-construction summary tables
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(Args)]
struct GenerateArgs {
    /// Construction name
    #[arg(long)]
    construction: String,
    /// Coverage the weight program must reach
    #[arg(long, default_value_t = 1_000_000)]
    horizon: u64,
    /// Extra construction parameter (repeatable)
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Output path, `-` for stdout
    #[arg(long, default_value = "-")]
    output: String,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Construction name
    #[arg(long)]
    construction: String,
    /// Classification horizon
    #[arg(long, default_value_t = 1_000_000)]
    horizon: u64,
    /// Threshold exponents, comma separated
    #[arg(long = "t-grid", value_name = "LIST")]
    t_grid: Option<String>,
    /// Offsets, comma separated (defaults to the kind's standard grid)
    #[arg(long = "j-grid", value_name = "LIST")]
    j_grid: Option<String>,
    /// Extra construction parameter (repeatable)
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Output path, `-` for stdout
    #[arg(long, default_value = "-")]
    output: String,
}

#[derive(Args)]
struct DensityArgs {
    /// Construction name
    #[arg(long)]
    construction: String,
    /// Sweep the construction's first N published checkpoints
    #[arg(long, value_name = "N", conflicts_with = "horizon")]
    blocks: Option<usize>,
    /// Sweep a decade checkpoint ladder up to this horizon
    #[arg(long)]
    horizon: Option<u64>,
    /// Threshold exponent: the swept set keeps products above 2^t
    #[arg(long, default_value_t = 0)]
    t: i64,
    /// Offset of the return-time set
    #[arg(long, default_value_t = 0)]
    j: i64,
    /// Extra construction parameter (repeatable)
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Output path, `-` for stdout
    #[arg(long, default_value = "-")]
    output: String,
}

#[derive(Args)]
struct FamiliesArgs {
    /// Construction name
    #[arg(long)]
    construction: String,
    /// Family to decide, or `all`
    #[arg(long, default_value = "all")]
    family: String,
    /// Membership horizon
    #[arg(long, default_value_t = 1_000_000)]
    horizon: u64,
    /// Threshold exponent of the examined return-time set
    #[arg(long, default_value_t = 0)]
    t: i64,
    /// Offset of the examined return-time set
    #[arg(long, default_value_t = 0)]
    j: i64,
    /// Extra construction parameter (repeatable)
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Output path, `-` for stdout
    #[arg(long, default_value = "-")]
    output: String,
}

#[derive(Subcommand)]
enum AlgebraCommand {
    /// Check the duality identities on every family over {1..n}
    VerifyLemma23(VerifyLemmaArgs),
}

#[derive(Args)]
struct VerifyLemmaArgs {
    /// Universe size (1..=5 is practical)
    #[arg(long)]
    n: u8,
    /// Output path, `-` for stdout
    #[arg(long, default_value = "-")]
    output: String,
}

#[derive(Subcommand)]
enum SimulateCommand {
    /// Two-sided return-set enclosures, re-verified by exact simulation
    Sandwich(SandwichArgs),
    /// Exact orbit smallness against product level-set cores
    Criterion(CriterionArgs),
}

#[derive(Args)]
struct SandwichArgs {
    /// Construction name
    #[arg(long)]
    construction: String,
    /// Simulation horizon
    #[arg(long, default_value_t = 10_000)]
    horizon: u64,
    /// Basis index of the window center (with --level and --aperture)
    #[arg(long, requires = "level", requires = "aperture")]
    index: Option<i64>,
    /// Product level the orbit must clear
    #[arg(long, requires = "index", requires = "aperture")]
    level: Option<u64>,
    /// Power-of-two aperture of the window, larger than the level
    #[arg(long, requires = "index", requires = "level")]
    aperture: Option<u64>,
    /// Extra construction parameter (repeatable)
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Output path, `-` for stdout
    #[arg(long, default_value = "-")]
    output: String,
}

#[derive(Args)]
struct CriterionArgs {
    /// Construction name
    #[arg(long)]
    construction: String,
    /// Simulation horizon
    #[arg(long, default_value_t = 10_000)]
    horizon: u64,
    /// Support indices of the probe vector, comma separated
    #[arg(long, default_value = "0", value_name = "LIST")]
    support: String,
    /// The ball radius is 2^(-k)
    #[arg(long = "epsilon-exp", default_value_t = 3, value_name = "K")]
    epsilon_exp: u32,
    /// Diagnostic threshold exponents, comma separated
    #[arg(long = "t-grid", value_name = "LIST")]
    t_grid: Option<String>,
    /// Extra hull offsets for the diagnostic rows, comma separated
    #[arg(long = "j-grid", value_name = "LIST")]
    j_grid: Option<String>,
    /// Extra construction parameter (repeatable)
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Output path, `-` for stdout
    #[arg(long, default_value = "-")]
    output: String,
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Classify every shipped construction and check the claim table
    Hierarchy(HierarchyArgs),
}

#[derive(Args)]
struct HierarchyArgs {
    /// Classification horizon
    #[arg(long, default_value_t = 1_000_000)]
    horizon: u64,
    /// Threshold exponents, comma separated
    #[arg(long = "t-grid", value_name = "LIST")]
    t_grid: Option<String>,
    /// Offsets, comma separated (defaults to the kind's standard grid)
    #[arg(long = "j-grid", value_name = "LIST")]
    j_grid: Option<String>,
    /// Output path, `-` for stdout
    #[arg(long, default_value = "-")]
    output: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run::dispatch(cli.command) {
        Ok(run::Outcome::Clean) => ExitCode::SUCCESS,
        Ok(run::Outcome::InvariantViolated) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

//! `logpot`: batch front end for the potential-theory toolkit.
//!
//! Exit status: 0 on success, 2 when an input is rejected, 3 when a verdict
//! is failed or inconclusive.

mod commands;
mod report;
mod reproduce;
mod scene;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::scene::Overrides;

#[derive(Debug)]
pub enum CliError {
    /// Malformed input or violated precondition (exit 2).
    Precondition(String),
    /// A search or verdict that did not succeed (exit 3).
    Failed(String),
}

impl From<logpot::Error> for CliError {
    fn from(e: logpot::Error) -> Self {
        match e {
            logpot::Error::Budget(_) => CliError::Failed(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Precondition(format!("cannot write report: {e}"))
    }
}

#[derive(Parser, Debug)]
#[command(name = "logpot", version, about = "Capacities, Green functions and Bernstein-Markov experiments")]
pub struct Cli {
    /// Seed for stochastic choices; overrides the scene.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Boundary resolution; overrides the scene.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// Green regularity tolerance; overrides the scene.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory for reports and tables.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RatioKind {
    Poly,
    Weighted,
    Subdiag,
    Rational,
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleId {
    Ex1a,
    Ex1b,
    Ex1c,
    Ex1d,
    Ex1e,
    Ex2,
    Ex3,
    Bw,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Capacity of K with both estimators.
    Capacity {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value_t = 200)]
        kmax: usize,
    },
    /// Leja sequence on K.
    Leja {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value_t = 32)]
        k: usize,
        #[arg(long)]
        refine: bool,
    },
    /// Green function of K with pole at infinity or at a finite point.
    Green {
        #[arg(long)]
        scene: PathBuf,
        /// `inf` or a complex literal such as `0.2-0.1i`.
        #[arg(long, default_value = "inf", allow_hyphen_values = true)]
        pole: String,
        /// `x0,x1,y0,y1,n`: an n by n grid over the rectangle.
        #[arg(long, default_value = "-2,2,-2,2,41", allow_hyphen_values = true)]
        grid: String,
    },
    /// Bergman function maxima on K.
    Bergman {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        k: usize,
        /// Also evaluate B_k at this point.
        #[arg(long, allow_hyphen_values = true)]
        at: Option<String>,
    },
    /// Bernstein-Markov ratios over a degree sweep.
    Ratio {
        #[arg(long, value_enum)]
        kind: RatioKind,
        #[arg(long)]
        scene: PathBuf,
        #[arg(long = "k-max", default_value_t = 40)]
        k_max: usize,
        /// Extra copy of the ratio table.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Mass-density criterion along a radius schedule.
    LambdaStar {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long = "r-schedule", value_delimiter = ',', default_value = "0.4,0.2,0.1,0.05")]
        r_schedule: Vec<f64>,
    },
    /// Separating map f = c/q_m between K and P.
    BuildMap {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        rho: f64,
        #[arg(long = "m-max", default_value_t = 8)]
        m_max: usize,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
    /// Best rational approximation rates with at most n poles.
    BwRate {
        #[arg(long)]
        scene: PathBuf,
        /// Expression in z, e.g. `1/((z-1.5)*(z-3))`.
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long = "k-max", default_value_t = 30)]
        k_max: usize,
    },
    /// Pre-registered example runs with pass/fail checks.
    Reproduce {
        #[arg(value_enum)]
        id: ExampleId,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let overrides = Overrides { seed: cli.seed, resolution: cli.resolution, tol: cli.tol };
    let outcome = match &cli.command {
        Command::Reproduce { id } => reproduce::run(*id, &overrides),
        other => commands::run(other, &overrides),
    }
    .and_then(|report| Ok((report.write(&cli.out)?, report)));
    let code = match outcome {
        Ok((path, report)) => {
            for c in &report.checks {
                println!("{}: {}  {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("report: {}", path.display());
            if report.all_pass() { 0 } else { 3 }
        }
        Err(CliError::Precondition(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(CliError::Failed(m)) => {
            eprintln!("failed: {m}");
            3
        }
    };
    eprintln!("runtime: {:.2}s", started.elapsed().as_secs_f64());
    ExitCode::from(code)
}

//! `pvc`: batch runs of the partial vine copula experiments.

mod commands;
mod experiments;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use settings::{ModelChoice, Settings};

/// Bad input from the user; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "pvc", version, about = "Partial vine copula experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Experiment {
    Ex1,
    Fgm5,
    Ex3,
    Ex4,
    Ex5,
    Ex6,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment.
    Experiment { name: Experiment },
    /// Build the partial vine copula of a preset process.
    BuildPvc,
    /// Draw rows from a preset process.
    Simulate,
    /// Stepwise and joint ML fit of a model to a data CSV.
    Fit,
    /// KL divergence between a preset process and a simplified vine.
    Kld,
    /// KL divergence over a grid of first-tree parameters.
    KldScan,
}

#[derive(Args, Default)]
struct Flags {
    /// JSON file with any of the flag values; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Quadrature order.
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Monte Carlo sample count.
    #[arg(long = "mc-n", global = true)]
    mc_n: Option<usize>,
    /// Sample sizes, comma separated.
    #[arg(long = "N", global = true, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// Replications per sample size.
    #[arg(long = "R", global = true)]
    replications: Option<usize>,
    /// Preset process, e.g. `ex4(5.74)`.
    #[arg(long, global = true)]
    dgp: Option<String>,
    /// `frank`, `bb1_sarmanov`, or a layout like `fgm,fgm;fgm`.
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    intercept: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    slope: Option<f64>,
    /// Copula family name.
    #[arg(long, global = true)]
    family: Option<String>,
    /// Input data CSV.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Simplified vine JSON to compare against.
    #[arg(long, global = true)]
    approx: Option<PathBuf>,
    /// Fit ranks of the data rather than the raw values.
    #[arg(long, global = true)]
    ranks: bool,
    /// θ₁₂ grid, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    grid: Option<Vec<f64>>,
}

impl Flags {
    fn settings(self) -> anyhow::Result<Settings> {
        let file = match &self.config {
            Some(p) => Settings::from_file(p)?,
            None => Settings::default(),
        };
        let cli = Settings {
            experiment: None,
            dgp: self.dgp,
            model: self.model.map(ModelChoice::Named),
            n_list: self.n_list,
            replications: self.replications,
            seed: self.seed,
            out: self.out,
            order: self.order,
            mc_n: self.mc_n,
            gamma: self.gamma,
            theta: self.theta,
            delta: self.delta,
            intercept: self.intercept,
            slope: self.slope,
            family: self.family,
            data: self.data,
            approx: self.approx,
            ranks: self.ranks.then_some(true),
            grid: self.grid,
            pvc: None,
        };
        Ok(file.overlay(cli))
    }
}

fn run(cli: Cli) -> anyhow::Result<PathBuf> {
    let s = cli.flags.settings()?;
    match cli.command {
        Command::Experiment { name } => experiments::run(name, &s),
        Command::BuildPvc => commands::build_pvc(&s),
        Command::Simulate => commands::simulate(&s),
        Command::Fit => commands::fit(&s),
        Command::Kld => commands::kld(&s),
        Command::KldScan => commands::kld_scan(&s),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("usage error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! Command-line front end for fracwave experiments.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Finished;
use crate::config::ExperimentConfig;
use crate::output::{error_json, CliError, OutDir};

#[derive(Parser)]
#[command(name = "fracwave", version, about = "Fractional wave equations with Caputo order 1 < α < 2")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment configuration; defaults apply to absent keys.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory receiving the reports.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the linear problem and write trajectory.csv and norms.json.
    SolveLinear(Common),
    /// Picard iteration for the semilinear problem; writes picard.json.
    SolveSemilinear(Common),
    /// Check the computed solution through its Laplace transform.
    VerifyLaplace(Common),
    /// Derived Strichartz exponents; writes exponents.json and prints it.
    Exponents(Common),
    /// Monte-Carlo estimate of the Strichartz constant.
    EstimateConstant(Common),
    /// Evaluate E_{α,β} at the configured points.
    MlfEval(Common),
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Self::SolveLinear(c) => ("solve-linear", c),
            Self::SolveSemilinear(c) => ("solve-semilinear", c),
            Self::VerifyLaplace(c) => ("verify-laplace", c),
            Self::Exponents(c) => ("exponents", c),
            Self::EstimateConstant(c) => ("estimate-constant", c),
            Self::MlfEval(c) => ("mlf-eval", c),
        }
    }
}

fn run(command: &Command, common: &Common, out: &mut OutDir) -> Result<Finished, CliError> {
    let mut config: ExperimentConfig = config::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("cannot configure threads: {e}")))?;
    }
    match command {
        Command::SolveLinear(_) => commands::solve_linear_cmd(&config, out),
        Command::SolveSemilinear(_) => commands::solve_semilinear_cmd(&config, out),
        Command::VerifyLaplace(_) => commands::verify_laplace_cmd(&config, out),
        Command::EstimateConstant(_) => commands::estimate_constant_cmd(&config, out),
        Command::Exponents(_) => {
            let (done, text) = commands::exponents_cmd(&config, out)?;
            print!("{text}");
            Ok(done)
        }
        Command::MlfEval(_) => {
            let (done, text) = commands::mlf_eval_cmd(&config, out)?;
            print!("{text}");
            Ok(done)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = cli.command.parts();
    let outcome = OutDir::new(&common.out).and_then(|mut out| {
        let result = run(&cli.command, common, &mut out).and_then(|done| {
            eprintln!("{name}: {}", done.summary);
            done.verdict
        });
        if let Err(e) = &result {
            let _ = out.write("error.json", &error_json(name, e));
        }
        result
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{name}: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

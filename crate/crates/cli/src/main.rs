use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hetrdme::commands::{self, Status};
use hetrdme::{parse_scenario, CliError};

#[derive(Parser)]
#[command(name = "hetrdme", version, about = "Stochastic reaction-diffusion runs against their deterministic limit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the master seed of the file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to the number of processors.
    #[arg(long, env = "HETRDME_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// One SSA trajectory.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[arg(long, default_value_t = 0)]
        replicate: u64,
    },
    /// Deterministic solution on one level.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        level: usize,
    },
    /// Ensemble statistics over the whole schedule.
    Converge {
        #[command(flatten)]
        common: Common,
    },
    /// Invariant suite; exits with status 1 if an assertion fails.
    Check {
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = match &cli.command {
        Command::Simulate { common, .. }
        | Command::Solve { common, .. }
        | Command::Converge { common }
        | Command::Check { common } => common,
    };
    if let Some(k) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let mut loaded = parse_scenario(&common.scenario)?;
    if let Some(seed) = common.seed {
        loaded.set_seed(seed);
    }
    let out = &common.out;
    match &cli.command {
        Command::Simulate { level, replicate, .. } => {
            println!("{}", commands::simulate(&loaded, *level, *replicate, out)?.display());
        }
        Command::Solve { level, .. } => {
            println!("{}", commands::solve(&loaded, *level, out)?.display());
        }
        Command::Converge { .. } => {
            let result = commands::converge(&loaded, out)?;
            for f in &result.files {
                println!("{}", f.display());
            }
        }
        Command::Check { .. } => {
            let result = commands::check(&loaded, out)?;
            for r in &result.results {
                println!("{:<26} level {}  {:<8} {:e}", r.name, r.level, r.status.as_str(), r.value);
            }
            println!("{}", result.file.display());
            let failed: Vec<String> = result
                .results
                .iter()
                .filter(|r| r.status == Status::Fail)
                .map(|r| format!("{}@{}", r.name, r.level))
                .collect();
            if !failed.is_empty() {
                return Err(CliError::ChecksFailed(failed));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fracfv::cli::config::load_config;
use fracfv::cli::experiments::{registry, registry_listing, run_experiment, Overrides, COMMON_KEYS};
use fracfv::cli::{run_config, Summary};

#[derive(Parser)]
#[command(
    name = "fracfv",
    version,
    about = "Finite-volume solver for fractional diffusion and Levy-Fokker-Planck equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a TOML configuration file.
    Run { config: PathBuf },
    /// Run a registered experiment.
    Experiment {
        name: String,
        /// Parameter override, repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// List registered experiments and their parameters.
    List,
}

fn print_summary(summary: &Summary) {
    println!("{}", summary.name);
    for (k, v) in &summary.metrics {
        println!("  {k:<24} {v:.6e}");
    }
    for c in &summary.checks {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        println!("  [{tag}] {}: {:.6e} (target {})", c.name, c.value, c.target);
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List => {
            println!("{}", registry_listing());
            for e in registry() {
                let keys: Vec<&str> = e.keys.iter().chain(COMMON_KEYS).copied().collect();
                println!("{:<18} keys: {}", e.name, keys.join(", "));
            }
            return ExitCode::SUCCESS;
        }
        Command::Run { config } => load_config(&config)
            .map_err(|e| e.to_string())
            .and_then(|c| run_config(&c).map_err(|e| e.to_string())),
        Command::Experiment { name, set } => Overrides::parse(&set)
            .and_then(|o| run_experiment(&name, &o))
            .map_err(|e| e.to_string()),
    };
    match result {
        Ok(summary) => {
            print_summary(&summary);
            if summary.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

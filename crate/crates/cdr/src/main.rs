use anyhow::Result;
use cdr::commands::{self, ExperimentPlan, MaskArgs, ReportArgs, SimulateArgs, T1mapArgs};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cdr", version, about = "Physics-regularized ConvDecoder VFA reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a phantom dataset container.
    Simulate(SimulateArgs),
    /// Generate a Poisson-disc mask for a dataset's geometry.
    Mask(MaskArgs),
    /// Reconstruct every (method, R, mu, seed) cell of a plan.
    Run(ExperimentPlan),
    /// Dictionary-match an image series into T1 / S0 maps.
    T1map(T1mapArgs),
    /// Score a result tree against its dataset.
    Report(ReportArgs),
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Simulate(a) => {
            commands::simulate(&a)?;
        }
        Command::Mask(a) => {
            let m = commands::mask(&a)?;
            println!("acceleration {:.4}", m.acceleration());
        }
        Command::Run(plan) => {
            let s = commands::run(&plan, commands::deterministic_from_env())?;
            println!("computed {}, skipped {}, failed {}", s.computed.len(), s.skipped.len(), s.failed.len());
            for (name, msg) in &s.failed {
                eprintln!("failed {name}: {msg}");
            }
            if !s.failed.is_empty() {
                std::process::exit(2);
            }
        }
        Command::T1map(a) => {
            commands::t1map(&a)?;
        }
        Command::Report(a) => {
            let r = commands::report(&a)?;
            println!("{} rows -> {}", r.rows.len(), r.dir.join("metrics.csv").display());
        }
    }
    Ok(())
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use prandtl_lab::{parse_config, run_convergence, run_scenario, Axis, LabError, ScenarioResult, Subcommand};

#[derive(Parser)]
#[command(name = "prandtl-lab", version, about = "Inhomogeneous Prandtl boundary-layer laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides [output] dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed of the random inequality samples.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print nothing but errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Time-dependent run from builder data.
    Unsteady,
    /// Steady x-march with Picard iteration and theta continuation.
    Steady,
    /// Good-unknown identities on manufactured fields.
    VerifyIdentities,
    /// Wall compatibility conditions of the initial profile.
    CheckCompat,
    /// Randomized weighted inequality suite.
    Inequalities,
    /// Refinement study along one parameter axis.
    Convergence {
        #[arg(long, value_enum)]
        axis: AxisArg,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    H,
    Dt,
    Eps,
    Theta,
}

fn run(cli: &Cli) -> Result<ScenarioResult, LabError> {
    let path = cli.config.as_ref().ok_or_else(|| LabError::Usage("--config <path> is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| LabError::Io { path: path.clone(), source: e })?;
    let cfg = parse_config(&text)?;
    let out = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let sub = match cli.command {
        Command::Unsteady => Subcommand::Unsteady,
        Command::Steady => Subcommand::Steady,
        Command::VerifyIdentities => Subcommand::VerifyIdentities,
        Command::CheckCompat => Subcommand::CheckCompat,
        Command::Inequalities => Subcommand::Inequalities,
        Command::Convergence { axis, levels } => {
            let axis = match axis {
                AxisArg::H => Axis::H,
                AxisArg::Dt => Axis::Dt,
                AxisArg::Eps => Axis::Eps,
                AxisArg::Theta => Axis::Theta,
            };
            return run_convergence(&cfg, axis, levels, &out).map(|(_, r)| r);
        }
    };
    run_scenario(&cfg, sub, &out, cli.seed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(r) => {
            if !cli.quiet {
                println!("status: {}", r.status.name());
                for (k, v) in &r.summary {
                    if v.contains('\n') {
                        print!("{k}:\n{v}");
                    } else {
                        println!("{k}: {v}");
                    }
                }
                for a in &r.artifacts {
                    println!("wrote {}", a.display());
                }
            }
            ExitCode::from(r.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use varitherm_cli::{
    cmd_compare, cmd_regularity, cmd_simulate, cmd_verify_structure, config::preset, CliError,
    RunConfig,
};

/// Variational integrators for the nonequilibrium thermodynamics of simple
/// closed systems: trajectory simulation, comparison against the exact
/// benchmark solution, regularity reports, and structure-identity checks.
#[derive(Parser)]
#[command(name = "varitherm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to a TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bundled experiment preset.
    #[arg(long, value_parser = ["case1", "case2"])]
    preset: Option<String>,
    /// Scheme selector (1 = extended Verlet, 2 = midpoint, 3 = symmetrized).
    #[arg(long)]
    scheme: Option<u8>,
    /// Friction coefficient override (N·s/m).
    #[arg(long)]
    lambda: Option<f64>,
    /// Number of time steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Output path for the CSV table or text report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut config = match (&self.config, &self.preset) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "pass either --config or --preset, not both".into(),
                ))
            }
            (Some(path), None) => RunConfig::from_path(path)?,
            (None, Some(name)) => preset(name)?,
            (None, None) => {
                return Err(CliError::Config(
                    "one of --config or --preset is required".into(),
                ))
            }
        };
        if let Some(scheme) = self.scheme {
            config.scheme = scheme;
        }
        if let Some(lambda) = self.lambda {
            config.mass_spring.lambda = lambda;
        }
        if let Some(steps) = self.steps {
            config.steps = steps;
        }
        if let Some(out) = &self.out {
            config.output = Some(out.clone());
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a discrete trajectory and write per-step CSV diagnostics.
    Simulate(RunArgs),
    /// Compare a discrete trajectory against the reference solution at h
    /// and h/2.
    Compare(RunArgs),
    /// Print the regularity matrix along the trajectory.
    Regularity(RunArgs),
    /// Check the discrete structure-preservation identity on random
    /// tangent pairs.
    VerifyStructure {
        #[command(flatten)]
        run: RunArgs,
        /// Number of discrete flow applications N.
        #[arg(long, default_value_t = 10)]
        flow_steps: usize,
        /// Number of random tangent pairs.
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
}

fn write_report(config: &RunConfig, report: &str) -> Result<(), CliError> {
    if let Some(path) = &config.output {
        std::fs::write(path, format!("{report}\n"))?;
    }
    Ok(())
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(args) => {
            let config = args.resolve()?;
            let summary = cmd_simulate(&config)?;
            println!(
                "wrote {}",
                config.output.as_deref().unwrap_or_else(|| "output".as_ref()).display()
            );
            println!("{}", summary.render());
            Ok(())
        }
        Command::Compare(args) => {
            let config = args.resolve()?;
            let summary = cmd_compare(&config)?;
            println!(
                "wrote {}",
                config.output.as_deref().unwrap_or_else(|| "output".as_ref()).display()
            );
            println!("{}", summary.render());
            Ok(())
        }
        Command::Regularity(args) => {
            let config = args.resolve()?;
            let outcome = cmd_regularity(&config)?;
            println!("{}", outcome.report);
            write_report(&config, &outcome.report)?;
            Ok(())
        }
        Command::VerifyStructure {
            run,
            flow_steps,
            trials,
        } => {
            let config = run.resolve()?;
            let summary = cmd_verify_structure(&config, *flow_steps, *trials)?;
            println!("{}", summary.report);
            write_report(&config, &summary.report)?;
            if summary.passed() {
                Ok(())
            } else {
                Err(CliError::Verification(format!(
                    "structure-identity residual {:.3e} exceeds {:.0e}",
                    summary.max_rel_residual,
                    varitherm_cli::STRUCTURE_TOL
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

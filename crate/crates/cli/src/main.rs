use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use muonkit::sweep::Coupling;
use muonkit::verify::Level;
use muonkit_cli::commands;

/// Muon experiments, convergence bounds and property checks.
///
/// Exit status: 0 on success, 1 when a check fails, 2 on a configuration
/// error. MUON_WORKERS sets the number of replica worker threads.
#[derive(Parser)]
#[command(name = "muonkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run Monte Carlo replicas and write CSV traces plus report.json.
    Run {
        config: PathBuf,
        /// Overrides run.output_dir.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run the property-check suite.
    Verify {
        #[arg(long, conflicts_with = "full")]
        fast: bool,
        #[arg(long)]
        full: bool,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Evaluate the bounds for a config without simulating.
    Bounds { config: PathBuf },
    /// Follow a corollary bound across budgets T = tmin, 2 tmin, ..., <= tmax.
    Sweep {
        config: PathBuf,
        #[arg(long, value_parser = parse_coupling)]
        coupling: Coupling,
        #[arg(long, default_value_t = 16)]
        tmin: usize,
        #[arg(long, default_value_t = 4096)]
        tmax: usize,
        /// Overrides run.output_dir.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

fn parse_coupling(s: &str) -> Result<Coupling, String> {
    s.parse().map_err(|e: muonkit::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = match cli.command {
        Command::Run { config, output_dir } => {
            commands::run(&config, output_dir.as_deref(), &mut out)
        }
        Command::Verify { full, json, .. } => {
            let level = if full { Level::Full } else { Level::Fast };
            commands::verify(level, json, &mut out)
        }
        Command::Bounds { config } => commands::bounds(&config, &mut out),
        Command::Sweep {
            config,
            coupling,
            tmin,
            tmax,
            output_dir,
        } => commands::sweep_cmd(
            &config,
            coupling,
            tmin,
            tmax,
            output_dir.as_deref(),
            &mut out,
        ),
    };
    let _ = out.flush();
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("muonkit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

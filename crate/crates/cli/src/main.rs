use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ks1d_cli::commands;

/// Simulator and functional auditor for the 1D quasilinear Keller–Segel
/// system.
#[derive(Parser)]
#[command(name = "ks1d", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write snapshots.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configuration over every (p, mass) pair.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        mass: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the key identity and trajectory residual orders under refinement.
    Verify {
        #[arg(long, value_delimiter = ',', default_value = "64,128,256")]
        levels: Vec<usize>,
        /// all, constant, cos_pi, cos_2pi or quadratic.
        #[arg(long, default_value = "all")]
        family: String,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        exponents: Vec<f64>,
        /// critical_cosine, steady or none.
        #[arg(long, default_value = "critical_cosine")]
        scenario: String,
        /// Also write the JSON report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => commands::run(&config, out),
        Command::Sweep { config, p, mass, out } => commands::sweep(&config, &p, &mass, out),
        Command::Verify {
            levels,
            family,
            exponents,
            scenario,
            out,
        } => commands::verify(&levels, &family, &exponents, &scenario, out),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

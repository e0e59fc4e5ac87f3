use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, ValueEnum};

use gravem_core::scenario::{load_scenario, run, RunOptions, RunReport, Subcommand};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// Integrate rays and transport polarization tensors
    Propagate,
    /// Compare factored against direct tensor propagation
    EquivalenceCheck,
    /// Flat-space helicity sectors, masses and κ families
    Algebra,
    /// Export the equivalent constitutive medium
    Medium,
    /// Echo the conformally scaled scenario
    Scale,
    /// Down-conversion state and quality report
    Source,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Propagate => Subcommand::Propagate,
            Command::EquivalenceCheck => Subcommand::EquivalenceCheck,
            Command::Algebra => Subcommand::Algebra,
            Command::Medium => Subcommand::Medium,
            Command::Scale => Subcommand::Scale,
            Command::Source => Subcommand::Source,
        }
    }
}

/// Gravitational-wave propagation as same-helicity electromagnetic pairs.
///
/// Exit status: 0 when every check passes, 2 when any check fails, 1 on error.
#[derive(Debug, Parser)]
#[command(name = "gravem", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Scenario file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the primary tolerance of the subcommand
    #[arg(long)]
    tolerance: Option<f64>,
    /// Integrate each ray with this many uniform steps
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn write_all(out: &Path, report: &RunReport, log: &str) -> std::io::Result<()> {
    fs::create_dir_all(out)?;
    for f in &report.files {
        fs::write(out.join(&f.name), &f.contents)?;
    }
    fs::write(out.join("run.log"), log)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let cmd = Subcommand::from(cli.command);
    let scenario = match load_scenario(&cli.config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: scenario-cli::parse_scenario: {e}");
            return ExitCode::from(1);
        }
    };
    let opts = RunOptions {
        tolerance: cli.tolerance,
        steps: cli.steps,
        seed: cli.seed,
        base_dir: cli
            .config
            .parent()
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    let report = match run(&scenario, cmd, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let mut log = format!(
        "unix_time = {stamp}\nsubcommand = {cmd}\nconfig = {}\nseed = {}\nelapsed_s = {:.3}\n",
        cli.config.display(),
        cli.seed,
        started.elapsed().as_secs_f64()
    );
    for c in &report.checks {
        log.push_str(&format!("{c}\n"));
    }
    if let Err(e) = write_all(&cli.out, &report, &log) {
        eprintln!("error: scenario-cli::write_outputs: {}: {e}", cli.out.display());
        return ExitCode::from(1);
    }

    let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).collect();
    println!(
        "{cmd}: {} checks, {} failed, {} files in {}",
        report.checks.len(),
        failed.len(),
        report.files.len() + 1,
        cli.out.display()
    );
    for c in &failed {
        println!("  {c}");
    }
    ExitCode::from(report.exit_code() as u8)
}

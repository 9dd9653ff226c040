use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use stable_passage::cli::*;
use stable_passage::error::{Error, Result};

/// First-passage times of stable Lévy processes: constants, ensembles,
/// density estimates and the identity-check battery.
#[derive(Parser)]
#[command(name = "stable-passage", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for ensemble generation (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the derived constants and the asymptote table as JSON.
    Constants,
    /// Generate the passage ensemble and write it as CSV with a JSON sidecar.
    Simulate,
    /// Write a density estimate over the configured grid.
    Density {
        /// One of tx, t0, s1, rhat, mhat.
        #[arg(long)]
        target: DensityTarget,
    },
    /// Run the identity-check battery; exit 0 only if every row passes.
    Check {
        /// Multiplies the k0 the estimators use (sensitivity testing).
        #[arg(long, hide = true, default_value_t = 1.0)]
        k0_scale: f64,
    },
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = cli.out {
        cfg.output_dir = o;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Constants => print_json(&cmd_constants(&cfg)?)?,
        Command::Simulate => print_json(&cmd_simulate(&cfg)?)?,
        Command::Density { target } => print_json(&cmd_density(&cfg, target)?)?,
        Command::Check { k0_scale } => {
            let start = Instant::now();
            let report = cmd_check(&cfg, k0_scale, &mut |stage| eprintln!("[{:7.1}s] {stage}", start.elapsed().as_secs_f64()))?;
            for row in &report.rows {
                println!(
                    "{} [{:>2}] {:<48} lhs={:<12.6} rhs={:<12.6} tol={:<10.4} se={:.2e}",
                    if row.pass { "PASS" } else { "FAIL" },
                    row.criterion,
                    row.name,
                    row.lhs,
                    row.rhs,
                    row.tolerance,
                    row.stderr
                );
            }
            for d in &report.diagnostics {
                println!("     info {:<52} {:.6} (se {:.2e})", d.name, d.value, d.stderr);
            }
            println!("overall: {}", if report.pass { "PASS" } else { "FAIL" });
            eprintln!("wall time {:.1}s", start.elapsed().as_secs_f64());
            return Ok(if report.pass { EXIT_PASS } else { EXIT_CHECK_FAILED });
        }
    }
    Ok(EXIT_PASS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

//! Command-line front end: subcommand dispatch, output-directory resolution,
//! and the 0/1/2 exit-code contract.

use clap::{Parser, Subcommand};
use fracground::cli_experiments::{
    cmd_kernel, cmd_noncrit, cmd_solve, cmd_sweep, cmd_verify, CliError,
};
use fracground::config::ExperimentConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fracground", version, about = "Fractional Schrödinger ground-state laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration file (key = value under [section] headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; falls back to $FRACGROUND_OUT, then ./out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker-thread cap for parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for randomized property sampling only; solver paths ignore it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver-free property suite and emit a JSON report.
    Verify,
    /// Solve the ground-state problem at λ = 1 and record diagnostics.
    Solve,
    /// λ-continuation sweep of mountain-pass levels.
    Sweep,
    /// Non-attainment study: b vs b₀ and the θ_y translation experiment.
    Noncrit,
    /// Resolvent-kernel profile and decay report.
    Kernel,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("FRACGROUND_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(|source| CliError::Io { stage: "out_dir", source })?;
    if let Some(threads) = cli.threads {
        // best-effort: a second initialization in the same process is a no-op
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match cli.command {
        Command::Verify => {
            let report = cmd_verify(&cfg, &out, cli.seed)?;
            println!("verify: {} properties passed, {} failed", report.passed, report.failed);
            for p in &report.properties {
                println!("  [{}] {} — {}", if p.passed { "pass" } else { "FAIL" }, p.name, p.detail);
            }
        }
        Command::Solve => {
            let record = cmd_solve(&cfg, &out)?;
            println!("solve: summary hash {}", record.summary_hash);
        }
        Command::Sweep => {
            let record = cmd_sweep(&cfg, &out)?;
            println!("sweep: summary hash {}", record.summary_hash);
        }
        Command::Noncrit => {
            let record = cmd_noncrit(&cfg, &out)?;
            println!("noncrit: summary hash {}", record.summary_hash);
        }
        Command::Kernel => {
            let record = cmd_kernel(&cfg, &out)?;
            println!("kernel: summary hash {}", record.summary_hash);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use sgmem::config::parse_config;
use sgmem::experiment::{run_experiment, Overrides};
use sgmem::Error;

/// Run a JSON-described momentum experiment and write its CSV.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Experiment description (JSON).
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; overrides the config's `output`. Stdout if neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for replications (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Network experiments at 1000 hidden units on 15000/2742 examples.
    #[arg(long)]
    paper_scale: bool,
    /// Master seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = args.workers {
        pool = pool.num_threads(k);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    let overrides = Overrides { out: args.out, seed: args.seed, paper_scale: args.paper_scale };
    match pool.install(|| run_experiment(&config, &text, &overrides)) {
        Ok(summary) => {
            if let Some(p) = summary.output {
                eprintln!("wrote {} rows to {}", summary.rows, p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(3)
        }
    }
}

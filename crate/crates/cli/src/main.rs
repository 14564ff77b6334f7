//! `v3db`: shape, commit, query, prove, verify, tune and benchmark.
//!
//! Exit codes: 0 success, 1 proof rejected, 2 usage error, 3 data error.

mod bench;
mod commands;
mod config;
mod error;
mod store;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{parse_variant, RunConfig};
use crate::error::Failure;

#[derive(Parser, Debug)]
#[command(name = "v3db", version, about = "Verifiable IVF-PQ vector search")]
pub struct Cli {
    /// Run configuration (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Version store directory.
    #[arg(long, global = true, default_value = "v3db-store")]
    store: PathBuf,
    /// Epoch to read or write; defaults to the latest, or the next one when committing.
    #[arg(long, global = true)]
    epoch: Option<u64>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured circuit variant: baseline or multiset.
    #[arg(long, global = true)]
    variant: Option<String>,
    /// Repetitions for `bench`.
    #[arg(long, global = true, default_value_t = 5)]
    reps: usize,
    /// Print distances and per-gadget breakdowns.
    #[arg(long, global = true)]
    debug: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a snapshot from an fvecs file or `synthetic:COUNT`.
    Shape {
        input: String,
        #[arg(long, default_value = "snapshot.v3db")]
        out: PathBuf,
    },
    /// Append a snapshot to the store as a new epoch.
    Commit { snapshot: PathBuf },
    /// Answer every query of an fvecs file against an epoch.
    Query { queries: PathBuf },
    /// Prove the answer to one query of an fvecs file.
    Prove {
        queries: PathBuf,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, default_value = "proof.v3db")]
        out: PathBuf,
    },
    /// Check a proof against the store's commitment and the public configuration.
    Verify { proof: PathBuf },
    /// Search `(n_list, K)` for the smallest padded circuit under the configured budgets.
    Tune {
        /// Also write the explored grid as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print the estimated gate breakdown; `--measure` also builds the circuit.
    Gates {
        #[arg(long)]
        measure: bool,
    },
    /// Time proving and verification, or compare retrieval utility with `--utility`.
    Bench {
        #[arg(long)]
        utility: bool,
        /// Dataset size for `--utility`.
        #[arg(long, default_value_t = 10_000)]
        count: usize,
    },
}

impl Cli {
    fn run_config(&self) -> Result<RunConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(v) = &self.variant {
            cfg.variant = parse_variant(v)?;
        }
        Ok(cfg)
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = cli.run_config()?;
    match &cli.command {
        Command::Shape { input, out } => commands::shape(&cfg, input, out),
        Command::Commit { snapshot } => commands::commit(cli, snapshot),
        Command::Query { queries } => commands::query(cli, queries),
        Command::Prove { queries, index, out } => commands::prove(cli, &cfg, queries, *index, out),
        Command::Verify { proof } => commands::verify(cli, &cfg, proof),
        Command::Tune { csv } => commands::tune(&cfg, csv.as_deref()),
        Command::Gates { measure } => commands::gates(cli, &cfg, *measure),
        Command::Bench { utility: true, count } => bench::utility(&cfg, *count),
        Command::Bench { utility: false, .. } => bench::proving(&cfg, cli.reps),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

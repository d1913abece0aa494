//! Batch front end for the radtemp solvers: reads a TOML run
//! configuration, runs one solver, and writes a node table, a JSON run
//! report and an optional binary radiation-field dump.

pub mod commands;
pub mod config;
pub mod io;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{CliError, Context, EXIT_CONFIG, EXIT_INVARIANT, EXIT_NO_CONVERGENCE, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "radtemp", version, about = "Stationary temperature of a radiatively heated convex body")]
pub struct Cli {
    /// Worker threads for the solver sweeps; defaults to the available cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory; overrides `output.directory`.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Random seed; overrides `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppress progress and summaries on stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the configured problem and write its artifacts.
    Solve {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the built-in identity suite.
    Validate {
        #[arg(long, hide = true)]
        inject_kernel_fault: bool,
    },
    /// Compare the production solver against the dense reference solver.
    Oracle {
        /// TOML run configuration; keep it small, the reference is dense.
        #[arg(long)]
        config: PathBuf,
    },
    /// Recompute the entropy report of a field dump.
    Entropy {
        /// Path of a `field.bin` written by `solve`.
        dump: PathBuf,
    },
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        eprintln!("error: --threads must be >= 1");
        return EXIT_CONFIG;
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("error: cannot start {threads} worker threads: {e}");
        return EXIT_CONFIG;
    }
    let ctx = Context { output: cli.output, seed: cli.seed, threads, quiet: cli.quiet };
    let result = match &cli.command {
        Command::Solve { config } => commands::cmd_solve(config, &ctx),
        Command::Validate { inject_kernel_fault } => commands::cmd_validate(&ctx, *inject_kernel_fault),
        Command::Oracle { config } => commands::cmd_oracle(config, &ctx),
        Command::Entropy { dump } => commands::cmd_entropy(dump, &ctx),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    })
}

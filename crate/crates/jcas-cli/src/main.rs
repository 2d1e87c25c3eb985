//! `jcas` — generate, cluster, and summarize joint communication/sensing
//! channel realizations.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 numeric or
//! runtime failure.

mod commands;
mod error;
mod io;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::ClusterFlags;

#[derive(Parser)]
#[command(name = "jcas", version, about = "Joint communication and sensing channel toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled channel pair realization as an MPC CSV file.
    Generate {
        /// Scenario configuration (JSON); defaults used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed, overriding the configured one.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path; a `.manifest.json` sibling is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster an MPC CSV file with the joint KPowerMeans pipeline.
    Cluster {
        /// Input MPC CSV file.
        #[arg(long)]
        input: PathBuf,
        /// Clustering configuration (JSON); flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Candidate order range, `min:max` (inclusive).
        #[arg(long, value_name = "MIN:MAX")]
        k_range: Option<String>,
        /// Per-link denoising threshold below the link peak, dB.
        #[arg(long)]
        p_th_db: Option<f64>,
        /// Power compensation: `equal-total`, `equal-mean`, or a number.
        #[arg(long)]
        gamma: Option<String>,
        /// Delay weight of the MPC distance metric.
        #[arg(long)]
        zeta: Option<f64>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Members a cluster needs on each link to count as shared.
        #[arg(long)]
        min_count: Option<usize>,
        /// Accept inputs carrying only one link (requires a manual --gamma).
        #[arg(long)]
        allow_single_link: bool,
        /// Output directory (assignments, scores, summary, manifest).
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute per-cluster and per-category spread statistics.
    Stats {
        /// Input MPC CSV file with cluster labels.
        #[arg(long)]
        input: PathBuf,
        /// Recorded in the manifest only; stats are deterministic.
        #[arg(long)]
        seed: Option<u64>,
        /// Output report path (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run sharing-degree / AOD-distribution / end-to-end sweep studies.
    Sweep {
        /// Sweep specification (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Master seed, overriding the base scenario's.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (per-study CSV tables, summary, manifest).
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate { config, seed, out } => {
            commands::cmd_generate(config.as_deref(), *seed, out)
        }
        Command::Cluster {
            input,
            config,
            seed,
            k_range,
            p_th_db,
            gamma,
            zeta,
            restarts,
            max_iter,
            min_count,
            allow_single_link,
            out,
        } => commands::cmd_cluster(
            input,
            config.as_deref(),
            *seed,
            &ClusterFlags {
                k_range: k_range.clone(),
                p_th_db: *p_th_db,
                gamma: gamma.clone(),
                zeta: *zeta,
                restarts: *restarts,
                max_iter: *max_iter,
                min_count: *min_count,
                allow_single_link: *allow_single_link,
            },
            out,
        ),
        Command::Stats { input, seed, out } => commands::cmd_stats(input, *seed, out),
        Command::Sweep { config, seed, out } => commands::cmd_sweep(config, *seed, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

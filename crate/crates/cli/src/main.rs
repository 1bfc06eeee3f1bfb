//! `ricci-net`: build correlation networks from daily closes and measure
//! their curvature, entropy, path statistics and minimum-risk portfolios.
//!
//! Data goes to files or standard output; progress and warnings go to
//! standard error (set `RUST_LOG` to adjust).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ricci_core::ErrorKind;

#[derive(Debug, Parser)]
#[command(name = "ricci-net", version, about = "Curvature and entropy of stock-correlation networks")]
struct Cli {
    /// `key = value` file (window_length, threshold, step, metrics,
    /// all_pairs, input, output, summary). Flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a price CSV, drop incomplete tickers, write the clean matrix.
    Ingest {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build one network per window and write edge lists plus a manifest.
    Networks {
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Per-window curvature, entropy and path statistics.
    Analyze {
        /// Price CSV. Ignored when `--networks` is given.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Directory written by `networks`; analyzes those graphs instead.
        #[arg(long, conflicts_with = "input")]
        networks: Option<PathBuf>,
        #[command(flatten)]
        window: WindowArgs,
        /// Comma list of curvature, entropy, paths, portfolio, or `all`.
        #[arg(long)]
        metrics: Option<String>,
        /// Series CSV (standard output if absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Yearly summary CSV.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Curvature of every connected pair, not just edges.
        #[arg(long)]
        all_pairs_out: Option<PathBuf>,
    },
    /// Minimum-risk portfolio and its curvature measure per window.
    Portfolio {
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Long-format weight dump `b,ticker,weight` (nonzero weights only).
        #[arg(long)]
        weights_out: Option<PathBuf>,
    },
    /// Simulate Ornstein-Uhlenbeck paths and their curvature curve.
    Ou {
        /// Mean-reversion rates, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.15,1")]
        beta: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        x0: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use the exact transition instead of Euler-Maruyama.
        #[arg(long)]
        exact: bool,
        /// Path CSV `t,x` (one `x_<beta>` column per rate when several).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Curvature CSV `t,kappa` (one `kappa_<beta>` column per rate when several).
        #[arg(long)]
        curve_out: Option<PathBuf>,
    },
    /// Generate a seeded one-factor market with consecutive regimes.
    Synth {
        /// `LENGTH:LOADING`, repeatable, in order.
        #[arg(long = "regime", required = true, value_parser = parse_regime)]
        regimes: Vec<ricci_core::Regime>,
        #[arg(long, default_value_t = 60)]
        assets: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Yearly summary table from a series CSV.
    Report {
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
struct WindowArgs {
    /// Returns per window.
    #[arg(long)]
    window_length: Option<usize>,
    /// Correlation at or above which a non-tree edge is added.
    #[arg(long)]
    threshold: Option<f64>,
    /// Offset between consecutive windows.
    #[arg(long)]
    step: Option<usize>,
}

fn parse_regime(s: &str) -> Result<ricci_core::Regime, String> {
    let (length, loading) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LENGTH:LOADING, got `{s}`"))?;
    Ok(ricci_core::Regime {
        length: length.trim().parse().map_err(|_| format!("bad length `{length}`"))?,
        loading: loading.trim().parse().map_err(|_| format!("bad loading `{loading}`"))?,
    })
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numerical => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}

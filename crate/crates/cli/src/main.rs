//! `cograte`: evaluate, optimize, and cross-validate cooperative
//! cognitive-relaying MAC protocols.
//!
//! Exit codes: 0 success, 2 configuration error, 3 invariant violation,
//! 4 analytics/simulation validation mismatch.

mod commands;
mod config;
mod format;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cograte", version, about = "Cooperative cognitive relaying toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigSource {
    /// Path to a key=value config file.
    config: Option<String>,

    /// Use a built-in preset (common, fig1..fig5) instead of a file.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one protocol at one allocation and print the full metrics
    /// plus the per-link statistics.
    Evaluate {
        #[command(flatten)]
        source: ConfigSource,
        /// Protocol to evaluate: NC, P1 or P2.
        #[arg(long, default_value = "P1")]
        protocol: String,
        /// Primary transmission time as a fraction of the horizon.
        #[arg(long, default_value_t = 0.5)]
        tp: f64,
        /// Primary subband as a fraction of the total bandwidth.
        #[arg(long, default_value_t = 0.5)]
        wp: f64,
        /// Arrival rate override (packets/slot).
        #[arg(long)]
        lambda: Option<f64>,
        /// Also write the metrics as a single CSV row.
        #[arg(long)]
        out: Option<String>,
    },
    /// Sweep arrival rates, grid-optimizing the time/bandwidth split per
    /// series, and emit the plot-ready CSV table.
    Optimize {
        #[command(flatten)]
        source: ConfigSource,
        /// Grid resolution NxM override.
        #[arg(long)]
        grid: Option<String>,
        /// Comma-separated arrival-rate list override.
        #[arg(long)]
        lambda: Option<String>,
        /// Write the CSV here as well as stdout.
        #[arg(long)]
        out: Option<String>,
    },
    /// Compare closed-form metrics against the slot-level simulator and
    /// report per-metric z-scores (exit 4 when any |z| > 4).
    Validate {
        #[command(flatten)]
        source: ConfigSource,
        #[arg(long, default_value = "P1")]
        protocol: String,
        #[arg(long, default_value_t = 0.5)]
        tp: f64,
        #[arg(long, default_value_t = 0.5)]
        wp: f64,
        #[arg(long)]
        lambda: Option<f64>,
        /// Simulated slots per replication.
        #[arg(long)]
        slots: Option<u64>,
        /// Independent replications.
        #[arg(long)]
        reps: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Proceed even when the analytic queue is unstable.
        #[arg(long)]
        allow_unstable: bool,
        /// Also write the comparison table as CSV.
        #[arg(long)]
        out: Option<String>,
        /// Dump per-slot trace records to this file (single replication
        /// only).
        #[arg(long)]
        trace: Option<String>,
    },
}

/// Command failure carrying its process exit code.
pub enum Failure {
    /// Exit 2: unreadable/invalid configuration.
    Config(String),
    /// Exit 3: parameter or allocation invariant violated.
    Invariant(String),
    /// Exit 4: analytics and simulation disagree.
    Validation(String),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Invariant(_) => 3,
            Failure::Validation(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Invariant(m) | Failure::Validation(m) => m,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Evaluate { source, protocol, tp, wp, lambda, out } => {
            commands::evaluate(&source, &protocol, tp, wp, lambda, out.as_deref())
        }
        Command::Optimize { source, grid, lambda, out } => {
            commands::optimize(&source, grid.as_deref(), lambda.as_deref(), out.as_deref())
        }
        Command::Validate {
            source,
            protocol,
            tp,
            wp,
            lambda,
            slots,
            reps,
            seed,
            allow_unstable,
            out,
            trace,
        } => commands::validate(
            &source,
            &protocol,
            tp,
            wp,
            lambda,
            slots,
            reps,
            seed,
            allow_unstable,
            out.as_deref(),
            trace.as_deref(),
        ),
    };
    if let Err(failure) = result {
        eprintln!("error: {}", failure.message());
        std::process::exit(failure.exit_code());
    }
}

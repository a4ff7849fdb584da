//! Command-line front end for the simulator and its benchmarks.

use std::error::Error;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use f3b_sim::bench::{
    batch_sweep, bench_latency, bench_reconfig, bench_throughput, compare_designs,
    measure_storage, BenchParams,
};
use f3b_sim::chain::ProtocolTag;
use f3b_sim::scenario::{run_scenario, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "f3b-sim",
    version,
    about = "Benchmarks and scripted runs for threshold-encrypted transactions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Protocol {
    /// Threshold encryption of the payload key to the committee.
    Tdh2,
    /// Per-transaction verifiable sharing of the payload key.
    Pvss,
}

impl From<Protocol> for ProtocolTag {
    fn from(p: Protocol) -> ProtocolTag {
        match p {
            Protocol::Tdh2 => ProtocolTag::Tdh2,
            Protocol::Pvss => ProtocolTag::Pvss,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Committee size.
    #[arg(long, default_value_t = 128)]
    n: usize,
    /// Reconstruction threshold; defaults to the honest majority ⌊n/2⌋+1.
    #[arg(long)]
    t: Option<usize>,
    /// Confirmation depth to finality.
    #[arg(long, default_value_t = 64)]
    m: u64,
    /// Block interval in simulated milliseconds.
    #[arg(long, default_value_t = 12_000)]
    block_time_ms: u64,
    /// Key-encapsulation protocol for the envelopes.
    #[arg(long, value_enum, default_value_t = Protocol::Tdh2)]
    protocol: Protocol,
    /// Seed for every random choice in the run.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Measurement repetitions (reported as median/min/max).
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Report format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    out: OutputFormat,
    /// Write the report to this file instead of stdout.
    #[arg(long)]
    path: Option<PathBuf>,
}

impl CommonArgs {
    fn bench_params(&self) -> BenchParams {
        BenchParams {
            n: self.n,
            t: self.t.unwrap_or(self.n / 2 + 1),
            confirmations: self.m,
            block_time_ms: self.block_time_ms,
            protocol: self.protocol.into(),
            seed: self.seed,
            trials: self.trials,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Measure the release latency and its overhead on time-to-finality.
    Latency {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Measure release-path throughput across co-finalized batch sizes.
    Throughput {
        #[command(flatten)]
        common: CommonArgs,
        /// Largest batch; the sweep covers powers of two up to it.
        #[arg(long, default_value_t = 512)]
        batch: usize,
    },
    /// Measure on-chain key-material sizes and fit the sharing-size law.
    Storage {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        out: OutputFormat,
        #[arg(long)]
        path: Option<PathBuf>,
    },
    /// Measure committee bootstrap and handover costs.
    Reconfig {
        #[arg(long, default_value_t = 32)]
        n: usize,
        /// Defaults to ⌊n/2⌋+1.
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        out: OutputFormat,
        #[arg(long)]
        path: Option<PathBuf>,
    },
    /// Compare user-visible delays across front-running defenses.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a TOML-scripted scenario; print the outcome, optionally write the
    /// trace.
    Scenario {
        /// Scenario description (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Write the newline-delimited trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the outcome summary here instead of stdout.
        #[arg(long)]
        path: Option<PathBuf>,
    },
}

fn emit(body: String, path: Option<&PathBuf>) -> Result<(), Box<dyn Error>> {
    match path {
        Some(p) => fs::write(p, body)?,
        None => println!("{body}"),
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    let cli = Cli::parse();
    match cli.command {
        Command::Latency { common } => {
            let report = bench_latency(&common.bench_params());
            let body = match common.out {
                OutputFormat::Json => serde_json::to_string_pretty(&report)?,
                OutputFormat::Csv => report.to_csv(),
            };
            emit(body, common.path.as_ref())
        }
        Command::Throughput { common, batch } => {
            let report = bench_throughput(&common.bench_params(), &batch_sweep(batch));
            let body = match common.out {
                OutputFormat::Json => serde_json::to_string_pretty(&report)?,
                OutputFormat::Csv => report.to_csv(),
            };
            emit(body, common.path.as_ref())
        }
        Command::Storage { seed, out, path } => {
            let report = measure_storage(seed);
            let body = match out {
                OutputFormat::Json => serde_json::to_string_pretty(&report)?,
                OutputFormat::Csv => report.to_csv(),
            };
            emit(body, path.as_ref())
        }
        Command::Reconfig { n, t, trials, seed, out, path } => {
            let report = bench_reconfig(n, t.unwrap_or(n / 2 + 1), trials, seed);
            let body = match out {
                OutputFormat::Json => serde_json::to_string_pretty(&report)?,
                OutputFormat::Csv => report.to_csv(),
            };
            emit(body, path.as_ref())
        }
        Command::Compare { common } => {
            let latency = bench_latency(&common.bench_params());
            let report = compare_designs(
                common.m,
                common.block_time_ms,
                latency.release_latency_ms.median,
            );
            let body = match common.out {
                OutputFormat::Json => serde_json::to_string_pretty(&report)?,
                OutputFormat::Csv => report.to_csv(),
            };
            emit(body, common.path.as_ref())
        }
        Command::Scenario { config, trace, path } => {
            let text = fs::read_to_string(&config)?;
            let scenario = ScenarioConfig::from_toml(&text)?;
            let outcome = run_scenario(&scenario)?;
            if let Some(trace_path) = &trace {
                fs::write(trace_path, &outcome.trace_ndjson)?;
            }
            let summary = serde_json::json!({
                "blocks_produced": outcome.blocks_produced,
                "submitted": outcome.submitted,
                "executed": outcome.executed,
                "failed": outcome.failed,
                "unrevealed": outcome.unrevealed,
                "final_epoch": outcome.final_epoch,
                "trace_events": outcome.trace_ndjson.lines().count(),
                "trace_written_to": trace.as_ref().map(|p| p.display().to_string()),
            });
            emit(serde_json::to_string_pretty(&summary)?, path.as_ref())
        }
    }
}

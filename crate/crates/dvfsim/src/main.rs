use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dvfsim::cli::{self, OutputFormat};

/// Model and simulate sparsity-aware block-level DVFS schedules.
#[derive(Parser)]
#[command(name = "dvfsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Partition a graph into super-blocks and report switching totals
    Partition {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        /// Amortization factor N (accepts "inf")
        #[arg(long, default_value = "5")]
        n: String,
        /// Similarity tolerance per component
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        /// Per-operator latency budget in seconds
        #[arg(long)]
        budget: Option<f64>,
        /// Planning temperature in degrees C (profile ambient when omitted)
        #[arg(long)]
        temp: Option<f64>,
        /// Write the schedule JSON here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a scenario and emit the execution trace
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run several policies over one scenario and report gains vs a baseline
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        /// Policies to run (comma separated)
        #[arg(long, value_delimiter = ',', default_values_t = [
            "max_static".to_string(),
            "reactive_default".to_string(),
            "operator_level_serial".to_string(),
            "sparse_dvfs_lookahead".to_string(),
        ])]
        policy: Vec<String>,
        /// Baseline policy name
        #[arg(long, default_value = "reactive_default")]
        baseline: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sweep the amortization factor N and report per-N rows
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// N values (comma separated, "inf" allowed); scenario sweep
        /// section when omitted
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<String>>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Validate input files or run the random self-check suite
    Validate {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Run this many random self-check instances
        #[arg(long)]
        random: Option<usize>,
        /// Seed for the random-instance generators
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run() -> dvfsim::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Partition {
            graph,
            profile,
            n,
            eps,
            budget,
            temp,
            out,
        } => {
            let n = cli::parse_n(&n).map_err(|message| dvfsim::Error::Invalid { message })?;
            cli::cmd_partition(&graph, &profile, n, eps, budget, temp, out.as_deref())
        }
        Command::Simulate { scenario, output } => cli::cmd_simulate(
            &scenario,
            output.out.as_deref(),
            OutputFormat::parse(&output.format)?,
        ),
        Command::Compare {
            scenario,
            policy,
            baseline,
            output,
        } => cli::cmd_compare(
            &scenario,
            &policy,
            &baseline,
            output.out.as_deref(),
            OutputFormat::parse(&output.format)?,
        ),
        Command::Sweep {
            scenario,
            n,
            output,
        } => {
            let values = match n {
                Some(texts) => Some(
                    texts
                        .iter()
                        .map(|t| cli::parse_n(t))
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|message| dvfsim::Error::Invalid { message })?,
                ),
                None => None,
            };
            cli::cmd_sweep(
                &scenario,
                values,
                output.out.as_deref(),
                OutputFormat::parse(&output.format)?,
            )
        }
        Command::Validate {
            graph,
            profile,
            scenario,
            random,
            seed,
        } => cli::cmd_validate(
            graph.as_deref(),
            profile.as_deref(),
            scenario.as_deref(),
            random,
            seed,
        ),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

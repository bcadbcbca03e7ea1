use std::process::ExitCode;

use clap::{Parser, Subcommand};
use twincheck_cli::{
    load_config, read_file, run_bound, run_check, run_estimate, run_graph, run_montecarlo, run_pgm_augment,
    run_pgm_processes, run_simulate, write_file, CliError, Outcome,
};

#[derive(Parser)]
#[command(name = "twincheck", version, about = "Model checking and leakage analysis for digital-twin orchestration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explore the UAV model and check its properties.
    Check {
        #[arg(long)]
        config: String,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Comma-separated property names; defaults to all plus termination.
        #[arg(long)]
        props: Option<String>,
        /// Stop after this many distinct states.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Write the reachable state graph as DOT.
    Graph {
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: String,
        #[arg(long, default_value_t = 10_000)]
        limit: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Transform or inspect a dependency graph file.
    Pgm {
        #[command(subcommand)]
        command: PgmCommand,
    },
    /// Health-model leakage analysis.
    Leakage {
        #[command(subcommand)]
        command: LeakageCommand,
    },
}

#[derive(Subcommand)]
enum PgmCommand {
    /// Route distributed edges through channel and received-value nodes.
    Augment { input: String },
    /// List one `parents -> target` line per process.
    Processes { input: String },
}

#[derive(Subcommand)]
enum LeakageCommand {
    /// Simulate an episode and write its trace.
    Simulate {
        /// Per-action damage rates.
        #[arg(long, default_value = "0.01,0.05")]
        rates: String,
        /// `seq:1,2,...` cycles through actions; `weights:w1,w2,...` draws them.
        #[arg(long, default_value = "weights:1,1")]
        policy: String,
        #[arg(long, default_value_t = 1000)]
        horizon: usize,
        #[arg(long, default_value_t = 100)]
        h0: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: String,
    },
    /// Estimate rates from a trace and report the guarantee on each.
    Estimate {
        input: String,
        #[arg(long, default_value = "0.05")]
        epsilon: String,
        /// Append exact `key = value` lines.
        #[arg(long)]
        kv: bool,
    },
    /// Deviation bound for N samples and/or the samples needed for a confidence.
    Bound {
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        epsilon: String,
        #[arg(long = "samples")]
        samples: Option<u64>,
        #[arg(long)]
        delta: Option<String>,
    },
    /// Compare simulated estimates against the bias and deviation guarantees.
    Montecarlo {
        #[arg(long, default_value = "0.01,0.05")]
        rates: String,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value = "0.01,0.02,0.05")]
        epsilons: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Check { config, workers, props, limit } => {
            let cfg = load_config(&config)?;
            let report = run_check(&cfg, props.as_deref(), workers, limit)?;
            print!("{report}");
            Ok(report.outcome())
        }
        Command::Graph { config, out, limit, workers } => {
            let cfg = load_config(&config)?;
            let (dot, counts) = run_graph(&cfg, limit, workers)?;
            println!("distinct = {}\ntotal = {}", counts.distinct, counts.total);
            match dot {
                Ok(text) => {
                    write_file(&out, &text)?;
                    println!("wrote {out}");
                    Ok(Outcome::Pass)
                }
                Err(limit) => {
                    println!("{limit}");
                    Ok(Outcome::LimitHit)
                }
            }
        }
        Command::Pgm { command } => {
            let text = match command {
                PgmCommand::Augment { input } => run_pgm_augment(&read_file(&input)?)?,
                PgmCommand::Processes { input } => run_pgm_processes(&read_file(&input)?)?,
            };
            print!("{text}");
            Ok(Outcome::Pass)
        }
        Command::Leakage { command } => match command {
            LeakageCommand::Simulate { rates, policy, horizon, h0, seed, out } => {
                let trace = run_simulate(&rates, &policy, horizon, h0, seed)?;
                write_file(&out, &trace.to_string())?;
                println!("wrote {} steps to {out}", trace.len());
                Ok(Outcome::Pass)
            }
            LeakageCommand::Estimate { input, epsilon, kv } => {
                print!("{}", run_estimate(&read_file(&input)?, &epsilon, kv)?);
                Ok(Outcome::Pass)
            }
            LeakageCommand::Bound { lambda, epsilon, samples, delta } => {
                print!("{}", run_bound(&lambda, &epsilon, samples, delta.as_deref())?);
                Ok(Outcome::Pass)
            }
            LeakageCommand::Montecarlo { rates, samples, trials, epsilons, seed } => {
                let (text, outcome) = run_montecarlo(&rates, samples, trials, &epsilons, seed)?;
                print!("{text}");
                Ok(outcome)
            }
        },
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CliError::CODE)
        }
    }
}

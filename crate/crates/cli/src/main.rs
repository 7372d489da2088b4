use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::error;

use opportune::batch::{run_batch, run_single, validate_scenario, BatchSpec};
use opportune::config::parse_override;
use opportune::report::{Metric, RunMetrics};

#[derive(Parser)]
#[command(name = "opportune", version, about = "Map-based delay-tolerant network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario with its configured seed and routers.
    Run(RunArgs),
    /// Run a protocol x seed grid and aggregate.
    Batch(BatchArgs),
    /// Check a scenario and its map without simulating.
    Validate(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario settings file.
    scenario: PathBuf,
    /// Override a setting, e.g. --set btInterface.transmitRange=15
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_override)]
    set: Vec<(String, String)>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Report directory (defaults to Report.outputDir).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3, 4, 5])]
    seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = ["epidemic".to_string(), "prophet".to_string()])]
    protocols: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let (report, files) = run_single(&args.common.scenario, &args.common.set, args.out.as_deref())?;
    let m = RunMetrics::from_report(&report);
    println!(
        "{} seed {}: created {} delivered {} delivery {} delay {} overhead {} hops {} dropped {}",
        report.protocol,
        report.seed,
        report.n_created,
        report.n_delivered,
        fmt_opt(m.delivery_prob),
        fmt_opt(m.avg_delay),
        fmt_opt(m.overhead_ratio),
        fmt_opt(m.avg_hops),
        report.n_dropped()
    );
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_batch(args: BatchArgs) -> Result<()> {
    let spec = BatchSpec {
        scenario: args.common.scenario,
        overrides: args.common.set,
        protocols: args.protocols,
        seeds: args.seeds,
        jobs: args.jobs,
        out_dir: args.out,
    };
    let outcome = run_batch(&spec)?;
    for s in &outcome.summary {
        print!("{} ({} runs):", s.protocol, s.runs);
        for m in Metric::ALL {
            let st = s.stat(m);
            match st.mean {
                Some(mean) => print!(" {} {:.4}±{:.4}", m.name(), mean, st.sd.unwrap_or(0.0)),
                None => print!(" {} -", m.name()),
            }
            if st.excluded > 0 {
                print!(" ({} undefined)", st.excluded);
            }
        }
        println!();
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    if !outcome.failures.is_empty() {
        for f in &outcome.failures {
            eprintln!("failed: {} seed {}: {}", f.protocol, f.seed, f.error);
        }
        bail!("{} of {} runs failed", outcome.failures.len(), spec.protocols.len() * spec.seeds.len());
    }
    Ok(())
}

fn cmd_validate(args: CommonArgs) -> Result<()> {
    let v = validate_scenario(&args.scenario, &args.set);
    print!("{v}");
    if !v.ok() {
        bail!("{} invalid", args.scenario.display());
    }
    println!("ok");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OPPORTUNE_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a).context("run failed"),
        Command::Batch(a) => cmd_batch(a).context("batch failed"),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e:#}");
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use mmolsr_core::config::{Mobility, Protocol};
use mmolsr_experiments::sweep::{self, SweepPlan};
use mmolsr_experiments::{artifacts, execute, report, scenario, successes};

#[derive(Parser)]
#[command(name = "mmolsr", version, about = "OLSR and multi-metric OLSR MANET simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutArg {
    /// Output directory.
    #[arg(long, env = "MMOLSR_OUT", default_value = "results")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        protocol: Option<Protocol>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Static energy study: both protocols over the seeds.
    SweepA {
        /// Base scenario; defaults to the bundled setupA.cfg.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        seeds: Vec<u64>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Rate grid: delivery at a fixed horizon and lifetime to first depletion.
    SweepB {
        /// Base scenario; defaults to the bundled setupB.cfg.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        seeds: Vec<u64>,
        /// Packet intervals in seconds.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.075,0.05,0.025")]
        intervals: Vec<f64>,
        /// `static` or `rwp<v_max>`.
        #[arg(long, value_delimiter = ',', default_value = "static,rwp2,rwp20",
              value_parser = scenario::parse_mobility)]
        mobility: Vec<Mobility>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Compare the protocols from a finished rate-grid sweep.
    Report {
        #[command(flatten)]
        out: OutArg,
        /// Sweep name used as the CSV prefix.
        #[arg(long, default_value = "setupB")]
        name: String,
    },
}

fn base(config: Option<&Path>, name: &str, bundled: fn() -> mmolsr_core::ScenarioConfig) -> Result<(String, mmolsr_core::ScenarioConfig)> {
    Ok(match config {
        Some(p) => (scenario::scenario_name(p), scenario::load(p)?),
        None => (name.to_string(), bundled()),
    })
}

fn report_failures(results: &[Result<sweep::RunRecord, sweep::CellError>]) -> usize {
    let failed: Vec<_> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    for e in &failed {
        eprintln!("cell failed: {e}");
    }
    failed.len()
}

fn main_inner(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, protocol, seed, out } => {
            let name = scenario::scenario_name(&config);
            let mut cfg = scenario::load(&config)?;
            if let Some(p) = protocol {
                cfg.protocol = p;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let plan = SweepPlan {
                protocols: vec![cfg.protocol],
                seeds: vec![cfg.seed],
                ..SweepPlan::single(&name, cfg, Vec::new())
            };
            let cell = plan.cells().remove(0);
            let record = sweep::run_cell(cell)?;
            artifacts::write_run(&out.out, &record)?;
            let r = &record.report;
            println!(
                "{} {} seed {}: pdr {} %, lifetime {} s, wrote {}",
                name,
                record.cell.protocol,
                record.cell.seed,
                artifacts::fmt_opt(r.normalized_pdr, 2),
                r.network_lifetime.map(|t| format!("{t:.2}")).unwrap_or_else(|| "none".into()),
                out.out.display()
            );
        }
        Command::SweepA { config, seeds, out } => {
            let (name, cfg) = base(config.as_deref(), "setupA", scenario::setup_a)?;
            let plan = SweepPlan::single(&name, cfg, seeds);
            let results = execute(&plan, &out.out)?;
            let failed = report_failures(&results);
            artifacts::write_energy_figures(&out.out, &successes(&results))?;
            println!("{}: {} runs, {} failed, wrote {}", name, results.len(), failed, out.out.display());
        }
        Command::SweepB { config, seeds, intervals, mobility, out } => {
            let (name, cfg) = base(config.as_deref(), "setupB", scenario::setup_b)?;
            let plan = SweepPlan {
                intervals,
                mobility,
                ..SweepPlan::rate_grid(&name, cfg, seeds)
            };
            let results = execute(&plan, &out.out)?;
            let failed = report_failures(&results);
            artifacts::write_rate_grid(&out.out, &name, &successes(&results))?;
            println!("{}: {} runs, {} failed, wrote {}", name, results.len(), failed, out.out.display());
        }
        Command::Report { out, name } => {
            let rows = report::compare(&out.out, &name)?;
            let path = out.out.join("comparison.csv");
            report::write_comparison(&path, &rows).context("writing comparison")?;
            print!("{}", report::render(&rows));
            let missing = rows.iter().filter(|r| !r.complete()).count();
            if missing > 0 {
                eprintln!("{missing} row(s) incomplete");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

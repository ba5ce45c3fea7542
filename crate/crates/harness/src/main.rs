use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use gradreg_harness::plot::summary_svg;
use gradreg_harness::run::{read_summary, write_outputs};
use gradreg_harness::verify::SUITES;
use gradreg_harness::{fit_summary, sweep, verify, ExperimentConfig, RunOptions, RunOutput, Suite, SummaryRow};

#[derive(Parser)]
#[command(name = "gradreg", version, about = "Run, sweep, verify and fit stochastic subgradient experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Override the base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the replicate count.
    #[arg(long, global = true)]
    replicates: Option<u32>,
    /// Directory for CSV and plot output.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run {
        config: PathBuf,
        /// Also write an SVG chart of the summary.
        #[arg(long)]
        plot: bool,
    },
    /// Run a config once per iteration budget.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        budgets: Vec<u64>,
        #[arg(long)]
        plot: bool,
    },
    /// Run a named property suite, or `all`.
    Verify { suite: String },
    /// Fit the log-log rate of a summary CSV.
    Fit { summary: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    let g = &cli.global;
    match cli.command {
        Command::Run { config, plot } => experiment(g, &config, &[], plot),
        Command::Sweep { config, budgets, plot } => experiment(g, &config, &budgets, plot),
        Command::Verify { suite } => {
            let suites: Vec<Suite> = if suite == "all" { SUITES.to_vec() } else { vec![suite.parse()?] };
            let pool = gradreg_harness::run::thread_pool(g.threads)?;
            let mut ok = true;
            for s in suites {
                let report = pool.install(|| verify(s, g.seed.unwrap_or(0)))?;
                print!("{report}");
                ok &= report.all_passed();
            }
            Ok(ok)
        }
        Command::Fit { summary } => {
            let rows = read_summary(&summary)?;
            let mut by_id: BTreeMap<String, Vec<SummaryRow>> = BTreeMap::new();
            for r in rows {
                by_id.entry(r.experiment_id.clone()).or_default().push(r);
            }
            for (id, rows) in by_id {
                let fit = fit_summary(&rows).with_context(|| format!("experiment `{id}` in {}", summary.display()))?;
                println!(
                    "{id}: slope {:.4} +/- {:.4} (se {:.4}), intercept {:.4} +/- {:.4}, {} points",
                    fit.slope,
                    fit.slope_half_width,
                    fit.slope_std_error,
                    fit.intercept,
                    fit.intercept_half_width,
                    fit.points.len()
                );
            }
            Ok(true)
        }
    }
}

fn experiment(g: &Global, path: &Path, budgets: &[u64], plot: bool) -> Result<bool> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(r) = g.replicates {
        cfg.replicates = r;
    }
    let outputs = sweep(&cfg, budgets, &RunOptions { threads: g.threads })?;
    let records = records_path(g, &cfg);
    let (rec, sum) = write_outputs(&records, &outputs)?;
    report(&outputs);
    println!("wrote {} and {}", rec.display(), sum.display());
    if plot {
        let rows: Vec<SummaryRow> = outputs.iter().flat_map(|o| o.summary.iter().cloned()).collect();
        let svg = sum.with_extension("svg");
        std::fs::write(&svg, summary_svg(&rows)).with_context(|| format!("writing {}", svg.display()))?;
        println!("wrote {}", svg.display());
    }
    Ok(true)
}

fn records_path(g: &Global, cfg: &ExperimentConfig) -> PathBuf {
    let default = PathBuf::from(format!("{}.csv", cfg.id));
    let configured = cfg.output.clone().unwrap_or(default);
    match &g.out_dir {
        Some(dir) => dir.join(configured.file_name().expect("output path names a file")),
        None => configured,
    }
}

fn report(outputs: &[RunOutput]) {
    println!("{:>12} {:>14} {:>10} {:>16} {:>12} {:>16}", "budget", "oracle_calls", "replicates", "mean_grad_norm", "std_error", "mean_gap");
    for row in outputs.iter().flat_map(|o| &o.summary) {
        let gap = row.mean_function_gap.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into());
        println!(
            "{:>12} {:>14} {:>10} {:>16.6e} {:>12.4e} {:>16}",
            row.budget, row.oracle_calls, row.replicates, row.mean_grad_norm, row.std_error, gap
        );
    }
}

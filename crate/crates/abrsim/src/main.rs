use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use abrsim::config;
use abrsim::experiments::{
    self, check_bound, csv_report, predict_q_bound, BoundCheck, BoundCoefficients, RunMetrics,
    TablePreset,
};

#[derive(Parser)]
#[command(
    name = "abrsim",
    about = "TCP-over-ABR bottleneck simulator and buffer-bound experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario from a config file and emit its CSV row.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Write the CSV report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the bottleneck queue-depth time series (time_ps,depth_cells).
        #[arg(long)]
        queue_trace: Option<PathBuf>,
        /// Write per-interval switch diagnostics (t,z,n_active,fair_share,queue_depth).
        #[arg(long)]
        erica_trace: Option<PathBuf>,
    },
    /// Run one of the four preset experiment tables.
    Table {
        #[arg(value_parser = clap::value_parser!(u32).range(1..=4))]
        table: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario and check its maximum queue against the buffer bound.
    CheckBound {
        #[arg(long)]
        config: PathBuf,
        /// RTT multiplier.
        #[arg(long, default_value_t = 3.0)]
        a: f64,
        /// Averaging-interval multiplier.
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        /// Feedback-delay multiplier.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
    /// Re-run a base scenario for each value of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Parameter to vary (any config-file key, e.g. n_sources, link_km).
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(report: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, report).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{report}"),
    }
    Ok(())
}

fn summarize(m: &RunMetrics) {
    eprintln!(
        "{}: n={} rtt={:.3}ms fbd={:.3}ms max_q={} cells ({:.2} x RTT) \
         throughput={:.2} Mbps efficiency={:.2}% drops={} timeouts={} steady={}",
        m.scenario,
        m.n,
        m.rtt_ms,
        m.fbd_ms,
        m.max_queue_cells,
        m.max_queue_rtt_multiple,
        m.total_mbps,
        m.efficiency * 100.0,
        m.drops,
        m.timeouts,
        m.steady_state
    );
    eprintln!(
        "  ceilings: {:.2} Mbps raw, {:.2} Mbps after 1/32 RM overhead, {:.2} Mbps after 6% RM deduction",
        m.diag.ceiling_mbps, m.diag.rm_adjusted_ceiling_mbps, m.diag.rm_six_percent_ceiling_mbps
    );
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            queue_trace,
            erica_trace,
        } => {
            let mut cfg = config::load(&config)?;
            cfg.queue_trace = queue_trace.is_some();
            cfg.erica_trace = erica_trace.is_some();
            let output = experiments::run_scenario_with_traces(&cfg)?;
            if let Some(path) = queue_trace {
                let mut csv = String::from("time_ps,depth_cells\n");
                for (t, d) in &output.queue_trace {
                    csv.push_str(&format!("{},{}\n", t.as_ps(), d));
                }
                fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(path) = erica_trace {
                let mut csv = String::from("time_ps,z,n_active,fair_share,queue_depth\n");
                for row in &output.erica_trace {
                    csv.push_str(&format!(
                        "{},{:.6},{},{:.3},{}\n",
                        row.at.as_ps(),
                        row.z,
                        row.n_active,
                        row.fair_share,
                        row.queue_depth
                    ));
                }
                fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
            }
            summarize(&output.metrics);
            emit(&csv_report(std::slice::from_ref(&output.metrics)), out.as_ref())
        }
        Command::Table { table, out } => {
            let preset = TablePreset::from_index(table).expect("range-checked by clap");
            let report = experiments::run_table(preset)?;
            emit(&report, out.as_ref())
        }
        Command::CheckBound { config, a, b, c } => {
            let cfg = config::load(&config)?;
            cfg.validate()?;
            let coeffs = BoundCoefficients { a, b, c };
            let bound = predict_q_bound(
                cfg.rtt_max(),
                cfg.fbd_max(),
                cfg.erica.interval_time,
                cfg.link_rate_bps,
                &coeffs,
            );
            let metrics = experiments::run_scenario(&cfg)?;
            summarize(&metrics);
            let verdict = check_bound(&metrics, bound);
            println!(
                "bound={} cells (a={} b={} c={}), max_q={} cells: {:?}",
                bound, a, b, c, metrics.max_queue_cells, verdict
            );
            if verdict == BoundCheck::Fail {
                bail!("maximum queue exceeded the bound");
            }
            Ok(())
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => {
            if values.is_empty() {
                bail!("sweep needs at least one value");
            }
            let base = config::load(&config)?;
            let rows = experiments::sweep(&base, &param, &values)?;
            emit(&csv_report(&rows), out.as_ref())
        }
    }
}

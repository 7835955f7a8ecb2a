use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Parser;
use stokes_bench::output::{summary_line, write_outputs};
use stokes_bench::{run, Experiment, ExperimentConfig, RawConfig, Table};

#[derive(Parser, Debug)]
#[command(name = "stokes-bench", about = "Preconditioner experiments on slender Stokes channels")]
struct Cli {
    /// channel, alpha_sweep, aniso, constriction, convergence or norm_equiv
    experiment: String,
    /// `key = value` lines or a JSON object
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    precond: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    alpha_long: Option<f64>,
    #[arg(long)]
    alpha_short: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long = "coarse-H")]
    coarse_h: Option<f64>,
    #[arg(long)]
    svg: bool,
    /// Include per-row wall time in the CSV.
    #[arg(long)]
    timing: bool,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<bool> {
    let cli = Cli::parse();
    let experiment = Experiment::parse(&cli.experiment)?;
    let mut raw = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    for kv in &cli.overrides {
        raw.apply_override(kv)?;
    }
    let flags = [
        ("precond", cli.precond.clone()),
        ("alpha", cli.alpha.map(|v| v.to_string())),
        ("alpha_long", cli.alpha_long.map(|v| v.to_string())),
        ("alpha_short", cli.alpha_short.map(|v| v.to_string())),
        ("beta", cli.beta.map(|v| v.to_string())),
        ("coarse_h", cli.coarse_h.map(|v| v.to_string())),
        ("svg", cli.svg.then(|| "true".to_string())),
        ("timing", cli.timing.then(|| "true".to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            raw.set(k, &v);
        }
    }
    let cfg = ExperimentConfig::from_raw(experiment, &raw)?;

    let start = Instant::now();
    let table = run(&cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    let out = write_outputs(&cli.out, &raw, &cfg, &table, elapsed)?;

    if let Table::Results(rows) = &table {
        for r in rows {
            eprintln!("{}", summary_line(r));
        }
    }
    eprintln!("wrote {} ({elapsed:.1}s)", out.csv.display());
    Ok(!table.any_unconverged())
}

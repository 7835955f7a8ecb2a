use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::{ExperimentConfig, RawConfig};
use crate::experiments::{ResultRow, Table};
use crate::plot;

pub fn write_csv<W: Write>(table: &Table, w: W) -> Result<()> {
    match table {
        Table::Results(rows) => write_rows(rows, w),
        Table::Convergence(rows) => write_rows(rows, w),
        Table::Norms(report) => Ok(report.write_csv(w)?),
    }
}

fn write_rows<T: Serialize, W: Write>(rows: &[T], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Versions {
    #[serde(rename = "stokes-bench")]
    bench: &'static str,
    #[serde(rename = "slender-core")]
    core: &'static str,
}

#[derive(Serialize)]
struct Meta<'a> {
    experiment: &'static str,
    config_hash: String,
    config: &'a std::collections::BTreeMap<String, String>,
    resolved: &'a ExperimentConfig,
    seed: u64,
    versions: Versions,
    rows: usize,
    unconverged: usize,
    wall_time_s: f64,
    row_wall_time_s: Vec<f64>,
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct Outputs {
    pub csv: PathBuf,
    pub meta: PathBuf,
    pub svg: Option<PathBuf>,
}

pub fn write_outputs(
    dir: &Path,
    raw: &RawConfig,
    cfg: &ExperimentConfig,
    table: &Table,
    wall_time_s: f64,
) -> Result<Outputs> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let name = cfg.experiment.name();
    let csv = dir.join(format!("{name}.csv"));
    write_csv(table, File::create(&csv)?)?;

    let (rows, unconverged, row_times) = match table {
        Table::Results(r) => (
            r.len(),
            r.iter().filter(|x| !x.converged).count(),
            r.iter().filter_map(|x| x.wall_time_s).collect(),
        ),
        Table::Convergence(r) => (r.len(), 0, vec![]),
        Table::Norms(r) => (r.rows.len(), 0, vec![]),
    };
    let meta = Meta {
        experiment: name,
        config_hash: raw.hash(),
        config: raw.entries(),
        resolved: cfg,
        seed: cfg.seed,
        versions: Versions { bench: env!("CARGO_PKG_VERSION"), core: slender_version() },
        rows,
        unconverged,
        wall_time_s,
        row_wall_time_s: row_times,
    };
    let meta_path = dir.join(format!("{name}.meta.json"));
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)?;

    let svg = match (cfg.svg, table) {
        (true, Table::Results(r)) => {
            let path = dir.join(format!("{name}.svg"));
            fs::write(&path, plot::cond_chart(cfg.experiment, r))?;
            Some(path)
        }
        _ => None,
    };
    Ok(Outputs { csv, meta: meta_path, svg })
}

fn slender_version() -> &'static str {
    // both crates share the workspace version
    env!("CARGO_PKG_VERSION")
}

/// CSV text for a table, mostly for tests.
pub fn csv_string(table: &Table) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(table, &mut buf)?;
    Ok(String::from_utf8(buf)?)
}

pub fn summary_line(r: &ResultRow) -> String {
    format!(
        "L={} W={} {}{} cond {:.2} ({}){}",
        r.length,
        r.width,
        r.precond,
        r.beta.map(|b| format!(" beta={b}")).or(r.alpha.map(|a| format!(" alpha={a:.4}"))).unwrap_or_default(),
        r.cond_estimate,
        r.minres_iters,
        if r.converged { "" } else { " NOT CONVERGED" }
    )
}

use std::time::Instant;

use anyhow::{bail, Result};
use rayon::prelude::*;
use serde::Serialize;
use slender::disc_fv::{assemble_fv, fv_error_norms};
use slender::disc_th::{assemble_th, th_error_norms};
use slender::geometry::{build_rect_tri_mesh, build_staggered_grid, build_staggered_grid_cells, ChannelGeometry, StaggeredGrid};
use slender::krylov::{estimate_extreme_eigs, EigOptions, MinresOptions};
use slender::mms::{mms_fields, ProblemData};
use slender::norms::{norm_equivalence_scan, NormReport, NormScanConfig};
use slender::precond::{make_preconditioner, solve_system, PrecondKind, PreconditionerSpec, LUBRICATION_ALPHA};
use slender::StokesSystem;

use crate::config::{BackendChoice, Experiment, ExperimentConfig};

/// One preconditioned solve. `wall_time_s` stays empty unless timing is on,
/// so reruns produce identical CSV.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ResultRow {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "W")]
    pub width: f64,
    pub h: Option<f64>,
    pub level: Option<i32>,
    pub backend: &'static str,
    pub preset: String,
    pub precond: &'static str,
    pub alpha: Option<f64>,
    pub alpha_long: Option<f64>,
    pub alpha_short: Option<f64>,
    pub beta: Option<f64>,
    pub r: Option<f64>,
    pub unknowns: usize,
    pub cond_estimate: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lanczos_low_confidence: bool,
    pub minres_iters: usize,
    pub converged: bool,
    pub seed: u64,
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ConvergenceRow {
    pub backend: &'static str,
    pub h: f64,
    pub level: Option<i32>,
    pub unknowns: usize,
    /// FV: pressure error in RMS form. TH: plain `L²` pressure error.
    pub err_p: f64,
    pub err_u: f64,
    pub err_v: Option<f64>,
    pub err_u_h1: Option<f64>,
    pub order_p: Option<f64>,
    pub order_u: Option<f64>,
    pub order_u_h1: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum Table {
    Results(Vec<ResultRow>),
    Convergence(Vec<ConvergenceRow>),
    Norms(NormReport),
}

impl Table {
    pub fn any_unconverged(&self) -> bool {
        match self {
            Table::Results(rows) => rows.iter().any(|r| !r.converged),
            _ => false,
        }
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    Ok(match cfg.experiment {
        Experiment::Channel => Table::Results(run_channel(cfg)?),
        Experiment::AlphaSweep => Table::Results(run_alpha_sweep(cfg)?),
        Experiment::Aniso => Table::Results(run_aniso(cfg)?),
        Experiment::Constriction => Table::Results(run_constriction(cfg)?),
        Experiment::Convergence => Table::Convergence(run_convergence(cfg)?),
        Experiment::NormEquiv => Table::Norms(run_norm_equiv(cfg)?),
    })
}

/// Cartesian grid with spacing `h`; when `W/h` is not an integer the cells
/// become rectangles with `round(W/h)` rows.
pub fn fv_grid(geom: &ChannelGeometry, h: f64) -> Result<StaggeredGrid> {
    let rows = geom.width / h;
    if (rows - rows.round()).abs() < 1e-9 {
        return Ok(build_staggered_grid(geom, h)?);
    }
    let nx = (geom.length / h).round().max(1.0) as usize;
    let ny = rows.round().max(1.0) as usize;
    Ok(build_staggered_grid_cells(geom, nx, ny)?)
}

fn geometry(cfg: &ExperimentConfig, length: f64, width: f64) -> Result<ChannelGeometry> {
    let mut g = ChannelGeometry::new(length, width, cfg.tags)?;
    for &(x, r) in &cfg.constrictions {
        g = g.with_constriction(x, r)?;
    }
    Ok(g)
}

fn assemble(cfg: &ExperimentConfig, geom: &ChannelGeometry, level: i32) -> Result<StokesSystem> {
    let data = ProblemData::manufactured();
    Ok(match cfg.backend {
        BackendChoice::Fv => assemble_fv(&fv_grid(geom, cfg.h)?, &data)?,
        BackendChoice::Th => assemble_th(&build_rect_tri_mesh(geom, level)?, &data)?,
    })
}

/// Per-point labels copied into the row.
#[derive(Default, Clone, Copy)]
struct Labels {
    beta: Option<f64>,
    r: Option<f64>,
}

fn measure(
    cfg: &ExperimentConfig,
    system: &StokesSystem,
    spec: &PreconditionerSpec,
    level: Option<i32>,
    labels: Labels,
) -> Result<ResultRow> {
    let start = Instant::now();
    let pc = make_preconditioner(spec, system, None)?;
    let op = system.operator()?;
    let n = system.dim();
    let steps = cfg.lanczos_steps.unwrap_or_else(|| 600.max((4.0 * (n as f64).sqrt()) as usize));
    let est = estimate_extreme_eigs::<f64>(
        &op,
        &pc,
        &EigOptions { probes: cfg.probes, max_steps: Some(steps), seed: cfg.seed, ..Default::default() },
    )?;
    let (_, rep) = solve_system(system, &pc, &MinresOptions { rtol: cfg.rtol, maxit: cfg.maxit, spectrum: false })?;
    let (alpha, alpha_long, alpha_short) = match spec.kind {
        PrecondKind::Standard => (None, None, None),
        PrecondKind::Aniso => (None, Some(spec.alpha_long), Some(spec.alpha_short)),
        _ => (Some(spec.alpha), None, None),
    };
    let g = &system.geometry;
    Ok(ResultRow {
        length: g.length,
        width: g.width,
        h: (cfg.backend == BackendChoice::Fv).then_some(cfg.h),
        level,
        backend: system.backend.name(),
        preset: cfg.preset.clone().unwrap_or_else(|| "custom".into()),
        precond: spec.kind.name(),
        alpha,
        alpha_long,
        alpha_short,
        beta: labels.beta,
        r: labels.r,
        unknowns: n,
        cond_estimate: est.condition(),
        lambda_min: est.lambda_min_abs,
        lambda_max: est.lambda_max_abs,
        lanczos_low_confidence: est.low_confidence,
        minres_iters: rep.iterations,
        converged: rep.converged,
        seed: cfg.seed,
        wall_time_s: cfg.timing.then(|| start.elapsed().as_secs_f64()),
    })
}

fn spec_for(cfg: &ExperimentConfig, kind: &str) -> Result<PreconditionerSpec> {
    Ok(PreconditionerSpec { kind: PrecondKind::parse(kind)?, ..cfg.precond })
}

fn levels(cfg: &ExperimentConfig) -> Vec<Option<i32>> {
    match cfg.backend {
        BackendChoice::Fv => vec![None],
        BackendChoice::Th if cfg.levels.is_empty() => vec![Some(cfg.level)],
        BackendChoice::Th => cfg.levels.iter().map(|&l| Some(l)).collect(),
    }
}

/// Rows for every `(L, level)` pair and every listed preconditioner.
pub fn run_channel(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let lengths = if cfg.lengths.is_empty() { vec![cfg.length] } else { cfg.lengths.clone() };
    let kinds = if cfg.preconds.is_empty() { vec![cfg.precond.kind.name().to_string()] } else { cfg.preconds.clone() };
    let tasks: Vec<(f64, Option<i32>)> =
        lengths.iter().flat_map(|&l| levels(cfg).into_iter().map(move |lv| (l, lv))).collect();
    let groups: Vec<Vec<ResultRow>> = tasks
        .par_iter()
        .map(|&(len, level)| {
            let geom = geometry(cfg, len, cfg.width)?;
            let system = assemble(cfg, &geom, level.unwrap_or(cfg.level))?;
            kinds.iter().map(|k| measure(cfg, &system, &spec_for(cfg, k)?, level, Labels::default())).collect()
        })
        .collect::<Result<_>>()?;
    Ok(groups.into_iter().flatten().collect())
}

/// Sum preconditioner across the `alphas` grid, for each width.
pub fn run_alpha_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let widths = if cfg.widths.is_empty() { vec![cfg.width] } else { cfg.widths.clone() };
    let kind = if cfg.precond.kind == PrecondKind::Standard { PrecondKind::Sum } else { cfg.precond.kind };
    let level = levels(cfg)[0];
    let systems: Vec<StokesSystem> = widths
        .par_iter()
        .map(|&w| assemble(cfg, &geometry(cfg, cfg.length, w)?, level.unwrap_or(cfg.level)))
        .collect::<Result<_>>()?;
    let tasks: Vec<(usize, f64)> = (0..widths.len()).flat_map(|i| cfg.alphas.iter().map(move |&a| (i, a))).collect();
    tasks
        .par_iter()
        .map(|&(i, a)| {
            let spec = PreconditionerSpec { kind, alpha: a, ..cfg.precond };
            measure(cfg, &systems[i], &spec, level, Labels::default())
        })
        .collect()
}

/// Anisotropic preconditioner with `α_L = 1/12` and `α_W = (β/12)(L/W)²`.
pub fn run_aniso(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    if cfg.backend != BackendChoice::Fv {
        bail!("the anisotropy sweep runs on the finite-volume backend");
    }
    let widths = if cfg.widths.is_empty() { vec![cfg.width] } else { cfg.widths.clone() };
    let systems: Vec<StokesSystem> =
        widths.par_iter().map(|&w| assemble(cfg, &geometry(cfg, cfg.length, w)?, 0)).collect::<Result<_>>()?;
    let tasks: Vec<(usize, f64)> = (0..widths.len()).flat_map(|i| cfg.betas.iter().map(move |&b| (i, b))).collect();
    tasks
        .par_iter()
        .map(|&(i, beta)| {
            let spec = PreconditionerSpec {
                width: cfg.precond.width,
                ..PreconditionerSpec::aniso_beta(beta, cfg.length, widths[i])
            };
            debug_assert_eq!(spec.alpha_long, LUBRICATION_ALPHA);
            measure(cfg, &systems[i], &spec, None, Labels { beta: Some(beta), r: None })
        })
        .collect()
}

/// One notch per `constriction_x` entry, depth `r` from the `radii` list.
/// `sum` uses the narrowest gap as its constant width.
pub fn run_constriction(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let kinds = if cfg.preconds.is_empty() { vec!["sum".to_string(), "varw".to_string()] } else { cfg.preconds.clone() };
    let groups: Vec<Vec<ResultRow>> = cfg
        .radii
        .par_iter()
        .map(|&r| {
            let mut geom = geometry(cfg, cfg.length, cfg.width)?;
            for &x in &cfg.constriction_x {
                geom = geom.with_constriction(x, r)?;
            }
            let system = assemble(cfg, &geom, cfg.level)?;
            kinds
                .iter()
                .map(|k| {
                    let spec = PreconditionerSpec { width: None, ..spec_for(cfg, k)? };
                    measure(cfg, &system, &spec, None, Labels { beta: None, r: Some(r) })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(groups.into_iter().flatten().collect())
}

fn order(coarse: f64, fine: f64, ratio: f64) -> f64 {
    (coarse / fine).ln() / ratio.ln()
}

/// Manufactured-solution errors on `(0, L) x (0, W)`; the default is the
/// `(0, 2) x (0, 1)` box with velocity data on top and bottom.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRow>> {
    let geom = geometry(cfg, cfg.length, cfg.width)?;
    let data = ProblemData::manufactured();
    let spec = cfg.precond;
    let opts = MinresOptions { rtol: cfg.rtol, maxit: cfg.maxit, spectrum: false };
    let mut rows: Vec<ConvergenceRow> = match cfg.backend {
        BackendChoice::Fv => cfg
            .hs
            .par_iter()
            .map(|&h| {
                let system = assemble_fv(&fv_grid(&geom, h)?, &data)?;
                let pc = make_preconditioner(&spec, &system, None)?;
                let (x, rep) = solve_system(&system, &pc, &opts)?;
                if !rep.converged {
                    bail!("solve at h = {h} did not converge");
                }
                let e = fv_error_norms(&system, &x, &|p| {
                    let m = mms_fields(p[0], p[1]);
                    (m.u, m.p)
                })?
                .per_unit_area(geom.area());
                Ok(ConvergenceRow {
                    backend: "fv",
                    h,
                    level: None,
                    unknowns: system.dim(),
                    err_p: e.p,
                    err_u: e.ux,
                    err_v: Some(e.uy),
                    err_u_h1: None,
                    order_p: None,
                    order_u: None,
                    order_u_h1: None,
                })
            })
            .collect::<Result<_>>()?,
        BackendChoice::Th => cfg
            .levels
            .par_iter()
            .map(|&level| {
                let mesh = build_rect_tri_mesh(&geom, level)?;
                let h = mesh.h;
                let system = assemble_th(&mesh, &data)?;
                let pc = make_preconditioner(&spec, &system, None)?;
                let (x, rep) = solve_system(&system, &pc, &opts)?;
                if !rep.converged {
                    bail!("solve at level {level} did not converge");
                }
                let e = th_error_norms(&system, &x, &|p| mms_fields(p[0], p[1]))?;
                Ok(ConvergenceRow {
                    backend: "th",
                    h,
                    level: Some(level),
                    unknowns: system.dim(),
                    err_p: e.p_l2,
                    err_u: e.u_l2,
                    err_v: None,
                    err_u_h1: Some(e.u_h1),
                    order_p: None,
                    order_u: None,
                    order_u_h1: None,
                })
            })
            .collect::<Result<_>>()?,
    };
    for k in 1..rows.len() {
        let ratio = rows[k - 1].h / rows[k].h;
        let (prev, cur) = (rows[k - 1].clone(), &mut rows[k]);
        cur.order_p = Some(order(prev.err_p, cur.err_p, ratio));
        cur.order_u = Some(order(prev.err_u, cur.err_u, ratio));
        cur.order_u_h1 = prev.err_u_h1.zip(cur.err_u_h1).map(|(a, b)| order(a, b, ratio));
    }
    Ok(rows)
}

pub fn run_norm_equiv(cfg: &ExperimentConfig) -> Result<NormReport> {
    if cfg.backend != BackendChoice::Fv {
        bail!("the norm scan runs on the finite-volume backend");
    }
    let lengths = if cfg.lengths.is_empty() { vec![cfg.length] } else { cfg.lengths.clone() };
    Ok(norm_equivalence_scan(&NormScanConfig {
        lengths,
        width: cfg.width,
        h: cfg.h,
        samples: cfg.samples,
        seed: cfg.seed,
    })?)
}

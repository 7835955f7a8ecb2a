//! Experiment configuration: `key = value` lines or a JSON object, flattened
//! to dotted keys, then overridden from the command line.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use slender::geometry::{BcPreset, BoundaryTag, SideTags};
use slender::precond::{PrecondKind, PreconditionerSpec, LUBRICATION_ALPHA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Channel,
    AlphaSweep,
    Aniso,
    Constriction,
    Convergence,
    NormEquiv,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Channel,
        Experiment::AlphaSweep,
        Experiment::Aniso,
        Experiment::Constriction,
        Experiment::Convergence,
        Experiment::NormEquiv,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| anyhow!("unknown experiment '{s}'"))
    }

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Channel => "channel",
            Experiment::AlphaSweep => "alpha_sweep",
            Experiment::Aniso => "aniso",
            Experiment::Constriction => "constriction",
            Experiment::Convergence => "convergence",
            Experiment::NormEquiv => "norm_equiv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    Fv,
    Th,
}

/// Raw settings, sorted by key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig(BTreeMap<String, String>);

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            let v: serde_json::Value = serde_json::from_str(trimmed).context("config is not valid JSON")?;
            let mut map = BTreeMap::new();
            flatten_json("", &v, &mut map)?;
            return Ok(RawConfig(map));
        }
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", n + 1))?;
            map.insert(k.trim().to_string(), unquote(v.trim()).to_string());
        }
        Ok(RawConfig(map))
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("override '{kv}' is not key=value"))?;
        self.set(k.trim(), unquote(v.trim()));
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.0.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    /// Sorted `key = value` text: the input to the config hash.
    pub fn canonical(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.0
    }
}

fn unquote(s: &str) -> &str {
    s.strip_prefix('"').and_then(|t| t.strip_suffix('"')).unwrap_or(s)
}

fn flatten_json(prefix: &str, v: &serde_json::Value, out: &mut BTreeMap<String, String>) -> Result<()> {
    use serde_json::Value;
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_json(&key, x, out)?;
            }
        }
        Value::String(s) => {
            out.insert(prefix.to_string(), s.clone());
        }
        Value::Null => bail!("null value for '{prefix}'"),
        other => {
            out.insert(prefix.to_string(), other.to_string());
        }
    }
    Ok(())
}

/// Splits `[a, (b, c), d]` at top-level commas.
fn split_list(s: &str) -> Vec<String> {
    let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in inner.chars() {
        match ch {
            '(' | '[' => {
                depth += 1;
                cur.push(ch);
            }
            ')' | ']' => {
                depth -= 1;
                cur.push(ch);
            }
            ',' if depth == 0 => out.push(std::mem::take(&mut cur)),
            _ => cur.push(ch),
        }
    }
    out.push(cur);
    out.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    s.trim().parse().with_context(|| format!("'{key}': '{s}' is not a number"))
}

fn parse_f64_list(key: &str, s: &str) -> Result<Vec<f64>> {
    split_list(s).iter().map(|x| parse_f64(key, x)).collect()
}

fn parse_pair(key: &str, s: &str) -> Result<(f64, f64)> {
    let parts = split_list(s.trim().trim_start_matches('(').trim_end_matches(')'));
    if parts.len() != 2 {
        bail!("'{key}': expected (x, r), got '{s}'");
    }
    Ok((parse_f64(key, &parts[0])?, parse_f64(key, &parts[1])?))
}

fn parse_bool(key: &str, s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => bail!("'{key}': '{other}' is not a boolean"),
    }
}

fn parse_tag(key: &str, s: &str) -> Result<BoundaryTag> {
    Ok(match s.trim() {
        "noslip" => BoundaryTag::DirichletNoSlip,
        "traction" => BoundaryTag::TractionNeumann,
        "freeslip" => BoundaryTag::FreeSlip,
        "dirichlet_data" => BoundaryTag::DirichletData,
        other => bail!("'{key}': unknown boundary condition '{other}'"),
    })
}

/// `n` log-spaced values from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// Resolved settings for one run.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub backend: BackendChoice,
    pub preset: Option<String>,
    #[serde(skip)]
    pub tags: SideTags,
    pub length: f64,
    pub width: f64,
    pub h: f64,
    pub level: i32,
    pub lengths: Vec<f64>,
    pub widths: Vec<f64>,
    pub levels: Vec<i32>,
    pub hs: Vec<f64>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub radii: Vec<f64>,
    pub constrictions: Vec<(f64, f64)>,
    pub constriction_x: Vec<f64>,
    #[serde(skip)]
    pub precond: PreconditionerSpec,
    pub preconds: Vec<String>,
    /// Set when `--beta` is given: `α_W = (β/12)(L/W)²`.
    pub beta: Option<f64>,
    pub rtol: f64,
    pub maxit: usize,
    pub seed: u64,
    pub probes: usize,
    pub lanczos_steps: Option<usize>,
    pub samples: usize,
    pub svg: bool,
    /// Adds per-row wall time to the CSV (breaks bit-identical reruns).
    pub timing: bool,
}

const KNOWN_KEYS: &[&str] = &[
    "experiment", "backend", "preset", "bc.top", "bc.bottom", "bc.left", "bc.right", "length", "width", "h",
    "level", "lengths", "widths", "levels", "hs", "alphas", "betas", "radii", "constrictions", "constriction_x",
    "precond", "preconds", "alpha", "alpha_long", "alpha_short", "beta", "coarse_h", "centroid_distance", "rtol",
    "maxit", "seed", "probes", "lanczos_steps", "samples", "svg", "timing",
];

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let mut c = ExperimentConfig {
            experiment,
            backend: BackendChoice::Fv,
            preset: Some("long_noslip".into()),
            tags: BcPreset::LongNoslip.tags(),
            length: 10.0,
            width: 1.0,
            h: 0.02,
            level: 2,
            lengths: vec![],
            widths: vec![],
            levels: vec![],
            hs: vec![],
            alphas: vec![],
            betas: vec![],
            radii: vec![],
            constrictions: vec![],
            constriction_x: vec![],
            precond: PreconditionerSpec::sum(1.0),
            preconds: vec![],
            beta: None,
            rtol: 1e-12,
            maxit: 2000,
            seed: 20240601,
            probes: 1,
            lanczos_steps: None,
            samples: 50,
            svg: false,
            timing: false,
        };
        match experiment {
            Experiment::Channel => {
                c.backend = BackendChoice::Th;
                c.lengths = vec![5.0, 10.0, 20.0, 50.0];
                c.levels = vec![2];
                c.preconds = vec!["standard".into(), "sum".into(), "coarse".into()];
            }
            Experiment::AlphaSweep => {
                c.width = 0.125;
                c.alphas = log_grid(0.01, 4.0, 24);
            }
            Experiment::Aniso => {
                c.widths = vec![1.0, 0.24, 0.12];
                c.betas = vec![1000.0, 100.0, 10.0, 1.0, 0.1, 0.01];
                c.precond = PreconditionerSpec::aniso(LUBRICATION_ALPHA, 1.0);
            }
            Experiment::Constriction => {
                c.length = 4.0;
                c.h = 0.01;
                c.radii = vec![0.1, 0.2, 0.3, 0.4, 0.45, 0.46, 0.47, 0.48, 0.49];
                c.constriction_x = vec![2.0];
                c.preconds = vec!["sum".into(), "varw".into()];
            }
            Experiment::Convergence => {
                c.length = 2.0;
                c.hs = vec![0.2, 0.1, 0.05, 0.025];
                c.levels = vec![0, 1, 2, 3];
                c.precond = PreconditionerSpec::lubrication(PrecondKind::Sum);
            }
            Experiment::NormEquiv => {
                c.preset = Some("all_dirichlet".into());
                c.tags = BcPreset::AllDirichlet.tags();
                c.lengths = vec![2.0, 4.0, 8.0, 16.0, 32.0];
                c.h = 0.125;
            }
        }
        c
    }

    pub fn from_raw(experiment: Experiment, raw: &RawConfig) -> Result<Self> {
        for k in raw.entries().keys() {
            if !KNOWN_KEYS.contains(&k.as_str()) {
                bail!("unknown config key '{k}'");
            }
        }
        if let Some(e) = raw.get("experiment") {
            if Experiment::parse(e)? != experiment {
                bail!("config is for experiment '{e}', not '{}'", experiment.name());
            }
        }
        let mut c = Self::defaults(experiment);
        let f = |k: &str| raw.get(k).map(|v| parse_f64(k, v)).transpose();
        let list = |k: &str| raw.get(k).map(|v| parse_f64_list(k, v)).transpose();

        if let Some(b) = raw.get("backend") {
            c.backend = match b {
                "fv" => BackendChoice::Fv,
                "th" => BackendChoice::Th,
                other => bail!("unknown backend '{other}'"),
            };
        }
        if let Some(p) = raw.get("preset") {
            c.tags = BcPreset::parse(p)?.tags();
            c.preset = Some(p.to_string());
        }
        for (key, side) in [
            ("bc.top", slender::geometry::Side::Top),
            ("bc.bottom", slender::geometry::Side::Bottom),
            ("bc.left", slender::geometry::Side::Left),
            ("bc.right", slender::geometry::Side::Right),
        ] {
            if let Some(v) = raw.get(key) {
                c.tags.set(side, parse_tag(key, v)?);
                c.preset = None;
            }
        }
        if let Some(v) = f("length")? {
            c.length = v;
        }
        if let Some(v) = f("width")? {
            c.width = v;
        }
        if let Some(v) = f("h")? {
            c.h = v;
        }
        if let Some(v) = raw.get("level") {
            c.level = v.trim().parse().with_context(|| format!("'level': '{v}' is not an integer"))?;
            c.levels = vec![c.level];
        }
        if let Some(v) = list("lengths")? {
            c.lengths = v;
        }
        if let Some(v) = list("widths")? {
            c.widths = v;
        }
        if let Some(v) = raw.get("levels") {
            c.levels = split_list(v)
                .iter()
                .map(|s| s.parse().with_context(|| format!("'levels': '{s}' is not an integer")))
                .collect::<Result<_>>()?;
        }
        if let Some(v) = list("hs")? {
            c.hs = v;
        }
        if let Some(v) = list("alphas")? {
            c.alphas = v;
        }
        if let Some(v) = list("betas")? {
            c.betas = v;
        }
        if let Some(v) = list("radii")? {
            c.radii = v;
        }
        if let Some(v) = list("constriction_x")? {
            c.constriction_x = v;
        }
        if let Some(v) = raw.get("constrictions") {
            c.constrictions = split_list(v).iter().map(|s| parse_pair("constrictions", s)).collect::<Result<_>>()?;
        }
        if let Some(v) = raw.get("preconds") {
            c.preconds = split_list(v);
            for p in &c.preconds {
                PrecondKind::parse(p)?;
            }
        }

        // preconditioner
        if let Some(k) = raw.get("precond") {
            let kind = PrecondKind::parse(k)?;
            c.precond = PreconditionerSpec { kind, ..c.precond };
            if c.preconds.is_empty() || raw.get("preconds").is_none() {
                c.preconds = vec![k.to_string()];
            }
        }
        if let Some(v) = f("alpha")? {
            c.precond.alpha = v;
        }
        if let Some(v) = f("alpha_long")? {
            c.precond.alpha_long = v;
        }
        if let Some(v) = f("alpha_short")? {
            c.precond.alpha_short = v;
        }
        if let Some(v) = f("coarse_h")? {
            c.precond.coarse_h = Some(v);
        }
        if let Some(v) = raw.get("centroid_distance") {
            c.precond.centroid_distance = parse_bool("centroid_distance", v)?;
        }
        if let Some(v) = f("beta")? {
            c.beta = Some(v);
            c.betas = vec![v];
        }

        if let Some(v) = f("rtol")? {
            c.rtol = v;
        }
        if let Some(v) = raw.get("maxit") {
            c.maxit = v.trim().parse().context("'maxit' is not an integer")?;
        }
        if let Some(v) = raw.get("seed") {
            c.seed = v.trim().parse().context("'seed' is not an unsigned integer")?;
        }
        if let Some(v) = raw.get("probes") {
            c.probes = v.trim().parse().context("'probes' is not an integer")?;
        }
        if let Some(v) = raw.get("lanczos_steps") {
            c.lanczos_steps = Some(v.trim().parse().context("'lanczos_steps' is not an integer")?);
        }
        if let Some(v) = raw.get("samples") {
            c.samples = v.trim().parse().context("'samples' is not an integer")?;
        }
        if let Some(v) = raw.get("svg") {
            c.svg = parse_bool("svg", v)?;
        }
        if let Some(v) = raw.get("timing") {
            c.timing = parse_bool("timing", v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.width > 0.0 && self.h > 0.0) {
            bail!("length, width and h must be positive");
        }
        if !(self.rtol > 0.0) || self.maxit == 0 {
            bail!("need rtol > 0 and maxit >= 1");
        }
        let freeslip = [self.tags.top, self.tags.bottom, self.tags.left, self.tags.right].contains(&BoundaryTag::FreeSlip);
        let constricted = !self.constrictions.is_empty() || self.experiment == Experiment::Constriction;
        if self.backend == BackendChoice::Th && constricted {
            bail!("the Taylor-Hood backend needs a rectangular channel (free-slip facets must be axis-aligned)");
        }
        if self.backend == BackendChoice::Th && freeslip && constricted {
            bail!("free-slip on non-axis-aligned facets is unsupported");
        }
        self.precond.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_and_json_agree() {
        let kv = RawConfig::parse("width = 0.5\nlengths = [2, 4]\nbc.top = freeslip # comment\n").unwrap();
        let js = RawConfig::parse(r#"{"width": 0.5, "lengths": [2, 4], "bc": {"top": "freeslip"}}"#).unwrap();
        assert_eq!(kv.get("width"), Some("0.5"));
        assert_eq!(js.get("bc.top"), Some("freeslip"));
        let a = ExperimentConfig::from_raw(Experiment::Channel, &kv).unwrap();
        let b = ExperimentConfig::from_raw(Experiment::Channel, &js).unwrap();
        assert_eq!(a.lengths, b.lengths);
        assert_eq!(a.tags, b.tags);
    }

    #[test]
    fn constriction_pairs() {
        let raw = RawConfig::parse("constrictions = [(1.0, 0.2), (3, 0.4)]").unwrap();
        let c = ExperimentConfig::from_raw(Experiment::Constriction, &raw).unwrap();
        assert_eq!(c.constrictions, vec![(1.0, 0.2), (3.0, 0.4)]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let raw = RawConfig::parse("lenght = 3").unwrap();
        assert!(ExperimentConfig::from_raw(Experiment::Channel, &raw).is_err());
    }

    #[test]
    fn alpha_grid_spans_to_four() {
        let g = log_grid(0.01, 4.0, 24);
        assert_eq!(g.len(), 24);
        assert!((g[23] - 4.0).abs() < 1e-12);
        assert!(g.iter().any(|&a| (1.0 / 12.0..=0.125).contains(&a)));
    }
}

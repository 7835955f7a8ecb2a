//! Static SVG line charts of condition number against the swept parameter.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::config::Experiment;
use crate::experiments::ResultRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn x_of(exp: Experiment, r: &ResultRow) -> Option<f64> {
    match exp {
        Experiment::AlphaSweep => r.alpha,
        Experiment::Aniso => r.beta,
        Experiment::Constriction => r.r,
        _ => Some(r.length),
    }
}

fn series_key(exp: Experiment, r: &ResultRow) -> String {
    match exp {
        Experiment::AlphaSweep | Experiment::Aniso => format!("W={}", r.width),
        _ => match r.level {
            Some(l) => format!("{} level {l}", r.precond),
            None => r.precond.to_string(),
        },
    }
}

fn x_label(exp: Experiment) -> &'static str {
    match exp {
        Experiment::AlphaSweep => "alpha",
        Experiment::Aniso => "beta",
        Experiment::Constriction => "r",
        _ => "L",
    }
}

/// Log-scaled axes except for the constriction depth.
pub fn cond_chart(exp: Experiment, rows: &[ResultRow]) -> String {
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        if let Some(x) = x_of(exp, r) {
            series.entry(series_key(exp, r)).or_default().push((x, r.cond_estimate));
        }
    }
    let log_x = exp != Experiment::Constriction;
    let tx = |x: f64| if log_x { x.log10() } else { x };
    let pts = series.values().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(tx(x));
        x1 = x1.max(tx(x));
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| MARGIN + (tx(x) - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y.log10() - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(s, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" stroke="black" fill="none"/>"#);
    let xl = x_label(exp);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{xl}</text>"#, WIDTH / 2.0, HEIGHT - 15.0);
    let _ = writeln!(s, r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">condition number</text>"#, HEIGHT / 2.0, HEIGHT / 2.0);
    let fmt_tick = |v: f64| format!("{:.3}", v);
    let xt = |v: f64| if log_x { 10f64.powf(v) } else { v };
    let _ = writeln!(s, r#"<text x="{l}" y="{}" text-anchor="middle">{}</text>"#, b + 16.0, fmt_tick(xt(x0)));
    let _ = writeln!(s, r#"<text x="{r}" y="{}" text-anchor="middle">{}</text>"#, b + 16.0, fmt_tick(xt(x1)));
    let _ = writeln!(s, r#"<text x="{}" y="{b}" text-anchor="end">{:.1}</text>"#, l - 4.0, 10f64.powf(y0));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.1}</text>"#, l - 4.0, t + 4.0, 10f64.powf(y1));

    for (k, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut pts = pts.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let d: Vec<String> = pts
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| format!("{}{:.2} {:.2}", if i == 0 { "M" } else { "L" }, px(x), py(y)))
            .collect();
        let _ = writeln!(s, r#"<path d="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#, d.join(" "));
        for &(x, y) in &pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, px(x), py(y));
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{name}</text>"#,
            r - 110.0,
            t + 16.0 * (k as f64 + 1.0)
        );
    }
    s.push_str("</svg>\n");
    s
}

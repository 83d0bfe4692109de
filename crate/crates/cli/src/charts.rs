//! Static SVG line charts, rendered only from the emitted CSV files so they
//! can be regenerated byte-for-byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

const W: f64 = 720.0;
const H: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Categorical x labels at integer positions; numeric ticks otherwise.
    pub x_categories: Option<Vec<String>>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64, span: f64) -> String {
    if span >= 100.0 {
        format!("{v:.0}")
    } else if span >= 1.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.4}")
    }
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = it.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        let pad = if lo.abs() > 0.0 { lo.abs() * 0.05 } else { 0.5 };
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    }
}

pub fn render_svg(chart: &Chart) -> String {
    let pts = || chart.series.iter().flat_map(|s| s.points.iter());
    let (x0, x1) = bounds(pts().map(|p| p.0));
    let (y0, y1) = bounds(pts().map(|p| p.1));
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#, LEFT + pw / 2.0, esc(&chart.title));
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black" stroke-width="1"/>"#
    );

    for i in 0..=4 {
        let v = y0 + (y1 - y0) * i as f64 / 4.0;
        let y = sy(v);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, tick_label(v, y1 - y0));
    }
    match &chart.x_categories {
        Some(cats) => {
            for (i, c) in cats.iter().enumerate() {
                let x = sx(i as f64);
                let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, esc(c));
            }
        }
        None => {
            for i in 0..=5 {
                let v = x0 + (x1 - x0) * i as f64 / 5.0;
                let _ = writeln!(
                    s,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                    sx(v),
                    TOP + ph + 18.0,
                    tick_label(v, x1 - x0)
                );
            }
        }
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 16.0, esc(&chart.x_label));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        esc(&chart.y_label)
    );

    for (k, series) in chart.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = series
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if path.len() == 1 {
            let _ = writeln!(s, r#"<circle cx="{}" r="3" fill="{color}"/>"#, path[0].replacen(',', r#"" cy=""#, 1));
        } else if !path.is_empty() {
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, path.join(" "));
        }
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let lx = W - RIGHT + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, esc(&series.name));
    }
    s.push_str("</svg>\n");
    s
}

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
        let headers = r.headers()?.iter().map(String::from).collect();
        let rows = r.records().map(|rec| rec.map(|r| r.iter().map(String::from).collect())).collect::<Result<_, _>>()?;
        Ok(Self { headers, rows })
    }

    fn col(&self, name: &str) -> Result<usize> {
        self.headers.iter().position(|h| h == name).with_context(|| format!("missing column '{name}'"))
    }

    fn num(&self, row: &[String], col: usize) -> f64 {
        row[col].parse().unwrap_or(f64::NAN)
    }
}

/// Metric charts for `compare`: one line per scheme over time.
pub const COMPARE_CHARTS: [(&str, &str, &str); 4] = [
    ("accuracy", "accuracy_mean", "Global model accuracy"),
    ("ec", "ec_mean", "Energy consumption per round (normalized)"),
    ("welfare", "welfare_mean", "Social welfare"),
    ("mtbf", "mtbf_mean", "MTBF (s)"),
];

/// Metric charts for `sweep`: one line per scheme over grid points.
pub const SWEEP_CHARTS: [(&str, &str, &str); 5] = [
    ("trend_accuracy", "final_accuracy_mean", "Final accuracy"),
    ("trend_ec", "ec_mean", "Mean energy consumption per round"),
    ("trend_welfare", "welfare_mean", "Mean social welfare"),
    ("trend_mtbf", "mtbf_mean", "MTBF (s)"),
    ("trend_selected", "selected_mean", "Selected clients per round"),
];

fn group_by_scheme(t: &Table) -> Result<BTreeMap<String, Vec<&Vec<String>>>> {
    let sc = t.col("scheme")?;
    let mut groups: BTreeMap<String, Vec<&Vec<String>>> = BTreeMap::new();
    for row in &t.rows {
        groups.entry(row[sc].clone()).or_default().push(row);
    }
    Ok(groups)
}

pub fn compare_charts(aggregate_csv: &Path) -> Result<Vec<(String, String)>> {
    let t = Table::read(aggregate_csv)?;
    let tc = t.col("t_s")?;
    let groups = group_by_scheme(&t)?;
    COMPARE_CHARTS
        .iter()
        .map(|(file, col, title)| {
            let c = t.col(col)?;
            let series = groups
                .iter()
                .map(|(name, rows)| Series {
                    name: name.clone(),
                    points: rows.iter().map(|r| (t.num(r, tc) / 3600.0, t.num(r, c))).collect(),
                })
                .collect();
            let chart =
                Chart { title: title.to_string(), x_label: "time (h)".into(), y_label: col.to_string(), series, x_categories: None };
            Ok((format!("{file}.svg"), render_svg(&chart)))
        })
        .collect()
}

pub fn sweep_charts(sweep_csv: &Path) -> Result<Vec<(String, String)>> {
    let t = Table::read(sweep_csv)?;
    let pc = t.col("params")?;
    let mut cats: Vec<String> = Vec::new();
    for r in &t.rows {
        if !cats.contains(&r[pc]) {
            cats.push(r[pc].clone());
        }
    }
    let groups = group_by_scheme(&t)?;
    SWEEP_CHARTS
        .iter()
        .map(|(file, col, title)| {
            let c = t.col(col)?;
            let series = groups
                .iter()
                .map(|(name, rows)| Series {
                    name: name.clone(),
                    points: rows
                        .iter()
                        .map(|r| (cats.iter().position(|x| *x == r[pc]).unwrap_or(0) as f64, t.num(r, c)))
                        .collect(),
                })
                .collect();
            let chart = Chart {
                title: title.to_string(),
                x_label: "grid point".into(),
                y_label: col.to_string(),
                series,
                x_categories: Some(cats.clone()),
            };
            Ok((format!("{file}.svg"), render_svg(&chart)))
        })
        .collect()
}

/// (Re)renders every chart whose source CSV exists in `dir`.
pub fn render_dir(dir: &Path) -> Result<Vec<String>> {
    let mut written = Vec::new();
    let mut emit = |charts: Vec<(String, String)>| -> Result<()> {
        for (name, svg) in charts {
            fs::write(dir.join(&name), svg)?;
            written.push(name);
        }
        Ok(())
    };
    let agg = dir.join("aggregate.csv");
    if agg.exists() {
        emit(compare_charts(&agg)?)?;
    }
    let sw = dir.join("sweep.csv");
    if sw.exists() {
        emit(sweep_charts(&sw)?)?;
    }
    Ok(written)
}

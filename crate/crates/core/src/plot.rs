//! Minimal SVG line charts for the sweep and coverage CSV exports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Sweep export: rate versus distance or `f_max`.
    RateVsX,
    /// Coverage export: C-CDF versus threshold.
    Ccdf,
}

impl FromStr for PlotKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rate" | "rate-vs-x" => Ok(PlotKind::RateVsX),
            "ccdf" | "coverage" => Ok(PlotKind::Ccdf),
            _ => Err(SimError::validation("kind", format!("expected rate-vs-x or ccdf, got `{s}`"))),
        }
    }
}

const SWEEP_COLUMNS: [&str; 4] = ["x", "operator", "mode", "rate_mbps"];
const CCDF_COLUMNS: [&str; 6] = ["threshold_mbps", "coverage", "mode", "n_op", "n_us", "f_max_hz"];

/// Guesses the kind from the header line.
pub fn detect_kind(csv_text: &str) -> Option<PlotKind> {
    let header: Vec<&str> = csv_text.lines().next()?.split(',').map(str::trim).collect();
    if CCDF_COLUMNS.iter().all(|c| header.contains(c)) {
        Some(PlotKind::Ccdf)
    } else if SWEEP_COLUMNS.iter().all(|c| header.contains(c)) {
        Some(PlotKind::RateVsX)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

/// Groups CSV rows into series. `source` is only used in messages.
pub fn chart_from_csv(source: &str, csv_text: &str, kind: PlotKind) -> Result<Chart> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let csv_err = |e| SimError::Csv {
        path: source.into(),
        source: e,
    };
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let required: &[&str] = match kind {
        PlotKind::RateVsX => &SWEEP_COLUMNS,
        PlotKind::Ccdf => &CCDF_COLUMNS,
    };
    let missing: Vec<&str> = required
        .iter()
        .copied()
        .filter(|c| !headers.iter().any(|h| h == *c))
        .collect();
    if !missing.is_empty() {
        return Err(SimError::validation(
            "columns",
            format!("{source} is missing column(s): {}", missing.join(", ")),
        ));
    }
    let col = |name: &str| headers.iter().position(|h| h == name).expect("checked above");
    let (x_col, y_col) = match kind {
        PlotKind::RateVsX => (col("x"), col("rate_mbps")),
        PlotKind::Ccdf => (col("threshold_mbps"), col("coverage")),
    };
    let key_cols: Vec<(&str, usize)> = match kind {
        PlotKind::RateVsX => vec![("mode", col("mode")), ("op", col("operator"))],
        PlotKind::Ccdf => vec![
            ("mode", col("mode")),
            ("n_op", col("n_op")),
            ("n_us", col("n_us")),
            ("f_max", col("f_max_hz")),
        ],
    };

    // Series keep first-appearance order.
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let num = |c: usize| -> Result<f64> {
            let raw = record.get(c).unwrap_or("");
            raw.parse().map_err(|_| {
                SimError::validation(format!("row {}", i + 1), format!("`{raw}` is not a number"))
            })
        };
        let (x, y) = (num(x_col)?, num(y_col)?);
        let label = key_cols
            .iter()
            .map(|&(name, c)| {
                let v = record.get(c).unwrap_or("");
                match name {
                    "mode" => v.to_string(),
                    "f_max" => match v.parse::<f64>() {
                        Ok(f) => format!("{} MHz", crate::linkrate::format_sig6(f / 1e6)),
                        Err(_) => v.to_string(),
                    },
                    _ => format!("{name}={v}"),
                }
            })
            .collect::<Vec<_>>()
            .join(" ");
        if !groups.contains_key(&label) {
            order.push(label.clone());
        }
        groups.entry(label).or_default().push((x, y));
    }
    if order.is_empty() {
        return Err(SimError::validation("rows", format!("{source} has no data rows")));
    }
    let mut series: Vec<Series> = order
        .into_iter()
        .map(|label| {
            let points = groups.remove(&label).expect("grouped");
            Series { label, points }
        })
        .collect();
    let (x_label, y_label) = match kind {
        PlotKind::RateVsX => {
            // Sweep x is either f_max in Hz or a distance in metres.
            let all_hz = series.iter().flat_map(|s| &s.points).all(|p| p.0 >= 1e6);
            if all_hz {
                for p in series.iter_mut().flat_map(|s| s.points.iter_mut()) {
                    p.0 /= 1e6;
                }
            }
            let x = if all_hz { "f_max (MHz)" } else { "distance (m)" };
            (x.to_string(), "rate (Mbit/s)".to_string())
        }
        PlotKind::Ccdf => ("threshold (Mbit/s)".to_string(), "coverage".to_string()),
    };
    Ok(Chart {
        x_label,
        y_label,
        series,
    })
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders `chart` as a standalone SVG document. One `<polyline>` per series.
pub fn render_svg(chart: &Chart) -> String {
    let pts = || chart.series.iter().flat_map(|s| s.points.iter());
    let (x0, x1) = bounds(pts().map(|p| p.0));
    let (y0, y1) = bounds(pts().map(|p| p.1).chain(std::iter::once(0.0)));
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| TOP + plot_h - (y - y0) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT} {TOP}V{:.2}H{:.2}" fill="none" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w
    );
    for i in 0..=4 {
        let t = f64::from(i) / 4.0;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(xv),
            TOP + plot_h + 16.0,
            crate::linkrate::format_sig6(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            sy(yv) + 4.0,
            crate::linkrate::format_sig6(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(&chart.y_label)
    );
    for (i, series) in chart.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = series
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<path d="M{lx:.2} {ly:.2}h20" stroke="{color}" stroke-width="1.5"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(&series.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

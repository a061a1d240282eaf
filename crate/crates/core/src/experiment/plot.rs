//! Minimal SVG line plots of experiment CSV files.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::stats::read_csv;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// `rank,magnitude` from an `ordered_*.csv`, log y.
    Ordered,
    /// `column,magnitude` from an `envelope_*.csv`, log y.
    Envelope,
    /// A metric of `aggregate.csv` against a swept parameter.
    Sweep,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ordered" => Ok(PlotKind::Ordered),
            "envelope" => Ok(PlotKind::Envelope),
            "sweep" => Ok(PlotKind::Sweep),
            other => Err(Error::validation("plot kind", format!("unknown kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    pub x: String,
    pub y: String,
    /// Column splitting rows into separate lines.
    pub series: Option<String>,
    pub log_y: bool,
    pub title: String,
}

impl PlotSpec {
    pub fn for_kind(kind: PlotKind) -> Self {
        match kind {
            PlotKind::Ordered => PlotSpec {
                x: "rank".into(),
                y: "magnitude".into(),
                series: None,
                log_y: true,
                title: "ordered magnitudes".into(),
            },
            PlotKind::Envelope => PlotSpec {
                x: "column".into(),
                y: "magnitude".into(),
                series: None,
                log_y: true,
                title: "row envelope".into(),
            },
            PlotKind::Sweep => PlotSpec {
                x: "q".into(),
                y: "eps_mean".into(),
                series: Some("preset".into()),
                log_y: true,
                title: "sweep".into(),
            },
        }
    }
}

/// Named point sequences extracted from a CSV file.
pub type Series = Vec<(String, Vec<(f64, f64)>)>;

/// Reads the series of `spec` from `input`. Rows with an empty or
/// non-finite coordinate, or a non-positive y on a log axis, are skipped.
pub fn load_series(input: impl AsRef<Path>, spec: &PlotSpec) -> Result<Series> {
    let input = input.as_ref();
    let (header, rows) = read_csv(input)?;
    let what = input.display().to_string();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::validation(&what, format!("missing column `{name}`")))
    };
    let xi = col(&spec.x)?;
    let yi = col(&spec.y)?;
    let si = spec.series.as_deref().map(col).transpose()?;
    let mut out: Series = Vec::new();
    for row in &rows {
        let (Ok(x), Ok(y)) = (row[xi].parse::<f64>(), row[yi].parse::<f64>()) else {
            continue;
        };
        if !x.is_finite() || !y.is_finite() || (spec.log_y && y <= 0.0) {
            continue;
        }
        let name = si.map_or_else(String::new, |i| row[i].clone());
        match out.iter_mut().find(|(n, _)| *n == name) {
            Some((_, pts)) => pts.push((x, y)),
            None => out.push((name, vec![(x, y)])),
        }
    }
    for (_, pts) in &mut out {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    if out.is_empty() {
        return Err(Error::validation(&what, "no plottable rows"));
    }
    Ok(out)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// SVG document for `series`.
pub fn render_svg(series: &Series, spec: &PlotSpec) -> String {
    let ty = |y: f64| if spec.log_y { y.log10() } else { y };
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(ty(y));
        y1 = y1.max(ty(y));
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (ty(y) - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(&spec.title)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{m} {t} L{m} {b} L{r} {b}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let fmt_y = |v: f64| if spec.log_y { format!("1e{v:.1}") } else { format!("{v:.3e}") };
    for (v, label) in [(y0, fmt_y(y0)), (y1, fmt_y(y1))] {
        let y = HEIGHT - MARGIN - (v - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
        let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">{label}</text>"#, MARGIN - 4.0);
    }
    for v in [x0, x1] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            px(v),
            HEIGHT - MARGIN + 16.0,
            v
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        escape(&spec.x)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(&spec.y)
    );
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let d: Vec<String> = pts
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| format!("{}{:.2} {:.2}", if i == 0 { "M" } else { "L" }, px(x), py(y)))
            .collect();
        let _ = writeln!(s, r#"<path d="{}" stroke="{color}" fill="none"/>"#, d.join(" "));
        if !name.is_empty() {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
                WIDTH - MARGIN + 4.0,
                MARGIN + 14.0 * k as f64,
                escape(name)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Plots `input` into the SVG file `output`; nothing is written on error.
pub fn plot_csv(input: impl AsRef<Path>, output: impl AsRef<Path>, spec: &PlotSpec) -> Result<()> {
    let series = load_series(input, spec)?;
    std::fs::write(output, render_svg(&series, spec))?;
    Ok(())
}

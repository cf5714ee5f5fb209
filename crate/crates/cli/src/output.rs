//! Artifact writers: CSV tables, plot data with optional SVG, JSON and run
//! metadata.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

/// Shortest round-trip decimal form; NaN becomes an empty cell.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        ryu::Buffer::new().format(x).to_string()
    }
}

/// Column-oriented table written as CSV.
#[derive(Debug, Clone, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_numbers(&mut self, row: impl IntoIterator<Item = f64>) {
        self.rows.push(row.into_iter().map(format_number).collect());
    }

    pub fn push_cells(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_text(path, &self.render())
    }
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    s.push('\n');
    write_text(path, &s)
}

/// Writes `t` and one column per series to `path`, plus a line plot next to
/// it with the `.svg` extension when `svg` is set. Nothing is written on
/// error.
pub fn emit_plot_data(
    times: &[f64],
    series: &[(&str, &[f64])],
    path: &Path,
    svg: bool,
) -> CliResult<()> {
    if times.is_empty() || series.is_empty() {
        return Err(CliError::validation("plot data is empty"));
    }
    if let Some((name, _)) = series.iter().find(|(_, s)| s.len() != times.len()) {
        return Err(CliError::validation(format!(
            "series {name} has a different length from the time axis ({})",
            times.len()
        )));
    }
    let mut table = Table::new(std::iter::once("t").chain(series.iter().map(|(n, _)| *n)));
    for (k, &t) in times.iter().enumerate() {
        table.push_numbers(std::iter::once(t).chain(series.iter().map(|(_, s)| s[k])));
    }
    table.write(path)?;
    if svg {
        write_text(&path.with_extension("svg"), &render_svg(times, series))?;
    }
    Ok(())
}

const SVG_W: f64 = 800.0;
const SVG_H: f64 = 400.0;
const SVG_PAD: f64 = 40.0;
const SVG_MAX_POINTS: usize = 4000;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Minimal line plot. Long series are thinned to at most
/// `SVG_MAX_POINTS` vertices; NaN samples break the line.
pub fn render_svg(times: &[f64], series: &[(&str, &[f64])]) -> String {
    let finite = |v: &&f64| v.is_finite();
    let (t0, t1) = (times[0], *times.last().expect("non-empty"));
    let ys = series.iter().flat_map(|(_, s)| s.iter()).filter(finite);
    let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| {
        (a.min(y), b.max(y))
    });
    if !(y0 < y1) {
        (y0, y1) = (y0.min(0.0) - 0.5, y1.max(0.0) + 0.5);
    }
    let tspan = if t1 > t0 { t1 - t0 } else { 1.0 };
    let x = |t: f64| SVG_PAD + (t - t0) / tspan * (SVG_W - 2.0 * SVG_PAD);
    let y = |v: f64| SVG_H - SVG_PAD - (v - y0) / (y1 - y0) * (SVG_H - 2.0 * SVG_PAD);
    let every = times.len().div_ceil(SVG_MAX_POINTS).max(1);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<path d="M{p} {b} H{r} M{p} {b} V{p}" stroke="black" fill="none"/>"#,
        p = SVG_PAD,
        b = SVG_H - SVG_PAD,
        r = SVG_W - SVG_PAD
    );
    for v in [y0, y1] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"#,
            SVG_PAD - 4.0,
            y(v) + 4.0,
            format_number(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{}" font-size="11" text-anchor="end">t = {}</text>"#,
        SVG_W - SVG_PAD,
        SVG_H - SVG_PAD + 16.0,
        format_number(t1)
    );
    for (k, (name, s)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for i in (0..times.len()).step_by(every) {
            if s[i].is_finite() {
                let _ = write!(
                    d,
                    "{}{:.2},{:.2} ",
                    if pen_down { "L" } else { "M" },
                    x(times[i]),
                    y(s[i])
                );
                pen_down = true;
            } else {
                pen_down = false;
            }
        }
        let _ = writeln!(
            out,
            r#"<path d="{}" stroke="{color}" fill="none" stroke-width="1"/>"#,
            d.trim_end()
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" fill="{color}">{name}</text>"#,
            SVG_PAD + 8.0,
            SVG_PAD + 14.0 * (k as f64 + 1.0)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

/// Provenance of one run. The hash is over the canonical config text, which
/// is written alongside as `config.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub timestamp: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub software_version: String,
    pub phases: Vec<Phase>,
}

/// Collects phase timings and writes `config.json` and `metadata.json`.
pub struct RunRecorder {
    out: PathBuf,
    phases: Vec<Phase>,
    seeds: Vec<u64>,
}

impl RunRecorder {
    pub fn new(out: &Path) -> CliResult<Self> {
        fs::create_dir_all(out)
            .map_err(|e| CliError::Io(format!("creating {}: {e}", out.display())))?;
        Ok(RunRecorder {
            out: out.to_path_buf(),
            phases: Vec::new(),
            seeds: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn phase<T>(&mut self, name: &str, f: impl FnOnce() -> CliResult<T>) -> CliResult<T> {
        let start = Instant::now();
        let r = f();
        self.phases.push(Phase {
            name: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        log::info!("{name}: {:.3}s", start.elapsed().as_secs_f64());
        r
    }

    pub fn seeds(&mut self, seeds: impl IntoIterator<Item = u64>) {
        self.seeds.extend(seeds);
    }

    pub fn finish(self, config: &ExperimentConfig) -> CliResult<RunMetadata> {
        write_text(&self.out.join("config.json"), &config.to_json())?;
        let meta = RunMetadata {
            timestamp: chrono::Utc::now().to_rfc3339(),
            config_hash: config.hash(),
            seeds: self.seeds,
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            phases: self.phases,
        };
        write_json(&self.out.join("metadata.json"), &meta)?;
        Ok(meta)
    }
}

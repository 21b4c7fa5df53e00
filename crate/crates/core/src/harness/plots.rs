//! SVG line plots of per-entry LTE50 prediction curves against the
//! ground-truth samples of one season.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::data::{normalize_season, SeasonSeries};
use crate::models::{ModelBundle, LTE50_COL};
use crate::tal::{build_task_set, entry_prediction, TalConfig, TaskSetSpec};
use crate::Result;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 56.0;

struct Frame {
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, day: f64) -> f64 {
        MARGIN_L + day / self.x_max * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn y(&self, v: f64) -> f64 {
        let t = (v - self.y_min) / (self.y_max - self.y_min);
        HEIGHT - MARGIN_B - t * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn polyline(frame: &Frame, values: &[f64], color: &str, width: f64, opacity: f64) -> String {
    let points: Vec<String> = values
        .iter()
        .enumerate()
        .map(|(d, v)| format!("{:.1},{:.1}", frame.x(d as f64), frame.y(*v)))
        .collect();
    format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\" stroke-opacity=\"{opacity}\" points=\"{}\"/>\n",
        points.join(" ")
    )
}

/// One standalone SVG: a curve per task-set entry, ground-truth LTE50
/// samples as dots, axes in days and deg C.
fn render_svg(title: &str, curves: &[(String, Vec<f64>)], truth: &[(usize, f64)]) -> String {
    let days = curves.first().map(|(_, c)| c.len()).unwrap_or(0);
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for (_, c) in curves {
        for &v in c {
            y_min = y_min.min(v);
            y_max = y_max.max(v);
        }
    }
    for &(_, v) in truth {
        y_min = y_min.min(v);
        y_max = y_max.max(v);
    }
    if !y_min.is_finite() {
        y_min = -30.0;
        y_max = 0.0;
    }
    let pad = 0.05 * (y_max - y_min).max(1.0);
    let frame = Frame {
        x_max: (days.max(2) - 1) as f64,
        y_min: y_min - pad,
        y_max: y_max + pad,
    };

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    );
    let _ = write!(
        svg,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n<text x=\"{}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{title}</text>\n",
        WIDTH / 2.0
    );

    // Axes.
    let x0 = frame.x(0.0);
    let x1 = frame.x(frame.x_max);
    let y0 = frame.y(frame.y_min);
    let y1 = frame.y(frame.y_max);
    let _ = write!(
        svg,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    );
    let mut day_tick = 0usize;
    while day_tick < days.max(1) {
        let x = frame.x(day_tick as f64);
        let _ = write!(
            svg,
            "<line x1=\"{x}\" y1=\"{y0}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n<text x=\"{x}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{day_tick}</text>\n",
            y0 + 5.0,
            y0 + 20.0
        );
        day_tick += 50;
    }
    let _ = write!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">day of season</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 14.0
    );
    let mut v = (frame.y_min / 5.0).ceil() * 5.0;
    while v <= frame.y_max {
        let y = frame.y(v);
        let _ = write!(
            svg,
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{x0}\" y2=\"{y}\" stroke=\"black\"/>\n<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{v}</text>\n",
            x0 - 5.0,
            x0 - 9.0,
            y + 4.0
        );
        v += 5.0;
    }
    let _ = write!(
        svg,
        "<text x=\"16\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">LTE50 (deg C)</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    for (i, (_, curve)) in curves.iter().enumerate() {
        let hue = (i * 360) / curves.len().max(1);
        let color = format!("hsl({hue},65%,45%)");
        svg.push_str(&polyline(&frame, curve, &color, 1.2, 0.8));
    }
    for &(day, value) in truth {
        let _ = write!(
            svg,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3.4\" fill=\"black\"/>\n",
            frame.x(day as f64),
            frame.y(value)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Emit one SVG per embedding-set type: the per-day LTE50 curve of every
/// entry of that set, with the season's observed LTE50 values as dots.
pub fn emit_plots(
    bundle: &ModelBundle,
    specs: &[TaskSetSpec],
    season: &SeasonSeries,
    tal_seed: u64,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;
    let normalized = normalize_season(&season.strip_lte(), &bundle.feature_stats);
    let truth: Vec<(usize, f64)> = season
        .days
        .iter()
        .enumerate()
        .filter_map(|(d, day)| day.lte.map(|t| (d, t[1])))
        .collect();

    let mut written = Vec::new();
    for &spec in specs {
        let cfg = TalConfig {
            task_set: spec,
            n_random: spec.default_n_random(),
            rng_seed: tal_seed,
            ..Default::default()
        };
        let set = build_task_set(&bundle.model, &cfg)?;
        let curves: Vec<(String, Vec<f64>)> = set
            .entries
            .iter()
            .map(|entry| {
                let pred = entry_prediction(&bundle.model, entry, &normalized)?;
                let curve = (0..pred.rows()).map(|d| pred.row(d)[LTE50_COL]).collect();
                Ok((entry.label.clone(), curve))
            })
            .collect::<Result<_>>()?;
        let title = format!(
            "{} / {}: per-entry LTE50 predictions ({spec})",
            season.task_id, season.season_label
        );
        let svg = render_svg(&title, &curves, &truth);
        let file_name = format!(
            "lte50_{}.svg",
            format!("{spec}").to_lowercase().replace('+', "_")
        );
        let path = out_dir.join(file_name);
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

//! Beeswarm summary plot (SVG) and its companion point table (CSV).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{global_aggregate, ExplainError, ShapExplanation};

const WIDTH: f64 = 780.0;
const LEFT: f64 = 150.0;
const PLOT_W: f64 = 480.0;
const TOP: f64 = 40.0;
const ROW_H: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const DOT_R: f64 = 2.6;
const LOW: (f64, f64, f64) = (30.0, 136.0, 229.0);
const HIGH: (f64, f64, f64) = (255.0, 13.0, 87.0);

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let mix = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(LOW.0, HIGH.0), mix(LOW.1, HIGH.1), mix(LOW.2, HIGH.2))
}

fn nice_step(range: f64) -> f64 {
    let raw = range / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    mag * if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    }
}

/// Vertical offsets that stack points sharing a pixel bin alternately
/// above and below the row centre.
fn swarm_offsets(xs: &[f64], max_offset: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; xs.len()];
    let mut bin_start = f64::NEG_INFINITY;
    let mut in_bin = 0usize;
    for i in order {
        if xs[i] - bin_start > DOT_R {
            bin_start = xs[i];
            in_bin = 0;
        }
        let level = in_bin.div_ceil(2) as f64 * DOT_R;
        let sign = if in_bin % 2 == 1 { -1.0 } else { 1.0 };
        out[i] = (sign * level).clamp(-max_offset, max_offset);
        in_bin += 1;
    }
    out
}

/// SVG text with one `<g class="feature-row">` per feature, most important
/// on top.
pub fn summary_svg(explanations: &[ShapExplanation]) -> Result<String, ExplainError> {
    let global = global_aggregate(explanations)?;
    let m = global.feature_names.len();
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for e in explanations {
        for &p in &e.phi {
            lo = lo.min(p);
            hi = hi.max(p);
        }
    }
    if hi - lo < 1e-12 {
        lo -= 1.0;
        hi += 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let x_of = |v: f64| LEFT + (v - lo) / (hi - lo) * PLOT_W;
    let height = TOP + ROW_H * m as f64 + BOTTOM;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">SHAP summary ({} explanations)</text>"#,
        LEFT + PLOT_W / 2.0,
        explanations.len()
    );

    for (row, &f) in global.ranking.iter().enumerate() {
        let cy = TOP + ROW_H * (row as f64 + 0.5);
        let values: Vec<f64> = explanations.iter().map(|e| e.feature_values[f]).collect();
        let (vmin, vmax) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let xs: Vec<f64> = explanations.iter().map(|e| x_of(e.phi[f])).collect();
        let offsets = swarm_offsets(&xs, ROW_H / 2.0 - DOT_R);
        let _ = writeln!(
            s,
            r#"<g class="feature-row" data-feature="{}" data-rank="{}">"#,
            escape(&global.feature_names[f]),
            row + 1
        );
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{cy}" x2="{}" y2="{cy}" stroke="#dddddd" stroke-dasharray="2,3"/>"##,
            LEFT + PLOT_W
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            cy + 4.0,
            escape(&global.feature_names[f])
        );
        for ((x, off), v) in xs.iter().zip(&offsets).zip(&values) {
            let t = if vmax - vmin > 1e-12 { (v - vmin) / (vmax - vmin) } else { 0.5 };
            let _ = writeln!(
                s,
                r#"<circle cx="{x:.2}" cy="{:.2}" r="{DOT_R}" fill="{}" fill-opacity="0.8"/>"#,
                cy + off,
                color(t)
            );
        }
        let _ = writeln!(s, "</g>");
    }

    let axis_y = TOP + ROW_H * m as f64;
    let zero = x_of(0.0);
    let _ = writeln!(
        s,
        r##"<line class="zero" x1="{zero:.2}" y1="{TOP}" x2="{zero:.2}" y2="{axis_y}" stroke="#888888"/>"##
    );
    let _ = writeln!(s, r#"<g class="axis">"#);
    let _ = writeln!(
        s,
        r##"<line x1="{LEFT}" y1="{axis_y}" x2="{}" y2="{axis_y}" stroke="#333333"/>"##,
        LEFT + PLOT_W
    );
    let step = nice_step(hi - lo);
    let mut tick = (lo / step).ceil() * step;
    while tick <= hi {
        let x = x_of(tick);
        let label = if tick.abs() < step * 1e-9 { 0.0 } else { tick };
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{axis_y}" x2="{x:.2}" y2="{}" stroke="#333333"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"##,
            axis_y + 5.0,
            axis_y + 18.0,
            label
        );
        tick += step;
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">SHAP value (impact on model output)</text>"#,
        LEFT + PLOT_W / 2.0,
        axis_y + 40.0
    );
    let _ = writeln!(s, "</g>");

    // Colour legend.
    let lx = LEFT + PLOT_W + 40.0;
    let (ly, lh) = (TOP, ROW_H * m as f64);
    let _ = writeln!(
        s,
        r##"<defs><linearGradient id="feature-value" x1="0" y1="1" x2="0" y2="0"><stop offset="0" stop-color="{}"/><stop offset="1" stop-color="{}"/></linearGradient></defs>
<g class="legend"><rect x="{lx}" y="{ly}" width="12" height="{lh}" fill="url(#feature-value)"/><text x="{}" y="{}">High</text><text x="{}" y="{}">Low</text><text x="{}" y="{}" transform="rotate(-90 {} {})" text-anchor="middle">Feature value</text></g>"##,
        color(0.0),
        color(1.0),
        lx + 16.0,
        ly + 10.0,
        lx + 16.0,
        ly + lh,
        lx + 50.0,
        ly + lh / 2.0,
        lx + 50.0,
        ly + lh / 2.0
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// Writes the SVG to `svg_path` and the point table next to it with a
/// `.csv` extension. Returns both paths.
pub fn emit_summary_plot(
    explanations: &[ShapExplanation],
    svg_path: &Path,
) -> Result<(PathBuf, PathBuf), ExplainError> {
    let svg = summary_svg(explanations)?;
    let io = |p: &Path, e: std::io::Error| ExplainError::Io(format!("{}: {e}", p.display()));
    std::fs::write(svg_path, svg).map_err(|e| io(svg_path, e))?;

    let csv_path = svg_path.with_extension("csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| ExplainError::Io(format!("{}: {e}", csv_path.display())))?;
    let csv_err = |e: csv::Error| ExplainError::Io(e.to_string());
    w.write_record(["feature", "instance_index", "shap_value", "feature_value"])
        .map_err(csv_err)?;
    for (k, e) in explanations.iter().enumerate() {
        for (j, name) in e.feature_names.iter().enumerate() {
            w.write_record([
                name.clone(),
                k.to_string(),
                e.phi[j].to_string(),
                e.feature_values[j].to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| io(&csv_path, e))?;
    Ok((svg_path.to_path_buf(), csv_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_endpoints() {
        assert_eq!(color(0.0), "#1e88e5");
        assert_eq!(color(1.0), "#ff0d57");
    }

    #[test]
    fn offsets_spread_coincident_points() {
        let o = swarm_offsets(&[10.0, 10.0, 10.0, 50.0], 20.0);
        assert_eq!(o[3], 0.0);
        let mut first3 = o[..3].to_vec();
        first3.sort_by(f64::total_cmp);
        assert_eq!(first3, vec![-DOT_R, 0.0, DOT_R]);
    }

    #[test]
    fn escapes_markup() {
        assert_eq!(escape("a<b&\"c\""), "a&lt;b&amp;&quot;c&quot;");
    }

    #[test]
    fn ticks_are_round_numbers() {
        assert_eq!(nice_step(10.0), 2.0);
        assert_eq!(nice_step(0.3), 0.05);
    }
}

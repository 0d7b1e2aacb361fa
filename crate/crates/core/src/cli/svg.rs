//! Minimal SVG figure: z (µm) against z·Δf (Hz·µm), curves as polylines and
//! measurements as error crosses.

use std::fmt::Write as _;

use crate::sphere_plate::FrequencyShiftCurve;
use crate::stats::MeasurementDataset;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];
const UM_PER_M: f64 = 1e6;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Round step (1, 2 or 5 × 10ⁿ) giving roughly `target` intervals.
fn tick_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let unit = raw / mag;
    let nice = if unit < 1.5 {
        1.0
    } else if unit < 3.5 {
        2.0
    } else if unit < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Self { lo: 0.0, hi: 1.0 };
        }
        let pad = if hi > lo {
            0.05 * (hi - lo)
        } else {
            0.5 * lo.abs().max(1.0)
        };
        Self {
            lo: lo - pad,
            hi: hi + pad,
        }
    }

    fn ticks(&self) -> Vec<f64> {
        let step = tick_step(self.hi - self.lo, 5.0);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step).floor() as i64;
        (first..=last).map(|k| k as f64 * step).collect()
    }
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

pub fn render_figure(
    curves: &[FrequencyShiftCurve],
    overlay: Option<&MeasurementDataset>,
) -> String {
    let curve_xy = |c: &FrequencyShiftCurve| -> Vec<(f64, f64)> {
        c.points
            .iter()
            .map(|p| (p.z * UM_PER_M, p.z_delta_f * UM_PER_M))
            .collect()
    };
    // (x, y, x arm, y arm) in plot units
    let crosses: Vec<(f64, f64, f64, f64)> = overlay
        .map(|d| {
            d.points()
                .iter()
                .map(|p| {
                    let x = p.z * UM_PER_M;
                    (
                        x,
                        x * p.delta_f,
                        p.sigma_z.unwrap_or(0.0) * UM_PER_M,
                        x * p.sigma_f,
                    )
                })
                .collect()
        })
        .unwrap_or_default();
    let all_xy: Vec<Vec<(f64, f64)>> = curves.iter().map(curve_xy).collect();

    let xs = all_xy
        .iter()
        .flatten()
        .map(|p| p.0)
        .chain(crosses.iter().flat_map(|c| [c.0 - c.2, c.0 + c.2]));
    let ys = all_xy
        .iter()
        .flatten()
        .map(|p| p.1)
        .chain(crosses.iter().flat_map(|c| [c.1 - c.3, c.1 + c.3]));
    let (ax, ay) = (Axis::new(xs), Axis::new(ys));
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x - ax.lo) / (ax.hi - ax.lo) * plot_w;
    let py = |y: f64| MARGIN_TOP + (ay.hi - y) / (ay.hi - ay.lo) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for t in ax.ticks() {
        let x = px(t);
        let y0 = MARGIN_TOP + plot_h;
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y0 + 18.0,
            tick_label(t)
        );
    }
    for t in ay.ticks() {
        let y = py(t);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_LEFT}" y2="{y:.2}" stroke="black"/>"#,
            MARGIN_LEFT - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 8.0,
            y + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">z (µm)</text>"#,
        MARGIN_LEFT + 0.5 * plot_w,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{0:.2}" text-anchor="middle" transform="rotate(-90 20 {0:.2})">z·Δf (Hz·µm)</text>"#,
        MARGIN_TOP + 0.5 * plot_h
    );

    for (i, (curve, xy)) in curves.iter().zip(&all_xy).enumerate() {
        let color = COLORS[i % COLORS.len()];
        let dash = if curve.model_tag.is_some_and(|m| !m.is_tabulated()) {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let pts: Vec<String> = xy
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            pts.join(" ")
        );
        let label = curve
            .model_tag
            .map_or("theory".to_string(), |m| m.as_str().to_string());
        let ly = MARGIN_TOP + 16.0 + 16.0 * i as f64;
        let lx = MARGIN_LEFT + plot_w - 150.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#,
            lx + 26.0,
            escape(&label)
        );
    }

    if let Some(d) = overlay {
        let _ = writeln!(
            s,
            r#"<g stroke="black" stroke-width="1"><title>{}</title>"#,
            escape(d.label())
        );
        for &(x, y, dx, dy) in &crosses {
            // A visible minimum arm keeps points without σ_z readable.
            let hx = (px(x + dx) - px(x)).max(2.0);
            let hy = (py(y - dy) - py(y)).max(2.0);
            let (cx, cy) = (px(x), py(y));
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{cy:.2}" x2="{:.2}" y2="{cy:.2}"/><line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}"/>"#,
                cx - hx,
                cx + hx,
                cy - hy,
                cy + hy
            );
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_steps_are_round() {
        assert_eq!(tick_step(0.112, 5.0), 0.02);
        assert_eq!(tick_step(10.0, 5.0), 2.0);
        assert_eq!(tick_step(300.0, 5.0), 50.0);
    }

    #[test]
    fn labels_are_trimmed() {
        assert_eq!(tick_label(0.12), "0.12");
        assert_eq!(tick_label(-0.0), "0");
        assert_eq!(tick_label(-5.0), "-5");
    }
}

//! Minimal SVG charts: box plots per method and line charts for ablations.

use std::fmt::Write;

use gazeattn_core::metrics::median;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 50.0;

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn y_axis(out: &mut String, lo: f64, hi: f64, y: &dyn Fn(f64) -> f64) {
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN}" y1="{:.2}" x2="{MARGIN}" y2="{:.2}" stroke="black"/>"#,
        y(lo),
        y(hi)
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#,
            MARGIN - 4.0,
            y(v) + 4.0
        );
    }
}

/// One box (quartiles, min/max whiskers, median marker) per group.
pub fn box_plot(title: &str, groups: &[(String, Vec<f64>)], range: (f64, f64)) -> String {
    let (lo, hi) = range;
    let y = |v: f64| HEIGHT - MARGIN - (v - lo) / (hi - lo) * (HEIGHT - 2.0 * MARGIN);
    let mut out = String::new();
    header(&mut out, title);
    y_axis(&mut out, lo, hi, &y);
    let slot = (WIDTH - 2.0 * MARGIN) / groups.len().max(1) as f64;
    for (k, (name, values)) in groups.iter().enumerate() {
        let cx = MARGIN + slot * (k as f64 + 0.5);
        let _ = writeln!(
            out,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN + 16.0,
            escape(name)
        );
        if values.is_empty() {
            continue;
        }
        let mut v = values.clone();
        v.sort_by(f64::total_cmp);
        let (q1, q3) = (quantile(&v, 0.25), quantile(&v, 0.75));
        let med = median(&v).unwrap_or(v[0]);
        let half = (slot * 0.3).min(30.0);
        let _ = writeln!(
            out,
            r#"<line class="whisker" x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
            y(v[0]),
            y(v[v.len() - 1])
        );
        let _ = writeln!(
            out,
            r##"<rect class="box" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1" stroke="black"/>"##,
            cx - half,
            y(q3),
            2.0 * half,
            (y(q1) - y(q3)).max(0.5)
        );
        let _ = writeln!(
            out,
            r#"<line class="median" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="red" stroke-width="2"/>"#,
            cx - half,
            y(med),
            cx + half,
            y(med)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// A polyline through `points` (x, y) with x labels.
pub fn line_chart(title: &str, x_label: &str, points: &[(f64, f64)]) -> String {
    let ys = points.iter().map(|p| p.1);
    let (mut lo, mut hi) = ys.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 0.5;
        hi += 0.5;
    }
    let x_lo = points.first().map_or(0.0, |p| p.0);
    let x_hi = points.last().map_or(1.0, |p| p.0);
    let x_span = if x_hi > x_lo { x_hi - x_lo } else { 1.0 };
    let x = |v: f64| MARGIN + (v - x_lo) / x_span * (WIDTH - 2.0 * MARGIN);
    let y = |v: f64| HEIGHT - MARGIN - (v - lo) / (hi - lo) * (HEIGHT - 2.0 * MARGIN);
    let mut out = String::new();
    header(&mut out, title);
    y_axis(&mut out, lo, hi, &y);
    let coords: Vec<String> = points.iter().map(|p| format!("{:.2},{:.2}", x(p.0), y(p.1))).collect();
    let _ = writeln!(
        out,
        r##"<polyline points="{}" fill="none" stroke="#3182bd" stroke-width="2"/>"##,
        coords.join(" ")
    );
    for p in points {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x(p.0),
            HEIGHT - MARGIN + 16.0,
            p.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_group_has_one_box_and_median() {
        let svg = box_plot("top3", &[("mean".into(), vec![1.0, 2.0, 2.5, 3.0, 0.5])], (0.0, 3.0));
        assert_eq!(svg.matches(r#"class="box""#).count(), 1);
        assert_eq!(svg.matches(r#"class="median""#).count(), 1);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn quartiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert_eq!(quantile(&[0.0, 1.0], 0.25), 0.25);
    }

    #[test]
    fn polyline_has_one_point_per_setting() {
        let svg = line_chart("layer pairs", "z", &[(0.0, 0.1), (1.0, 0.3), (2.0, 0.2), (3.0, 0.25)]);
        let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        let points = line.split('"').nth(1).unwrap();
        assert_eq!(points.split(' ').count(), 4);
    }
}

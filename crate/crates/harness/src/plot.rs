//! Log-log SVG line chart of mean envelope-gradient norm against oracle calls.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::run::SummaryRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// One polyline per experiment id. Rows with zero calls or a nonpositive mean are skipped.
pub fn summary_svg(rows: &[SummaryRow]) -> String {
    let mut series: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.oracle_calls > 0 && r.mean_grad_norm > 0.0) {
        series.entry(&r.experiment_id).or_default().push(((r.oracle_calls as f64).log10(), r.mean_grad_norm.log10()));
    }
    let pts = series.values().flatten();
    let (x0, x1) = bounds(pts.clone().map(|p| p.0));
    let (y0, y1) = bounds(pts.map(|p| p.1));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {t} V{b} H{r}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for e in (x0.floor() as i32)..=(x1.ceil() as i32) {
        let x = e as f64;
        if x >= x0 && x <= x1 {
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">1e{e}</text>"#, sx(x), HEIGHT - MARGIN + 18.0);
        }
    }
    for e in (y0.floor() as i32)..=(y1.ceil() as i32) {
        let y = e as f64;
        if y >= y0 && y <= y1 {
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{e}</text>"#, MARGIN - 6.0, sy(y) + 4.0);
        }
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">oracle calls</text>"#, WIDTH / 2.0, HEIGHT - 15.0);
    let _ = writeln!(s, r#"<text x="15" y="{:.1}" transform="rotate(-90 15 {:.1})" text-anchor="middle">mean envelope gradient norm</text>"#, HEIGHT / 2.0, HEIGHT / 2.0);
    for (k, (id, pts)) in series.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#, path.join(" "));
        for &(x, y) in pts {
            let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{colour}"/>"#, sx(x), sy(y));
        }
        let ly = MARGIN + 16.0 * k as f64;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{ly:.1}" fill="{colour}" text-anchor="end">{}</text>"#, WIDTH - MARGIN, escape(id));
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, calls: u64, mean: f64) -> SummaryRow {
        SummaryRow {
            experiment_id: id.into(),
            budget: calls,
            oracle_calls: calls,
            replicates: 1,
            mean_grad_norm: mean,
            std_error: 0.0,
            mean_function_gap: None,
        }
    }

    #[test]
    fn one_polyline_per_experiment() {
        let rows = [row("a", 100, 1.0), row("a", 1000, 0.3), row("b<1>", 100, 0.5), row("b<1>", 1000, 0.2), row("b<1>", 0, 1.0)];
        let svg = summary_svg(&rows);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 4);
        assert!(svg.contains("b&lt;1&gt;"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn empty_input_is_still_valid() {
        let svg = summary_svg(&[]);
        assert!(svg.starts_with("<svg") && !svg.contains("NaN"));
    }
}

use std::fmt::Write as _;

use super::CurveRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;

/// Line chart of solved and cumulative unique solved problems per episode.
pub fn render_curve_svg(rows: &[CurveRow]) -> String {
    let max_x = rows.iter().map(|r| r.episode).max().unwrap_or(1).max(1) as f64;
    let max_y = rows.iter().map(|r| r.cumulative_unique.max(r.solved)).max().unwrap_or(1).max(1) as f64;
    let x = |e: usize| MARGIN + (e as f64 / max_x) * (WIDTH - 2.0 * MARGIN);
    let y = |v: usize| HEIGHT - MARGIN - (v as f64 / max_y) * (HEIGHT - 2.0 * MARGIN);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{m}" x2="{m}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">episode</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12">{}</text><text x="{}" y="{}" font-size="12">0</text>"#,
        MARGIN - 30.0,
        MARGIN + 4.0,
        max_y,
        MARGIN - 14.0,
        HEIGHT - MARGIN + 4.0
    );
    let series: [(&str, &str, fn(&CurveRow) -> usize); 2] = [
        ("solved", "#1f77b4", |r| r.solved),
        ("cumulative unique", "#d62728", |r| r.cumulative_unique),
    ];
    for (i, (name, color, value)) in series.iter().enumerate() {
        let points: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.1},{:.1}", x(r.episode), y(value(r))))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{ly}" font-size="12" fill="{color}">{name}</text>"#,
            WIDTH - MARGIN - 120.0
        );
    }
    out.push_str("</svg>\n");
    out
}

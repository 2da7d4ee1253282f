//! Static equirectangular charts: longitude across, colatitude down.

use std::f64::consts::PI;
use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 40.0;

fn to_px(colatitude: f64, longitude: f64) -> (f64, f64) {
    let lon = longitude.rem_euclid(2.0 * PI);
    (MARGIN + lon / (2.0 * PI) * WIDTH, MARGIN + colatitude / PI * HEIGHT)
}

/// `points` are `(colatitude, longitude)`; the polyline is broken where the
/// longitude wraps.
pub fn chart(title: &str, points: &[(f64, f64)]) -> String {
    let mut s = String::new();
    let (w, h) = (WIDTH + 2.0 * MARGIN, HEIGHT + 2.0 * MARGIN);
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{MARGIN}" y="24" font-family="sans-serif" font-size="14">{title}</text>"#).unwrap();
    writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH}" height="{HEIGHT}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for i in 1..4 {
        let x = MARGIN + WIDTH * i as f64 / 4.0;
        let y = MARGIN + HEIGHT * i as f64 / 4.0;
        writeln!(s, r##"<line x1="{x}" y1="{MARGIN}" x2="{x}" y2="{}" stroke="#ccc"/>"##, MARGIN + HEIGHT).unwrap();
        writeln!(s, r##"<line x1="{MARGIN}" y1="{y}" x2="{}" y2="{y}" stroke="#ccc"/>"##, MARGIN + WIDTH).unwrap();
    }
    writeln!(s, r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="11">longitude 0 .. 2pi</text>"#, h - 12.0).unwrap();
    writeln!(s, r#"<text x="4" y="{}" font-family="sans-serif" font-size="11">0</text>"#, MARGIN + 4.0).unwrap();
    writeln!(s, r#"<text x="4" y="{}" font-family="sans-serif" font-size="11">pi</text>"#, MARGIN + HEIGHT).unwrap();

    let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
    let mut prev: Option<f64> = None;
    for &(c, l) in points {
        let p = to_px(c, l);
        if let Some(px) = prev {
            if (p.0 - px).abs() > WIDTH / 2.0 {
                segments.push(Vec::new());
            }
        }
        prev = Some(p.0);
        segments.last_mut().unwrap().push(p);
    }
    for seg in segments.iter().filter(|s| s.len() > 1) {
        let pts: Vec<String> = seg.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        writeln!(s, r#"<polyline fill="none" stroke="steelblue" stroke-width="1" points="{}"/>"#, pts.join(" ")).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

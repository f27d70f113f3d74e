//! Minimal SVG rendering of contribution and shape-function tables.
//!
//! Plots are conveniences; the JSON and CSV tables hold the numbers.

use std::fmt::Write as _;

use crate::interpret::{ContributionReport, ShapeFunctionTable};

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Output plotted when a table has several: the last one, which for binary
/// classification is the positive class.
fn plotted_output(labels: &[String]) -> usize {
    labels.len().saturating_sub(1)
}

/// Horizontal bar chart of the `top` largest standardized contributions.
pub fn contributions_svg(report: &ContributionReport, top: usize) -> String {
    let out = plotted_output(&report.output_labels);
    let rows: Vec<(&str, f64)> = report
        .ranked()
        .take(top)
        .map(|c| (c.concepts.as_str(), c.standardized[out]))
        .collect();
    let (label_w, bar_w, row_h, top_pad) = (220.0, 360.0, 18.0, 40.0);
    let width = label_w + bar_w + 80.0;
    let height = top_pad + row_h * rows.len().max(1) as f64 + 20.0;
    let max = rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
    let zero_x = label_w + bar_w / 2.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let title = match report.output_labels.len() {
        1 => "Standardized contributions".to_string(),
        _ => format!("Standardized contributions (class {})", escape(&report.output_labels[out])),
    };
    let _ = writeln!(s, r#"<text x="10" y="20" font-size="14">{title}</text>"#);
    if rows.is_empty() {
        let _ = writeln!(s, r#"<text x="10" y="{:.1}">no nonzero terms</text>"#, top_pad + 12.0);
    }
    let _ = writeln!(
        s,
        r##"<line x1="{zero_x:.1}" y1="{:.1}" x2="{zero_x:.1}" y2="{:.1}" stroke="#444"/>"##,
        top_pad - 5.0,
        height - 15.0
    );
    for (i, (label, v)) in rows.iter().enumerate() {
        let y = top_pad + row_h * i as f64;
        let len = if max > 0.0 { v.abs() / max * bar_w / 2.0 } else { 0.0 };
        let x = if *v < 0.0 { zero_x - len } else { zero_x };
        let color = if *v < 0.0 { "#c0504d" } else { "#4f81bd" };
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            label_w - 6.0,
            y + 12.0,
            escape(label)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{x:.1}" y="{:.1}" width="{len:.1}" height="{:.1}" fill="{color}"/>"#,
            y + 2.0,
            row_h - 4.0
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{v:.3}</text>"#, label_w + bar_w + 6.0, y + 12.0);
    }
    s.push_str("</svg>\n");
    s
}

/// One panel per concept: shape function line over its density histogram.
pub fn shapes_svg(table: &ShapeFunctionTable) -> String {
    let out = plotted_output(&table.output_labels);
    let (pw, ph, pad) = (300.0, 200.0, 40.0);
    let cols = table.concepts.len().clamp(1, 3);
    let nrows = table.concepts.len().div_ceil(cols).max(1);
    let width = cols as f64 * (pw + pad) + pad;
    let height = nrows as f64 * (ph + 2.0 * pad) + pad;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
    );
    for (i, c) in table.concepts.iter().enumerate() {
        let ox = pad + (i % cols) as f64 * (pw + pad);
        let oy = pad + (i / cols) as f64 * (ph + 2.0 * pad);
        let _ = writeln!(s, r#"<text x="{ox:.1}" y="{:.1}" font-size="13">{}</text>"#, oy - 10.0, escape(&c.concept));
        let _ = writeln!(
            s,
            r##"<rect x="{ox:.1}" y="{oy:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#888"/>"##
        );
        let (x0, x1) = (c.density.edges[0], *c.density.edges.last().unwrap());
        let span = if x1 > x0 { x1 - x0 } else { 1.0 };
        let sx = |v: f64| ox + (v - x0) / span * pw;
        // density bars along the bottom quarter
        let peak = c.density.mass.iter().copied().fold(0.0, f64::max);
        for (b, m) in c.density.mass.iter().enumerate() {
            let (a, z) = if c.density.mass.len() == 1 {
                (ox, ox + pw)
            } else {
                (sx(c.density.edges[b]), sx(c.density.edges[b + 1]))
            };
            let h = if peak > 0.0 { m / peak * ph * 0.25 } else { 0.0 };
            let _ = writeln!(
                s,
                r##"<rect x="{a:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="#cccccc"/>"##,
                oy + ph - h,
                (z - a).max(0.0)
            );
        }
        let ys: Vec<f64> = c.values.iter().map(|v| v[out]).collect();
        let ymin = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let ymax = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let yspan = if ymax > ymin { ymax - ymin } else { 1.0 };
        let sy = |v: f64| oy + ph * 0.05 + (ymax - v) / yspan * ph * 0.65;
        let points: Vec<String> = c
            .grid
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| {
                let px = if c.grid.len() == 1 { ox + pw / 2.0 } else { sx(x) };
                format!("{px:.2},{:.2}", sy(y))
            })
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#1f4e79" stroke-width="1.5"/>"##,
            points.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{ox:.1}" y="{:.1}">{x0:.2}</text><text x="{:.1}" y="{:.1}" text-anchor="end">{x1:.2}</text>"#,
            oy + ph + 14.0,
            ox + pw,
            oy + ph + 14.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{ymax:.3}</text><text x="{:.1}" y="{:.1}" text-anchor="end">{ymin:.3}</text>"#,
            ox - 3.0,
            sy(ymax) + 4.0,
            ox - 3.0,
            sy(ymin) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{pad:.1}" y="{:.1}">y: {}</text>"#,
        height - 10.0,
        escape(&table.y_scale)
    );
    s.push_str("</svg>\n");
    s
}

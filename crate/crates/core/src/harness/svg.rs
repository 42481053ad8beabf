use std::fmt::Write;

use super::{ExperimentReport, Series};

const WIDTH: f64 = 640.0;
const PANEL: f64 = 260.0;
const MARGIN: f64 = 50.0;

fn label(row_params: &super::Fields) -> String {
    row_params
        .iter()
        .filter(|(_, v)| v.is_number() || v.is_string())
        .map(|(k, v)| format!("{k}={}", v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string())))
        .collect::<Vec<_>>()
        .join(" ")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn panel(out: &mut String, top: f64, title: &str, s: &Series) {
    let pts: Vec<(f64, f64)> = s
        .points
        .iter()
        .filter(|p| p.0 > 0.0 && p.1 > 0.0)
        .map(|p| (p.0.ln(), p.1.ln()))
        .collect();
    let fit_y = |lx: f64| s.fit.intercept + s.sign * s.fit.exponent * lx;
    let (wl, wh) = (s.fit.window[0].ln(), s.fit.window[1].ln());
    let xs = pts.iter().map(|p| p.0).chain([wl, wh]);
    let ys = pts.iter().map(|p| p.1).chain([fit_y(wl), fit_y(wh)]);
    let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (y0, y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let (x1, y1) = (x1.max(x0 + 1e-9), y1.max(y0 + 1e-9));
    let inner_w = WIDTH - 2.0 * MARGIN;
    let inner_h = PANEL - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * inner_w;
    let py = |y: f64| top + PANEL - MARGIN - (y - y0) / (y1 - y0) * inner_h;

    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#eef3fb"/>"##,
        px(wl),
        top + MARGIN,
        (px(wh) - px(wl)).max(1.0),
        inner_h
    );
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN}" y="{:.2}" width="{inner_w}" height="{inner_h}" fill="none" stroke="#444"/>"##,
        top + MARGIN
    );
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="{:.2}" font-size="12">{}</text>"#, top + 20.0, escape(title));
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">ln {}</text>"#,
        WIDTH / 2.0,
        top + PANEL - 15.0,
        escape(&s.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="12" y="{:.2}" font-size="11" transform="rotate(-90 12 {:.2})" text-anchor="middle">ln {}</text>"#,
        top + PANEL / 2.0,
        top + PANEL / 2.0,
        escape(&s.y_label)
    );
    for (x, y) in &pts {
        let _ = writeln!(out, r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#1f5fbf"/>"##, px(*x), py(*y));
    }
    let _ = writeln!(
        out,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#c03030" stroke-width="1.5"/>"##,
        px(wl),
        py(fit_y(wl)),
        px(wh),
        py(fit_y(wh))
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">exponent = {:.3}</text>"#,
        WIDTH - MARGIN,
        top + 20.0,
        s.fit.exponent
    );
}

/// Stacked log-log panels, one per row that carries a fitted series: the
/// samples, the fitted line over the shaded fit window and the exponent.
pub fn report_svg(r: &ExperimentReport) -> String {
    let rows: Vec<_> = r.rows.iter().filter_map(|row| row.series.as_ref().map(|s| (row, s))).collect();
    let height = PANEL * rows.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    if rows.is_empty() {
        let _ = writeln!(out, r#"<text x="{MARGIN}" y="40" font-size="12">no fitted series in this report</text>"#);
    }
    for (i, (row, s)) in rows.iter().enumerate() {
        let title = format!("row {}: {}", row.index, label(&row.params));
        panel(&mut out, i as f64 * PANEL, &title, s);
    }
    out.push_str("</svg>\n");
    out
}

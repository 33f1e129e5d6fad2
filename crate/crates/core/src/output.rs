//! CSV and SVG writers.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::oracle::OracleSolution;
use crate::profile::VelocityProfile;

/// Shortest `%.12g`-style rendering: 12 significant digits, trailing zeros
/// dropped, exponent form outside `[1e−4, 1e12)`.
pub fn fmt_g12(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{:.11e}", v);
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mant.to_string()), sign, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn join(row: &[f64]) -> String {
    row.iter().map(|v| fmt_g12(*v)).collect::<Vec<_>>().join(",")
}

/// `x,U_over_Gv[,Uc0,Uc1,...]`
pub fn profile_csv(p: &VelocityProfile) -> String {
    let mut out = String::from("x,U_over_Gv");
    if let Some(c) = &p.uc_components {
        for n in 0..c.len() {
            let _ = write!(out, ",Uc{n}");
        }
    }
    out.push('\n');
    for (i, (x, u)) in p.x.iter().zip(&p.u_over_gv).enumerate() {
        let mut row = vec![*x, *u];
        if let Some(c) = &p.uc_components {
            row.extend(c.iter().map(|comp| comp[i]));
        }
        out.push_str(&join(&row));
        out.push('\n');
    }
    out
}

/// `x,U,h(mu_0),h(mu_1),...` with the ordinates listed in the header.
pub fn oracle_csv(sol: &OracleSolution) -> String {
    let mut out = String::from("x,U");
    for m in &sol.mu_nodes {
        let _ = write!(out, ",h({})", fmt_g12(*m));
    }
    out.push('\n');
    for (i, x) in sol.x_nodes.iter().enumerate() {
        let mut row = vec![*x, sol.u_x[i]];
        row.extend(&sol.h_field[i]);
        out.push_str(&join(&row));
        out.push('\n');
    }
    out
}

/// Rows of numbers with a header line.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&join(r));
        out.push('\n');
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

pub struct Series<'a> {
    pub label: String,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

const PALETTE: [&str; 4] = ["#1f4e9c", "#b8321a", "#2a7d3a", "#7a4a9c"];

/// Line plot with axes and tick labels.
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (640.0, 440.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 50.0);
    let pts = series.iter().flat_map(|s| s.x.iter().zip(s.y.iter()));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in pts {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let y0 = y0.min(0.0);
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let sy = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<g stroke="black" stroke-width="1"><line x1="{ml}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{ml}" y1="{t}" x2="{ml}" y2="{b}"/></g>"#,
        b = h - mb,
        r = w - mr,
        t = mt
    );
    for i in 0..=5 {
        let xv = x0 + (x1 - x0) * i as f64 / 5.0;
        let yv = y0 + (y1 - y0) * i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            sx(xv),
            h - mb + 16.0,
            tick(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
            ml - 6.0,
            sy(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">{}</text>"#, w / 2.0, h - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = ser.x.iter().zip(ser.y).map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.6" points="{}"/>"#, path.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#,
            ml + 12.0,
            mt + 16.0 + 16.0 * i as f64,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0;
    trim_zeros(format!("{r:.3}"))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

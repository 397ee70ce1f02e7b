//! Deterministic file writers: CSV tables and static SVG plots.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Shortest round-trip representation, so values re-read from a file are
/// bit-identical to the ones written.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Write a CSV table with a header row (RFC 4180 quoting).
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        if r.len() != header.len() {
            return Err(Error::SizeMismatch(format!("row of {} fields under a header of {}", r.len(), header.len())));
        }
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Read back a CSV written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|x| x.iter().map(str::to_string).collect()).map_err(csv_err))
        .collect::<Result<Vec<_>>>()?;
    Ok((header, rows))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line plot of one or more series; `log_y` plots `log10 |y|` and drops
/// zero values.
pub fn line_plot(title: &str, x_label: &str, series: &[(String, Vec<(f64, f64)>)], log_y: bool) -> String {
    let tf = |y: f64| if log_y { y.abs().log10() } else { y };
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|(_, s)| s.iter().filter(|(x, y)| x.is_finite() && tf(*y).is_finite()).map(|&(x, y)| (x, tf(y))).collect())
        .collect();
    let all = pts.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ =
        writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{m} {b} H{r} M{m} {b} V{m}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 20.0,
        escape(x_label)
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10">{:.3e}</text>"#, MARGIN, HEIGHT - MARGIN + 14.0, x0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{:.3e}</text>"#,
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 14.0,
        x1
    );
    let ylab = |v: f64| if log_y { format!("1e{v:.2}") } else { format!("{v:.3e}") };
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{}</text>"#,
        MARGIN - 4.0,
        HEIGHT - MARGIN,
        ylab(y0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{}</text>"#,
        MARGIN - 4.0,
        MARGIN + 4.0,
        ylab(y1)
    );
    for (i, ((name, _), p)) in series.iter().zip(&pts).enumerate() {
        let color = COLORS[i % COLORS.len()];
        if !p.is_empty() {
            let d: Vec<String> = p
                .iter()
                .enumerate()
                .map(|(j, &(x, y))| format!("{}{:.2} {:.2}", if j == 0 { "M" } else { "L" }, sx(x), sy(y)))
                .collect();
            let _ = writeln!(s, r#"<path d="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#, d.join(" "));
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 150.0,
            MARGIN + 14.0 * (i as f64 + 1.0),
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Heat map of values on an `nx` by `ny` grid (row-major, `x` fastest).
pub fn heat_map(title: &str, nx: usize, ny: usize, values: &[f64]) -> String {
    let vmax = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let cw = (WIDTH - 2.0 * MARGIN) / nx as f64;
    let ch = (HEIGHT - 2.0 * MARGIN) / ny as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ =
        writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(title));
    for j in 0..ny {
        for i in 0..nx {
            let v = values[j * nx + i] / vmax;
            // diverging blue-white-red scale
            let (r, g, b) = if v >= 0.0 {
                (255.0, 255.0 * (1.0 - v), 255.0 * (1.0 - v))
            } else {
                (255.0 * (1.0 + v), 255.0 * (1.0 + v), 255.0)
            };
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({},{},{})"/>"#,
                MARGIN + i as f64 * cw,
                HEIGHT - MARGIN - (j + 1) as f64 * ch,
                cw + 0.05,
                ch + 0.05,
                r.round() as u8,
                g.round() as u8,
                b.round() as u8
            );
        }
    }
    let _ =
        writeln!(s, r#"<text x="{}" y="{}" font-size="11">max |value| = {:.3e}</text>"#, MARGIN, HEIGHT - 20.0, vmax);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_values_exactly_and_quotes_fields() {
        let dir = std::env::temp_dir().join(format!("nlac_csv_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        let vals = [std::f64::consts::PI, -1.0e-17, 0.1 + 0.2];
        let header = vec!["name".to_string(), "value".to_string()];
        let rows: Vec<Vec<String>> = vals.iter().map(|v| vec!["a,\"b\"".to_string(), num(*v)]).collect();
        write_csv(&path, &header, &rows).unwrap();
        let raw = std::fs::read_to_string(&path).unwrap();
        assert!(raw.contains("\"a,\"\"b\"\"\""));
        let (h, back) = read_csv(&path).unwrap();
        assert_eq!(h, header);
        for (r, v) in back.iter().zip(vals) {
            assert_eq!(r[0], "a,\"b\"");
            assert_eq!(r[1].parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn plots_are_well_formed_and_deterministic() {
        let series = vec![("a".to_string(), vec![(0.0, 1.0), (1.0, 1e-3), (2.0, 0.0)])];
        let a = line_plot("t<1>", "x", &series, true);
        assert_eq!(a, line_plot("t<1>", "x", &series, true));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n") && a.contains("t&lt;1&gt;"));
        let h = heat_map("h", 2, 2, &[1.0, -1.0, 0.0, 0.5]);
        assert_eq!(h.matches("<rect").count(), 5);
    }
}

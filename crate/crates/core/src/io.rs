//! Serialization of fields to CSV and to a JSON header plus raw columns, and
//! minimal SVG line and heat-map plots. Output is deterministic: floats use
//! the shortest round-trip representation and nothing time-dependent is
//! written.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{RadialGrid, SpacetimeField, TimeGrid};
use num_complex::Complex64;

pub fn write_field_csv<W: Write>(u: &SpacetimeField, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "r", "re", "im"])?;
    for i in 0..u.n_t() {
        let t = u.time.t(i).to_string();
        for j in 0..u.n_r() {
            let z = u.at(i, j);
            out.write_record([t.as_str(), &u.radial.r(j).to_string(), &z.re.to_string(), &z.im.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryHeader {
    pub format: String,
    pub time: TimeGrid,
    pub radial: RadialGrid,
    /// Column order in the data file; each column holds `n_t·n_r` values in
    /// row-major `(t, r)` order.
    pub columns: Vec<String>,
    pub dtype: String,
    pub data: String,
}

/// Writes `<stem>.json` and `<stem>.bin` (little-endian `f64`, real parts
/// then imaginary parts).
pub fn write_field_binary(u: &SpacetimeField, dir: &Path, stem: &str) -> Result<()> {
    let data = format!("{stem}.bin");
    let header = BinaryHeader {
        format: "cosmon-field-v1".into(),
        time: u.time,
        radial: u.radial,
        columns: vec!["re".into(), "im".into()],
        dtype: "f64-le".into(),
        data: data.clone(),
    };
    fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&header)?)?;
    let mut bytes = Vec::with_capacity(16 * u.values.len());
    for z in &u.values {
        bytes.extend_from_slice(&z.re.to_le_bytes());
    }
    for z in &u.values {
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    fs::write(dir.join(data), bytes)?;
    Ok(())
}

pub fn read_field_binary(dir: &Path, stem: &str) -> Result<SpacetimeField> {
    let header: BinaryHeader = serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
    let bytes = fs::read(dir.join(&header.data))?;
    let n = header.time.n * header.radial.n;
    if bytes.len() != 16 * n {
        return Err(Error::GridMismatch(format!("{} bytes for {} samples", bytes.len(), n)));
    }
    let get = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
    let values = (0..n).map(|k| Complex64::new(get(k), get(n + k))).collect();
    Ok(SpacetimeField { time: header.time, radial: header.radial, values })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

fn range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.2}")
}

/// Line plot of one or more `(x, y)` series.
pub fn svg_lines(title: &str, xlabel: &str, ylabel: &str, series: &[(&str, Vec<(f64, f64)>)]) -> String {
    let (x0, x1) = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
    let (y0, y1) = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    let mut s = String::new();
    let _ = write!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = write!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = write!(s, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, W / 2.0);
    let _ = write!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = write!(s, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, W / 2.0, H - 10.0);
    let _ = write!(s, r#"<text x="12" y="{}" transform="rotate(-90 12 {})" text-anchor="middle">{ylabel}</text>"#, H / 2.0, H / 2.0);
    let _ = write!(s, r#"<text x="{PAD}" y="{}">{}</text>"#, H - PAD + 15.0, fmt(x0));
    let _ = write!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, W - PAD, H - PAD + 15.0, fmt(x1));
    let _ = write!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, PAD - 4.0, H - PAD, fmt(y0));
    let _ = write!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, PAD - 4.0, PAD + 10.0, fmt(y1));
    for (k, (name, pts)) in series.iter().enumerate() {
        let c = colors[k % colors.len()];
        let path: Vec<String> = pts.iter().filter(|p| p.1.is_finite()).map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
        let _ = write!(s, r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let _ = write!(s, r#"<text x="{}" y="{}" fill="{c}">{name}</text>"#, W - PAD - 120.0, PAD + 15.0 * (k as f64 + 1.0));
    }
    s.push_str("</svg>\n");
    s
}

/// Heat map of `values[row][col]` with rows along y (bottom to top).
pub fn svg_heat(title: &str, xlabel: &str, ylabel: &str, x: (f64, f64), y: (f64, f64), values: &[Vec<f64>]) -> String {
    let rows = values.len().max(1);
    let cols = values.first().map_or(1, |r| r.len().max(1));
    let vmax = values.iter().flatten().copied().fold(0.0, f64::max);
    let cw = (W - 2.0 * PAD) / cols as f64;
    let ch = (H - 2.0 * PAD) / rows as f64;
    let mut s = String::new();
    let _ = write!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = write!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = write!(s, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, W / 2.0);
    for (i, row) in values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if *v <= 0.0 || vmax <= 0.0 {
                continue;
            }
            // log scale over six decades
            let level = ((v / vmax).log10() / 6.0 + 1.0).clamp(0.0, 1.0);
            let g = (255.0 * (1.0 - level)).round() as u8;
            let _ = write!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb(255,{g},{g})"/>"#,
                PAD + j as f64 * cw,
                H - PAD - (i + 1) as f64 * ch,
                cw,
                ch
            );
        }
    }
    let _ = write!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = write!(s, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel} [{}, {}]</text>"#, W / 2.0, H - 10.0, fmt(x.0), fmt(x.1));
    let _ = write!(
        s,
        r#"<text x="12" y="{}" transform="rotate(-90 12 {})" text-anchor="middle">{ylabel} [{}, {}]</text>"#,
        H / 2.0,
        H / 2.0,
        fmt(y.0),
        fmt(y.1)
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SpacetimeField {
        let time = TimeGrid::new(2.0, 4).unwrap();
        let radial = RadialGrid::staggered(1.0, 6).unwrap();
        SpacetimeField::from_fn(time, radial, |t, r| Complex64::new(t + r, t * r - 0.1))
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_field_csv(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,r,re,im"));
        assert_eq!(text.lines().count(), 1 + 24);
    }

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let u = sample();
        write_field_binary(&u, dir.path(), "u").unwrap();
        assert_eq!(read_field_binary(dir.path(), "u").unwrap(), u);
    }

    #[test]
    fn svg_is_well_formed() {
        let s = svg_lines("t", "x", "y", &[("a", vec![(0.0, 1.0), (1.0, 2.0)])]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        let h = svg_heat("h", "r", "t", (0.0, 1.0), (0.0, 1.0), &[vec![1.0, 0.5], vec![0.0, 0.1]]);
        assert_eq!(h.matches("<rect").count(), 2 + 3);
    }
}

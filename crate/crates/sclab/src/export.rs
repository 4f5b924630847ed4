//! File formats. Every float goes through [`fmt`]: 17 significant digits,
//! which parse back to the same bits.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use scherk_core::mesher::MeshPatch;
use serde::{Serialize, Serializer};

use crate::config::Format;
use crate::error::{io_err, RunError};

pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// A float serialized into JSON with 17 significant digits. Non-finite
/// values become the strings `"inf"`, `"-inf"`, `"nan"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            serde_json::Number::from_str(&fmt(self.0)).map_err(serde::ser::Error::custom)?.serialize(s)
        } else {
            s.serialize_str(&format!("{}", self.0))
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| RunError::Config(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

/// CSV with a header row; every field is already a string.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), RunError> {
    let to_io = |e: csv::Error| RunError::Io { path: path.to_path_buf(), err: e.into() };
    let mut w = csv::Writer::from_path(path).map_err(to_io)?;
    w.write_record(header).map_err(to_io)?;
    for r in rows {
        w.write_record(r).map_err(to_io)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_mesh(path: &Path, mesh: &MeshPatch, format: Format) -> Result<(), RunError> {
    let text = match format {
        Format::Obj => obj_string(mesh),
        Format::Ply => ply_string(mesh),
    };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
    f.write_all(text.as_bytes()).map_err(io_err(path))?;
    f.flush().map_err(io_err(path))
}

pub fn obj_string(mesh: &MeshPatch) -> String {
    let mut s = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", fmt(v[0]), fmt(v[1]), fmt(v[2]));
    }
    for f in &mesh.faces {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn ply_string(mesh: &MeshPatch) -> String {
    let mut s = String::new();
    s.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(s, "element vertex {}", mesh.vertices.len());
    s.push_str("property double x\nproperty double y\nproperty double z\n");
    let _ = writeln!(s, "element face {}", mesh.faces.len());
    s.push_str("property list uchar int vertex_indices\nend_header\n");
    for v in &mesh.vertices {
        let _ = writeln!(s, "{} {} {}", fmt(v[0]), fmt(v[1]), fmt(v[2]));
    }
    for f in &mesh.faces {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

/// Vertices and faces (0-based) of a mesh file.
pub type RawMesh = (Vec<[f64; 3]>, Vec<[usize; 3]>);

fn bad(m: impl Into<String>) -> std::io::Error {
    std::io::Error::new(std::io::ErrorKind::InvalidData, m.into())
}

fn triple<T: FromStr>(it: &mut dyn Iterator<Item = &str>) -> std::io::Result<[T; 3]> {
    let mut out = Vec::with_capacity(3);
    for _ in 0..3 {
        let t = it.next().ok_or_else(|| bad("short line"))?;
        out.push(t.parse::<T>().map_err(|_| bad(format!("bad number {t}")))?);
    }
    out.try_into().map_err(|_| bad("short line"))
}

pub fn parse_obj(r: impl BufRead) -> std::io::Result<RawMesh> {
    let (mut v, mut f) = (Vec::new(), Vec::new());
    for line in r.lines() {
        let line = line?;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => v.push(triple::<f64>(&mut it)?),
            Some("f") => {
                let [a, b, c] = triple::<usize>(&mut it)?;
                if a == 0 || b == 0 || c == 0 {
                    return Err(bad("OBJ indices are 1-based"));
                }
                f.push([a - 1, b - 1, c - 1]);
            }
            _ => {}
        }
    }
    Ok((v, f))
}

pub fn parse_ply(r: impl BufRead) -> std::io::Result<RawMesh> {
    let mut lines = r.lines();
    let (mut nv, mut nf) = (0usize, 0usize);
    loop {
        let line = lines.next().ok_or_else(|| bad("missing end_header"))??;
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["element", "vertex", n] => nv = n.parse().map_err(|_| bad("vertex count"))?,
            ["element", "face", n] => nf = n.parse().map_err(|_| bad("face count"))?,
            ["end_header"] => break,
            _ => {}
        }
    }
    let mut v = Vec::with_capacity(nv);
    let mut f = Vec::with_capacity(nf);
    for _ in 0..nv {
        let line = lines.next().ok_or_else(|| bad("missing vertex"))??;
        v.push(triple::<f64>(&mut line.split_whitespace())?);
    }
    for _ in 0..nf {
        let line = lines.next().ok_or_else(|| bad("missing face"))??;
        let mut it = line.split_whitespace();
        if it.next() != Some("3") {
            return Err(bad("only triangles are supported"));
        }
        f.push(triple::<usize>(&mut it)?);
    }
    Ok((v, f))
}

/// One polyline per series over a shared `x` axis, scaled into a fixed
/// viewport. Points with a non-finite coordinate break the line.
pub fn svg_polylines(title: &str, series: &[(&str, Vec<(f64, f64)>)]) -> String {
    let (w, h, pad) = (640.0, 400.0, 40.0);
    let pts = series.iter().flat_map(|s| s.1.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x0 = x0.min(p.0);
        x1 = x1.max(p.0);
        y0 = y0.min(p.1);
        y1 = y1.max(p.1);
    }
    if !(x1 > x0) {
        (x0, x1) = (0.0, 1.0);
    }
    if !(y1 > y0) {
        (y0, y1) = (y0.min(0.0) - 1.0, y0.max(0.0) + 1.0);
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let colors = ["#1f4e9c", "#b3361b", "#2d7a2d", "#6a3d9a"];
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<text x="{pad}" y="24" font-family="monospace" font-size="14">{title}</text>"#);
    let _ = writeln!(
        s,
        r##"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="#999"/>"##,
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    for (k, (name, data)) in series.iter().enumerate() {
        let color = colors[k % colors.len()];
        let mut run: Vec<String> = Vec::new();
        let flush = |run: &mut Vec<String>, s: &mut String| {
            if run.len() > 1 {
                let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, run.join(" "));
            }
            run.clear();
        };
        for &(x, y) in data {
            if x.is_finite() && y.is_finite() {
                run.push(format!("{:.3},{:.3}", sx(x), sy(y)));
            } else {
                flush(&mut run, &mut s);
            }
        }
        flush(&mut run, &mut s);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="monospace" font-size="12" fill="{color}">{name}</text>"#,
            w - pad - 140.0,
            pad + 16.0 * (k as f64 + 1.0)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{pad}" y="{}" font-family="monospace" font-size="11">x: [{x0:.4}, {x1:.4}]  y: [{y0:.4}, {y1:.4}]</text>"#,
        h - 12.0
    );
    s.push_str("</svg>\n");
    s
}

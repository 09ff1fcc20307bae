//! Text point files: one point per line, `x y z [r g b] [label]`,
//! whitespace separated, `#` starts a comment. A `# category: NAME` line
//! sets the cloud's category.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::matrix::Matrix;

pub fn parse_points(text: &str, origin: &Path) -> Result<PointCloud> {
    let bad = |line: usize, reason: String| Error::format(origin, format!("line {line}: {reason}"));
    let mut category = None;
    let mut columns = None;
    let mut xyz = Vec::new();
    let mut rgb = Vec::new();
    let mut labels = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let (body, comment) = match raw.split_once('#') {
            Some((b, c)) => (b, Some(c)),
            None => (raw, None),
        };
        if let Some(name) = comment.and_then(|c| c.trim().strip_prefix("category:")) {
            category = Some(name.trim().to_string());
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        match columns {
            None => {
                if ![3, 4, 6, 7].contains(&fields.len()) {
                    return Err(bad(ln, format!("expected 3, 4, 6 or 7 columns, got {}", fields.len())));
                }
                columns = Some(fields.len());
            }
            Some(c) if c != fields.len() => {
                return Err(bad(ln, format!("{} columns, earlier lines have {c}", fields.len())));
            }
            _ => {}
        }
        let num = |s: &str| -> Result<f64> { s.parse::<f64>().map_err(|_| bad(ln, format!("`{s}` is not a number"))) };
        for f in &fields[..3] {
            xyz.push(num(f)?);
        }
        if fields.len() >= 6 {
            for f in &fields[3..6] {
                let c = num(f)?;
                if !(0.0..=1.0).contains(&c) {
                    return Err(bad(ln, format!("color {c} outside [0, 1]")));
                }
                rgb.push(c);
            }
        }
        if fields.len() == 4 || fields.len() == 7 {
            let s = fields[fields.len() - 1];
            match s.parse::<u32>() {
                Ok(l) if l >= 1 => labels.push(l),
                _ => return Err(bad(ln, format!("label `{s}` is not a positive integer"))),
            }
        }
    }
    let n = xyz.len() / 3;
    if n == 0 {
        return Err(Error::format(origin, "no points"));
    }
    let wrap = |e: Error| Error::format(origin, e.to_string());
    let mut pc = PointCloud::new(Matrix::from_vec(n, 3, xyz)?).map_err(wrap)?;
    if !rgb.is_empty() {
        pc = pc.with_colors(Matrix::from_vec(n, 3, rgb)?).map_err(wrap)?;
    }
    if !labels.is_empty() {
        pc = pc.with_labels(labels).map_err(wrap)?;
    }
    if let Some(c) = category {
        pc = pc.with_category(c);
    }
    Ok(pc)
}

pub fn read_points(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_points(&text, path)
}

pub fn format_points(pc: &PointCloud) -> String {
    let mut out = String::new();
    if let Some(c) = pc.category() {
        let _ = writeln!(out, "# category: {c}");
    }
    for i in 0..pc.len() {
        let p = pc.position(i);
        let _ = write!(out, "{} {} {}", p[0], p[1], p[2]);
        if let Some(c) = pc.colors() {
            let c = c.row(i);
            let _ = write!(out, " {} {} {}", c[0], c[1], c[2]);
        }
        if let Some(l) = pc.gt_labels() {
            let _ = write!(out, " {}", l[i]);
        }
        out.push('\n');
    }
    out
}

pub fn write_points(path: impl AsRef<Path>, pc: &PointCloud) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_points(pc)).map_err(|e| Error::io(path, e))
}

/// One positive integer label per line.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<u32>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| match l.parse::<u32>() {
            Ok(v) if v >= 1 => Ok(v),
            _ => Err(Error::format(path, format!("line {}: bad label `{l}`", i + 1))),
        })
        .collect()
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[u32]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        let _ = writeln!(out, "{l}");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

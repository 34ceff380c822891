//! Plain-text cloud format.
//!
//! ```text
//! n delta0 alpha C N
//! x_1 ... x_n        (N lines)
//! ```
//!
//! Reals are written with 17 significant digits so a write/read cycle is exact.

use std::io::{BufRead, Write};

use super::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::Point;

fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_cloud<W: Write>(cloud: &PointCloud, mut out: W) -> Result<()> {
    writeln!(
        out,
        "{} {} {} {} {}",
        cloud.dim(),
        fmt_real(cloud.delta0()),
        fmt_real(cloud.claimed_alpha()),
        fmt_real(cloud.claimed_c()),
        cloud.len()
    )?;
    let mut line = String::new();
    for p in cloud.points() {
        line.clear();
        for (j, x) in p.coords().iter().enumerate() {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&fmt_real(*x));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn read_cloud<R: BufRead>(input: R) -> Result<PointCloud> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let header = header?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(parse_err(1, "header must be `n delta0 alpha C N`"));
    }
    let n: usize = fields[0].parse().map_err(|_| parse_err(1, "bad n"))?;
    let real = |s: &str, what: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| parse_err(1, format!("bad {what}")))
    };
    let delta0 = real(fields[1], "delta0")?;
    let alpha = real(fields[2], "alpha")?;
    let c = real(fields[3], "C")?;
    let count: usize = fields[4].parse().map_err(|_| parse_err(1, "bad N"))?;

    let mut points = Vec::with_capacity(count);
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let coords = line
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| parse_err(idx + 1, e.to_string()))?;
        if coords.len() != n {
            return Err(parse_err(
                idx + 1,
                format!("expected {n} coordinates, found {}", coords.len()),
            ));
        }
        points.push(Point::from_coords(coords)?);
    }
    if points.len() != count {
        return Err(parse_err(
            count + 1,
            format!("header declares {count} points, found {}", points.len()),
        ));
    }
    PointCloud::new(points, delta0, alpha, c)
}

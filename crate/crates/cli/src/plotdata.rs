//! Flattens report files into `series,source,x,y` rows for plotting.
//!
//! - `exceptional_scaling`: `x = ln delta`, `y = ln(exceptional_fraction + 1/T)`
//!   with `T` the number of parameter samples, so empty exceptional sets stay finite.
//! - `projected_dimension`: `x` = distance of `t` to the reference parameter
//!   (or `|t|` without one), `y` = box dimension of the projected cloud.
//! - `box_counts`: `x = log2(1/delta)`, `y = log2 N(delta)`.

use std::path::Path;

use rproj_core::pointcloud::DimensionEstimate;

use crate::error::CliResult;
use crate::reports::ReportFile;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub series: &'static str,
    pub source: String,
    pub x: f64,
    pub y: f64,
}

fn box_rows(source: &str, est: &DimensionEstimate, out: &mut Vec<Row>) {
    for &(delta, count) in &est.counts {
        out.push(Row {
            series: "box_counts",
            source: source.to_string(),
            x: -delta.log2(),
            y: (count as f64).log2(),
        });
    }
}

pub fn rows_for(source: &str, report: &ReportFile) -> Vec<Row> {
    let mut out = Vec::new();
    match report {
        ReportFile::SweepReport(s) => {
            let samples = s.t_samples.len().max(1) as f64;
            out.push(Row {
                series: "exceptional_scaling",
                source: source.to_string(),
                x: s.delta.ln(),
                y: (s.exceptional_fraction + 1.0 / samples).ln(),
            });
        }
        ReportFile::DimsReport(d) => {
            for p in &d.projections {
                out.push(Row {
                    series: "projected_dimension",
                    source: source.to_string(),
                    x: p.distance_to_reference.unwrap_or_else(|| p.t.norm()),
                    y: p.slope,
                });
            }
            box_rows(source, &d.cloud, &mut out);
        }
        ReportFile::DimensionEstimate(e) => box_rows(source, e, &mut out),
        ReportFile::MomentSummary(_) => {}
    }
    out
}

pub fn plotdata<P: AsRef<Path>>(files: &[P]) -> CliResult<Vec<Row>> {
    let mut rows = Vec::new();
    for f in files {
        let report = ReportFile::read(f.as_ref())?;
        rows.extend(rows_for(&f.as_ref().display().to_string(), &report));
    }
    Ok(rows)
}

/// CSV text; empty when there are no rows.
pub fn to_csv(rows: &[Row]) -> String {
    if rows.is_empty() {
        return String::new();
    }
    let mut s = String::from("series,source,x,y\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{}\n", r.series, r.source, r.x, r.y));
    }
    s
}

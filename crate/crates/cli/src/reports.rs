//! JSON report files. Every file carries a `schema` tag naming its layout.

use std::path::Path;

use serde::{Deserialize, Serialize};

use rproj_core::analysis::{MomentCurveReport, SweepReport};
use rproj_core::geometry::{ParamVector, ProjectionFamily};
use rproj_core::numeric::{distance, median};
use rproj_core::pointcloud::{box_dimension_points, box_dimension_values, DimensionEstimate};
use rproj_core::{PointCloud, Result};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedDimension {
    pub t: ParamVector,
    /// Distance from `t` to the reference parameter, when one was given.
    pub distance_to_reference: Option<f64>,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimsReport {
    pub fit_range: (f64, f64),
    /// Box counts of the cloud itself.
    pub cloud: DimensionEstimate,
    pub reference_t: Option<ParamVector>,
    pub projections: Vec<ProjectedDimension>,
    pub median_slope: f64,
}

pub fn dims_report(
    cloud: &PointCloud,
    fam: &ProjectionFamily,
    t_samples: &[ParamVector],
    reference: Option<&ParamVector>,
    fit_range: (f64, f64),
) -> Result<DimsReport> {
    let slices = cloud.coord_slices();
    let estimate = box_dimension_points(&slices, fit_range)?;
    let projections = t_samples
        .iter()
        .map(|t| {
            let proj = fam.at(t)?;
            let values: Vec<f64> = cloud
                .points()
                .iter()
                .map(|p| proj.project_coords(p.coords()))
                .collect();
            Ok(ProjectedDimension {
                t: t.clone(),
                distance_to_reference: reference.map(|r| distance(r.as_slice(), t.as_slice())),
                slope: box_dimension_values(&values, fit_range)?.slope,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let slopes: Vec<f64> = projections.iter().map(|p| p.slope).collect();
    Ok(DimsReport {
        fit_range,
        cloud: estimate,
        reference_t: reference.cloned(),
        median_slope: median(&slopes),
        projections,
    })
}

/// Per-`s` summary of a moment-curve report, without per-point counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub t: ParamVector,
    pub delta: f64,
    pub epsilon: f64,
    pub bound: f64,
    pub good_fraction: f64,
    pub s: Vec<f64>,
    pub max_count: Vec<usize>,
    pub good: Vec<bool>,
}

impl MomentSummary {
    pub fn new(t: ParamVector, rep: &MomentCurveReport) -> Self {
        Self {
            t,
            delta: rep.delta,
            epsilon: rep.epsilon,
            bound: rep.bound,
            good_fraction: rep.good_fraction,
            s: rep.per_s.iter().map(|r| r.t.0[0]).collect(),
            max_count: rep.per_s.iter().map(|r| r.max_count()).collect(),
            good: rep.good_s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "schema", rename_all = "snake_case")]
pub enum ReportFile {
    SweepReport(SweepReport),
    DimsReport(DimsReport),
    DimensionEstimate(DimensionEstimate),
    MomentSummary(MomentSummary),
}

impl ReportFile {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Schema {
            path: path.display().to_string(),
            msg: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }
}

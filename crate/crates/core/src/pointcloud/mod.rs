//! Finite point sets with a scale floor, range counting, the regularity
//! check `#(B(X, delta) ∩ F) <= C delta^alpha #F`, generators with known
//! regularity and box-counting dimension estimates.

mod boxdim;
mod generate;
mod grid;
mod io;

pub use boxdim::{
    box_dimension_points, box_dimension_values, default_fit_range, DimensionEstimate,
};
pub use generate::{generate, CantorAxis, GeneratorKind, GeneratorSpec};
pub use grid::GridIndex;
pub use io::{read_cloud, write_cloud};

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::numeric::{distance, dyadic_ladder, is_dyadic_unit};

/// Below this size `count_in_ball` scans every point instead of building a grid.
pub const BRUTE_FORCE_BELOW: usize = 512;

/// Above this size `verify_regularity` queries a random subsample.
pub const FULL_VERIFICATION_LIMIT: usize = 100_000;

/// Number of query points used when subsampling.
pub const SUBSAMPLE_SIZE: usize = 20_000;

const UNIT_BALL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point>,
    delta0: f64,
    claimed_alpha: f64,
    claimed_c: f64,
}

impl PointCloud {
    pub fn new(
        points: Vec<Point>,
        delta0: f64,
        claimed_alpha: f64,
        claimed_c: f64,
    ) -> Result<Self> {
        let mut problems = Vec::new();
        if points.is_empty() {
            problems.push("cloud is empty".to_string());
        }
        if !is_dyadic_unit(delta0) {
            problems.push(format!(
                "delta0 = {delta0} is not of the form 2^-k in (0,1]"
            ));
        }
        if !(claimed_alpha > 0.0 && claimed_alpha <= 1.0) {
            problems.push(format!("alpha = {claimed_alpha} not in (0,1]"));
        }
        if !(claimed_c >= 1.0) {
            problems.push(format!("C = {claimed_c} must be >= 1"));
        }
        if let Some(first) = points.first() {
            let n = first.dim();
            if let Some((i, p)) = points.iter().enumerate().find(|(_, p)| p.dim() != n) {
                problems.push(format!(
                    "point {i} has dimension {} (expected {n})",
                    p.dim()
                ));
            }
            if let Some((i, p)) = points.iter().enumerate().find(|(_, p)| {
                !p.coords().iter().all(|x| x.is_finite()) || p.norm() > 1.0 + UNIT_BALL_SLACK
            }) {
                problems.push(format!(
                    "point {i} lies outside the unit ball (norm {})",
                    p.norm()
                ));
            }
        }
        if problems.is_empty() {
            let diam = diameter_upper_bound(&points);
            if diam > 1.0 + UNIT_BALL_SLACK {
                problems.push(format!("diameter {diam} exceeds 1"));
            }
        }
        if !problems.is_empty() {
            return Err(Error::InvalidCloud(problems.join("; ")));
        }
        Ok(PointCloud {
            points,
            delta0,
            claimed_alpha,
            claimed_c,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn claimed_alpha(&self) -> f64 {
        self.claimed_alpha
    }

    pub fn claimed_c(&self) -> f64 {
        self.claimed_c
    }

    /// `k0` with `delta0 = 2^{-k0}`.
    pub fn k0(&self) -> u32 {
        crate::numeric::dyadic_exponent(self.delta0).expect("validated at construction")
    }

    pub fn coord_slices(&self) -> Vec<&[f64]> {
        self.points.iter().map(|p| p.coords()).collect()
    }

    /// Same points with a different declared floor and regularity.
    pub fn with_params(&self, delta0: f64, claimed_alpha: f64, claimed_c: f64) -> Result<Self> {
        PointCloud::new(self.points.clone(), delta0, claimed_alpha, claimed_c)
    }
}

/// Exact diameter when a cheap bounding-sphere estimate cannot certify `<= 1`.
fn diameter_upper_bound(points: &[Point]) -> f64 {
    let n = points[0].dim();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for p in points {
        for (j, &x) in p.coords().iter().enumerate() {
            lo[j] = lo[j].min(x);
            hi[j] = hi[j].max(x);
        }
    }
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let radius = points
        .iter()
        .map(|p| distance(p.coords(), &center))
        .fold(0.0, f64::max);
    if 2.0 * radius <= 1.0 {
        return 2.0 * radius;
    }
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            points[i + 1..]
                .iter()
                .map(|q| distance(p.coords(), q.coords()))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Exact number of cloud points `X'` with `|X' - center| <= delta`.
pub fn count_in_ball(cloud: &PointCloud, center: &Point, delta: f64) -> Result<usize> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must be positive, got {delta}"
        )));
    }
    crate::error::check_dim(cloud.dim(), center.dim())?;
    if cloud.len() < BRUTE_FORCE_BELOW {
        return Ok(cloud
            .points
            .iter()
            .filter(|p| distance(p.coords(), center.coords()) <= delta)
            .count());
    }
    let slices = cloud.coord_slices();
    let grid = GridIndex::new(&slices, delta);
    Ok(grid.count_within(center.coords(), delta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRatio {
    pub delta: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// `max count / (delta^alpha N)` over queried points and dyadic scales.
    pub worst_ratio: f64,
    pub witness_index: usize,
    pub witness_delta: f64,
    pub per_scale: Vec<ScaleRatio>,
    pub alpha: f64,
    pub claimed_c: f64,
    pub passes: bool,
    pub queried_points: usize,
    /// Seed of the query subsample, when one was drawn.
    pub subsample_seed: Option<u64>,
}

impl RegularityReport {
    /// The measured regularity constant, at least 1.
    pub fn measured_c(&self) -> f64 {
        self.worst_ratio.max(1.0)
    }
}

/// Evaluates the regularity hypothesis at every dyadic `delta` in `[delta0, 1]`.
///
/// Clouds above [`FULL_VERIFICATION_LIMIT`] points are checked on a random
/// subsample of [`SUBSAMPLE_SIZE`] query points drawn with `seed`; counts
/// are always taken against the full cloud.
pub fn verify_regularity(cloud: &PointCloud, seed: u64) -> RegularityReport {
    verify_regularity_with_alpha(cloud, cloud.claimed_alpha, seed)
}

pub fn verify_regularity_with_alpha(cloud: &PointCloud, alpha: f64, seed: u64) -> RegularityReport {
    let n_pts = cloud.len();
    let (queries, subsample_seed): (Vec<usize>, Option<u64>) = if n_pts > FULL_VERIFICATION_LIMIT {
        let mut r = crate::sampling::rng(seed);
        let mut idx = sample(&mut r, n_pts, SUBSAMPLE_SIZE).into_vec();
        idx.sort_unstable();
        (idx, Some(seed))
    } else {
        ((0..n_pts).collect(), None)
    };
    let slices = cloud.coord_slices();
    let mut per_scale = Vec::new();
    let mut worst = (f64::NEG_INFINITY, 0usize, 1.0);
    for delta in dyadic_ladder(cloud.delta0, 1.0) {
        let norm = delta.powf(alpha) * n_pts as f64;
        let counts: Vec<usize> = if n_pts < BRUTE_FORCE_BELOW {
            queries
                .par_iter()
                .map(|&i| {
                    slices
                        .iter()
                        .filter(|p| distance(p, slices[i]) <= delta)
                        .count()
                })
                .collect()
        } else {
            let grid = GridIndex::new(&slices, delta);
            queries
                .par_iter()
                .map(|&i| grid.count_within(slices[i], delta))
                .collect()
        };
        // First index attaining the max keeps the witness independent of scheduling.
        let (arg, &max_count) = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("non-empty cloud");
        let ratio = max_count as f64 / norm;
        per_scale.push(ScaleRatio {
            delta,
            max_ratio: ratio,
        });
        if ratio > worst.0 {
            worst = (ratio, queries[arg], delta);
        }
    }
    RegularityReport {
        worst_ratio: worst.0,
        witness_index: worst.1,
        witness_delta: worst.2,
        per_scale,
        alpha,
        claimed_c: cloud.claimed_c,
        passes: worst.0 <= cloud.claimed_c,
        queried_points: queries.len(),
        subsample_seed,
    }
}

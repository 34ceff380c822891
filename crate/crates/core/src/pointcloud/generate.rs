//! Point sets with known regularity.
//!
//! Each generator reports a claimed `alpha` and a claimed `C` derived from
//! a deterministic counting bound for its construction, evaluated at every
//! dyadic scale in `[delta0, 1]`. The one exception is `kernel_hyperplane`,
//! whose points are random; its claimed `C` is the measured constant.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{verify_regularity_with_alpha, PointCloud};
use crate::error::{Error, Result};
use crate::geometry::{FamilySpec, ParamVector, Point, Projector};
use crate::numeric::{dyadic_ladder, is_dyadic_unit, norm};
use crate::sampling::rng;

/// One coordinate of a Cantor product: the two-map Cantor set with
/// contraction `ratio`, truncated at `level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorAxis {
    pub axis: usize,
    pub ratio: f64,
    pub level: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Product of per-coordinate Cantor sets, scaled to diameter <= 1.
    CantorProduct { n: usize, axes: Vec<CantorAxis> },
    /// `count` evenly spaced points on a unit-length segment through the origin.
    UniformSegment { direction: Vec<f64>, count: usize },
    /// Random two-branch Cantor set of similarity dimension `alpha` on a
    /// random line through the origin, `2^level` points.
    AlphaRegularRandom { n: usize, alpha: f64, level: u32 },
    /// Random points on `{X : pi_{t0}(X) = c}`.
    KernelHyperplane {
        family: FamilySpec,
        t0: Vec<f64>,
        c: f64,
        count: usize,
    },
    /// Regular grid with `per_axis` points along each listed coordinate.
    FiniteGrid {
        n: usize,
        axes: Vec<usize>,
        per_axis: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub delta0: f64,
    #[serde(flatten)]
    pub kind: GeneratorKind,
}

impl GeneratorSpec {
    /// Every violated parameter constraint; empty when the spec is valid.
    pub fn problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if !is_dyadic_unit(self.delta0) {
            problems.push(format!("delta0 = {} is not of the form 2^-k", self.delta0));
        }
        check_kind(&self.kind, &mut problems);
        problems
    }
}

impl GeneratorKind {
    /// Ambient dimension `n` of the generated points, if determinable.
    pub fn ambient_dim(&self) -> Option<usize> {
        match self {
            GeneratorKind::CantorProduct { n, .. }
            | GeneratorKind::AlphaRegularRandom { n, .. }
            | GeneratorKind::FiniteGrid { n, .. } => Some(*n),
            GeneratorKind::UniformSegment { direction, .. } => Some(direction.len()),
            GeneratorKind::KernelHyperplane { family, .. } => {
                family.build().ok().map(|f| f.ambient_dim())
            }
        }
    }
}

/// Deterministic in `seed`; rejects invalid parameters with every problem listed.
pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<PointCloud> {
    let problems = spec.problems();
    if !problems.is_empty() {
        return Err(Error::InvalidGenerator(problems));
    }
    let delta0 = spec.delta0;
    match &spec.kind {
        GeneratorKind::CantorProduct { n, axes } => cantor_product(*n, axes, delta0),
        GeneratorKind::UniformSegment { direction, count } => {
            uniform_segment(direction, *count, delta0)
        }
        GeneratorKind::AlphaRegularRandom { n, alpha, level } => {
            alpha_regular_random(*n, *alpha, *level, delta0, seed)
        }
        GeneratorKind::KernelHyperplane {
            family,
            t0,
            c,
            count,
        } => kernel_hyperplane(family, t0, *c, *count, delta0, seed),
        GeneratorKind::FiniteGrid { n, axes, per_axis } => finite_grid(*n, axes, *per_axis, delta0),
    }
}

const MAX_POINTS: usize = 1 << 24;

fn check_kind(kind: &GeneratorKind, problems: &mut Vec<String>) {
    let check_n = |n: usize, problems: &mut Vec<String>| {
        if n < 3 {
            problems.push(format!("n = {n} must be >= 3"));
        }
    };
    match kind {
        GeneratorKind::CantorProduct { n, axes } => {
            check_n(*n, problems);
            if axes.is_empty() {
                problems.push("cantor_product needs at least one axis".into());
            }
            let mut total_level = 0u32;
            for (i, a) in axes.iter().enumerate() {
                if a.axis >= *n {
                    problems.push(format!("axis {} out of range for n = {n}", a.axis));
                }
                if axes[..i].iter().any(|b| b.axis == a.axis) {
                    problems.push(format!("axis {} listed twice", a.axis));
                }
                if !(a.ratio > 0.0 && a.ratio < 0.5) {
                    problems.push(format!("ratio {} not in (0, 1/2)", a.ratio));
                }
                total_level += a.level;
            }
            if total_level > 24 {
                problems.push(format!(
                    "2^{total_level} points exceeds the generator limit"
                ));
            }
        }
        GeneratorKind::UniformSegment { direction, count } => {
            if direction.len() < 3 {
                problems.push("direction must have n >= 3 entries".into());
            }
            if !(norm(direction) > 0.0) {
                problems.push("direction must be non-zero".into());
            }
            if *count < 2 || *count > MAX_POINTS {
                problems.push(format!("count = {count} must be in [2, 2^24]"));
            }
        }
        GeneratorKind::AlphaRegularRandom { n, alpha, level } => {
            check_n(*n, problems);
            if !(*alpha > 0.0 && *alpha <= 1.0) {
                problems.push(format!("alpha = {alpha} not in (0,1]"));
            }
            if *level > 24 {
                problems.push(format!("level = {level} exceeds 24"));
            }
        }
        GeneratorKind::KernelHyperplane {
            family,
            t0,
            c,
            count,
        } => {
            match family.build() {
                Ok(fam) if fam.param_dim() != t0.len() => problems.push(format!(
                    "t0 has {} entries, family expects {}",
                    t0.len(),
                    fam.param_dim()
                )),
                Ok(_) => {}
                Err(e) => problems.push(e.to_string()),
            }
            if !(c.abs() < 0.5) {
                problems.push(format!("|c| = {} must be < 1/2", c.abs()));
            }
            if *count == 0 || *count > MAX_POINTS {
                problems.push(format!("count = {count} must be in [1, 2^24]"));
            }
        }
        GeneratorKind::FiniteGrid { n, axes, per_axis } => {
            check_n(*n, problems);
            if axes.is_empty() {
                problems.push("finite_grid needs at least one axis".into());
            }
            for (i, &a) in axes.iter().enumerate() {
                if a >= *n {
                    problems.push(format!("axis {a} out of range for n = {n}"));
                }
                if axes[..i].contains(&a) {
                    problems.push(format!("axis {a} listed twice"));
                }
            }
            if *per_axis < 2 {
                problems.push("per_axis must be >= 2".into());
            }
            if (*per_axis as f64).powi(axes.len() as i32) > MAX_POINTS as f64 {
                problems.push("grid exceeds the generator limit".into());
            }
        }
    }
}

/// `max_delta bound(delta) / (delta^alpha N)` over the dyadic ladder, at least 1.
fn claimed_constant(delta0: f64, alpha: f64, n_points: usize, bound: impl Fn(f64) -> f64) -> f64 {
    dyadic_ladder(delta0, 1.0)
        .into_iter()
        .map(|d| bound(d).min(n_points as f64) / (d.powf(alpha) * n_points as f64))
        .fold(1.0, f64::max)
}

/// Points of the level-`k` two-map Cantor set on `[0, side (1 - r^k)]`.
fn cantor_line(ratio: f64, level: u32, side: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    let mut scale = side;
    for _ in 0..level {
        let shift = scale * (1.0 - ratio);
        pts = pts.iter().flat_map(|&a| [a, a + shift]).collect();
        scale *= ratio;
    }
    pts
}

/// Upper bound on the number of level-`k` Cantor points in a window of length `width`.
///
/// Level-`j` intervals have length `side r^j` and are separated by gaps of at
/// least `side r^{j-1} (1 - 2r)`; a window meets at most
/// `floor(width / (len + gap)) + 2` of them, or one if it is shorter than the gap.
fn cantor_window_bound(ratio: f64, level: u32, side: f64, width: f64) -> f64 {
    let mut best = 2f64.powi(level as i32);
    for j in 1..=level {
        let len = side * ratio.powi(j as i32);
        let gap = side * ratio.powi(j as i32 - 1) * (1.0 - 2.0 * ratio);
        let meets = if width < gap {
            1.0
        } else {
            (width / (len + gap)).floor() + 2.0
        };
        best = best.min(meets * 2f64.powi((level - j) as i32));
    }
    best
}

fn cantor_product(n: usize, axes: &[CantorAxis], delta0: f64) -> Result<PointCloud> {
    let d = axes.len() as f64;
    let side = 1.0 / d.sqrt();
    let lines: Vec<Vec<f64>> = axes
        .iter()
        .map(|a| {
            let extent = side * (1.0 - a.ratio.powi(a.level as i32));
            cantor_line(a.ratio, a.level, side)
                .into_iter()
                .map(|x| x - 0.5 * extent)
                .collect()
        })
        .collect();
    let mut points = vec![vec![0.0; n]];
    for (a, line) in axes.iter().zip(&lines) {
        points = points
            .into_iter()
            .flat_map(|p| {
                line.iter().map(move |&x| {
                    let mut q = p.clone();
                    q[a.axis] = x;
                    q
                })
            })
            .collect();
    }
    let dim: f64 = axes.iter().map(|a| 2f64.ln() / (1.0 / a.ratio).ln()).sum();
    let alpha = dim.min(1.0);
    let count = points.len();
    let c = claimed_constant(delta0, alpha, count, |delta| {
        axes.iter()
            .map(|a| cantor_window_bound(a.ratio, a.level, side, 2.0 * delta))
            .product()
    });
    let pts = points
        .into_iter()
        .map(Point::from_coords)
        .collect::<Result<Vec<_>>>()?;
    PointCloud::new(pts, delta0, alpha, c)
}

fn uniform_segment(direction: &[f64], count: usize, delta0: f64) -> Result<PointCloud> {
    let len = norm(direction);
    let u: Vec<f64> = direction.iter().map(|x| x / len).collect();
    let h = 1.0 / (count - 1) as f64;
    let pts = (0..count)
        .map(|i| {
            let s = i as f64 * h - 0.5;
            Point::from_coords(u.iter().map(|x| s * x).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    // a window of length 2 delta holds at most 2 delta / h + 1 points
    let c = claimed_constant(delta0, 1.0, count, |delta| (2.0 * delta / h).floor() + 1.0);
    PointCloud::new(pts, delta0, 1.0, c)
}

fn random_unit_vector<R: Rng>(n: usize, r: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..=1.0)).collect();
        let l = norm(&v);
        if l > 0.1 && l <= 1.0 {
            return v.into_iter().map(|x| x / l).collect();
        }
    }
}

fn alpha_regular_random(
    n: usize,
    alpha: f64,
    level: u32,
    delta0: f64,
    seed: u64,
) -> Result<PointCloud> {
    let mut r = rng(seed);
    let ratio = 0.5f64.powf(1.0 / alpha);
    let u = random_unit_vector(n, &mut r);
    // each interval [a, a + len] places its two children of length ratio*len
    // at random inside its left and right halves
    let mut starts = vec![-0.5];
    let mut len = 1.0;
    for _ in 0..level {
        let child = ratio * len;
        let slack = 0.5 * len - child;
        let mut next = Vec::with_capacity(starts.len() * 2);
        for &a in &starts {
            next.push(a + r.gen::<f64>() * slack);
            next.push(a + len - child - r.gen::<f64>() * slack);
        }
        starts = next;
        len = child;
    }
    let count = starts.len();
    let pts = starts
        .iter()
        .map(|&s| Point::from_coords(u.iter().map(|x| s * x).collect()))
        .collect::<Result<Vec<_>>>()?;
    // level-j intervals have disjoint interiors and length ratio^j, so a
    // window of length W meets at most floor(W / len_j) + 2 of them
    let c = claimed_constant(delta0, alpha, count, |delta| {
        (0..=level)
            .map(|j| {
                let len_j = ratio.powi(j as i32);
                ((2.0 * delta / len_j).floor() + 2.0) * 2f64.powi((level - j) as i32)
            })
            .fold(f64::INFINITY, f64::min)
    });
    PointCloud::new(pts, delta0, alpha, c)
}

fn kernel_hyperplane(
    family: &FamilySpec,
    t0: &[f64],
    c: f64,
    count: usize,
    delta0: f64,
    seed: u64,
) -> Result<PointCloud> {
    let fam = family.build()?;
    let proj = fam.at(&ParamVector::new(t0.to_vec()))?;
    let m = t0.len();
    let lt_l1: f64 = proj.lt.iter().map(|x| x.abs()).sum();
    // |r1| <= |c| + a (|L t0|_1 + |q(t0)|) and |(w, r2)| <= a sqrt(m + 1)
    let a = (0.5 - c.abs()) / (((m + 1) as f64).sqrt() + lt_l1 + proj.qt.abs());
    let mut r = rng(seed);
    let mut pts = Vec::with_capacity(count);
    while pts.len() < count {
        let w: Vec<f64> = (0..m).map(|_| r.gen_range(-a..=a)).collect();
        let r2 = r.gen_range(-a..=a);
        if let Some(r1) = solve_r1(&proj, &w, r2, c) {
            pts.push(Point::new(r1, &w, r2));
        }
    }
    let provisional = PointCloud::new(pts, delta0, 1.0, 1.0)?;
    let measured = verify_regularity_with_alpha(&provisional, 1.0, seed).measured_c();
    provisional.with_params(delta0, 1.0, measured)
}

/// `r1` with `pi(r1, w, r2) == c` exactly in floating point, searched within a
/// few ulps of the closed-form solution `c - w . L(t0) - r2 q(t0)`.
fn solve_r1(proj: &Projector, w: &[f64], r2: f64, c: f64) -> Option<f64> {
    let rest = proj.project_coords(Point::new(0.0, w, r2).coords());
    let start = c - rest;
    let residual = |r1: f64| proj.project_coords(Point::new(r1, w, r2).coords()) - c;
    let mut up = start;
    let mut down = start;
    for _ in 0..64 {
        if residual(up) == 0.0 {
            return Some(up);
        }
        if residual(down) == 0.0 {
            return Some(down);
        }
        up = next_up(up);
        down = -next_up(-down);
    }
    None
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    if x > 0.0 {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}

fn finite_grid(n: usize, axes: &[usize], per_axis: usize, delta0: f64) -> Result<PointCloud> {
    let d = axes.len();
    let side = 1.0 / (d as f64).sqrt();
    let h = side / (per_axis - 1) as f64;
    let mut points = vec![vec![0.0; n]];
    for &a in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                (0..per_axis).map(move |i| {
                    let mut q = p.clone();
                    q[a] = i as f64 * h - 0.5 * side;
                    q
                })
            })
            .collect();
    }
    let count = points.len();
    let c = claimed_constant(delta0, 1.0, count, |delta| {
        ((2.0 * delta / h).floor() + 1.0)
            .min(per_axis as f64)
            .powi(d as i32)
    });
    let pts = points
        .into_iter()
        .map(Point::from_coords)
        .collect::<Result<Vec<_>>>()?;
    PointCloud::new(pts, delta0, 1.0, c)
}

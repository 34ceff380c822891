//! The acceptance criteria as runnable checks.
//!
//! Each check returns an [`Outcome`] carrying the measured quantities; a
//! check passes only when its numeric condition holds within its time budget.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use rproj_core::analysis::{
    concentration_counts, finitary_check, transversality_measure, BoundForm, FinitaryOptions,
};
use rproj_core::energy::{
    ball_mass_bound_check, mean_projected_energies_multi, truncated_energy, AveragedEnergy,
    DiscreteMeasure, TruncatedEnergyParams,
};
use rproj_core::geometry::{
    factor_map, moment_expand, project, MomentVector, ParamVector, Point, ProjectionFamily,
};
use rproj_core::numeric::{distance, dyadic_ladder, linear_fit, median};
use rproj_core::pointcloud::{
    box_dimension_values, count_in_ball, default_fit_range, generate, verify_regularity,
    CantorAxis, GeneratorKind, GeneratorSpec, GridIndex,
};
use rproj_core::sampling::{rng, sample_annulus, sample_annulus_point};
use rproj_core::{PointCloud, Result};

use crate::structural::lie_table;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{} criterion {:>2} {}: {} [{:.2}s, budget {}s]",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds,
            self.budget_seconds
        )
    }
}

type Check = fn() -> Result<(bool, String)>;

const CRITERIA: [(u8, &str, f64, Check); 10] = [
    (1, "xi equals the standard projection", 5.0, xi_identity),
    (2, "moment-curve decomposition", 1.0, decomposition),
    (3, "ball-mass bound from energy", 10.0, ball_mass_property),
    (
        4,
        "range counts match brute force",
        10.0,
        oracle_equivalence,
    ),
    (
        5,
        "transversality scales linearly",
        30.0,
        transversality_scaling,
    ),
    (
        6,
        "averaged energy grows like |log delta0|",
        120.0,
        energy_log_growth,
    ),
    (
        7,
        "exceptional fraction across scales",
        300.0,
        finitary_sweep,
    ),
    (
        8,
        "degenerate direction recovery",
        120.0,
        degenerate_direction,
    ),
    (
        9,
        "projected dimension preserved",
        300.0,
        dimension_preservation,
    ),
    (10, "SO(n,1) structural residuals", 5.0, structural),
];

pub fn ids() -> Vec<u8> {
    CRITERIA.iter().map(|c| c.0).collect()
}

pub fn run(id: u8) -> Option<Outcome> {
    let &(id, name, budget, check) = CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let result = check();
    let seconds = start.elapsed().as_secs_f64();
    let (ok, detail) = match result {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    let in_time = seconds <= budget;
    Some(Outcome {
        id,
        name: name.to_string(),
        passed: ok && in_time,
        detail: if in_time {
            detail
        } else {
            format!("{detail}; over time budget")
        },
        seconds,
        budget_seconds: budget,
    })
}

pub fn run_all() -> Vec<Outcome> {
    ids().into_iter().filter_map(run).collect()
}

fn xi_identity() -> Result<(bool, String)> {
    let rows = lie_table(&[3, 4, 5, 6, 7, 8], 1000, 101)?;
    let worst = rows.iter().map(|r| r.xi_vs_pi).fold(0.0, f64::max);
    Ok((
        worst < 1e-12,
        format!("max |xi - pi| = {worst:.2e} over 6000 instances"),
    ))
}

fn random_family<R: Rng>(m: usize, r: &mut R) -> ProjectionFamily {
    loop {
        let l = DMatrix::from_fn(
            m,
            m,
            |i, j| if i == j { 1.0 } else { 0.0 } + 0.5 * r.gen_range(-1.0..=1.0),
        );
        let a = DMatrix::from_fn(m, m, |_, _| r.gen_range(-1.0..=1.0));
        let mut q = a.transpose() * &a / m as f64;
        for i in 0..m {
            q[(i, i)] += 0.2;
        }
        // symmetrize exactly
        let q = (&q + q.transpose()) * 0.5;
        if let Ok(f) = ProjectionFamily::new(l, q) {
            return f;
        }
    }
}

fn decomposition() -> Result<(bool, String)> {
    let mut r = rng(202);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let n = r.gen_range(3..=8);
        let fam = random_family(n - 2, &mut r);
        let t = sample_annulus_point(n - 2, &mut r);
        let s: f64 = r.gen_range(-2.0..=2.0);
        let x = Point::from_coords((0..n).map(|_| r.gen_range(-0.5..=0.5)).collect())?;
        let direct = project(&fam, &t.scaled(s), &x)?;
        let f = factor_map(&fam, &t, &x)?;
        let mv = moment_expand(MomentVector { s });
        let via = mv[0] * f[0] + mv[1] * f[1] + mv[2] * f[2];
        let scale = (mv[0] * f[0]).abs() + (mv[1] * f[1]).abs() + (mv[2] * f[2]).abs();
        let err = (direct - via).abs() / if scale > 0.0 { scale } else { 1.0 };
        worst = worst.max(err);
    }
    Ok((
        worst < 1e-12,
        format!("max relative error {worst:.2e} over 10^4 instances"),
    ))
}

fn ball_mass_property() -> Result<(bool, String)> {
    let mut r = rng(303);
    let mut violations = 0usize;
    let mut scales = 0usize;
    let mut tightest = 0.0f64;
    for _ in 0..1000 {
        let d = r.gen_range(1..=3);
        let k = r.gen_range(1..=60);
        let center: Vec<f64> = (0..d).map(|_| r.gen_range(-0.2..=0.2)).collect();
        let spread = [0.001, 0.01, 0.05, 0.2][r.gen_range(0..4)];
        let atoms: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                center
                    .iter()
                    .map(|c| c + spread * r.gen_range(-1.0..=1.0))
                    .collect()
            })
            .collect();
        let raw: Vec<f64> = (0..k).map(|_| r.gen_range(0.01..=1.0)).collect();
        let total: f64 = raw.iter().sum();
        let rho = DiscreteMeasure::new(atoms.clone(), raw.iter().map(|w| w / total).collect())?;
        let x = if r.gen_bool(0.5) {
            atoms[0].clone()
        } else {
            center
                .iter()
                .map(|c| c + spread * r.gen_range(-1.0..=1.0))
                .collect()
        };
        let params = TruncatedEnergyParams::new(
            r.gen_range(0.05..=1.0),
            (-(r.gen_range(1..=12) as f64)).exp2(),
        )?;
        let energy = truncated_energy(&rho, &x, &params)?;
        let check = ball_mass_bound_check(&rho, &x, &params, energy)?;
        violations += check.violations.len();
        scales += check.rows.len();
        for row in &check.rows {
            tightest = tightest.max(row.mass / row.allowed);
        }
    }
    Ok((
        violations == 0,
        format!("{violations} violations over {scales} (instance, scale) pairs; max mass/(R delta^alpha) = {tightest:.4}"),
    ))
}

fn random_cloud<R: Rng>(n: usize, count: usize, r: &mut R) -> Result<PointCloud> {
    let pts = (0..count)
        .map(|_| {
            let coords: Vec<f64> = if r.gen_bool(0.5) {
                // lattice points produce exact ties at dyadic radii
                (0..n)
                    .map(|_| r.gen_range(-12..=12) as f64 / 64.0)
                    .collect()
            } else {
                (0..n).map(|_| r.gen_range(-0.19..=0.19)).collect()
            };
            Point::from_coords(coords)
        })
        .collect::<Result<Vec<_>>>()?;
    PointCloud::new(pts, 2f64.powi(-8), 1.0, 1.0)
}

fn oracle_equivalence() -> Result<(bool, String)> {
    let mut r = rng(404);
    let mut mismatches = 0usize;
    let mut compared = 0usize;
    for _ in 0..100 {
        let n = r.gen_range(3..=6);
        let cloud = random_cloud(n, 300, &mut r)?;
        let slices = cloud.coord_slices();
        for delta in [2f64.powi(-6), 2f64.powi(-4), 0.1] {
            let grid = GridIndex::new(&slices, delta);
            for p in cloud.points() {
                let brute = slices
                    .iter()
                    .filter(|q| distance(q, p.coords()) <= delta)
                    .count();
                let fast = count_in_ball(&cloud, p, delta)?;
                let gridded = grid.count_within(p.coords(), delta);
                mismatches += usize::from(fast != brute) + usize::from(gridded != brute);
                compared += 2;
            }
        }
        let fam = ProjectionFamily::standard(n - 2);
        for _ in 0..3 {
            let t = sample_annulus_point(n - 2, &mut r);
            let values: Vec<f64> = cloud
                .points()
                .iter()
                .map(|p| project(&fam, &t, p))
                .collect::<Result<_>>()?;
            for delta in [cloud.delta0(), 2f64.powi(-5), 0.125] {
                let rep = concentration_counts(&cloud, &fam, &t, delta, None)?;
                for &(i, c) in &rep.per_point_counts {
                    let brute = values
                        .iter()
                        .filter(|v| (*v - values[i]).abs() <= delta)
                        .count();
                    mismatches += usize::from(c != brute);
                    compared += 1;
                }
            }
        }
    }
    Ok((
        mismatches == 0,
        format!("{mismatches} mismatches in {compared} counts"),
    ))
}

/// Area of `{t in R^2 : 1 <= |t| <= 2, |t_1| <= eps}` by composite Simpson.
pub fn slab_annulus_area(eps: f64) -> f64 {
    let f = |x: f64| 2.0 * ((4.0 - x * x).sqrt() - (1.0 - x * x).sqrt());
    let intervals = 2000;
    let h = 2.0 * eps / intervals as f64;
    let mut acc = f(-eps) + f(eps);
    for i in 1..intervals {
        let x = -eps + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    acc * h / 3.0
}

fn transversality_scaling() -> Result<(bool, String)> {
    let fam = ProjectionFamily::standard(2);
    let x = Point::new(0.0, &[0.6, 0.8], 0.0);
    let origin = Point::new(0.0, &[0.0, 0.0], 0.0);
    let mut ratios = Vec::new();
    let mut within = true;
    let mut parts = Vec::new();
    for eps in [0.1, 0.05, 0.02] {
        let est = transversality_measure(&fam, &x, &origin, eps, 100_000, 505)?;
        let oracle = slab_annulus_area(eps);
        let z = (est.measure_estimate - oracle).abs() / est.standard_error;
        within &= z <= 2.0;
        ratios.push(est.measure_estimate / eps);
        parts.push(format!(
            "eps {eps}: {:.5} +- {:.5} vs {oracle:.5} ({z:.2} se)",
            est.measure_estimate, est.standard_error
        ));
    }
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let spread = hi / lo - 1.0;
    Ok((
        spread < 0.15 && within,
        format!(
            "measure/eps spread {:.1}%; {}",
            100.0 * spread,
            parts.join("; ")
        ),
    ))
}

fn segment(n: usize, count: usize, delta0: f64) -> Result<PointCloud> {
    generate(
        &GeneratorSpec {
            delta0,
            kind: GeneratorKind::UniformSegment {
                direction: (0..n).map(|i| 1.0 + 0.25 * i as f64).collect(),
                count,
            },
        },
        0,
    )
}

fn energy_log_growth() -> Result<(bool, String)> {
    let cloud = segment(4, 4096, 2f64.powi(-12))?;
    let fam = ProjectionFamily::standard(2);
    let ts = sample_annulus(2, 48, 606);
    let floors = [8, 10, 12];
    let delta0s: Vec<f64> = floors.iter().map(|&k| (-(k as f64)).exp2()).collect();
    let means = mean_projected_energies_multi(&cloud, &fam, 1.0, &delta0s, &ts)?;
    let mut kappas = Vec::new();
    let mut parts = Vec::new();
    for (k, per_t) in floors.iter().zip(means) {
        let avg = AveragedEnergy::from_means(per_t, 2)?;
        let kappa = avg.integral / *k as f64;
        parts.push(format!(
            "2^-{k}: {:.3} +- {:.3} (kappa {kappa:.4})",
            avg.integral, avg.standard_error
        ));
        kappas.push(kappa);
    }
    let lo = kappas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = kappas.iter().cloned().fold(0.0, f64::max);
    let variation = (hi - lo) / lo;
    Ok((
        variation < 0.25,
        format!(
            "kappa variation {:.1}%; {}",
            100.0 * variation,
            parts.join("; ")
        ),
    ))
}

fn cantor_dust(levels: (u32, u32), delta0: f64) -> Result<PointCloud> {
    let axis = |axis, level| CantorAxis {
        axis,
        ratio: 1.0 / 9.0,
        level,
    };
    generate(
        &GeneratorSpec {
            delta0,
            kind: GeneratorKind::CantorProduct {
                n: 3,
                axes: vec![axis(0, levels.0), axis(1, levels.1)],
            },
        },
        0,
    )
}

fn finitary_sweep() -> Result<(bool, String)> {
    let cloud = cantor_dust((7, 6), 2f64.powi(-10))?;
    let alpha = cloud.claimed_alpha();
    let reg = verify_regularity(&cloud, 707);
    let fam = ProjectionFamily::standard(1);
    let ts = sample_annulus(1, 500, 707);
    let epsilon = 0.006;
    let options = FinitaryOptions {
        alpha,
        c: reg.measured_c(),
        a_emp: 1.0,
        bound_form: BoundForm::EpsilonScaled,
        seed: Some(707),
    };
    let mut log_delta = Vec::new();
    let mut log_frac = Vec::new();
    let mut all_small = true;
    let mut parts = Vec::new();
    for delta in dyadic_ladder(2f64.powi(-10), 2f64.powi(-5)) {
        let rep = finitary_check(&cloud, &fam, delta, epsilon, &ts, &options)?;
        all_small &= rep.exceptional_fraction <= 0.1;
        log_delta.push(delta.ln());
        log_frac.push((rep.exceptional_fraction + 1.0 / ts.len() as f64).ln());
        let over = rep
            .t_samples
            .iter()
            .filter(|s| s.bad_fraction > 0.0)
            .count();
        let removed = rep
            .t_samples
            .iter()
            .map(|s| s.removed_fraction)
            .fold(0.0, f64::max);
        parts.push(format!(
            "2^{}: exc {:.3}, t over bound {over}, max removed {removed:.3}, literal exc {:.3}",
            delta.log2(),
            rep.exceptional_fraction,
            rep.literal_exceptional_fraction
        ));
    }
    let (slope, _, _) = linear_fit(&log_delta, &log_frac);
    Ok((
        all_small && slope >= 0.0,
        format!(
            "N {}, alpha {alpha:.4}, C {:.3}, slope {slope:.3}; {}",
            cloud.len(),
            reg.measured_c(),
            parts.join("; ")
        ),
    ))
}

fn projected_values(
    cloud: &PointCloud,
    fam: &ProjectionFamily,
    t: &ParamVector,
) -> Result<Vec<f64>> {
    let proj = fam.at(t)?;
    Ok(cloud
        .points()
        .iter()
        .map(|p| proj.project_coords(p.coords()))
        .collect())
}

fn degenerate_direction() -> Result<(bool, String)> {
    let delta0 = 2f64.powi(-12);
    let t0 = ParamVector(vec![1.0]);
    let cloud = generate(
        &GeneratorSpec {
            delta0,
            kind: GeneratorKind::KernelHyperplane {
                family: rproj_core::FamilySpec::Standard { n: 3 },
                t0: t0.0.clone(),
                c: 0.0,
                count: 4096,
            },
        },
        808,
    )?;
    let fam = ProjectionFamily::standard(1);
    let range = default_fit_range(delta0);
    let at_t0 = box_dimension_values(&projected_values(&cloud, &fam, &t0)?, range)?.slope;
    let mut r = rng(808);
    let mut far = Vec::new();
    while far.len() < 100 {
        let t = sample_annulus_point(1, &mut r);
        if (t.0[0] - t0.0[0]).abs() >= 0.5 {
            far.push(box_dimension_values(&projected_values(&cloud, &fam, &t)?, range)?.slope);
        }
    }
    let med = median(&far);
    let target = cloud.claimed_alpha().min(1.0) - 0.15;
    Ok((
        at_t0 <= 0.05 && med >= target,
        format!("dimension at t0 {at_t0:.3}; median over 100 far t {med:.3} (need >= {target:.2})"),
    ))
}

fn median_projected_dimension(cloud: &PointCloud, samples: usize, seed: u64) -> Result<f64> {
    let m = cloud.dim() - 2;
    let fam = ProjectionFamily::standard(m);
    let range = default_fit_range(cloud.delta0());
    let slopes = sample_annulus(m, samples, seed)
        .iter()
        .map(|t| Ok(box_dimension_values(&projected_values(cloud, &fam, t)?, range)?.slope))
        .collect::<Result<Vec<f64>>>()?;
    Ok(median(&slopes))
}

fn dimension_preservation() -> Result<(bool, String)> {
    let delta0 = 2f64.powi(-12);
    let seg = segment(4, 4096, delta0)?;
    let dust = cantor_dust((6, 6), delta0)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, cloud) in [("segment", &seg), ("cantor", &dust)] {
        let med = median_projected_dimension(cloud, 200, 909)?;
        let target = cloud.claimed_alpha().min(1.0);
        ok &= (med - target).abs() <= 0.1;
        parts.push(format!("{label}: median {med:.3} vs {target:.3}"));
    }
    Ok((ok, parts.join("; ")))
}

fn structural() -> Result<(bool, String)> {
    let rows = lie_table(&[3, 4, 5, 6, 7, 8], 100, 1010)?;
    let worst = rows.iter().map(|r| r.structural_max()).fold(0.0, f64::max);
    Ok((
        worst < 1e-12,
        format!("max residual {worst:.2e} over n = 3..8, 100 elements each"),
    ))
}

//! Concentration of the projected cloud at scale `delta`.
//!
//! All window comparisons are closed: `X'` is counted for `X` when
//! `|pi_t X' - pi_t X| <= delta`, and every point counts itself.

use std::cmp::Reverse;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{ParamVector, Point, ProjectionFamily};
use crate::numeric::norm;
use crate::pointcloud::PointCloud;
use crate::sampling::{annulus_volume, rng, sample_annulus_point};

pub const SWEEP_SCHEMA_VERSION: u32 = 1;

/// For every `i`, `#{j : |values[j] - values[i]| <= delta}`.
///
/// Sorts once and sweeps two pointers; floating-point subtraction is
/// monotone, so the result equals the brute-force count exactly.
pub fn window_counts(values: &[f64], delta: f64) -> Vec<usize> {
    let order = sorted_order(values);
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut counts = vec![0usize; values.len()];
    let (mut lo, mut hi) = (0usize, 0usize);
    for (pos, &v) in sorted.iter().enumerate() {
        while (v - sorted[lo]).abs() > delta {
            lo += 1;
        }
        if hi < pos {
            hi = pos;
        }
        while hi + 1 < sorted.len() && (sorted[hi + 1] - v).abs() <= delta {
            hi += 1;
        }
        counts[order[pos]] = hi - lo + 1;
    }
    counts
}

fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub t: ParamVector,
    pub delta: f64,
    /// `(cloud index, window count)` over the restricted points.
    pub per_point_counts: Vec<(usize, usize)>,
    /// Fraction of points whose count exceeds `bound_used`.
    pub bad_fraction: f64,
    pub bound_used: f64,
    pub surviving_indices: Vec<usize>,
}

impl ConcentrationReport {
    fn from_counts(
        t: ParamVector,
        delta: f64,
        indices: &[usize],
        counts: &[usize],
        bound: f64,
    ) -> Self {
        let per_point_counts: Vec<(usize, usize)> = indices
            .iter()
            .copied()
            .zip(counts.iter().copied())
            .collect();
        let surviving_indices: Vec<usize> = per_point_counts
            .iter()
            .filter(|(_, c)| *c as f64 <= bound)
            .map(|(i, _)| *i)
            .collect();
        let n = per_point_counts.len().max(1) as f64;
        Self {
            t,
            delta,
            bad_fraction: (per_point_counts.len() - surviving_indices.len()) as f64 / n,
            bound_used: bound,
            surviving_indices,
            per_point_counts,
        }
    }

    /// Re-evaluates `bad_fraction` and the survivors against a new bound.
    pub fn with_bound(&self, bound: f64) -> Self {
        let (idx, counts): (Vec<usize>, Vec<usize>) = self.per_point_counts.iter().copied().unzip();
        Self::from_counts(self.t.clone(), self.delta, &idx, &counts, bound)
    }

    pub fn max_count(&self) -> usize {
        self.per_point_counts
            .iter()
            .map(|(_, c)| *c)
            .max()
            .unwrap_or(0)
    }
}

fn projected_values(
    cloud: &PointCloud,
    fam: &ProjectionFamily,
    t: &ParamVector,
) -> Result<Vec<f64>> {
    check_dim(fam.ambient_dim(), cloud.dim())?;
    let proj = fam.at(t)?;
    Ok(cloud
        .points()
        .iter()
        .map(|p| proj.project_coords(p.coords()))
        .collect())
}

/// Window counts of `pi_t` over the points in `restrict_to` (all points when
/// `None`). The reported bound is the trivial one, the restricted size; use
/// [`ConcentrationReport::with_bound`] to apply another.
pub fn concentration_counts(
    cloud: &PointCloud,
    fam: &ProjectionFamily,
    t: &ParamVector,
    delta: f64,
    restrict_to: Option<&[usize]>,
) -> Result<ConcentrationReport> {
    if delta < cloud.delta0() {
        return Err(Error::BelowResolution {
            delta,
            delta0: cloud.delta0(),
        });
    }
    let all = projected_values(cloud, fam, t)?;
    let indices: Vec<usize> = match restrict_to {
        Some(r) => {
            if let Some(&bad) = r.iter().find(|&&i| i >= cloud.len()) {
                return Err(Error::InvalidArgument(format!("index {bad} out of range")));
            }
            r.to_vec()
        }
        None => (0..cloud.len()).collect(),
    };
    let values: Vec<f64> = indices.iter().map(|&i| all[i]).collect();
    let counts = window_counts(&values, delta);
    Ok(ConcentrationReport::from_counts(
        t.clone(),
        delta,
        &indices,
        &counts,
        indices.len() as f64,
    ))
}

/// Which bound the finitary sweep enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundForm {
    /// `C delta0^{-10 eps} delta^alpha N`.
    #[default]
    EpsilonScaled,
    /// `C delta0^{-10} delta^alpha N`.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinitaryOptions {
    pub alpha: f64,
    /// Regularity constant, normally the measured one.
    pub c: f64,
    pub a_emp: f64,
    pub bound_form: BoundForm,
    /// Echoed into the report.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TSummary {
    pub t: ParamVector,
    pub max_count: usize,
    /// Fraction of points over the bound before any removal.
    pub bad_fraction: f64,
    pub removed_fraction: f64,
    pub good: bool,
    /// Whether the literal `delta0^{-10}` bound holds with no removal.
    pub literal_good: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfigEcho {
    pub seed: Option<u64>,
    pub n_points: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub a_emp: f64,
    pub c: f64,
    pub delta0: f64,
    pub bound_form: BoundForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub delta: f64,
    pub bound_used: f64,
    pub literal_bound: f64,
    /// Largest removable fraction, `min(1, eps^{-A} delta^eps)`.
    pub budget: f64,
    pub t_samples: Vec<TSummary>,
    pub exceptional_fraction: f64,
    pub literal_exceptional_fraction: f64,
    pub config: SweepConfigEcho,
}

impl SweepReport {
    /// Flat rows `t_1..t_m,delta,bad_fraction,removed_fraction,good`.
    pub fn write_csv<W: Write>(&self, mut out: W, header: bool) -> Result<()> {
        let m = self.t_samples.first().map_or(0, |s| s.t.dim());
        if header {
            let mut cols: Vec<String> = (1..=m).map(|i| format!("t_{i}")).collect();
            cols.extend(["delta", "bad_fraction", "removed_fraction", "good"].map(String::from));
            writeln!(out, "{}", cols.join(","))?;
        }
        for s in &self.t_samples {
            let mut row: Vec<String> = s.t.as_slice().iter().map(|x| x.to_string()).collect();
            row.push(self.delta.to_string());
            row.push(s.bad_fraction.to_string());
            row.push(s.removed_fraction.to_string());
            row.push(s.good.to_string());
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Removes worst points (largest current count, lowest index on ties) until
/// every survivor's count is at most `bound` or more than `max_removed`
/// points are gone. Returns the number removed and whether the bound holds.
pub fn greedy_removal(values: &[f64], delta: f64, bound: f64, max_removed: usize) -> (usize, bool) {
    let order = sorted_order(values);
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let n = sorted.len();
    // Window bounds in sorted positions, identical to `window_counts`.
    let mut lo = vec![0usize; n];
    let mut hi = vec![0usize; n];
    let (mut a, mut b) = (0usize, 0usize);
    for pos in 0..n {
        while (sorted[pos] - sorted[a]).abs() > delta {
            a += 1;
        }
        if b < pos {
            b = pos;
        }
        while b + 1 < n && (sorted[b + 1] - sorted[pos]).abs() <= delta {
            b += 1;
        }
        lo[pos] = a;
        hi[pos] = b;
    }
    let counts: Vec<i64> = (0..n).map(|p| (hi[p] - lo[p] + 1) as i64).collect();
    let mut tree = MaxTree::new(&counts, &order);
    let mut removed = 0usize;
    while let Some((c, p)) = tree.top() {
        if c as f64 <= bound {
            return (removed, true);
        }
        if removed == max_removed {
            return (removed, false);
        }
        removed += 1;
        // The removed point sits inside its own window, so kill it after the add.
        tree.add(lo[p], hi[p], -1);
        tree.kill(p);
    }
    (removed, true)
}

/// Range-add, global-max segment tree over sorted positions. Ties go to the
/// lowest cloud index, matching the heap order a naive implementation uses.
struct MaxTree<'a> {
    size: usize,
    best: Vec<(i64, usize)>,
    lazy: Vec<i64>,
    order: &'a [usize],
}

const DEAD: i64 = i64::MIN / 4;

impl<'a> MaxTree<'a> {
    fn new(values: &[i64], order: &'a [usize]) -> Self {
        let size = values.len().next_power_of_two().max(1);
        let mut best = vec![(DEAD, usize::MAX); 2 * size];
        for (p, &v) in values.iter().enumerate() {
            best[size + p] = (v, p);
        }
        let mut tree = Self {
            size,
            best,
            lazy: vec![0; 2 * size],
            order,
        };
        for node in (1..size).rev() {
            tree.pull(node);
        }
        tree
    }

    fn better(&self, a: (i64, usize), b: (i64, usize)) -> (i64, usize) {
        let key = |x: (i64, usize)| {
            (
                x.0,
                Reverse(self.order.get(x.1).copied().unwrap_or(usize::MAX)),
            )
        };
        if key(b) > key(a) {
            b
        } else {
            a
        }
    }

    fn pull(&mut self, node: usize) {
        let (l, r) = (self.best[2 * node], self.best[2 * node + 1]);
        let b = self.better(l, r);
        self.best[node] = (b.0 + self.lazy[node], b.1);
    }

    fn top(&self) -> Option<(usize, usize)> {
        let (v, p) = self.best[1];
        (v > DEAD / 2).then_some((v as usize, p))
    }

    fn add(&mut self, lo: usize, hi: usize, delta: i64) {
        self.add_rec(1, 0, self.size - 1, lo, hi, delta);
    }

    fn add_rec(&mut self, node: usize, nl: usize, nr: usize, lo: usize, hi: usize, delta: i64) {
        if hi < nl || nr < lo {
            return;
        }
        if lo <= nl && nr <= hi {
            self.best[node].0 += delta;
            self.lazy[node] += delta;
            return;
        }
        let mid = (nl + nr) / 2;
        self.add_rec(2 * node, nl, mid, lo, hi, delta);
        self.add_rec(2 * node + 1, mid + 1, nr, lo, hi, delta);
        self.pull(node);
    }

    fn kill(&mut self, pos: usize) {
        let mut node = self.size + pos;
        self.best[node].0 = DEAD;
        while node > 1 {
            node /= 2;
            self.pull(node);
        }
    }
}

/// For each `t`, tests the concentration bound at scale `delta`, greedily
/// removing the worst points within the budget `min(1, eps^{-A} delta^eps)`.
/// `t` is good when the budget suffices.
pub fn finitary_check(
    cloud: &PointCloud,
    fam: &ProjectionFamily,
    delta: f64,
    epsilon: f64,
    t_samples: &[ParamVector],
    options: &FinitaryOptions,
) -> Result<SweepReport> {
    let delta0 = cloud.delta0();
    if !(delta >= delta0 && delta <= 1.0) {
        return Err(Error::BelowResolution { delta, delta0 });
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon = {epsilon} not in (0,1)"
        )));
    }
    let n = cloud.len();
    let base = options.c * delta.powf(options.alpha) * n as f64;
    let literal_bound = base * delta0.powi(-10);
    let bound = match options.bound_form {
        BoundForm::EpsilonScaled => base * delta0.powf(-10.0 * epsilon),
        BoundForm::Literal => literal_bound,
    };
    let budget = (epsilon.powf(-options.a_emp) * delta.powf(epsilon)).min(1.0);
    let max_removed = (budget * n as f64).floor() as usize;
    let summaries = t_samples
        .par_iter()
        .map(|t| -> Result<TSummary> {
            let values = projected_values(cloud, fam, t)?;
            let counts = window_counts(&values, delta);
            let max_count = counts.iter().copied().max().unwrap_or(0);
            let over = counts.iter().filter(|&&c| c as f64 > bound).count();
            let (removed, good) = if over == 0 {
                (0, true)
            } else {
                greedy_removal(&values, delta, bound, max_removed)
            };
            Ok(TSummary {
                t: t.clone(),
                max_count,
                bad_fraction: over as f64 / n as f64,
                removed_fraction: removed as f64 / n as f64,
                good,
                literal_good: max_count as f64 <= literal_bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let frac = |pred: &dyn Fn(&TSummary) -> bool| {
        if summaries.is_empty() {
            0.0
        } else {
            summaries.iter().filter(|s| !pred(s)).count() as f64 / summaries.len() as f64
        }
    };
    Ok(SweepReport {
        schema_version: SWEEP_SCHEMA_VERSION,
        delta,
        bound_used: bound,
        literal_bound,
        budget,
        exceptional_fraction: frac(&|s| s.good),
        literal_exceptional_fraction: frac(&|s| s.literal_good),
        t_samples: summaries,
        config: SweepConfigEcho {
            seed: options.seed,
            n_points: n,
            alpha: options.alpha,
            epsilon,
            a_emp: options.a_emp,
            c: options.c,
            delta0,
            bound_form: options.bound_form,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransversalityEstimate {
    pub epsilon: f64,
    pub measure_estimate: f64,
    pub standard_error: f64,
    pub sample_count: usize,
}

/// Monte Carlo estimate of `|{t in B : |f_t X - f_t X'| <= eps}|` after
/// rescaling `X - X'` to unit length.
pub fn transversality_measure(
    fam: &ProjectionFamily,
    x: &Point,
    x_prime: &Point,
    epsilon: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<TransversalityEstimate> {
    check_dim(fam.ambient_dim(), x.dim())?;
    check_dim(x.dim(), x_prime.dim())?;
    if mc_samples == 0 {
        return Err(Error::EmptySamples);
    }
    let diff = x.sub(x_prime);
    let len = diff.norm();
    if len == 0.0 {
        return Err(Error::InvalidArgument("X and X' coincide".into()));
    }
    let unit: Vec<f64> = diff.coords().iter().map(|c| c / len).collect();
    let m = fam.param_dim();
    let mut r = rng(seed);
    let mut hits = 0usize;
    for _ in 0..mc_samples {
        let t = sample_annulus_point(m, &mut r);
        let proj = fam.at(&t)?;
        if norm(&proj.factor_coords(&unit)) <= epsilon {
            hits += 1;
        }
    }
    let vol = annulus_volume(m);
    let p = hits as f64 / mc_samples as f64;
    Ok(TransversalityEstimate {
        epsilon,
        measure_estimate: vol * p,
        standard_error: vol * (p * (1.0 - p) / mc_samples as f64).sqrt(),
        sample_count: mc_samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCurveReport {
    pub delta: f64,
    pub epsilon: f64,
    /// `c_hat delta^{alpha - 7 eps} N`.
    pub bound: f64,
    pub per_s: Vec<ConcentrationReport>,
    pub good_s: Vec<bool>,
    pub good_fraction: f64,
}

/// Window counts of `(1, s, s^2) . Y` over triples `Y` for each `s` in the
/// grid; `s` is good when no count exceeds `c_hat delta^{alpha - 7 eps} N`.
pub fn moment_curve_concentration(
    triples: &[[f64; 3]],
    delta: f64,
    epsilon: f64,
    s_grid: &[f64],
    alpha: f64,
    c_hat: f64,
) -> Result<MomentCurveReport> {
    if triples.is_empty() {
        return Err(Error::InvalidArgument("no triples".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let n = triples.len();
    let bound = c_hat * delta.powf(alpha - 7.0 * epsilon) * n as f64;
    let indices: Vec<usize> = (0..n).collect();
    let per_s: Vec<ConcentrationReport> = s_grid
        .par_iter()
        .map(|&s| {
            let values: Vec<f64> = triples
                .iter()
                .map(|y| y[0] + s * y[1] + s * s * y[2])
                .collect();
            let counts = window_counts(&values, delta);
            ConcentrationReport::from_counts(ParamVector(vec![s]), delta, &indices, &counts, bound)
        })
        .collect();
    let good_s: Vec<bool> = per_s.iter().map(|r| r.bad_fraction == 0.0).collect();
    let good = good_s.iter().filter(|g| **g).count();
    Ok(MomentCurveReport {
        delta,
        epsilon,
        bound,
        good_fraction: if s_grid.is_empty() {
            0.0
        } else {
            good as f64 / s_grid.len() as f64
        },
        per_s,
        good_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointcloud::{generate, GeneratorKind, GeneratorSpec};
    use crate::sampling::sample_annulus;
    use rand::Rng;

    fn brute(values: &[f64], delta: f64) -> Vec<usize> {
        values
            .iter()
            .map(|v| values.iter().filter(|u| (*u - v).abs() <= delta).count())
            .collect()
    }

    #[test]
    fn three_point_example() {
        let d = 0.1;
        assert_eq!(window_counts(&[0.0, 0.5 * d, 3.0 * d], d), vec![2, 2, 1]);
    }

    #[test]
    fn window_counts_match_brute_force_with_ties() {
        let mut r = rng(11);
        for _ in 0..50 {
            let n = r.gen_range(1..200);
            let v: Vec<f64> = (0..n)
                .map(|_| {
                    (r.gen_range(0..40) as f64) * 0.0125 + if r.gen_bool(0.3) { 1e-17 } else { 0.0 }
                })
                .collect();
            for delta in [0.0125, 0.05, 0.1] {
                assert_eq!(window_counts(&v, delta), brute(&v, delta));
            }
        }
    }

    fn kernel_cloud() -> PointCloud {
        generate(
            &GeneratorSpec {
                delta0: 2f64.powi(-10),
                kind: GeneratorKind::KernelHyperplane {
                    family: crate::geometry::FamilySpec::Standard { n: 3 },
                    t0: vec![1.0],
                    c: 0.0,
                    count: 300,
                },
            },
            2,
        )
        .unwrap()
    }

    #[test]
    fn kernel_cloud_fully_concentrates_at_t0() {
        let cloud = kernel_cloud();
        let fam = ProjectionFamily::standard(1);
        let rep = concentration_counts(&cloud, &fam, &ParamVector(vec![1.0]), cloud.delta0(), None)
            .unwrap();
        assert!(rep.per_point_counts.iter().all(|(_, c)| *c == 300));
    }

    #[test]
    fn below_resolution_rejected() {
        let cloud = kernel_cloud();
        let fam = ProjectionFamily::standard(1);
        let err =
            concentration_counts(&cloud, &fam, &ParamVector(vec![1.0]), 1e-4, None).unwrap_err();
        assert!(matches!(err, Error::BelowResolution { .. }));
    }

    #[test]
    fn restriction_counts_only_restricted() {
        let cloud = kernel_cloud();
        let fam = ProjectionFamily::standard(1);
        let keep: Vec<usize> = (0..300).step_by(3).collect();
        let rep =
            concentration_counts(&cloud, &fam, &ParamVector(vec![1.0]), 0.01, Some(&keep)).unwrap();
        assert_eq!(rep.per_point_counts.len(), 100);
        assert!(rep.per_point_counts.iter().all(|(_, c)| *c == 100));
        assert_eq!(rep.with_bound(50.0).bad_fraction, 1.0);
    }

    #[test]
    fn counts_monotone_in_delta() {
        let cloud = kernel_cloud();
        let fam = ProjectionFamily::standard(1);
        let t = ParamVector(vec![-1.7]);
        let mut last: Option<Vec<(usize, usize)>> = None;
        for d in [2f64.powi(-10), 2f64.powi(-8), 2f64.powi(-5)] {
            let rep = concentration_counts(&cloud, &fam, &t, d, None).unwrap();
            if let Some(prev) = &last {
                for (a, b) in prev.iter().zip(&rep.per_point_counts) {
                    assert!(a.1 <= b.1);
                }
            }
            last = Some(rep.per_point_counts);
        }
    }

    fn greedy_oracle(values: &[f64], delta: f64, bound: f64, max_removed: usize) -> (usize, bool) {
        let mut alive: Vec<usize> = (0..values.len()).collect();
        let mut removed = 0;
        loop {
            let sub: Vec<f64> = alive.iter().map(|&i| values[i]).collect();
            let counts = brute(&sub, delta);
            let worst = (0..alive.len())
                .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(alive[b].cmp(&alive[a])));
            match worst {
                Some(w) if counts[w] as f64 > bound => {
                    if removed == max_removed {
                        return (removed, false);
                    }
                    alive.remove(w);
                    removed += 1;
                }
                _ => return (removed, true),
            }
        }
    }

    #[test]
    fn greedy_matches_naive_oracle() {
        let mut r = rng(5);
        for _ in 0..40 {
            let n = r.gen_range(2..80);
            let v: Vec<f64> = (0..n).map(|_| r.gen_range(0..25) as f64 / 25.0).collect();
            let bound = r.gen_range(1..10) as f64;
            let cap = r.gen_range(0..n);
            assert_eq!(
                greedy_removal(&v, 0.08, bound, cap),
                greedy_oracle(&v, 0.08, bound, cap)
            );
        }
    }

    #[test]
    fn r1_segment_never_exceptional() {
        let cloud = generate(
            &GeneratorSpec {
                delta0: 2f64.powi(-10),
                kind: GeneratorKind::UniformSegment {
                    direction: vec![1.0, 0.0, 0.0, 0.0],
                    count: 1000,
                },
            },
            0,
        )
        .unwrap();
        let fam = ProjectionFamily::standard(2);
        let ts = sample_annulus(2, 30, 1);
        let opts = FinitaryOptions {
            alpha: 1.0,
            c: 1.0,
            a_emp: 1.0,
            bound_form: BoundForm::EpsilonScaled,
            seed: Some(1),
        };
        let rep = finitary_check(&cloud, &fam, cloud.delta0(), 0.005, &ts, &opts).unwrap();
        assert_eq!(rep.exceptional_fraction, 0.0);
        assert!(rep.t_samples.iter().all(|s| s.max_count <= 3));
        let whole = finitary_check(&cloud, &fam, 1.0, 0.005, &ts, &opts).unwrap();
        assert_eq!(whole.exceptional_fraction, 0.0);
    }

    #[test]
    fn kernel_sweep_fails_near_t0_only() {
        let cloud = kernel_cloud();
        let fam = ProjectionFamily::standard(1);
        let opts = FinitaryOptions {
            alpha: 1.0,
            c: 2.0,
            a_emp: 0.0,
            bound_form: BoundForm::EpsilonScaled,
            seed: None,
        };
        let ts = vec![
            ParamVector(vec![1.0]),
            ParamVector(vec![1.0005]),
            ParamVector(vec![-1.5]),
            ParamVector(vec![1.9]),
        ];
        // bound = 2 * 2^-10 * 300 * 2^5 = 18.75, budget = 2^-0.5 of the points
        let rep = finitary_check(&cloud, &fam, cloud.delta0(), 0.05, &ts, &opts).unwrap();
        let good: Vec<bool> = rep.t_samples.iter().map(|s| s.good).collect();
        assert_eq!(good, vec![false, false, true, true]);
        assert_eq!(rep.exceptional_fraction, 0.5);
    }

    #[test]
    fn sweep_csv_header() {
        let cloud = kernel_cloud();
        let fam = ProjectionFamily::standard(1);
        let opts = FinitaryOptions {
            alpha: 1.0,
            c: 1.0,
            a_emp: 1.0,
            bound_form: BoundForm::Literal,
            seed: None,
        };
        let rep =
            finitary_check(&cloud, &fam, 0.25, 0.005, &[ParamVector(vec![1.5])], &opts).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t_1,delta,bad_fraction,removed_fraction,good\n1.5,0.25,"));
    }

    #[test]
    fn transversality_trivial_directions() {
        let fam = ProjectionFamily::standard(2);
        let o = Point::new(0.0, &[0.0, 0.0], 0.0);
        let e1 = Point::new(1.0, &[0.0, 0.0], 0.0);
        let e3 = Point::new(0.0, &[0.0, 0.0], 1.0);
        assert_eq!(
            transversality_measure(&fam, &e1, &o, 0.9, 2000, 1)
                .unwrap()
                .measure_estimate,
            0.0
        );
        assert_eq!(
            transversality_measure(&fam, &e3, &o, 0.45, 2000, 1)
                .unwrap()
                .measure_estimate,
            0.0
        );
        assert!(transversality_measure(&fam, &o, &o, 0.1, 10, 1).is_err());
    }

    #[test]
    fn transversality_symmetric_and_scale_free() {
        let fam = ProjectionFamily::standard(2);
        let x = Point::new(0.1, &[0.3, -0.2], 0.05);
        let y = Point::new(-0.1, &[0.1, 0.3], 0.0);
        let a = transversality_measure(&fam, &x, &y, 0.2, 5000, 3).unwrap();
        let b = transversality_measure(&fam, &y, &x, 0.2, 5000, 3).unwrap();
        assert_eq!(a, b);
        let shift = Point::new(0.25, &[0.25, 0.5], -0.5);
        let xs = Point::from_coords(
            x.coords()
                .iter()
                .zip(shift.coords())
                .map(|(a, b)| a + b)
                .collect(),
        )
        .unwrap();
        let ys = Point::from_coords(
            y.coords()
                .iter()
                .zip(shift.coords())
                .map(|(a, b)| a + b)
                .collect(),
        )
        .unwrap();
        let c = transversality_measure(&fam, &xs, &ys, 0.2, 5000, 3).unwrap();
        assert!((a.measure_estimate - c.measure_estimate).abs() <= 2.0 * a.standard_error + 1e-12);
    }

    #[test]
    fn moment_curve_degenerate_and_s_zero() {
        let same = vec![[0.1, 0.2, 0.3]; 50];
        let rep =
            moment_curve_concentration(&same, 0.01, 0.001, &[0.0, 1.0, 2.0], 1.0, 1.0).unwrap();
        assert_eq!(rep.good_fraction, 0.0);
        assert!(rep.per_s.iter().all(|r| r.max_count() == 50));

        let triples: Vec<[f64; 3]> = (0..40).map(|i| [i as f64 * 0.01, 5.0, -3.0]).collect();
        let rep = moment_curve_concentration(&triples, 0.015, 0.001, &[0.0], 1.0, 1.0).unwrap();
        let firsts: Vec<f64> = triples.iter().map(|y| y[0]).collect();
        let expect = window_counts(&firsts, 0.015);
        let got: Vec<usize> = rep.per_s[0]
            .per_point_counts
            .iter()
            .map(|(_, c)| *c)
            .collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn curve_segment_mostly_good() {
        let triples: Vec<[f64; 3]> = (0..2048)
            .map(|i| {
                let u = i as f64 / 2047.0 - 0.5;
                [0.3 * u, 0.4 * u, 0.2 * u * u]
            })
            .collect();
        let s_grid: Vec<f64> = (0..101).map(|i| i as f64 * 0.02).collect();
        let rep =
            moment_curve_concentration(&triples, 2f64.powi(-8), 0.005, &s_grid, 1.0, 8.0).unwrap();
        assert!(rep.good_fraction >= 0.9, "{}", rep.good_fraction);
    }

    #[test]
    fn composition_law_is_exact() {
        let cloud = generate(
            &GeneratorSpec {
                delta0: 2f64.powi(-9),
                kind: GeneratorKind::AlphaRegularRandom {
                    n: 5,
                    alpha: 0.8,
                    level: 9,
                },
            },
            8,
        )
        .unwrap();
        let fam = ProjectionFamily::standard(3);
        let t = sample_annulus(3, 1, 4).remove(0);
        let proj = fam.at(&t).unwrap();
        let triples: Vec<[f64; 3]> = cloud
            .points()
            .iter()
            .map(|p| proj.factor_coords(p.coords()))
            .collect();
        for s in [0.5, 1.0, 2.0] {
            let direct =
                concentration_counts(&cloud, &fam, &t.scaled(s), 2f64.powi(-7), None).unwrap();
            let via =
                moment_curve_concentration(&triples, 2f64.powi(-7), 0.001, &[s], 0.8, 1.0).unwrap();
            assert_eq!(
                direct.per_point_counts, via.per_s[0].per_point_counts,
                "s = {s}"
            );
        }
    }
}

//! Truncated alpha-energies of discrete measures.
//!
//! Distances are floored at `delta0`:
//! `E(X) = sum_i w_i max(|X - X_i|, delta0)^{-alpha}`, summed pairwise in
//! index order so every reported value is bit-reproducible.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{ParamVector, ProjectionFamily};
use crate::numeric::{distance, dyadic_ladder, mean, pairwise_sum, pairwise_sum_by};
use crate::pointcloud::PointCloud;
use crate::sampling::annulus_volume;

/// Relative slack granted to `rho(B(X, delta)) <= R delta^alpha` for rounding
/// in the energy and mass sums.
pub const BALL_MASS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedEnergyParams {
    pub alpha: f64,
    pub delta0: f64,
}

impl TruncatedEnergyParams {
    pub fn new(alpha: f64, delta0: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if !(alpha > 0.0 && alpha <= 1.0) {
            problems.push(format!("alpha = {alpha} not in (0,1]"));
        }
        if !(delta0 > 0.0 && delta0 <= 1.0) {
            problems.push(format!("delta0 = {delta0} not in (0,1]"));
        }
        if problems.is_empty() {
            Ok(Self { alpha, delta0 })
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }

    /// `max(d, delta0)^{-alpha}`.
    #[inline]
    pub fn kernel(&self, d: f64) -> f64 {
        let floored = d.max(self.delta0);
        if self.alpha == 1.0 {
            1.0 / floored
        } else {
            floored.powf(-self.alpha)
        }
    }
}

/// `max(|x - y|, delta0)`.
pub fn truncated_norm(x: &[f64], y: &[f64], delta0: f64) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    Ok(distance(x, y).max(delta0))
}

/// Finitely many weighted atoms in R^d with total mass 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    dim: usize,
    /// Row-major atom coordinates.
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidArgument(
                "measure needs at least one atom".into(),
            ));
        }
        check_dim(atoms.len(), weights.len())?;
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total = pairwise_sum(&weights);
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {total}, not 1"
            )));
        }
        let dim = atoms[0].len();
        let mut coords = Vec::with_capacity(dim * atoms.len());
        for a in &atoms {
            check_dim(dim, a.len())?;
            coords.extend_from_slice(a);
        }
        Ok(Self {
            dim,
            coords,
            weights,
        })
    }

    pub fn uniform(atoms: Vec<Vec<f64>>) -> Result<Self> {
        let n = atoms.len().max(1);
        Self::new(atoms, vec![1.0 / n as f64; n])
    }

    /// Uniform measure on a flat row-major coordinate buffer.
    fn uniform_flat(dim: usize, coords: Vec<f64>) -> Self {
        let n = coords.len() / dim;
        Self {
            dim,
            coords,
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// `rho(B(x, radius))` for the closed ball.
    pub fn ball_mass(&self, x: &[f64], radius: f64) -> f64 {
        pairwise_sum_by(self.len(), &|i| {
            if distance(self.atom(i), x) <= radius {
                self.weights[i]
            } else {
                0.0
            }
        })
    }

    fn energy_unchecked(&self, x: &[f64], params: &TruncatedEnergyParams) -> f64 {
        pairwise_sum_by(self.len(), &|i| {
            self.weights[i] * params.kernel(distance(self.atom(i), x))
        })
    }
}

/// `sum_i w_i max(|x - X_i|, delta0)^{-alpha}` in index order.
pub fn truncated_energy(
    rho: &DiscreteMeasure,
    x: &[f64],
    params: &TruncatedEnergyParams,
) -> Result<f64> {
    check_dim(rho.dim(), x.len())?;
    Ok(rho.energy_unchecked(x, params))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallMassRow {
    pub delta: f64,
    pub mass: f64,
    pub allowed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallMassCheck {
    pub energy: f64,
    pub bound: f64,
    pub rows: Vec<BallMassRow>,
    /// Scales where `rho(B(X, delta)) > R delta^alpha`.
    pub violations: Vec<f64>,
}

impl BallMassCheck {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `rho(B(X, delta)) <= R delta^alpha` at every dyadic `delta` in
/// `[delta0, 1]`, given that the truncated energy at `X` is at most `R`.
pub fn ball_mass_bound_check(
    rho: &DiscreteMeasure,
    x: &[f64],
    params: &TruncatedEnergyParams,
    bound: f64,
) -> Result<BallMassCheck> {
    let energy = truncated_energy(rho, x, params)?;
    if energy > bound {
        return Err(Error::HypothesisViolated { energy, bound });
    }
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for delta in dyadic_ladder(params.delta0, 1.0) {
        let mass = rho.ball_mass(x, delta);
        let allowed = bound * delta.powf(params.alpha);
        if mass > allowed * (1.0 + BALL_MASS_SLACK) {
            violations.push(delta);
        }
        rows.push(BallMassRow {
            delta,
            mass,
            allowed,
        });
    }
    Ok(BallMassCheck {
        energy,
        bound,
        rows,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusRow {
    pub k: u32,
    pub mass: f64,
    /// `mass * 2^{k alpha}`.
    pub weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnuliProfile {
    pub index: usize,
    pub alpha: f64,
    pub per_k: Vec<AnnulusRow>,
}

impl AnnuliProfile {
    pub fn total_mass(&self) -> f64 {
        let m: Vec<f64> = self.per_k.iter().map(|r| r.mass).collect();
        pairwise_sum(&m)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "k,mass,weighted")?;
        for r in &self.per_k {
            writeln!(out, "{},{},{}", r.k, r.mass, r.weighted)?;
        }
        Ok(())
    }
}

/// Annulus index of a distance: `k < k0` when `2^{-k-1} < d <= 2^{-k}`, else `k0`.
fn annulus_of(d: f64, k0: u32) -> u32 {
    if d <= (-(k0 as f64)).exp2() {
        return k0;
    }
    let mut k = (-d.log2()).floor().max(0.0) as u32;
    // Settle boundary cases where log2 rounds across a power of two.
    while k > 0 && d > (-(k as f64)).exp2() {
        k -= 1;
    }
    while d <= (-(k as f64 + 1.0)).exp2() {
        k += 1;
    }
    k.min(k0)
}

/// Splits the cloud around its point `index` into the dyadic annuli
/// `F_k = {X' : 2^{-k-1} < |X - X'| <= 2^{-k}}` for `k < k0`, with
/// `F_{k0} = {X' : |X - X'| <= 2^{-k0}}`.
pub fn annuli_profile(cloud: &PointCloud, index: usize, alpha: f64) -> Result<AnnuliProfile> {
    if index >= cloud.len() {
        return Err(Error::InvalidArgument(format!(
            "index {index} out of range for {} points",
            cloud.len()
        )));
    }
    let k0 = cloud.k0();
    let mut counts = vec![0usize; k0 as usize + 1];
    let x = cloud.point(index).coords();
    for p in cloud.points() {
        counts[annulus_of(distance(x, p.coords()), k0) as usize] += 1;
    }
    let n = cloud.len() as f64;
    let per_k = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let mass = c as f64 / n;
            AnnulusRow {
                k: k as u32,
                mass,
                weighted: mass * (k as f64 * alpha).exp2(),
            }
        })
        .collect();
    Ok(AnnuliProfile {
        index,
        alpha,
        per_k,
    })
}

/// Factor-map images `f_t(X)` of the whole cloud, row-major in R^3.
fn factor_images(cloud: &PointCloud, fam: &ProjectionFamily, t: &ParamVector) -> Result<Vec<f64>> {
    check_dim(fam.ambient_dim(), cloud.dim())?;
    let proj = fam.at(t)?;
    Ok(cloud
        .points()
        .iter()
        .flat_map(|p| proj.factor_coords(p.coords()))
        .collect())
}

/// `E_{alpha, mu_t}(f_t X)` for every `X` in the cloud, where `mu_t` is the
/// pushforward of the uniform measure on the cloud.
pub fn projected_energies(
    cloud: &PointCloud,
    fam: &ProjectionFamily,
    params: &TruncatedEnergyParams,
    t: &ParamVector,
) -> Result<Vec<f64>> {
    let images = DiscreteMeasure::uniform_flat(3, factor_images(cloud, fam, t)?);
    Ok((0..images.len())
        .into_par_iter()
        .map(|i| images.energy_unchecked(images.atom(i), params))
        .collect())
}

/// Mean projected energies at several truncation floors from one pass over
/// the pairwise distances. Entry `[j][i]` belongs to `delta0s[j]` and `t_samples[i]`.
pub fn mean_projected_energies_multi(
    cloud: &PointCloud,
    fam: &ProjectionFamily,
    alpha: f64,
    delta0s: &[f64],
    t_samples: &[ParamVector],
) -> Result<Vec<Vec<f64>>> {
    let params: Vec<TruncatedEnergyParams> = delta0s
        .iter()
        .map(|&d| TruncatedEnergyParams::new(alpha, d))
        .collect::<Result<_>>()?;
    let per_t: Vec<Vec<f64>> = t_samples
        .par_iter()
        .map(|t| -> Result<Vec<f64>> {
            let images = DiscreteMeasure::uniform_flat(3, factor_images(cloud, fam, t)?);
            let n = images.len();
            let w = 1.0 / n as f64;
            let per_point: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let x = images.atom(i);
                    let dists: Vec<f64> = (0..n).map(|j| distance(images.atom(j), x)).collect();
                    params
                        .iter()
                        .map(|p| pairwise_sum_by(n, &|j| w * p.kernel(dists[j])))
                        .collect()
                })
                .collect();
            Ok((0..params.len())
                .map(|k| {
                    let col: Vec<f64> = per_point.iter().map(|row| row[k]).collect();
                    mean(&col)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..params.len())
        .map(|k| per_t.iter().map(|row| row[k]).collect())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedEnergy {
    /// Mean over `X` of `E_{alpha, mu_t}(f_t X)`, one entry per `t`.
    pub per_t: Vec<f64>,
    /// `vol(B) * mean(per_t)`, the Monte Carlo estimate of the integral over `B`.
    pub integral: f64,
    pub standard_error: f64,
    pub volume: f64,
}

impl AveragedEnergy {
    pub fn from_means(per_t: Vec<f64>, param_dim: usize) -> Result<Self> {
        if per_t.is_empty() {
            return Err(Error::EmptySamples);
        }
        let volume = annulus_volume(param_dim);
        let m = mean(&per_t);
        let n = per_t.len() as f64;
        let var = if per_t.len() > 1 {
            let sq: Vec<f64> = per_t.iter().map(|v| (v - m) * (v - m)).collect();
            pairwise_sum(&sq) / (n - 1.0)
        } else {
            0.0
        };
        Ok(Self {
            integral: volume * m,
            standard_error: volume * (var / n).sqrt(),
            volume,
            per_t,
        })
    }

    pub fn mean(&self) -> f64 {
        mean(&self.per_t)
    }
}

/// Monte Carlo estimate of the integral over `B` of the mean projected energy.
/// `t_samples` should be uniform on `B`, e.g. from [`crate::sampling::sample_annulus`].
pub fn average_projected_energy(
    cloud: &PointCloud,
    fam: &ProjectionFamily,
    params: &TruncatedEnergyParams,
    t_samples: &[ParamVector],
) -> Result<AveragedEnergy> {
    if t_samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let per_t = t_samples
        .par_iter()
        .map(|t| projected_energies(cloud, fam, params, t).map(|e| mean(&e)))
        .collect::<Result<Vec<f64>>>()?;
    AveragedEnergy::from_means(per_t, fam.param_dim())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub per_point: Vec<(usize, f64)>,
    pub mean: f64,
    pub threshold_used: f64,
    pub surviving_indices: Vec<usize>,
}

impl EnergyProfile {
    pub fn new(energies: &[f64], threshold: f64) -> Self {
        Self {
            per_point: energies.iter().copied().enumerate().collect(),
            mean: mean(energies),
            threshold_used: threshold,
            surviving_indices: (0..energies.len())
                .filter(|&i| energies[i] < threshold)
                .collect(),
        }
    }

    pub fn surviving_fraction(&self) -> f64 {
        self.surviving_indices.len() as f64 / self.per_point.len() as f64
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "index,energy")?;
        for (i, e) in &self.per_point {
            writeln!(out, "{i},{e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodSetSelection {
    pub epsilon: f64,
    /// Grand mean of the energies over all `(t, X)`.
    pub c_prime: f64,
    /// `C' delta0^{-2 eps}`: `t` is kept iff its mean energy is below this.
    pub t_threshold: f64,
    /// `C' delta0^{-3 eps}`: `X` survives at `t` iff its energy is below this.
    pub x_threshold: f64,
    pub t_samples: Vec<ParamVector>,
    pub good_t: Vec<bool>,
    pub profiles: Vec<EnergyProfile>,
    pub rejected_t_fraction: f64,
    /// Largest fraction of points removed at a kept `t`.
    pub max_removed_fraction: f64,
}

impl GoodSetSelection {
    pub fn good_indices(&self) -> Vec<usize> {
        (0..self.good_t.len()).filter(|&i| self.good_t[i]).collect()
    }
}

/// The two Chebyshev cuts: `t` is kept when its mean energy is below
/// `C' delta0^{-2 eps}`, and at a kept `t` the point `X` survives when its
/// energy is below `C' delta0^{-3 eps}`, with `C'` the measured grand mean.
pub fn select_good_sets(
    cloud: &PointCloud,
    fam: &ProjectionFamily,
    params: &TruncatedEnergyParams,
    epsilon: f64,
    t_samples: &[ParamVector],
) -> Result<GoodSetSelection> {
    let energies = t_samples
        .par_iter()
        .map(|t| projected_energies(cloud, fam, params, t))
        .collect::<Result<Vec<Vec<f64>>>>()?;
    select_from_energies(&energies, params.delta0, epsilon, t_samples)
}

/// [`select_good_sets`] on precomputed per-`t` energies.
pub fn select_from_energies(
    energies: &[Vec<f64>],
    delta0: f64,
    epsilon: f64,
    t_samples: &[ParamVector],
) -> Result<GoodSetSelection> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon = {epsilon} not in (0,1)"
        )));
    }
    if t_samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    check_dim(t_samples.len(), energies.len())?;
    let means: Vec<f64> = energies.iter().map(|e| mean(e)).collect();
    let c_prime = mean(&means);
    let t_threshold = c_prime * delta0.powf(-2.0 * epsilon);
    let x_threshold = c_prime * delta0.powf(-3.0 * epsilon);
    let good_t: Vec<bool> = means.iter().map(|&m| m < t_threshold).collect();
    let profiles: Vec<EnergyProfile> = energies
        .iter()
        .map(|e| EnergyProfile::new(e, x_threshold))
        .collect();
    let rejected = good_t.iter().filter(|g| !**g).count();
    let max_removed_fraction = profiles
        .iter()
        .zip(&good_t)
        .filter(|(_, g)| **g)
        .map(|(p, _)| 1.0 - p.surviving_fraction())
        .fold(0.0, f64::max);
    Ok(GoodSetSelection {
        epsilon,
        c_prime,
        t_threshold,
        x_threshold,
        t_samples: t_samples.to_vec(),
        good_t,
        profiles,
        rejected_t_fraction: rejected as f64 / t_samples.len() as f64,
        max_removed_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::pointcloud::{generate, GeneratorKind, GeneratorSpec};
    use crate::sampling::sample_annulus;

    fn params(alpha: f64, delta0: f64) -> TruncatedEnergyParams {
        TruncatedEnergyParams::new(alpha, delta0).unwrap()
    }

    #[test]
    fn truncated_norm_examples() {
        assert_eq!(
            truncated_norm(&[0.0, 0.0], &[0.0, 0.0], 0.25).unwrap(),
            0.25
        );
        assert_eq!(truncated_norm(&[0.0, 0.0], &[0.6, 0.8], 0.25).unwrap(), 1.0);
        assert_eq!(
            truncated_norm(&[0.0, 0.0], &[0.1, 0.0], 0.25).unwrap(),
            0.25
        );
    }

    #[test]
    fn energy_examples() {
        let atom = DiscreteMeasure::uniform(vec![vec![0.0, 0.0]]).unwrap();
        assert_eq!(
            truncated_energy(&atom, &[0.0, 0.0], &params(1.0, 0.5)).unwrap(),
            2.0
        );
        let pair = DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(
            truncated_energy(&pair, &[0.0, 0.0], &params(1.0, 0.5)).unwrap(),
            1.5
        );
    }

    #[test]
    fn ball_mass_examples() {
        let pair = DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let chk = ball_mass_bound_check(&pair, &[0.0, 0.0], &params(1.0, 0.5), 1.5).unwrap();
        assert!(chk.passes());
        assert_eq!(chk.rows[0].delta, 0.5);
        assert_eq!(chk.rows[0].mass, 0.5);
        assert_eq!(chk.rows[0].allowed, 0.75);

        let atom = DiscreteMeasure::uniform(vec![vec![0.0]]).unwrap();
        let p = params(0.7, 0.125);
        let r = 0.125f64.powf(-0.7);
        assert!(ball_mass_bound_check(&atom, &[0.0], &p, r)
            .unwrap()
            .passes());

        let err = ball_mass_bound_check(&pair, &[0.0, 0.0], &params(1.0, 0.5), 1.0).unwrap_err();
        assert!(matches!(err, Error::HypothesisViolated { .. }));
    }

    #[test]
    fn floor_of_one_gives_unit_energy() {
        let rho = DiscreteMeasure::new(
            vec![vec![0.1, 0.2], vec![-0.3, 0.1], vec![0.0, -0.2]],
            vec![0.2, 0.5, 0.3],
        )
        .unwrap();
        let e = truncated_energy(&rho, &[0.05, 0.0], &params(0.6, 1.0)).unwrap();
        assert!((e - 1.0).abs() < 1e-15);
    }

    #[test]
    fn energy_monotone_in_floor() {
        let atoms: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 / 100.0, 0.0]).collect();
        let rho = DiscreteMeasure::uniform(atoms).unwrap();
        let mut last = f64::INFINITY;
        for d in dyadic_ladder(2f64.powi(-10), 1.0) {
            let e = truncated_energy(&rho, &[0.0, 0.0], &params(0.8, d)).unwrap();
            assert!(e <= last);
            last = e;
        }
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(DiscreteMeasure::new(vec![vec![0.0]], vec![0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![1.5, -0.5]).is_err());
    }

    fn segment(count: usize, k0: i32) -> PointCloud {
        generate(
            &GeneratorSpec {
                delta0: 2f64.powi(-k0),
                kind: GeneratorKind::UniformSegment {
                    direction: vec![1.0, 0.0, 0.0],
                    count,
                },
            },
            0,
        )
        .unwrap()
    }

    #[test]
    fn annulus_boundaries() {
        assert_eq!(annulus_of(1.0, 5), 0);
        assert_eq!(annulus_of(0.5, 5), 1);
        assert_eq!(annulus_of(0.75, 5), 0);
        assert_eq!(annulus_of(0.5000001, 5), 0);
        assert_eq!(annulus_of(2f64.powi(-5), 5), 5);
        assert_eq!(annulus_of(0.0, 5), 5);
        assert_eq!(annulus_of(0.04, 5), 4);
    }

    #[test]
    fn singleton_annuli() {
        let cloud = PointCloud::new(vec![Point::new(0.0, &[0.0], 0.0)], 0.125, 1.0, 1.0).unwrap();
        let prof = annuli_profile(&cloud, 0, 0.5).unwrap();
        assert_eq!(prof.per_k.len(), 4);
        assert_eq!(prof.per_k[3].mass, 1.0);
        assert_eq!(prof.per_k[3].weighted, 1.5f64.exp2());
    }

    #[test]
    fn grid_annuli_weighted_at_most_four() {
        let cloud = segment(1024, 10);
        for idx in [0, 1, 300, 511, 1023] {
            let prof = annuli_profile(&cloud, idx, 1.0).unwrap();
            assert!((prof.total_mass() - 1.0).abs() < 1e-12);
            for row in &prof.per_k {
                assert!(row.weighted <= 4.0, "{row:?}");
            }
        }
    }

    #[test]
    fn r1_pair_energy_constant_in_t() {
        let cloud = PointCloud::new(
            vec![
                Point::new(-0.25, &[0.1], 0.2),
                Point::new(0.25, &[0.1], 0.2),
            ],
            2f64.powi(-6),
            1.0,
            2.0,
        )
        .unwrap();
        // w and r2 agree, so f_t X - f_t X' = (0.5, 0, 0) for every t.
        let fam = ProjectionFamily::standard(1);
        let ts = sample_annulus(1, 20, 1);
        let avg = average_projected_energy(&cloud, &fam, &params(1.0, 2f64.powi(-6)), &ts).unwrap();
        for v in &avg.per_t {
            assert_eq!(*v, avg.per_t[0]);
        }
        assert_eq!(avg.standard_error, 0.0);
    }

    #[test]
    fn empty_samples_rejected() {
        let cloud = segment(16, 4);
        let fam = ProjectionFamily::standard(1);
        let err = average_projected_energy(&cloud, &fam, &params(1.0, 0.0625), &[]).unwrap_err();
        assert!(matches!(err, Error::EmptySamples));
    }

    #[test]
    fn multi_floor_matches_single() {
        let cloud = segment(200, 7);
        let fam = ProjectionFamily::standard(1);
        let ts = sample_annulus(1, 4, 3);
        let floors = [2f64.powi(-5), 2f64.powi(-7)];
        let multi = mean_projected_energies_multi(&cloud, &fam, 1.0, &floors, &ts).unwrap();
        for (j, &d) in floors.iter().enumerate() {
            let single = average_projected_energy(&cloud, &fam, &params(1.0, d), &ts).unwrap();
            assert_eq!(multi[j], single.per_t);
        }
    }

    #[test]
    fn equal_energies_keep_everything() {
        let energies = vec![vec![2.0; 5]; 3];
        let ts = vec![ParamVector(vec![1.5]); 3];
        let sel = select_from_energies(&energies, 2f64.powi(-8), 0.01, &ts).unwrap();
        assert!(sel.good_t.iter().all(|g| *g));
        assert!(sel.profiles.iter().all(|p| p.surviving_indices.len() == 5));
        assert_eq!(sel.rejected_t_fraction, 0.0);
    }

    #[test]
    fn selection_monotone_in_epsilon_and_chained_bound_holds() {
        let cloud = generate(
            &GeneratorSpec {
                delta0: 2f64.powi(-7),
                kind: GeneratorKind::AlphaRegularRandom {
                    n: 3,
                    alpha: 0.7,
                    level: 8,
                },
            },
            4,
        )
        .unwrap();
        let fam = ProjectionFamily::standard(1);
        let p = params(0.7, cloud.delta0());
        let ts = sample_annulus(1, 24, 9);
        let energies: Vec<Vec<f64>> = ts
            .iter()
            .map(|t| projected_energies(&cloud, &fam, &p, t).unwrap())
            .collect();
        let mut last_t = 0;
        let mut last_x = 0;
        for eps in [0.01, 0.05, 0.1, 0.3] {
            let sel = select_from_energies(&energies, p.delta0, eps, &ts).unwrap();
            let kept_t = sel.good_t.iter().filter(|g| **g).count();
            let kept_x: usize = sel
                .profiles
                .iter()
                .map(|pr| pr.surviving_indices.len())
                .sum();
            assert!(kept_t >= last_t && kept_x >= last_x);
            last_t = kept_t;
            last_x = kept_x;
            // Survivors satisfy the ball-mass bound with R = x_threshold.
            for (ti, t) in ts
                .iter()
                .enumerate()
                .filter(|(i, _)| sel.good_t[*i])
                .take(3)
            {
                let proj = fam.at(t).unwrap();
                let atoms: Vec<Vec<f64>> = cloud
                    .points()
                    .iter()
                    .map(|x| proj.factor_coords(x.coords()).to_vec())
                    .collect();
                let rho = DiscreteMeasure::uniform(atoms.clone()).unwrap();
                for &i in sel.profiles[ti].surviving_indices.iter().step_by(37) {
                    let chk = ball_mass_bound_check(&rho, &atoms[i], &p, sel.x_threshold).unwrap();
                    assert!(chk.passes());
                }
            }
        }
    }
}

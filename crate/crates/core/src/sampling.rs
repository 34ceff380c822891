//! Seeded sampling of the parameter annulus `B = {t in R^m : 1 <= |t| <= 2}`.
//!
//! All randomness in the crate flows through [`rng`], a ChaCha8 stream
//! keyed by a `u64` seed, which produces the same sequence on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::ParamVector;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Volume of the unit ball in R^m.
pub fn unit_ball_volume(m: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_m = V_{m-2} * 2 pi / m
    let mut v = if m.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = if m.is_multiple_of(2) { 2 } else { 3 };
    while k <= m {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

/// Lebesgue measure of `B` in R^m: `V_m (2^m - 1)`.
pub fn annulus_volume(m: usize) -> f64 {
    unit_ball_volume(m) * (2f64.powi(m as i32) - 1.0)
}

/// One uniform draw from `B` by rejection from the cube `[-2, 2]^m`.
pub fn sample_annulus_point<R: Rng>(m: usize, rng: &mut R) -> ParamVector {
    loop {
        let t: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..=2.0)).collect();
        let p = ParamVector(t);
        if p.in_annulus() {
            return p;
        }
    }
}

/// `count` uniform draws from `B`, deterministic in `seed`.
pub fn sample_annulus(m: usize, count: usize, seed: u64) -> Vec<ParamVector> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| sample_annulus_point(m, &mut r))
        .collect()
}

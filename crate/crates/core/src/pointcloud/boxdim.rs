use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{dyadic_ladder, linear_fit};

/// Box-counting fit of `log2 N(delta)` against `log2(1/delta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub slope: f64,
    /// Intercept of the fit, in log2 units.
    pub intercept: f64,
    pub fit_range: (f64, f64),
    /// RMS residual of the fit, in log2 units.
    pub residual: f64,
    /// `(delta, occupied box count)` from fine to coarse.
    pub counts: Vec<(f64, usize)>,
}

pub const MIN_SCALES: usize = 4;

/// `[4 delta0, 1/4]`.
pub fn default_fit_range(delta0: f64) -> (f64, f64) {
    (4.0 * delta0, 0.25)
}

fn fit(counts: Vec<(f64, usize)>, fit_range: (f64, f64)) -> DimensionEstimate {
    let xs: Vec<f64> = counts.iter().map(|(d, _)| -d.log2()).collect();
    let ys: Vec<f64> = counts.iter().map(|(_, c)| (*c as f64).log2()).collect();
    let (slope, intercept, residual) = linear_fit(&xs, &ys);
    DimensionEstimate {
        slope,
        intercept,
        fit_range,
        residual,
        counts,
    }
}

fn scales(fit_range: (f64, f64)) -> Result<Vec<f64>> {
    let ladder = dyadic_ladder(fit_range.0, fit_range.1);
    if ladder.len() < MIN_SCALES {
        return Err(Error::TooFewScales {
            found: ladder.len(),
        });
    }
    Ok(ladder)
}

/// Box dimension of a set of reals using dyadic boxes `[k delta, (k+1) delta)`.
pub fn box_dimension_values(values: &[f64], fit_range: (f64, f64)) -> Result<DimensionEstimate> {
    let ladder = scales(fit_range)?;
    if values.is_empty() {
        return Err(Error::InvalidArgument("no values to count".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let counts = ladder
        .iter()
        .map(|&delta| {
            let mut boxes = 0usize;
            let mut last: Option<i64> = None;
            for v in &sorted {
                let b = (v / delta).floor() as i64;
                if last != Some(b) {
                    boxes += 1;
                    last = Some(b);
                }
            }
            (delta, boxes)
        })
        .collect();
    Ok(fit(counts, fit_range))
}

/// Box dimension of a point set in R^d using the dyadic cube grid.
pub fn box_dimension_points(points: &[&[f64]], fit_range: (f64, f64)) -> Result<DimensionEstimate> {
    let ladder = scales(fit_range)?;
    if points.is_empty() {
        return Err(Error::InvalidArgument("no points to count".into()));
    }
    let counts = ladder
        .iter()
        .map(|&delta| {
            let boxes: HashSet<Vec<i64>> = points
                .iter()
                .map(|p| p.iter().map(|x| (x / delta).floor() as i64).collect())
                .collect();
            (delta, boxes.len())
        })
        .collect();
    Ok(fit(counts, fit_range))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn cantor_values(level: u32) -> Vec<f64> {
        let mut v = vec![0.0];
        let mut len = 1.0;
        for _ in 0..level {
            len /= 3.0;
            v = v.iter().flat_map(|&a| [a, a + 2.0 * len]).collect();
        }
        v
    }

    #[test]
    fn uniform_samples_have_dimension_one() {
        let mut r = crate::sampling::rng(5);
        let v: Vec<f64> = (0..4096).map(|_| r.gen::<f64>()).collect();
        let est = box_dimension_values(&v, default_fit_range(2f64.powi(-12))).unwrap();
        assert!((est.slope - 1.0).abs() <= 0.05, "{est:?}");
    }

    #[test]
    fn middle_thirds_cantor() {
        let v = cantor_values(10);
        let est = box_dimension_values(&v, default_fit_range(2f64.powi(-14))).unwrap();
        let expected = 2f64.ln() / 3f64.ln();
        assert!((est.slope - expected).abs() <= 0.05, "{est:?}");
    }

    #[test]
    fn repeated_value_has_dimension_zero() {
        let v = vec![0.3; 100];
        let est = box_dimension_values(&v, (2f64.powi(-10), 0.25)).unwrap();
        assert!(est.slope.abs() <= 0.01);
    }

    #[test]
    fn too_few_scales() {
        let err = box_dimension_values(&[0.1, 0.2], (0.125, 0.5)).unwrap_err();
        assert!(matches!(err, Error::TooFewScales { found: 3 }));
    }

    #[test]
    fn permutation_invariance() {
        let mut v = cantor_values(8);
        let a = box_dimension_values(&v, (2f64.powi(-10), 0.25)).unwrap();
        v.reverse();
        v.swap(3, 77);
        let b = box_dimension_values(&v, (2f64.powi(-10), 0.25)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_compatible_translation_is_exact() {
        let v = cantor_values(9);
        let range = (2f64.powi(-10), 0.25);
        let a = box_dimension_values(&v, range).unwrap();
        let shifted: Vec<f64> = v.iter().map(|x| x - 0.75).collect();
        let b = box_dimension_values(&shifted, range).unwrap();
        assert_eq!(a.slope, b.slope);
    }

    #[test]
    fn isometries_move_segment_slope_boundedly() {
        // Dyadic box counts of a unit segment depend on how it meets the grid;
        // at N = 4096 the spread over rotations and translations is about 0.07.
        let raw: Vec<f64> = (0..4096).map(|i| i as f64 / 4095.0 - 0.5).collect();
        let range = default_fit_range(2f64.powi(-12));
        let mut slopes = Vec::new();
        for angle in [0.0f64, 0.3, 0.5, 0.785, 1.0, 2.2] {
            for shift in [[0.0, 0.0], [0.123, -0.071], [0.3, 0.2]] {
                let pts: Vec<[f64; 2]> = raw
                    .iter()
                    .map(|s| [angle.cos() * s + shift[0], angle.sin() * s + shift[1]])
                    .collect();
                let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
                slopes.push(box_dimension_points(&refs, range).unwrap().slope);
            }
        }
        let lo = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo < 0.1, "{slopes:?}");
        assert!(lo > 0.9 && hi < 1.1);
    }
}

//! Uniform-grid spatial index for closed-ball range counting.
//!
//! Cells are hashed on at most three "key" coordinates (the ones with the
//! widest spread). A point within distance `delta` of a query differs by at
//! most `delta` in every coordinate, so scanning the `3^k` neighbouring cells
//! on the key coordinates and filtering by full Euclidean distance is exact.

use std::collections::HashMap;

use crate::numeric::distance;

const MAX_KEY_DIMS: usize = 3;

pub struct GridIndex<'a> {
    points: &'a [&'a [f64]],
    cell: f64,
    key_dims: Vec<usize>,
    cells: HashMap<Vec<i64>, Vec<u32>>,
    offsets: Vec<Vec<i64>>,
}

fn widest_axes(points: &[&[f64]]) -> Vec<usize> {
    let n = points.first().map_or(0, |p| p.len());
    let mut spread: Vec<(usize, f64)> = (0..n)
        .map(|j| {
            let (lo, hi) = points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p[j]), hi.max(p[j]))
                });
            (j, hi - lo)
        })
        .collect();
    spread.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut axes: Vec<usize> = spread.iter().take(MAX_KEY_DIMS).map(|(j, _)| *j).collect();
    axes.sort_unstable();
    axes
}

impl<'a> GridIndex<'a> {
    pub fn new(points: &'a [&'a [f64]], cell: f64) -> Self {
        assert!(cell > 0.0, "grid cell size must be positive");
        let key_dims = widest_axes(points);
        let mut cells: HashMap<Vec<i64>, Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            let key: Vec<i64> = key_dims
                .iter()
                .map(|&j| (p[j] / cell).floor() as i64)
                .collect();
            cells.entry(key).or_default().push(i as u32);
        }
        let k = key_dims.len();
        let mut offsets = vec![Vec::with_capacity(k)];
        for _ in 0..k {
            offsets = offsets
                .into_iter()
                .flat_map(|o| {
                    (-1..=1).map(move |d| {
                        let mut o = o.clone();
                        o.push(d);
                        o
                    })
                })
                .collect();
        }
        GridIndex {
            points,
            cell,
            key_dims,
            cells,
            offsets,
        }
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    /// Number of indexed points `p` with `|p - center| <= radius`.
    ///
    /// `radius` must not exceed the cell size.
    pub fn count_within(&self, center: &[f64], radius: f64) -> usize {
        debug_assert!(radius <= self.cell);
        let base: Vec<i64> = self
            .key_dims
            .iter()
            .map(|&j| (center[j] / self.cell).floor() as i64)
            .collect();
        let mut key = vec![0i64; base.len()];
        let mut count = 0;
        for off in &self.offsets {
            for (k, (b, o)) in key.iter_mut().zip(base.iter().zip(off)) {
                *k = b + o;
            }
            if let Some(members) = self.cells.get(&key) {
                count += members
                    .iter()
                    .filter(|&&i| distance(self.points[i as usize], center) <= radius)
                    .count();
            }
        }
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn matches_brute_force_in_five_dimensions() {
        let mut r = crate::sampling::rng(3);
        let raw: Vec<Vec<f64>> = (0..700)
            .map(|_| (0..5).map(|_| r.gen_range(-0.4..0.4)).collect())
            .collect();
        let pts: Vec<&[f64]> = raw.iter().map(|p| p.as_slice()).collect();
        for delta in [0.05, 0.1, 0.3] {
            let grid = GridIndex::new(&pts, delta);
            for c in raw.iter().step_by(37) {
                let brute = pts.iter().filter(|p| distance(p, c) <= delta).count();
                assert_eq!(grid.count_within(c, delta), brute);
            }
        }
    }
}

//! Residual table for the SO(n,1) realization.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use rproj_core::geometry::{project, Point, ProjectionFamily};
use rproj_core::lie::{
    a_matrix, contraction_check, embed_r, invariance_check, lie_membership, u_matrix, xi, RElement,
};
use rproj_core::sampling::{rng, sample_annulus_point};
use rproj_core::Result;

/// Worst residuals over the random instances drawn for one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LieRow {
    pub n: usize,
    pub samples: usize,
    /// `|A^T Q0 + Q0 A|` for `A = X(r1, w, r2)`.
    pub membership: f64,
    pub trace: f64,
    /// `|u_t u_t' - u_{t+t'}|`.
    pub u_group: f64,
    /// `|a_s a_s' - a_{s+s'}|`.
    pub a_group: f64,
    /// `|Ad(a_s) X(r1,0,0) - e^s X(r1,0,0)|`.
    pub contraction: f64,
    /// Lie residual of `u_t X u_{-t}` minus its `r` part.
    pub invariance: f64,
    /// `|xi_t(X) - pi_t(X)|` for the standard family.
    pub xi_vs_pi: f64,
}

impl LieRow {
    /// Largest of the structural residuals (everything except `xi_vs_pi`).
    pub fn structural_max(&self) -> f64 {
        [
            self.membership,
            self.trace.abs(),
            self.u_group,
            self.a_group,
            self.contraction,
            self.invariance,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn random_element<R: Rng>(n: usize, r: &mut R) -> RElement {
    RElement::new(
        r.gen_range(-1.0..=1.0),
        (0..n - 2).map(|_| r.gen_range(-1.0..=1.0)).collect(),
        r.gen_range(-1.0..=1.0),
    )
}

pub fn lie_row(n: usize, samples: usize, seed: u64) -> Result<LieRow> {
    let mut r = rng(seed);
    let m = n - 2;
    let fam = ProjectionFamily::standard(m);
    let mut row = LieRow {
        n,
        samples,
        membership: 0.0,
        trace: 0.0,
        u_group: 0.0,
        a_group: 0.0,
        contraction: 0.0,
        invariance: 0.0,
        xi_vs_pi: 0.0,
    };
    for _ in 0..samples {
        let x = random_element(n, &mut r);
        let memb = lie_membership(&embed_r(&x), n)?;
        row.membership = row.membership.max(memb.residual);
        row.trace = row.trace.max(memb.trace.abs());

        let t = sample_annulus_point(m, &mut r);
        let t2 = sample_annulus_point(m, &mut r);
        let sum: Vec<f64> = t.0.iter().zip(&t2.0).map(|(a, b)| a + b).collect();
        row.u_group = row
            .u_group
            .max((u_matrix(&t.0) * u_matrix(&t2.0) - u_matrix(&sum)).norm());

        let s: f64 = r.gen_range(-2.0..=2.0);
        let s2: f64 = r.gen_range(-2.0..=2.0);
        row.a_group = row
            .a_group
            .max((a_matrix(s, n) * a_matrix(s2, n) - a_matrix(s + s2, n)).norm());

        let contraction = contraction_check(&x, &t.0, &[s, -s, s2])?;
        row.contraction = row.contraction.max(contraction.max_plus_residual);

        let inv = invariance_check(&t.0, &x)?;
        row.invariance = row.invariance.max(inv.remainder.residual);

        let p = project(&fam, &t, &Point::new(x.r1, &x.w, x.r2))?;
        row.xi_vs_pi = row.xi_vs_pi.max((xi(&t.0, &x)? - p).abs());
    }
    Ok(row)
}

pub fn lie_table(n_values: &[usize], samples: usize, seed: u64) -> Result<Vec<LieRow>> {
    n_values
        .iter()
        .map(|&n| lie_row(n, samples, seed.wrapping_add(n as u64)))
        .collect()
}

pub fn format_table(rows: &[LieRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>3} {:>7} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "n", "samples", "lie", "trace", "u_group", "a_group", "contract", "invariant", "xi-pi"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:>3} {:>7} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e}",
            r.n,
            r.samples,
            r.membership,
            r.trace,
            r.u_group,
            r.a_group,
            r.contraction,
            r.invariance,
            r.xi_vs_pi
        );
    }
    out
}

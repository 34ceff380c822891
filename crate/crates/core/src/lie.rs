//! Matrix realization inside `SO(Q0)`, `Q0(x) = 2 x_1 x_{n+1} - sum_{i=2}^{n} x_i^2`.
//!
//! Documentation uses 1-based `(row, col)` positions on `(n+1) x (n+1)`
//! matrices; storage is 0-based.
//!
//! `X(r1, w, r2)` places `r1` at `(1,n)` and `(n,n+1)`, `r2` at `(n,1)` and
//! `(n+1,n)`, `w_{i-1}` at `(i,n)` and `-w_{i-1}` at `(n,i)` for `2 <= i <= n-1`.
//! These signs make `A^T Q0 + Q0 A = 0` hold exactly; flipping the `(n,n+1)`
//! and `(n,1)` entries breaks it for the `r1` and `r2` directions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type AmbientMatrix = DMatrix<f64>;

/// Pass threshold for the Lie-algebra and trace residuals.
pub const LIE_TOLERANCE: f64 = 1e-12;

/// Coordinates of `X(r1, w, r2)` in the complement `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RElement {
    pub r1: f64,
    pub w: Vec<f64>,
    pub r2: f64,
}

impl RElement {
    pub fn new(r1: f64, w: Vec<f64>, r2: f64) -> Self {
        RElement { r1, w, r2 }
    }

    /// Ambient dimension `n = len(w) + 2`.
    pub fn n(&self) -> usize {
        self.w.len() + 2
    }

    /// The `r+` component `X(r1, 0, 0)`.
    pub fn plus_part(&self) -> RElement {
        RElement::new(self.r1, vec![0.0; self.w.len()], 0.0)
    }
}

pub fn q0_matrix(n: usize) -> Result<AmbientMatrix> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("n = {n} must be >= 3")));
    }
    let mut q = DMatrix::zeros(n + 1, n + 1);
    q[(0, n)] = 1.0;
    q[(n, 0)] = 1.0;
    for i in 1..n {
        q[(i, i)] = -1.0;
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LieMembership {
    /// Frobenius norm of `A^T Q0 + Q0 A`.
    pub residual: f64,
    pub trace: f64,
    pub passes: bool,
}

pub fn lie_membership(a: &AmbientMatrix, n: usize) -> Result<LieMembership> {
    let q = q0_matrix(n)?;
    if a.nrows() != n + 1 || a.ncols() != n + 1 {
        return Err(Error::DimensionMismatch {
            expected: n + 1,
            found: a.nrows().max(a.ncols()),
        });
    }
    let residual = (a.transpose() * &q + &q * a).norm();
    let trace = a.trace();
    Ok(LieMembership {
        residual,
        trace,
        passes: residual < LIE_TOLERANCE && trace.abs() < LIE_TOLERANCE,
    })
}

pub fn embed_r(x: &RElement) -> AmbientMatrix {
    let n = x.n();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m[(0, n - 1)] = x.r1;
    m[(n - 1, n)] = x.r1;
    m[(n - 1, 0)] = x.r2;
    m[(n, n - 1)] = x.r2;
    for (k, &wk) in x.w.iter().enumerate() {
        m[(k + 1, n - 1)] = wk;
        m[(n - 1, k + 1)] = -wk;
    }
    m
}

/// Reads `r`-coordinates from column `n`: `(1,n) -> r1`, `(i,n) -> w_{i-1}`, `(n+1,n) -> r2`.
///
/// For `A` in `Lie(G)`, `A - embed_r(r_coordinates(A))` has zero column `n`,
/// i.e. lies in `Lie(H)`.
pub fn r_coordinates(a: &AmbientMatrix) -> RElement {
    let n = a.nrows() - 1;
    RElement {
        r1: a[(0, n - 1)],
        w: (1..n - 1).map(|i| a[(i, n - 1)]).collect(),
        r2: a[(n, n - 1)],
    }
}

/// The unipotent `u_t`: first row `(1, t, 0, |t|^2/2)`, last column `(|t|^2/2, t, 0, 1)^T`.
pub fn u_matrix(t: &[f64]) -> AmbientMatrix {
    let m = t.len();
    let n = m + 2;
    let mut u = DMatrix::identity(n + 1, n + 1);
    let half_sq = 0.5 * t.iter().map(|x| x * x).sum::<f64>();
    for (k, &tk) in t.iter().enumerate() {
        u[(0, k + 1)] = tk;
        u[(k + 1, n)] = tk;
    }
    u[(0, n)] = half_sq;
    u
}

/// `a_s = diag(e^s, 1, ..., 1, e^{-s})`.
pub fn a_matrix(s: f64, n: usize) -> AmbientMatrix {
    let mut a = DMatrix::identity(n + 1, n + 1);
    a[(0, 0)] = s.exp();
    a[(n, n)] = (-s).exp();
    a
}

/// `u_t X u_{-t}` by dense multiplication.
pub fn conjugate_by_u(t: &[f64], x: &RElement) -> AmbientMatrix {
    let neg: Vec<f64> = t.iter().map(|v| -v).collect();
    u_matrix(t) * embed_r(x) * u_matrix(&neg)
}

/// `xi_t(X) = (u_t X u_{-t})^+`, read from entry `(1, n)` of the conjugate.
pub fn xi(t: &[f64], x: &RElement) -> Result<f64> {
    if t.len() != x.w.len() {
        return Err(Error::DimensionMismatch {
            expected: x.w.len(),
            found: t.len(),
        });
    }
    let n = x.n();
    Ok(conjugate_by_u(t, x)[(0, n - 1)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionRow {
    pub s: f64,
    /// `|Ad(a_s) X(r1,0,0) - e^s X(r1,0,0)|`.
    pub plus_residual: f64,
    /// `|Ad(a_s) X|` for the full element.
    pub ad_norm: f64,
    /// `|a_s u_t a_{-s} - I|`.
    pub u_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub rows: Vec<ContractionRow>,
    pub max_plus_residual: f64,
}

/// `Ad(a_s)` on `x` and on `u_t` for each `s` (Frobenius norms throughout).
pub fn contraction_check(x: &RElement, t: &[f64], s_values: &[f64]) -> Result<ContractionReport> {
    if t.len() != x.w.len() {
        return Err(Error::DimensionMismatch {
            expected: x.w.len(),
            found: t.len(),
        });
    }
    let n = x.n();
    let full = embed_r(x);
    let plus = embed_r(&x.plus_part());
    let u = u_matrix(t);
    let id = DMatrix::<f64>::identity(n + 1, n + 1);
    let rows: Vec<ContractionRow> = s_values
        .iter()
        .map(|&s| {
            let a = a_matrix(s, n);
            let a_inv = a_matrix(-s, n);
            let ad_plus = &a * &plus * &a_inv;
            ContractionRow {
                s,
                plus_residual: (ad_plus - &plus * s.exp()).norm(),
                ad_norm: (&a * &full * &a_inv).norm(),
                u_deviation: (&a * &u * &a_inv - &id).norm(),
            }
        })
        .collect();
    let max_plus_residual = rows.iter().map(|r| r.plus_residual).fold(0.0, f64::max);
    Ok(ContractionReport {
        rows,
        max_plus_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceCheck {
    /// Lie-algebra membership of `u_t X u_{-t}`.
    pub conjugate: LieMembership,
    /// `r`-coordinates of the conjugate.
    pub coordinates: RElement,
    /// Membership of `conjugate - embed_r(coordinates)` in `Lie(G)`.
    pub remainder: LieMembership,
    /// Largest entry of the remainder's column `n` (zero for `Lie(H)`).
    pub remainder_column: f64,
    /// Frobenius norm of the remainder (zero when `r` is invariant).
    pub remainder_norm: f64,
}

/// Splits `u_t X u_{-t}` into its `r` part and a `Lie(H)` remainder.
pub fn invariance_check(t: &[f64], x: &RElement) -> Result<InvarianceCheck> {
    let n = x.n();
    if t.len() != n - 2 {
        return Err(Error::DimensionMismatch {
            expected: n - 2,
            found: t.len(),
        });
    }
    let conj = conjugate_by_u(t, x);
    let coordinates = r_coordinates(&conj);
    let rem = &conj - embed_r(&coordinates);
    let remainder_column = (0..=n).map(|i| rem[(i, n - 1)].abs()).fold(0.0, f64::max);
    Ok(InvarianceCheck {
        conjugate: lie_membership(&conj, n)?,
        remainder: lie_membership(&rem, n)?,
        remainder_column,
        remainder_norm: rem.norm(),
        coordinates,
    })
}

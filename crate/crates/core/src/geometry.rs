//! Ambient coordinates `(r1, w, r2)` on R^n, the projection family
//! `pi_t(r1, w, r2) = r1 + w . L(t) + r2 q(t)`, the factor map
//! `f_t(r1, w, r2) = (r1, w . L(t), r2 q(t))` and the moment vector
//! `(1, s, s^2)` that links the two.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, FamilyFailure, Result};
use crate::numeric::{dot, norm};

/// Tolerance for the invertibility and positive-definiteness checks.
pub const FAMILY_TOLERANCE: f64 = 1e-12;

/// A point of R^n stored as the concatenation `(r1, w, r2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(r1: f64, w: &[f64], r2: f64) -> Self {
        let mut coords = Vec::with_capacity(w.len() + 2);
        coords.push(r1);
        coords.extend_from_slice(w);
        coords.push(r2);
        Point { coords }
    }

    /// Builds a point from its full coordinate vector; requires `n >= 3`.
    pub fn from_coords(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "points need n >= 3 coordinates, got {}",
                coords.len()
            )));
        }
        Ok(Point { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn r1(&self) -> f64 {
        self.coords[0]
    }

    pub fn w(&self) -> &[f64] {
        &self.coords[1..self.coords.len() - 1]
    }

    pub fn r2(&self) -> f64 {
        self.coords[self.coords.len() - 1]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Parameter `t` in R^{n-2}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn new(t: Vec<f64>) -> Self {
        ParamVector(t)
    }

    pub fn zeros(m: usize) -> Self {
        ParamVector(vec![0.0; m])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn scaled(&self, s: f64) -> ParamVector {
        ParamVector(self.0.iter().map(|x| s * x).collect())
    }

    /// Membership in the closed annulus `B = {1 <= |t| <= 2}`.
    pub fn in_annulus(&self) -> bool {
        let r = self.norm();
        (1.0..=2.0).contains(&r)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// The moment vector `(1, s, s^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentVector {
    pub s: f64,
}

pub fn moment_expand(m: MomentVector) -> [f64; 3] {
    [1.0, m.s, m.s * m.s]
}

/// Outcome of [`validate_family`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub dim: usize,
    pub det_l: f64,
    pub l_invertible: bool,
    pub q_symmetric: bool,
    pub q_positive_definite: bool,
    /// Smallest eigenvalue of the form matrix, i.e. `min_{|t|=1} q(t)`.
    pub q_min: f64,
    /// Largest eigenvalue of the form matrix.
    pub q_max: f64,
    /// Spectral norm of `L`.
    pub l_operator_norm: f64,
    pub failures: Vec<FamilyFailure>,
}

impl FamilyReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `L` is invertible and `q` is a symmetric positive-definite form.
///
/// Always returns the full report; use [`ProjectionFamily::new`] for the
/// rejecting constructor.
pub fn validate_family(l: &DMatrix<f64>, q: &DMatrix<f64>) -> FamilyReport {
    let mut failures = Vec::new();
    let dim = l.nrows();
    if !l.is_square() || !q.is_square() {
        failures.push(FamilyFailure::NotSquare);
    }
    if q.nrows() != dim || l.ncols() != q.ncols() {
        failures.push(FamilyFailure::DimensionMismatch);
    }
    if !failures.is_empty() {
        return FamilyReport {
            dim,
            det_l: f64::NAN,
            l_invertible: false,
            q_symmetric: false,
            q_positive_definite: false,
            q_min: f64::NAN,
            q_max: f64::NAN,
            l_operator_norm: f64::NAN,
            failures,
        };
    }

    let det_l = l.determinant();
    let l_invertible = det_l.is_finite() && det_l.abs() > FAMILY_TOLERANCE;
    if !l_invertible {
        failures.push(FamilyFailure::SingularL);
    }
    let l_operator_norm = l.clone().svd(false, false).singular_values.max();

    let asym = (q - q.transpose()).amax();
    let q_symmetric = asym <= FAMILY_TOLERANCE * q.amax().max(1.0);
    if !q_symmetric {
        failures.push(FamilyFailure::QNotSymmetric);
    }
    let sym = (q + q.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let q_min = eig.min();
    let q_max = eig.max();
    let q_positive_definite = q_min > FAMILY_TOLERANCE;
    if !q_positive_definite {
        failures.push(FamilyFailure::QNotPositiveDefinite);
    }

    FamilyReport {
        dim,
        det_l,
        l_invertible,
        q_symmetric,
        q_positive_definite,
        q_min,
        q_max,
        l_operator_norm,
        failures,
    }
}

/// The pair `(L, q)` defining `pi_{L,q,t}` and `f_t`.
///
/// `q` is stored as its symmetric form matrix `Q` with `q(t) = t^T Q t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionFamily {
    l: DMatrix<f64>,
    q: DMatrix<f64>,
    report: FamilyReport,
}

impl ProjectionFamily {
    pub fn new(l: DMatrix<f64>, q: DMatrix<f64>) -> Result<Self> {
        let report = validate_family(&l, &q);
        if !report.is_valid() {
            return Err(Error::InvalidFamily(report.failures));
        }
        Ok(ProjectionFamily { l, q, report })
    }

    /// `L = id`, `q = q_st` with `q_st(t) = |t|^2 / 2`, on R^{m}, `m = n - 2`.
    pub fn standard(m: usize) -> Self {
        Self::new(DMatrix::identity(m, m), DMatrix::identity(m, m) * 0.5)
            .expect("standard family is valid")
    }

    /// Parameter dimension `n - 2`.
    pub fn param_dim(&self) -> usize {
        self.l.nrows()
    }

    /// Ambient dimension `n`.
    pub fn ambient_dim(&self) -> usize {
        self.param_dim() + 2
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn report(&self) -> &FamilyReport {
        &self.report
    }

    pub fn q_min(&self) -> f64 {
        self.report.q_min
    }

    pub fn apply_l(&self, t: &[f64]) -> Vec<f64> {
        let m = self.param_dim();
        (0..m)
            .map(|i| (0..m).map(|j| self.l[(i, j)] * t[j]).sum())
            .collect()
    }

    pub fn quad(&self, t: &[f64]) -> f64 {
        let m = self.param_dim();
        let mut acc = 0.0;
        for (i, ti) in t.iter().enumerate().take(m) {
            let mut row = 0.0;
            for (j, tj) in t.iter().enumerate().take(m) {
                row += self.q[(i, j)] * tj;
            }
            acc += ti * row;
        }
        acc
    }

    /// Precomputes `L(t)` and `q(t)` for repeated evaluation at a fixed `t`.
    pub fn at(&self, t: &ParamVector) -> Result<Projector> {
        check_dim(self.param_dim(), t.dim())?;
        Ok(Projector {
            lt: self.apply_l(t.as_slice()),
            qt: self.quad(t.as_slice()),
        })
    }
}

/// Serializable description of a projection family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FamilySpec {
    /// `L = id`, `q(t) = |t|^2 / 2` on R^{n-2}.
    Standard { n: usize },
    /// Row-major `L` and symmetric form matrix `Q`.
    Custom { l: Vec<Vec<f64>>, q: Vec<Vec<f64>> },
}

impl FamilySpec {
    pub fn build(&self) -> Result<ProjectionFamily> {
        match self {
            FamilySpec::Standard { n } => {
                if *n < 3 {
                    return Err(Error::InvalidArgument(format!("n = {n} must be >= 3")));
                }
                Ok(ProjectionFamily::standard(n - 2))
            }
            FamilySpec::Custom { l, q } => {
                let to_matrix = |rows: &Vec<Vec<f64>>| -> Result<DMatrix<f64>> {
                    let r = rows.len();
                    let c = rows.first().map_or(0, |row| row.len());
                    if r == 0 || rows.iter().any(|row| row.len() != c) {
                        return Err(Error::InvalidFamily(vec![FamilyFailure::NotSquare]));
                    }
                    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
                };
                ProjectionFamily::new(to_matrix(l)?, to_matrix(q)?)
            }
        }
    }
}

/// `pi_t` and `f_t` frozen at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    pub lt: Vec<f64>,
    pub qt: f64,
}

impl Projector {
    /// `r1 + w . L(t) + r2 q(t)` on raw coordinates; assumes matching length.
    #[inline]
    pub fn project_coords(&self, x: &[f64]) -> f64 {
        let n = x.len();
        x[0] + dot(&x[1..n - 1], &self.lt) + x[n - 1] * self.qt
    }

    #[inline]
    pub fn factor_coords(&self, x: &[f64]) -> [f64; 3] {
        let n = x.len();
        [x[0], dot(&x[1..n - 1], &self.lt), x[n - 1] * self.qt]
    }

    pub fn project(&self, x: &Point) -> Result<f64> {
        check_dim(self.lt.len() + 2, x.dim())?;
        Ok(self.project_coords(x.coords()))
    }

    pub fn factor(&self, x: &Point) -> Result<[f64; 3]> {
        check_dim(self.lt.len() + 2, x.dim())?;
        Ok(self.factor_coords(x.coords()))
    }
}

/// `pi_t(X) = r1 + w . L(t) + r2 q(t)`.
pub fn project(fam: &ProjectionFamily, t: &ParamVector, x: &Point) -> Result<f64> {
    fam.at(t)?.project(x)
}

/// `f_t(X) = (r1, w . L(t), r2 q(t))`.
pub fn factor_map(fam: &ProjectionFamily, t: &ParamVector, x: &Point) -> Result<[f64; 3]> {
    fam.at(t)?.factor(x)
}

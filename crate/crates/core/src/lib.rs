//! Numerical laboratory for the restricted projections
//! `pi_t(r1, w, r2) = r1 + w . L(t) + r2 q(t)`.
//!
//! - [`geometry`]: coordinates, the projection family, factor map and moment vector.
//! - [`pointcloud`]: point sets with a scale floor, range counting, generators,
//!   regularity checks and box-counting dimension.
//! - [`energy`]: truncated alpha-energies, ball-mass bounds, dyadic annuli and
//!   good-set selection.
//! - [`analysis`]: concentration counts under `pi_t`, the finitary sweep,
//!   transversality measurement and the moment-curve stage.
//! - [`lie`]: the SO(n,1) matrix realization and `xi_t`.

// `!(x > 0.0)` is how parameter checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod lie;
pub mod numeric;
pub mod pointcloud;
pub mod sampling;

pub use error::{Error, Result};
pub use geometry::{
    factor_map, moment_expand, project, validate_family, FamilySpec, MomentVector, ParamVector,
    Point, ProjectionFamily,
};
pub use pointcloud::PointCloud;

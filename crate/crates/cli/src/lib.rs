//! Experiment orchestration for `rproj-core`: JSON configs, seeded runs with
//! hashed manifests, report files, plot series and the acceptance checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod config;
pub mod error;
pub mod plotdata;
pub mod reports;
pub mod run;
pub mod structural;

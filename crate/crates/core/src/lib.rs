//! Linear-elastic displacement fields on pixel grids and the recovery of
//! Poisson's ratio from them.
//!
//! The pipeline:
//!
//! * [`solver`] assembles and solves the finite-difference Lamé-Navier
//!   system for a boundary-value problem.
//! * [`bvp`] draws random boundary-value problems; [`dataset`] turns them
//!   into labelled displacement fields and warped image pairs.
//! * [`warp`] deforms a source image by a displacement field.
//! * [`estimator`] recovers a per-pixel Poisson's ratio map from a field.
//! * [`noise`] measures angular registration error and injects rotational
//!   noise with the same magnitude dependence.
//! * [`metrics`] and [`report`] compute error statistics and tables.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default) and sequentially otherwise; results are identical either way.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bvp;
pub mod dataset;
pub mod error;
pub mod estimator;
pub mod fields;
pub mod io;
pub mod metrics;
pub mod noise;
pub mod ops;
pub mod par;
pub mod report;
pub mod solver;
pub mod warp;

pub use error::{Error, Result};
pub use fields::{BCMap, Grid2D, NuMap, ScalarImage, VectorField2D};

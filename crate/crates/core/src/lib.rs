//! Multiscale construction of near-straight curves through finite metric
//! spaces with small Menger curvature.

// `!(x >= lo)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod curvature;
pub mod datasets;
pub mod curve;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod metric;
pub mod nets;
pub mod ordering;
pub mod pipeline;

pub use config::Config;
pub use error::{Error, Result, Warning};
pub use metric::{FiniteMetricSpace, Measure, PointId, Subset};

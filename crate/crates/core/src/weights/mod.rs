//! Linear weight vectors for every supported estimator, plus the metrics used
//! to judge them (sign changes, tail divergence, correlation, consistency).
//!
//! Each builder here only sees the grid and the AIF, never pixel data, so the
//! resulting weights are the same at every pixel location.

mod basis;
mod methods;
mod metrics;
mod vector;

pub use basis::{basis_weights, BasisKind, BasisSet};
pub use methods::{axel_weights, deconvolution_weights, patlak_weights};
pub use metrics::{
    centered_correlation, consistency_distance, extremum_count, sign_changes, tail_divergence,
    ConsistencyStats,
};
pub use vector::{MethodTag, WeightVector};

//! Perfusion deconvolution viewed through its linear weights.
//!
//! Every estimator in this crate (TSVD and Tikhonov deconvolution, Axel
//! integrals, Patlak fits, basis regression, first principal component) ends
//! up as a fixed weight vector `W` with `P = Σ w_i C_i`. The crate builds those
//! vectors from an arterial input function (or from pixel data, for PCA),
//! measures their quality and runs the sampling-consistency experiments.

pub mod deconv;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod io;
pub mod model;
pub mod pca;
pub mod phantom;
pub mod weights;

pub use deconv::{
    compute_svd, exact_inverse, perfusion_params, recover_residual, tikhonov_inverse,
    tsvd_inverse, Constraint, InverseMatrix, InverseMethod, PerfusionTriple, SvdFactors,
    TikhonovConfig, TsvdConfig,
};
pub use error::{PlpError, Result};
pub use exec::Execution;
pub use model::{
    build_convolution_matrix, build_uniform_grid, forward_convolve, gamma_aif, AifCurve,
    ConvolutionMatrix, GammaAifParams, TimeGrid,
};
pub use pca::{energy_ratio, fit_pca, fpc_map, PcaResult, PixelSeriesMatrix};
pub use weights::{
    axel_weights, basis_weights, centered_correlation, consistency_distance,
    deconvolution_weights, patlak_weights, sign_changes, tail_divergence, BasisKind, BasisSet,
    ConsistencyStats, MethodTag, WeightVector,
};

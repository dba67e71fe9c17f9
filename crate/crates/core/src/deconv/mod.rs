//! Regularized inversion of the convolution matrix and the perfusion
//! parameters read off the recovered residue function.

mod inverse;
mod params;
mod svd;

pub use inverse::{
    cutoff_rank, exact_inverse, recover_residual, tikhonov_inverse, tsvd_inverse, Constraint,
    InverseMatrix, InverseMethod, TikhonovConfig, TsvdConfig,
};
pub use params::{perfusion_params, PerfusionTriple};
pub use svd::{compute_svd, SvdFactors};

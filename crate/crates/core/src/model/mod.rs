//! Sampling grids, arterial input functions and the discrete convolution
//! model `C_j = Σ_{i≤j} K(t_j − t_i) R_i d_i` (rectangular quadrature).

mod aif;
mod convolution;
mod grid;

pub use aif::{gamma_aif, AifCurve, GammaAifParams};
pub use convolution::{build_convolution_matrix, forward_convolve, ConvolutionMatrix};
pub use grid::{build_uniform_grid, TimeGrid};

use nalgebra::{DMatrix, DVector};

use super::aif::AifCurve;
use super::grid::TimeGrid;
use crate::error::{PlpError, Result};

/// Lower-triangular discretization `M(j, i) = K(t_j − t_i)·d_i`, `i ≤ j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionMatrix {
    grid: TimeGrid,
    entries: DMatrix<f64>,
}

impl ConvolutionMatrix {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    /// A zero on the diagonal makes the triangular matrix exactly singular.
    pub fn has_zero_diagonal(&self) -> bool {
        self.entries.diagonal().iter().any(|&v| v == 0.0)
    }
}

pub fn build_convolution_matrix(aif: &AifCurve, grid: &TimeGrid) -> Result<ConvolutionMatrix> {
    if aif.grid() != grid {
        return Err(PlpError::invalid("AIF grid does not match the requested grid"));
    }
    let n = grid.len();
    let d = grid.intervals();
    let entries = DMatrix::from_fn(n, n, |j, i| if i <= j { aif.lag_value(j, i) * d[i] } else { 0.0 });
    Ok(ConvolutionMatrix {
        grid: grid.clone(),
        entries,
    })
}

/// Direct evaluation of the quadrature sum, without forming the matrix.
pub fn forward_convolve(aif: &AifCurve, residual: &[f64]) -> Result<Vec<f64>> {
    let n = aif.grid().len();
    if residual.len() != n {
        return Err(PlpError::invalid(format!(
            "residual has length {}, grid has {n} points",
            residual.len()
        )));
    }
    let d = aif.grid().intervals();
    Ok((0..n)
        .map(|j| (0..=j).map(|i| aif.lag_value(j, i) * residual[i] * d[i]).sum())
        .collect())
}

impl ConvolutionMatrix {
    pub fn apply(&self, residual: &[f64]) -> Vec<f64> {
        (&self.entries * DVector::from_column_slice(residual)).as_slice().to_vec()
    }
}

use super::vector::{MethodTag, WeightVector};
use crate::deconv::{InverseMatrix, InverseMethod};
use crate::error::{PlpError, Result};
use crate::model::{AifCurve, TimeGrid};

/// Volume weights (column sums of `B`) and flow weights (first row of `B`).
pub fn deconvolution_weights(
    inverse: &InverseMatrix,
    grid: &TimeGrid,
) -> Result<(WeightVector, WeightVector)> {
    let b = inverse.entries();
    if b.nrows() != grid.len() || b.ncols() != grid.len() {
        return Err(PlpError::invalid(format!(
            "inverse is {}x{} but the grid has {} points",
            b.nrows(),
            b.ncols(),
            grid.len()
        )));
    }
    let (volume_tag, flow_tag) = match inverse.method() {
        InverseMethod::Exact => (MethodTag::ExactVolume, MethodTag::ExactFlow),
        InverseMethod::Tsvd { .. } => (MethodTag::TsvdVolume, MethodTag::TsvdFlow),
        InverseMethod::Tikhonov(_) => (MethodTag::TikhonovVolume, MethodTag::TikhonovFlow),
    };
    let volume = b.row_sum().iter().copied().collect();
    let flow = b.row(0).iter().copied().collect();
    Ok((
        WeightVector::new(grid.clone(), volume, volume_tag)?,
        WeightVector::new(grid.clone(), flow, flow_tag)?,
    ))
}

/// Integral estimates `V_b = Σ C_i d_i` and `T_mtt = Σ t_i C_i d_i` with unit
/// scale constants.
pub fn axel_weights(grid: &TimeGrid) -> Result<(WeightVector, WeightVector)> {
    let d = grid.intervals();
    let t = grid.instants();
    let volume = d.to_vec();
    let mtt = d.iter().zip(t).map(|(d, t)| d * t).collect();
    Ok((
        WeightVector::new(grid.clone(), volume, MethodTag::AxelVolume)?,
        WeightVector::new(grid.clone(), mtt, MethodTag::AxelMtt)?,
    ))
}

/// Least-squares Patlak line `C_k / Ca_k = V_r + P · (Σ_{i≤k} Ca_i d_i) / Ca_k`
/// over every sample. Both the intercept `V_r` and the slope `P` are linear in
/// `C`; the returned vectors hold those coefficients.
pub fn patlak_weights(aif: &AifCurve, grid: &TimeGrid) -> Result<(WeightVector, WeightVector)> {
    if aif.grid() != grid {
        return Err(PlpError::invalid("AIF grid does not match the requested grid"));
    }
    let ca = aif.values();
    let zeros: Vec<usize> = ca.iter().enumerate().filter(|(_, &v)| v == 0.0).map(|(i, _)| i + 1).collect();
    if !zeros.is_empty() {
        return Err(PlpError::singular(format!(
            "arterial curve vanishes at samples {zeros:?}; Patlak ratios are undefined"
        )));
    }
    let n = grid.len();
    if n < 2 {
        return Err(PlpError::invalid("Patlak fit needs at least 2 samples"));
    }
    let mut cumulative = 0.0;
    let x: Vec<f64> = ca
        .iter()
        .zip(grid.intervals())
        .map(|(&c, &d)| {
            cumulative += c * d;
            cumulative / c
        })
        .collect();
    let mean_x = x.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mean_x).powi(2)).sum();
    if sxx.is_nan() || sxx <= 0.0 || sxx.is_infinite() {
        return Err(PlpError::singular("Patlak abscissae are all equal; slope is undefined"));
    }
    let perm: Vec<f64> = x.iter().zip(ca).map(|(xk, c)| (xk - mean_x) / (sxx * c)).collect();
    let vr: Vec<f64> = x
        .iter()
        .zip(ca)
        .map(|(xk, c)| (1.0 / n as f64 - mean_x * (xk - mean_x) / sxx) / c)
        .collect();
    Ok((
        WeightVector::new(grid.clone(), vr, MethodTag::PatlakVr)?,
        WeightVector::new(grid.clone(), perm, MethodTag::PatlakPerm)?,
    ))
}

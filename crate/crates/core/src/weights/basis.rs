use nalgebra::{DMatrix, DVector, SVD};

use super::vector::{MethodTag, WeightVector};
use crate::error::{PlpError, Result};
use crate::model::{forward_convolve, AifCurve, TimeGrid};

const INDEPENDENCE_TOL: f64 = 1e-10;

/// Whether the basis models the contrast curve itself or the residue
/// function behind it.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisKind {
    /// `C(t) ≈ Σ h_j H_j(t)`; volume and MTT follow from integrating the fit.
    Direct,
    /// `R(t) ≈ Σ h_j H_j(t)`, fitted through `G_j = C_a ⊗ H_j`.
    Convolved(AifCurve),
}

/// Sampled basis columns `H_j(t_i)`, one column per function.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    grid: TimeGrid,
    functions: DMatrix<f64>,
    kind: BasisKind,
}

impl BasisSet {
    /// Requires fewer functions than samples and linearly independent columns.
    pub fn new(grid: TimeGrid, functions: DMatrix<f64>, kind: BasisKind) -> Result<Self> {
        if functions.ncols() >= grid.len() {
            return Err(PlpError::invalid(format!(
                "basis must have fewer functions ({}) than samples ({})",
                functions.ncols(),
                grid.len()
            )));
        }
        Self::new_allow_full(grid, functions, kind)
    }

    /// Same as [`BasisSet::new`] but accepts a square basis.
    pub(crate) fn new_allow_full(grid: TimeGrid, functions: DMatrix<f64>, kind: BasisKind) -> Result<Self> {
        if functions.nrows() != grid.len() {
            return Err(PlpError::invalid(format!(
                "basis columns have {} samples, grid has {}",
                functions.nrows(),
                grid.len()
            )));
        }
        if functions.ncols() == 0 {
            return Err(PlpError::invalid("basis is empty"));
        }
        if let BasisKind::Convolved(aif) = &kind {
            if aif.grid() != &grid {
                return Err(PlpError::invalid("AIF grid does not match the basis grid"));
            }
        }
        check_independent(&functions, "basis")?;
        Ok(BasisSet {
            grid,
            functions,
            kind,
        })
    }

    /// Clamped B-splines of degree `min(3, size − 1)` with uniformly spaced
    /// knots on `[0, T]`.
    pub fn bspline(grid: &TimeGrid, size: usize, kind: BasisKind) -> Result<Self> {
        if size == 0 {
            return Err(PlpError::invalid("basis size must be at least 1"));
        }
        let degree = size.saturating_sub(1).min(3);
        let knots = clamped_knots(size, degree, grid.duration());
        let functions = DMatrix::from_fn(grid.len(), size, |i, j| {
            bspline_value(&knots, degree, j, grid.instants()[i], grid.duration())
        });
        BasisSet::new(grid.clone(), functions, kind)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn functions(&self) -> &DMatrix<f64> {
        &self.functions
    }

    pub fn kind(&self) -> &BasisKind {
        &self.kind
    }

    pub fn size(&self) -> usize {
        self.functions.ncols()
    }
}

fn check_independent(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let s = SVD::new(m.clone(), false, false).singular_values;
    let max = s.max();
    let min = s.min();
    if max == 0.0 || min <= INDEPENDENCE_TOL * max {
        return Err(PlpError::singular(format!(
            "{what} columns are linearly dependent (singular values {max:e} .. {min:e})"
        )));
    }
    Ok(())
}

fn clamped_knots(size: usize, degree: usize, end: f64) -> Vec<f64> {
    let interior = size - degree - 1;
    let mut knots = vec![0.0; degree + 1];
    knots.extend((1..=interior).map(|k| end * k as f64 / (interior + 1) as f64));
    knots.extend(std::iter::repeat_n(end, degree + 1));
    knots
}

/// Cox-de Boor recursion; the right end of the domain belongs to the last
/// function so the basis stays a partition of unity on `(0, T]`.
fn bspline_value(knots: &[f64], degree: usize, index: usize, t: f64, end: f64) -> f64 {
    let size = knots.len() - degree - 1;
    if t >= end {
        return if index == size - 1 { 1.0 } else { 0.0 };
    }
    fn rec(knots: &[f64], p: usize, i: usize, t: f64) -> f64 {
        if p == 0 {
            return if knots[i] <= t && t < knots[i + 1] { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let left = knots[i + p] - knots[i];
        if left > 0.0 {
            v += (t - knots[i]) / left * rec(knots, p - 1, i, t);
        }
        let right = knots[i + p + 1] - knots[i + 1];
        if right > 0.0 {
            v += (knots[i + p + 1] - t) / right * rec(knots, p - 1, i + 1, t);
        }
        v
    }
    rec(knots, degree, index, t)
}

fn pseudo_inverse(m: DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    check_independent(&m, what)?;
    SVD::new(m, true, true)
        .pseudo_inverse(0.0)
        .map_err(|e| PlpError::singular(format!("{what}: {e}")))
}

/// Weights of the basis-regression estimators.
///
/// Direct kind: `(volume, mtt)` from integrating the fitted contrast curve.
/// Convolved kind: `(volume, flow)` from the fitted residue function, with
/// flow read at `t_1`.
pub fn basis_weights(basis: &BasisSet, grid: &TimeGrid) -> Result<(WeightVector, WeightVector)> {
    if basis.grid() != grid {
        return Err(PlpError::invalid("basis grid does not match the requested grid"));
    }
    let h = basis.functions();
    let d = DVector::from_column_slice(grid.intervals());
    let t = DVector::from_column_slice(grid.instants());
    let volume_moments = h.transpose() * &d;

    match basis.kind() {
        BasisKind::Direct => {
            let regression = pseudo_inverse(h.clone(), "basis")?;
            let mtt_moments = h.transpose() * d.component_mul(&t);
            let volume = regression.tr_mul(&volume_moments);
            let mtt = regression.tr_mul(&mtt_moments);
            Ok((
                WeightVector::new(grid.clone(), volume.as_slice().to_vec(), MethodTag::BasisVolume)?,
                WeightVector::new(grid.clone(), mtt.as_slice().to_vec(), MethodTag::BasisMtt)?,
            ))
        }
        BasisKind::Convolved(aif) => {
            let mut g = DMatrix::zeros(h.nrows(), h.ncols());
            for j in 0..h.ncols() {
                let col: Vec<f64> = h.column(j).iter().copied().collect();
                let conv = forward_convolve(aif, &col)?;
                g.set_column(j, &DVector::from_vec(conv));
            }
            let regression = pseudo_inverse(g, "convolved basis")?;
            let flow_moments = h.row(0).transpose();
            let volume = regression.tr_mul(&volume_moments);
            let flow = regression.tr_mul(&flow_moments);
            Ok((
                WeightVector::new(grid.clone(), volume.as_slice().to_vec(), MethodTag::BasisVolume)?,
                WeightVector::new(grid.clone(), flow.as_slice().to_vec(), MethodTag::BasisFlow)?,
            ))
        }
    }
}

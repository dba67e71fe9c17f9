//! First-principal-component perfusion: the weight vector that shows the most
//! contrast variance across pixels, its per-pixel map and the eigenvalue
//! concentration `E = λ_1 / Σ λ_i`.

use nalgebra::DMatrix;

use crate::error::{PlpError, Result};
use crate::exec::Execution;
use crate::model::TimeGrid;
use crate::weights::{MethodTag, WeightVector};

const JACOBI_MAX_SWEEPS: usize = 100;

/// `P` contrast-enhancement curves of length `N`, one row per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelSeriesMatrix {
    grid: TimeGrid,
    rows: DMatrix<f64>,
    mask: Option<Vec<bool>>,
}

impl PixelSeriesMatrix {
    pub fn new(grid: TimeGrid, rows: DMatrix<f64>) -> Result<Self> {
        if rows.ncols() != grid.len() {
            return Err(PlpError::invalid(format!(
                "pixel rows have {} samples, grid has {}",
                rows.ncols(),
                grid.len()
            )));
        }
        if let Some(idx) = rows.iter().position(|v| !v.is_finite()) {
            let (col, row) = (idx / rows.nrows(), idx % rows.nrows());
            return Err(PlpError::invalid(format!("pixel {row} sample {col} is not finite")));
        }
        Ok(PixelSeriesMatrix {
            grid,
            rows,
            mask: None,
        })
    }

    /// Restricts PCA fitting to the pixels flagged `true`.
    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.pixel_count() {
            return Err(PlpError::invalid(format!(
                "mask has {} entries for {} pixels",
                mask.len(),
                self.pixel_count()
            )));
        }
        self.mask = Some(mask);
        Ok(self)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn pixel_count(&self) -> usize {
        self.rows.nrows()
    }

    pub fn row(&self, p: usize) -> Vec<f64> {
        self.rows.row(p).iter().copied().collect()
    }

    fn selected_rows(&self) -> Vec<usize> {
        match &self.mask {
            Some(m) => m.iter().enumerate().filter(|(_, &keep)| keep).map(|(i, _)| i).collect(),
            None => (0..self.pixel_count()).collect(),
        }
    }

    /// Same pixels on a subset of the time samples (0-based indices).
    pub fn restrict_time(&self, kept: &[usize]) -> Result<PixelSeriesMatrix> {
        let grid = self.grid.restrict(kept)?;
        let rows = self.rows.select_columns(kept);
        Ok(PixelSeriesMatrix {
            grid,
            rows,
            mask: self.mask.clone(),
        })
    }

    /// Same grid with replaced sample values.
    pub(crate) fn with_rows(&self, rows: DMatrix<f64>) -> Result<PixelSeriesMatrix> {
        let mut out = PixelSeriesMatrix::new(self.grid.clone(), rows)?;
        out.mask = self.mask.clone();
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    /// Unit-norm first principal component, oriented along the mean curve.
    pub component_weights: WeightVector,
    /// Covariance eigenvalues, non-increasing.
    pub eigenvalues: Vec<f64>,
    pub column_means: Vec<f64>,
    pub energy_ratio: f64,
}

/// PCA over pixels (observations) × time points (variables).
pub fn fit_pca(data: &PixelSeriesMatrix) -> Result<PcaResult> {
    let rows = data.selected_rows();
    let p = rows.len();
    if p < 2 {
        return Err(PlpError::invalid(format!("PCA needs at least 2 pixels, got {p}")));
    }
    let n = data.grid().len();
    let selected = data.rows().select_rows(&rows);
    let column_means: Vec<f64> = selected.row_mean().iter().copied().collect();
    let mut centered = selected;
    for (j, mean) in column_means.iter().enumerate() {
        centered.column_mut(j).add_scalar_mut(-mean);
    }
    let covariance = centered.tr_mul(&centered) / (p as f64 - 1.0);
    let total: f64 = covariance.diagonal().sum();
    if total <= 0.0 {
        return Err(PlpError::DegenerateData("every time column is constant".into()));
    }

    let (eigenvalues, vectors) = jacobi_eigen(covariance)?;
    let mut component: Vec<f64> = vectors.column(0).iter().copied().collect();
    orient(&mut component, &column_means);
    let norm = component.iter().map(|v| v * v).sum::<f64>().sqrt();
    component.iter_mut().for_each(|v| *v /= norm);

    let eigenvalues: Vec<f64> = eigenvalues.into_iter().map(|l| l.max(0.0)).collect();
    let sum: f64 = eigenvalues.iter().sum();
    let energy = eigenvalues[0] / sum;
    debug_assert_eq!(component.len(), n);
    let component_weights = WeightVector::new(data.grid().clone(), component, MethodTag::Fpc)?.normalize()?;
    Ok(PcaResult {
        component_weights,
        eigenvalues,
        column_means,
        energy_ratio: energy,
    })
}

/// `dot(w, mean) ≥ 0`; ties fall back to a positive first nonzero entry.
fn orient(w: &mut [f64], means: &[f64]) {
    let dot: f64 = w.iter().zip(means).map(|(a, b)| a * b).sum();
    let flip = if dot != 0.0 {
        dot < 0.0
    } else {
        w.iter().find(|v| **v != 0.0).is_some_and(|v| *v < 0.0)
    };
    if flip {
        w.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Uncentered projection `P_FPC(p) = Σ_i w_i C(p, i)` for every pixel,
/// masked or not.
pub fn fpc_map(data: &PixelSeriesMatrix, pca: &PcaResult) -> Result<Vec<f64>> {
    fpc_map_with(data, pca, Execution::default())
}

pub fn fpc_map_with(data: &PixelSeriesMatrix, pca: &PcaResult, exec: Execution) -> Result<Vec<f64>> {
    let w = pca.component_weights.weights();
    if w.len() != data.grid().len() {
        return Err(PlpError::invalid(format!(
            "component has {} weights, data has {} samples",
            w.len(),
            data.grid().len()
        )));
    }
    let rows = data.rows();
    Ok(exec.map_indexed(data.pixel_count(), |p| {
        rows.row(p).iter().zip(w).map(|(c, w)| c * w).sum()
    }))
}

pub fn energy_ratio(pca: &PcaResult) -> Result<f64> {
    let sum: f64 = pca.eigenvalues.iter().sum();
    if sum <= 0.0 {
        return Err(PlpError::DegenerateData("total variance is zero".into()));
    }
    Ok(pca.eigenvalues[0] / sum)
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns the
/// eigenvalues in non-increasing order and the matching eigenvectors as
/// columns.
pub(crate) fn jacobi_eigen(mut a: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut converged = scale == 0.0;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        sweeps += 1;
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= f64::EPSILON * scale * 1e-3 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        // a last check after the final sweep
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() > 1e-12 * scale {
            return Err(PlpError::NumericFailure {
                message: format!("Jacobi eigen-decomposition stalled, off-diagonal norm {:e}", off.sqrt()),
                iterations: sweeps,
            });
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = v.select_columns(&order);
    Ok((values, vectors))
}

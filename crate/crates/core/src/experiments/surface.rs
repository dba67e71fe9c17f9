use crate::deconv::{compute_svd, cutoff_rank};
use crate::error::{PlpError, Result};
use crate::exec::Execution;
use crate::model::{build_convolution_matrix, build_uniform_grid, gamma_aif, GammaAifParams, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceKind {
    /// `log10(λ_N / λ_1)`, `-inf` when `λ_N` is zero.
    LogConditionRatio,
    /// TSVD cutoff index at the given fraction of `λ_1`.
    CutoffIndex { fraction: f64 },
}

/// Values over an `a × b` parameter grid, stored with `a` as the outer index.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    pub n: usize,
    pub kind: SurfaceKind,
    pub cells: Vec<f64>,
}

impl SurfaceGrid {
    pub fn get(&self, ai: usize, bi: usize) -> f64 {
        self.cells[ai * self.b_values.len() + bi]
    }

    /// `(a, b, value)` triples in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let nb = self.b_values.len();
        self.cells
            .iter()
            .enumerate()
            .map(move |(k, &v)| (self.a_values[k / nb], self.b_values[k % nb], v))
    }
}

/// Singular spectrum of the convolution matrix for `t^a e^{-bt}` on `grid`,
/// plus whether the matrix is exactly singular (zero on the diagonal).
pub fn gamma_spectrum(params: GammaAifParams, grid: &TimeGrid) -> Result<(Vec<f64>, bool)> {
    let aif = gamma_aif(params, grid)?;
    let m = build_convolution_matrix(&aif, grid)?;
    let exactly_singular = m.has_zero_diagonal();
    Ok((compute_svd(m.entries())?.singular_values, exactly_singular))
}

/// TSVD cutoff index for one gamma kernel on an arbitrary grid.
pub fn cutoff_index(params: GammaAifParams, grid: &TimeGrid, fraction: f64) -> Result<usize> {
    let (spectrum, _) = gamma_spectrum(params, grid)?;
    cutoff_rank(&spectrum, fraction)
}

fn check_inputs(a_values: &[f64], b_values: &[f64], n: usize) -> Result<TimeGrid> {
    if a_values.is_empty() || b_values.is_empty() {
        return Err(PlpError::invalid("parameter lists must be non-empty"));
    }
    for &a in a_values {
        GammaAifParams::new(a, 0.0)?;
    }
    for &b in b_values {
        GammaAifParams::new(0.0, b)?;
    }
    build_uniform_grid(n, 1.0)
}

pub fn condition_surface(a_values: &[f64], b_values: &[f64], n: usize) -> Result<SurfaceGrid> {
    condition_surface_with(a_values, b_values, n, Execution::default())
}

pub fn condition_surface_with(
    a_values: &[f64],
    b_values: &[f64],
    n: usize,
    exec: Execution,
) -> Result<SurfaceGrid> {
    let grid = check_inputs(a_values, b_values, n)?;
    let nb = b_values.len();
    let cells = exec.try_map_indexed(a_values.len() * nb, |k| {
        let params = GammaAifParams::new(a_values[k / nb], b_values[k % nb])?;
        let (s, exactly_singular) = gamma_spectrum(params, &grid)?;
        let (first, last) = (s[0], s[s.len() - 1]);
        Ok::<f64, PlpError>(if exactly_singular || last <= 0.0 || first <= 0.0 {
            f64::NEG_INFINITY
        } else {
            (last / first).log10()
        })
    })?;
    Ok(SurfaceGrid {
        a_values: a_values.to_vec(),
        b_values: b_values.to_vec(),
        n,
        kind: SurfaceKind::LogConditionRatio,
        cells,
    })
}

pub fn cutoff_surface(a_values: &[f64], b_values: &[f64], n: usize, fraction: f64) -> Result<SurfaceGrid> {
    cutoff_surface_with(a_values, b_values, n, fraction, Execution::default())
}

pub fn cutoff_surface_with(
    a_values: &[f64],
    b_values: &[f64],
    n: usize,
    fraction: f64,
    exec: Execution,
) -> Result<SurfaceGrid> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(PlpError::invalid(format!("cutoff fraction must be in (0, 1), got {fraction}")));
    }
    let grid = check_inputs(a_values, b_values, n)?;
    let nb = b_values.len();
    let cells = exec.try_map_indexed(a_values.len() * nb, |k| {
        let params = GammaAifParams::new(a_values[k / nb], b_values[k % nb])?;
        cutoff_index(params, &grid, fraction).map(|r| r as f64)
    })?;
    Ok(SurfaceGrid {
        a_values: a_values.to_vec(),
        b_values: b_values.to_vec(),
        n,
        kind: SurfaceKind::CutoffIndex { fraction },
        cells,
    })
}

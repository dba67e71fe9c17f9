use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::svd::{compute_svd, SvdFactors};
use crate::error::{PlpError, Result};

/// Truncation rule for TSVD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TsvdConfig {
    /// Keep every `λ_i ≥ f·λ_1`.
    Fraction(f64),
    /// Keep the first `r` singular values.
    Rank(usize),
}

impl Default for TsvdConfig {
    fn default() -> Self {
        TsvdConfig::Fraction(0.2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    Identity,
    /// First difference: `D(i,i) = 1`, `D(i,i+1) = −1`.
    FirstDifference,
}

impl Constraint {
    pub fn matrix(self, n: usize) -> DMatrix<f64> {
        match self {
            Constraint::Identity => DMatrix::identity(n, n),
            Constraint::FirstDifference => DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    1.0
                } else if j == i + 1 {
                    -1.0
                } else {
                    0.0
                }
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TikhonovConfig {
    pub alpha: f64,
    pub constraint: Constraint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum InverseMethod {
    Exact,
    Tsvd { config: TsvdConfig, rank: usize },
    Tikhonov(TikhonovConfig),
}

/// Approximate inverse `B` with `R = B·C`.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseMatrix {
    entries: DMatrix<f64>,
    method: InverseMethod,
}

impl InverseMatrix {
    pub fn new(entries: DMatrix<f64>, method: InverseMethod) -> Result<Self> {
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(PlpError::singular("inverse has non-finite entries"));
        }
        Ok(InverseMatrix { entries, method })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn method(&self) -> InverseMethod {
        self.method
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Effective TSVD rank, if this inverse came from TSVD.
    pub fn rank(&self) -> Option<usize> {
        match self.method {
            InverseMethod::Tsvd { rank, .. } => Some(rank),
            _ => None,
        }
    }
}

/// Number of singular values with `λ_i ≥ f·λ_1` (ties kept).
pub fn cutoff_rank(singular_values: &[f64], fraction: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(PlpError::invalid(format!("cutoff fraction must be in [0, 1], got {fraction}")));
    }
    let first = *singular_values
        .first()
        .ok_or_else(|| PlpError::invalid("empty spectrum"))?;
    if first <= 0.0 {
        return Err(PlpError::singular("largest singular value is zero"));
    }
    let threshold = fraction * first;
    Ok(singular_values.iter().take_while(|&&s| s >= threshold).count())
}

/// `B = Vᵀ · S_r⁻¹ · Uᵀ`.
pub fn tsvd_inverse(factors: &SvdFactors, config: TsvdConfig) -> Result<InverseMatrix> {
    let n = factors.len();
    let rank = match config {
        TsvdConfig::Fraction(f) => cutoff_rank(&factors.singular_values, f)?,
        TsvdConfig::Rank(r) => {
            if r == 0 || r > n {
                return Err(PlpError::invalid(format!("rank must be in 1..={n}, got {r}")));
            }
            r
        }
    };
    if let Some(k) = factors.singular_values[..rank].iter().position(|&s| s == 0.0) {
        return Err(PlpError::singular(format!(
            "rank {rank} keeps singular value {} which is exactly zero",
            k + 1
        )));
    }
    let mut b = DMatrix::zeros(n, n);
    for k in 0..rank {
        let inv = 1.0 / factors.singular_values[k];
        // rank-one update: (row k of V)ᵀ · (column k of U)ᵀ / λ_k
        b.ger(inv, &factors.v.row(k).transpose(), &factors.u.column(k), 1.0);
    }
    InverseMatrix::new(b, InverseMethod::Tsvd { config, rank })
}

/// `B = (AᵀA + α LᵀL)⁻¹ Aᵀ`.
pub fn tikhonov_inverse(matrix: &DMatrix<f64>, config: TikhonovConfig) -> Result<InverseMatrix> {
    check_square(matrix)?;
    if !(config.alpha.is_finite() && config.alpha >= 0.0) {
        return Err(PlpError::invalid(format!("alpha must be finite and >= 0, got {}", config.alpha)));
    }
    let n = matrix.nrows();
    let l = config.constraint.matrix(n);
    let at = matrix.transpose();
    let system = &at * matrix + config.alpha * (l.transpose() * &l);
    let b = solve_checked(system, &at, "regularized normal equations")?;
    InverseMatrix::new(b, InverseMethod::Tikhonov(config))
}

/// Unregularized `A⁻¹`.
pub fn exact_inverse(matrix: &DMatrix<f64>) -> Result<InverseMatrix> {
    check_square(matrix)?;
    let n = matrix.nrows();
    let b = solve_checked(matrix.clone(), &DMatrix::identity(n, n), "matrix")?;
    InverseMatrix::new(b, InverseMethod::Exact)
}

pub fn recover_residual(inverse: &InverseMatrix, contrast: &[f64]) -> Result<Vec<f64>> {
    if contrast.len() != inverse.dim() {
        return Err(PlpError::invalid(format!(
            "contrast has length {}, inverse is {}x{}",
            contrast.len(),
            inverse.dim(),
            inverse.dim()
        )));
    }
    let r = inverse.entries() * DVector::from_column_slice(contrast);
    Ok(r.as_slice().to_vec())
}

fn check_square(matrix: &DMatrix<f64>) -> Result<()> {
    if !matrix.is_square() || matrix.nrows() == 0 {
        return Err(PlpError::invalid(format!(
            "expected a non-empty square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(PlpError::invalid("matrix has non-finite entries"));
    }
    Ok(())
}

/// Solves `system · X = rhs`, refusing numerically singular systems
/// (reciprocal condition number at or below `n·ε`).
fn solve_checked(system: DMatrix<f64>, rhs: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let n = system.nrows();
    let spectrum = compute_svd(&system)?.singular_values;
    let (largest, smallest) = (spectrum[0], spectrum[n - 1]);
    if largest == 0.0 || smallest <= n as f64 * f64::EPSILON * largest {
        return Err(PlpError::singular(format!(
            "{what} is singular (singular values {largest:e} .. {smallest:e})"
        )));
    }
    system
        .lu()
        .solve(rhs)
        .ok_or_else(|| PlpError::singular(format!("{what} is singular")))
}

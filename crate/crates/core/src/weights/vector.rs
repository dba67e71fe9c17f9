use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PlpError, Result};
use crate::model::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodTag {
    TsvdVolume,
    TsvdFlow,
    TikhonovVolume,
    TikhonovFlow,
    ExactVolume,
    ExactFlow,
    AxelVolume,
    AxelMtt,
    PatlakVr,
    PatlakPerm,
    BasisVolume,
    BasisMtt,
    BasisFlow,
    Fpc,
}

impl MethodTag {
    pub const ALL: [MethodTag; 14] = [
        MethodTag::TsvdVolume,
        MethodTag::TsvdFlow,
        MethodTag::TikhonovVolume,
        MethodTag::TikhonovFlow,
        MethodTag::ExactVolume,
        MethodTag::ExactFlow,
        MethodTag::AxelVolume,
        MethodTag::AxelMtt,
        MethodTag::PatlakVr,
        MethodTag::PatlakPerm,
        MethodTag::BasisVolume,
        MethodTag::BasisMtt,
        MethodTag::BasisFlow,
        MethodTag::Fpc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodTag::TsvdVolume => "tsvd-volume",
            MethodTag::TsvdFlow => "tsvd-flow",
            MethodTag::TikhonovVolume => "tikhonov-volume",
            MethodTag::TikhonovFlow => "tikhonov-flow",
            MethodTag::ExactVolume => "exact-volume",
            MethodTag::ExactFlow => "exact-flow",
            MethodTag::AxelVolume => "axel-volume",
            MethodTag::AxelMtt => "axel-mtt",
            MethodTag::PatlakVr => "patlak-vr",
            MethodTag::PatlakPerm => "patlak-perm",
            MethodTag::BasisVolume => "basis-volume",
            MethodTag::BasisMtt => "basis-mtt",
            MethodTag::BasisFlow => "basis-flow",
            MethodTag::Fpc => "fpc",
        }
    }

    /// Deconvolution volume weights are pure column sums of `B`; the interval
    /// `d_i` multiplies the contrast when they are applied.
    pub fn applies_interval(self) -> bool {
        matches!(
            self,
            MethodTag::TsvdVolume | MethodTag::TikhonovVolume | MethodTag::ExactVolume
        )
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodTag {
    type Err = PlpError;

    fn from_str(s: &str) -> Result<Self> {
        MethodTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| PlpError::invalid(format!("unknown method tag '{s}'")))
    }
}

/// Weights `w_1..w_N` of one perfusion parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    grid: TimeGrid,
    weights: Vec<f64>,
    method: MethodTag,
    normalized: bool,
}

impl WeightVector {
    pub fn new(grid: TimeGrid, weights: Vec<f64>, method: MethodTag) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(PlpError::invalid(format!(
                "{} weights for a grid of {} points",
                weights.len(),
                grid.len()
            )));
        }
        Ok(WeightVector {
            grid,
            weights,
            method,
            normalized: false,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn method(&self) -> MethodTag {
        self.method
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Unit Euclidean norm copy. Already-normalized vectors are returned as is.
    pub fn normalize(&self) -> Result<WeightVector> {
        if self.normalized {
            return Ok(self.clone());
        }
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(PlpError::DegenerateData(format!(
                "{} weights have norm {norm} and cannot be normalized",
                self.method
            )));
        }
        Ok(WeightVector {
            grid: self.grid.clone(),
            weights: self.weights.iter().map(|w| w / norm).collect(),
            method: self.method,
            normalized: true,
        })
    }

    /// Parameter value `Σ w_i C_i` (times `d_i` where the method calls for it).
    pub fn evaluate(&self, contrast: &[f64]) -> Result<f64> {
        if contrast.len() != self.len() {
            return Err(PlpError::invalid(format!(
                "contrast has length {}, weights have {}",
                contrast.len(),
                self.len()
            )));
        }
        let d = self.grid.intervals();
        Ok(if self.method.applies_interval() {
            self.weights.iter().zip(contrast).zip(d).map(|((w, c), d)| w * c * d).sum()
        } else {
            self.weights.iter().zip(contrast).map(|(w, c)| w * c).sum()
        })
    }
}

impl AsRef<[f64]> for WeightVector {
    fn as_ref(&self) -> &[f64] {
        &self.weights
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{PlpError, Result};

/// Acquisition instants `t_1 < … < t_N` with the implicit origin `t_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct TimeGrid {
    instants: Vec<f64>,
    intervals: Vec<f64>,
    step: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    instants: Vec<f64>,
}

impl TryFrom<GridRepr> for TimeGrid {
    type Error = PlpError;

    fn try_from(repr: GridRepr) -> Result<Self> {
        TimeGrid::from_instants(repr.instants)
    }
}

impl From<TimeGrid> for GridRepr {
    fn from(grid: TimeGrid) -> Self {
        GridRepr { instants: grid.instants }
    }
}

impl TimeGrid {
    /// Builds a grid from strictly increasing positive instants.
    pub fn from_instants(instants: Vec<f64>) -> Result<Self> {
        if instants.len() < 2 {
            return Err(PlpError::invalid(format!(
                "time grid needs at least 2 instants, got {}",
                instants.len()
            )));
        }
        let mut prev = 0.0;
        let mut intervals = Vec::with_capacity(instants.len());
        for (i, &t) in instants.iter().enumerate() {
            if !t.is_finite() || t <= prev {
                return Err(PlpError::invalid(format!(
                    "instants must be finite and strictly increasing from 0; instant {i} = {t}"
                )));
            }
            intervals.push(t - prev);
            prev = t;
        }
        let step = detect_step(&instants, &intervals);
        Ok(TimeGrid {
            instants,
            intervals,
            step,
        })
    }

    pub fn len(&self) -> usize {
        self.instants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instants.is_empty()
    }

    pub fn instants(&self) -> &[f64] {
        &self.instants
    }

    pub fn intervals(&self) -> &[f64] {
        &self.intervals
    }

    /// Total duration `T = t_N`.
    pub fn duration(&self) -> f64 {
        self.instants[self.instants.len() - 1]
    }

    /// Common step `d` when `t_i = i·d` for every sample.
    pub fn uniform_step(&self) -> Option<f64> {
        self.step
    }

    /// Sub-grid made of the listed sample indices (0-based, strictly
    /// increasing). Intervals are recomputed from the kept instants.
    pub fn restrict(&self, kept: &[usize]) -> Result<TimeGrid> {
        let mut instants = Vec::with_capacity(kept.len());
        for &k in kept {
            let t = self.instants.get(k).ok_or_else(|| {
                PlpError::invalid(format!("index {k} outside grid of length {}", self.len()))
            })?;
            instants.push(*t);
        }
        TimeGrid::from_instants(instants)
    }
}

fn detect_step(instants: &[f64], intervals: &[f64]) -> Option<f64> {
    let d = intervals[0];
    let tol = 1e-12 * d.max(f64::MIN_POSITIVE);
    let uniform = instants
        .iter()
        .enumerate()
        .all(|(i, &t)| (t - (i + 1) as f64 * d).abs() <= tol * (i + 1) as f64);
    uniform.then_some(d)
}

/// Uniform grid `t_i = i·d`, `i = 1..n`.
pub fn build_uniform_grid(n: usize, d: f64) -> Result<TimeGrid> {
    if n < 2 {
        return Err(PlpError::invalid(format!("n must be at least 2, got {n}")));
    }
    if !(d.is_finite() && d > 0.0) {
        return Err(PlpError::invalid(format!("d must be positive, got {d}")));
    }
    let instants: Vec<f64> = (1..=n).map(|i| i as f64 * d).collect();
    Ok(TimeGrid {
        intervals: vec![d; n],
        instants,
        step: Some(d),
    })
}

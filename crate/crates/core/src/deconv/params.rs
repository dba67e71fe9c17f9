use serde::{Deserialize, Serialize};

use crate::error::{PlpError, Result};
use crate::model::TimeGrid;

/// Blood volume, blood flow and mean transit time in model units.
/// `mean_transit_time` is `None` when the flow is exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfusionTriple {
    pub blood_volume: f64,
    pub blood_flow: f64,
    pub mean_transit_time: Option<f64>,
}

impl PerfusionTriple {
    /// Builds the triple from volume and flow via `T_mtt = V_b / F_b`.
    pub fn from_volume_flow(blood_volume: f64, blood_flow: f64) -> Self {
        let mean_transit_time = (blood_flow != 0.0).then(|| blood_volume / blood_flow);
        PerfusionTriple {
            blood_volume,
            blood_flow,
            mean_transit_time,
        }
    }
}

/// `V_b = Σ R_i d_i`, `F_b = R_1`.
pub fn perfusion_params(residual: &[f64], grid: &TimeGrid) -> Result<PerfusionTriple> {
    if residual.len() != grid.len() {
        return Err(PlpError::invalid(format!(
            "residual has length {}, grid has {} points",
            residual.len(),
            grid.len()
        )));
    }
    let volume = residual.iter().zip(grid.intervals()).map(|(r, d)| r * d).sum();
    Ok(PerfusionTriple::from_volume_flow(volume, residual[0]))
}

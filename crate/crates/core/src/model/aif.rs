use serde::{Deserialize, Serialize};

use super::grid::TimeGrid;
use crate::error::{PlpError, Result};

/// Arterial input function sampled on a grid. `K(0)` is kept separately
/// because the diagonal of the convolution matrix evaluates the kernel at lag 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AifCurve {
    grid: TimeGrid,
    values: Vec<f64>,
    value_at_zero: f64,
}

impl AifCurve {
    pub fn new(grid: TimeGrid, values: Vec<f64>, value_at_zero: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(PlpError::invalid(format!(
                "AIF has {} values for a grid of {} instants",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(PlpError::invalid(format!("AIF value {i} is not finite")));
        }
        if !value_at_zero.is_finite() {
            return Err(PlpError::invalid("AIF value at t = 0 is not finite"));
        }
        Ok(AifCurve {
            grid,
            values,
            value_at_zero,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at_zero(&self) -> f64 {
        self.value_at_zero
    }

    /// Kernel at an arbitrary lag, linearly interpolated between
    /// `(0, K(0)), (t_1, K_1), …, (t_N, K_N)`. Lags past `t_N` hold the last value.
    pub fn value_at(&self, lag: f64) -> f64 {
        if lag <= 0.0 {
            return self.value_at_zero;
        }
        let t = self.grid.instants();
        let k = t.partition_point(|&ti| ti < lag);
        if k == t.len() {
            return self.values[k - 1];
        }
        if t[k] == lag {
            return self.values[k];
        }
        let (t0, k0) = if k == 0 {
            (0.0, self.value_at_zero)
        } else {
            (t[k - 1], self.values[k - 1])
        };
        k0 + (self.values[k] - k0) * (lag - t0) / (t[k] - t0)
    }

    /// `K(t_j − t_i)` for `i ≤ j` (0-based). Uniform grids index the samples
    /// directly; other grids interpolate.
    pub(crate) fn lag_value(&self, j: usize, i: usize) -> f64 {
        debug_assert!(i <= j);
        if j == i {
            return self.value_at_zero;
        }
        match self.grid.uniform_step() {
            Some(_) => self.values[j - i - 1],
            None => {
                let t = self.grid.instants();
                self.value_at(t[j] - t[i])
            }
        }
    }

    /// Same curve restricted to the listed sample indices.
    pub fn restrict(&self, kept: &[usize]) -> Result<AifCurve> {
        let grid = self.grid.restrict(kept)?;
        let values = kept.iter().map(|&k| self.values[k]).collect();
        AifCurve::new(grid, values, self.value_at_zero)
    }
}

/// Shape parameters of `K(t) = t^a · exp(−b·t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaAifParams {
    pub a: f64,
    pub b: f64,
}

impl GammaAifParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let p = GammaAifParams { a, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(PlpError::invalid(format!("gamma exponent a must be >= 0, got {}", self.a)));
        }
        if !(self.b.is_finite() && self.b >= 0.0) {
            return Err(PlpError::invalid(format!("gamma rate b must be >= 0, got {}", self.b)));
        }
        Ok(())
    }

    /// Kernel value at `t ≥ 0`, with `0^0 = 1`.
    pub fn eval(&self, t: f64) -> f64 {
        let power = if self.a == 0.0 { 1.0 } else { t.powf(self.a) };
        power * (-self.b * t).exp()
    }
}

/// Samples the gamma-variate kernel on `grid`.
pub fn gamma_aif(params: GammaAifParams, grid: &TimeGrid) -> Result<AifCurve> {
    params.validate()?;
    let values = grid.instants().iter().map(|&t| params.eval(t)).collect();
    AifCurve::new(grid.clone(), values, params.eval(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_uniform_grid;

    #[test]
    fn constant_kernel_when_a_and_b_vanish() {
        let g = build_uniform_grid(5, 0.7).unwrap();
        let aif = gamma_aif(GammaAifParams::new(0.0, 0.0).unwrap(), &g).unwrap();
        assert!(aif.values().iter().all(|&v| v == 1.0));
        assert_eq!(aif.value_at_zero(), 1.0);
    }

    #[test]
    fn reference_gamma_peaks_near_a_over_b() {
        let g = build_uniform_grid(60, 1.0).unwrap();
        let p = GammaAifParams::new(3.0, 1.0 / 1.5).unwrap();
        let aif = gamma_aif(p, &g).unwrap();
        assert_eq!(aif.value_at_zero(), 0.0);

        // exhaustive evaluation of the closed form on the grid
        let mut best = (0, f64::MIN);
        for (i, &t) in g.instants().iter().enumerate() {
            let v = t * t * t * (-t / 1.5).exp();
            assert!((aif.values()[i] - v).abs() <= 1e-12 * v.max(1e-300));
            if v > best.1 {
                best = (i, v);
            }
        }
        let argmax = aif
            .values()
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc })
            .0;
        assert_eq!(argmax, best.0);
        // continuous maximum at a/b = 4.5 s lies between samples 4 and 5
        assert!(g.instants()[argmax] == 4.0 || g.instants()[argmax] == 5.0);
        assert!(p.eval(4.5) >= p.eval(4.0) && p.eval(4.5) >= p.eval(5.0));
    }

    #[test]
    fn interpolates_between_samples() {
        let g = TimeGrid::from_instants(vec![1.0, 3.0]).unwrap();
        let aif = AifCurve::new(g, vec![2.0, 6.0], 0.0).unwrap();
        assert_eq!(aif.value_at(0.0), 0.0);
        assert_eq!(aif.value_at(0.5), 1.0);
        assert_eq!(aif.value_at(1.0), 2.0);
        assert_eq!(aif.value_at(2.0), 4.0);
        assert_eq!(aif.value_at(5.0), 6.0);
    }

    #[test]
    fn rejects_bad_values() {
        let g = build_uniform_grid(2, 1.0).unwrap();
        assert!(AifCurve::new(g.clone(), vec![1.0], 0.0).is_err());
        assert!(AifCurve::new(g.clone(), vec![1.0, f64::NAN], 0.0).is_err());
        assert!(GammaAifParams::new(-1.0, 0.0).is_err());
        assert!(GammaAifParams::new(1.0, f64::INFINITY).is_err());
    }
}

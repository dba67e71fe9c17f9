use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::deconv::{
    compute_svd, cutoff_rank, exact_inverse, tikhonov_inverse, tsvd_inverse, Constraint,
    TikhonovConfig, TsvdConfig,
};
use crate::error::{PlpError, Result};
use crate::exec::Execution;
use crate::model::{build_convolution_matrix, AifCurve, TimeGrid};
use crate::pca::{fit_pca, PixelSeriesMatrix};
use crate::weights::{
    axel_weights, basis_weights, consistency_distance, deconvolution_weights, patlak_weights,
    sign_changes, tail_divergence, BasisKind, BasisSet, ConsistencyStats, MethodTag, WeightVector,
};

/// An image-reduction schedule. Indices are 0-based sample positions; the
/// string form uses 1-based image numbers (`subsample:4`, `subsample:4@1`,
/// `truncate:14`, `interp:5+6/4+7`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScheduleStrategy {
    /// Keep `first, first + step, first + 2·step, …`.
    Subsample { step: usize, first: usize },
    /// Keep the first `keep` samples.
    Truncate { keep: usize },
    /// Replace samples by linear interpolation in time between two neighbors.
    PeakInterpolate { replace: Vec<usize>, left: usize, right: usize },
}

impl ScheduleStrategy {
    /// Every `step`-th image, ending on the last image when `step` divides `N`.
    pub fn subsample(step: usize) -> Self {
        ScheduleStrategy::Subsample {
            step,
            first: step.saturating_sub(1),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            ScheduleStrategy::Subsample { step, first } => {
                if *step < 2 {
                    return Err(PlpError::invalid(format!("subsample step must be >= 2, got {step}")));
                }
                let kept = (*first..n).step_by(*step).count();
                if kept < 2 {
                    return Err(PlpError::invalid(format!(
                        "subsample:{step} starting at image {} keeps {kept} of {n} images; need at least 2",
                        first + 1
                    )));
                }
            }
            ScheduleStrategy::Truncate { keep } => {
                if *keep < 2 || *keep > n {
                    return Err(PlpError::invalid(format!("truncate length must be in 2..={n}, got {keep}")));
                }
            }
            ScheduleStrategy::PeakInterpolate { replace, left, right } => {
                if *right >= n {
                    return Err(PlpError::invalid(format!(
                        "interpolation neighbor {} outside {n} images",
                        right + 1
                    )));
                }
                if replace.is_empty() {
                    return Err(PlpError::invalid("no images to interpolate"));
                }
                if let Some(bad) = replace.iter().find(|&&r| r <= *left || r >= *right) {
                    return Err(PlpError::invalid(format!(
                        "image {} is not strictly between neighbors {} and {}",
                        bad + 1,
                        left + 1,
                        right + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn kept_indices(&self, n: usize) -> Vec<usize> {
        match self {
            ScheduleStrategy::Subsample { step, first } => (*first..n).step_by(*step).collect(),
            ScheduleStrategy::Truncate { keep } => (0..*keep).collect(),
            ScheduleStrategy::PeakInterpolate { .. } => (0..n).collect(),
        }
    }
}

impl fmt::Display for ScheduleStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleStrategy::Subsample { step, first } if *first + 1 == *step => write!(f, "subsample:{step}"),
            ScheduleStrategy::Subsample { step, first } => write!(f, "subsample:{step}@{}", first + 1),
            ScheduleStrategy::Truncate { keep } => write!(f, "truncate:{keep}"),
            ScheduleStrategy::PeakInterpolate { replace, left, right } => {
                let list: Vec<String> = replace.iter().map(|r| (r + 1).to_string()).collect();
                write!(f, "interp:{}/{}+{}", list.join("+"), left + 1, right + 1)
            }
        }
    }
}

impl FromStr for ScheduleStrategy {
    type Err = PlpError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || PlpError::invalid(format!("cannot parse strategy '{s}'"));
        let image = |v: &str| -> Result<usize> {
            let k: usize = v.trim().parse().map_err(|_| bad())?;
            k.checked_sub(1).ok_or_else(bad)
        };
        let (kind, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        match kind {
            "subsample" => {
                let (step, first) = match rest.split_once('@') {
                    Some((step, first)) => (step, Some(image(first)?)),
                    None => (rest, None),
                };
                let step: usize = step.trim().parse().map_err(|_| bad())?;
                let first = first.unwrap_or(step.saturating_sub(1));
                Ok(ScheduleStrategy::Subsample { step, first })
            }
            "truncate" => Ok(ScheduleStrategy::Truncate {
                keep: rest.trim().parse().map_err(|_| bad())?,
            }),
            "interp" => {
                let (replace, neighbors) = rest.split_once('/').ok_or_else(bad)?;
                let replace = replace.split('+').map(image).collect::<Result<Vec<_>>>()?;
                let (left, right) = neighbors.split_once('+').ok_or_else(bad)?;
                Ok(ScheduleStrategy::PeakInterpolate {
                    replace,
                    left: image(left)?,
                    right: image(right)?,
                })
            }
            _ => Err(bad()),
        }
    }
}

/// Reduced data plus the full-grid indices of the samples it keeps.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduced<T> {
    pub value: T,
    pub kept: Vec<usize>,
}

/// Anything sampled on a time grid that a schedule can reduce.
pub trait Schedulable: Sized {
    fn grid(&self) -> &TimeGrid;
    fn keep_samples(&self, kept: &[usize]) -> Result<Self>;
    fn interpolate_samples(&self, replace: &[usize], left: usize, right: usize) -> Result<Self>;
}

fn lerp(t: &[f64], values: &[f64], i: usize, left: usize, right: usize) -> f64 {
    let w = (t[i] - t[left]) / (t[right] - t[left]);
    values[left] + (values[right] - values[left]) * w
}

impl Schedulable for AifCurve {
    fn grid(&self) -> &TimeGrid {
        AifCurve::grid(self)
    }

    fn keep_samples(&self, kept: &[usize]) -> Result<Self> {
        self.restrict(kept)
    }

    fn interpolate_samples(&self, replace: &[usize], left: usize, right: usize) -> Result<Self> {
        let t = self.grid().instants();
        let mut values = self.values().to_vec();
        for &i in replace {
            values[i] = lerp(t, self.values(), i, left, right);
        }
        AifCurve::new(self.grid().clone(), values, self.value_at_zero())
    }
}

impl Schedulable for PixelSeriesMatrix {
    fn grid(&self) -> &TimeGrid {
        PixelSeriesMatrix::grid(self)
    }

    fn keep_samples(&self, kept: &[usize]) -> Result<Self> {
        self.restrict_time(kept)
    }

    fn interpolate_samples(&self, replace: &[usize], left: usize, right: usize) -> Result<Self> {
        let t = self.grid().instants();
        let src = self.rows();
        let mut rows: DMatrix<f64> = src.clone();
        for p in 0..src.nrows() {
            let row: Vec<f64> = src.row(p).iter().copied().collect();
            for &i in replace {
                rows[(p, i)] = lerp(t, &row, i, left, right);
            }
        }
        self.with_rows(rows)
    }
}

pub fn apply_strategy<T: Schedulable>(source: &T, strategy: &ScheduleStrategy) -> Result<Reduced<T>> {
    let n = source.grid().len();
    strategy.validate(n)?;
    let kept = strategy.kept_indices(n);
    let value = match strategy {
        ScheduleStrategy::PeakInterpolate { replace, left, right } => {
            source.interpolate_samples(replace, *left, *right)?
        }
        _ => source.keep_samples(&kept)?,
    };
    Ok(Reduced { value, kept })
}

/// Tikhonov strength, either fixed or tied to the TSVD cutoff singular value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaRule {
    Fixed(f64),
    /// `α = λ_r` where `r` is the cutoff index at this fraction of `λ_1`.
    CutoffSingularValue(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodParams {
    pub tsvd: TsvdConfig,
    pub alpha: AlphaRule,
    pub constraint: Constraint,
    pub basis_size: usize,
    pub basis_convolved: bool,
    pub tail_fraction: f64,
}

impl Default for MethodParams {
    fn default() -> Self {
        MethodParams {
            tsvd: TsvdConfig::Fraction(0.2),
            alpha: AlphaRule::CutoffSingularValue(0.2),
            constraint: Constraint::Identity,
            basis_size: 8,
            basis_convolved: false,
            tail_fraction: 0.25,
        }
    }
}

/// Inputs of a weight computation: the AIF for model-based methods, pixel
/// data for PCA. Either supplies the grid.
#[derive(Debug, Clone, Default)]
pub struct ExperimentSource {
    pub aif: Option<AifCurve>,
    pub data: Option<PixelSeriesMatrix>,
}

impl ExperimentSource {
    pub fn grid(&self) -> Result<&TimeGrid> {
        self.aif
            .as_ref()
            .map(|a| a.grid())
            .or(self.data.as_ref().map(|d| d.grid()))
            .ok_or_else(|| PlpError::invalid("experiment needs an AIF or pixel data"))
    }

    fn aif(&self, tag: MethodTag) -> Result<&AifCurve> {
        self.aif
            .as_ref()
            .ok_or_else(|| PlpError::invalid(format!("method {tag} needs an AIF")))
    }

    fn reduce(&self, strategy: &ScheduleStrategy) -> Result<(ExperimentSource, Vec<usize>)> {
        let aif = self.aif.as_ref().map(|a| apply_strategy(a, strategy)).transpose()?;
        let data = self.data.as_ref().map(|d| apply_strategy(d, strategy)).transpose()?;
        let kept = match (&aif, &data) {
            (Some(r), _) => r.kept.clone(),
            (None, Some(r)) => r.kept.clone(),
            (None, None) => return Err(PlpError::invalid("experiment needs an AIF or pixel data")),
        };
        if let (Some(a), Some(d)) = (&aif, &data) {
            if a.value.grid() != d.value.grid() {
                return Err(PlpError::invalid("AIF and pixel data are sampled on different grids"));
            }
        }
        Ok((
            ExperimentSource {
                aif: aif.map(|r| r.value),
                data: data.map(|r| r.value),
            },
            kept,
        ))
    }
}

/// Raw weight vector of one method on the source's grid.
pub fn method_weights(tag: MethodTag, params: &MethodParams, source: &ExperimentSource) -> Result<WeightVector> {
    let grid = source.grid()?;
    let pick = |pair: (WeightVector, WeightVector), first: bool| if first { pair.0 } else { pair.1 };
    match tag {
        MethodTag::TsvdVolume | MethodTag::TsvdFlow => {
            let m = build_convolution_matrix(source.aif(tag)?, grid)?;
            let inv = tsvd_inverse(&compute_svd(m.entries())?, params.tsvd)?;
            Ok(pick(deconvolution_weights(&inv, grid)?, tag == MethodTag::TsvdVolume))
        }
        MethodTag::TikhonovVolume | MethodTag::TikhonovFlow => {
            let m = build_convolution_matrix(source.aif(tag)?, grid)?;
            let alpha = match params.alpha {
                AlphaRule::Fixed(a) => a,
                AlphaRule::CutoffSingularValue(f) => {
                    let s = compute_svd(m.entries())?.singular_values;
                    s[cutoff_rank(&s, f)? - 1]
                }
            };
            let cfg = TikhonovConfig {
                alpha,
                constraint: params.constraint,
            };
            let inv = tikhonov_inverse(m.entries(), cfg)?;
            Ok(pick(deconvolution_weights(&inv, grid)?, tag == MethodTag::TikhonovVolume))
        }
        MethodTag::ExactVolume | MethodTag::ExactFlow => {
            let m = build_convolution_matrix(source.aif(tag)?, grid)?;
            let inv = exact_inverse(m.entries())?;
            Ok(pick(deconvolution_weights(&inv, grid)?, tag == MethodTag::ExactVolume))
        }
        MethodTag::AxelVolume | MethodTag::AxelMtt => Ok(pick(axel_weights(grid)?, tag == MethodTag::AxelVolume)),
        MethodTag::PatlakVr | MethodTag::PatlakPerm => {
            Ok(pick(patlak_weights(source.aif(tag)?, grid)?, tag == MethodTag::PatlakVr))
        }
        MethodTag::BasisVolume | MethodTag::BasisMtt | MethodTag::BasisFlow => {
            let convolved = match tag {
                MethodTag::BasisMtt => false,
                MethodTag::BasisFlow => true,
                _ => params.basis_convolved,
            };
            let kind = if convolved {
                BasisKind::Convolved(source.aif(tag)?.clone())
            } else {
                BasisKind::Direct
            };
            let basis = BasisSet::bspline(grid, params.basis_size, kind)?;
            Ok(pick(basis_weights(&basis, grid)?, tag == MethodTag::BasisVolume))
        }
        MethodTag::Fpc => {
            let data = source
                .data
                .as_ref()
                .ok_or_else(|| PlpError::invalid("method fpc needs pixel data"))?;
            Ok(fit_pca(data)?.component_weights)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyOutcome {
    pub strategy: ScheduleStrategy,
    pub kept: Vec<usize>,
    pub weights: WeightVector,
    pub stats: ConsistencyStats,
    pub tail_divergence: f64,
    pub sign_changes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub method: MethodTag,
    pub full: WeightVector,
    pub entries: Vec<StrategyOutcome>,
}

pub fn consistency_experiment(
    tag: MethodTag,
    params: &MethodParams,
    source: &ExperimentSource,
    strategies: &[ScheduleStrategy],
) -> Result<ConsistencyReport> {
    consistency_experiment_with(tag, params, source, strategies, Execution::default())
}

pub fn consistency_experiment_with(
    tag: MethodTag,
    params: &MethodParams,
    source: &ExperimentSource,
    strategies: &[ScheduleStrategy],
    exec: Execution,
) -> Result<ConsistencyReport> {
    let full = method_weights(tag, params, source)?;
    let entries = exec.try_map_indexed(strategies.len(), |k| {
        let strategy = &strategies[k];
        let (reduced, kept) = source.reduce(strategy)?;
        let weights = method_weights(tag, params, &reduced)?;
        let stats = consistency_distance(full.weights(), weights.weights(), &kept)?;
        Ok::<_, PlpError>(StrategyOutcome {
            strategy: strategy.clone(),
            tail_divergence: tail_divergence(weights.weights(), params.tail_fraction)?,
            sign_changes: sign_changes(weights.weights()),
            kept,
            weights,
            stats,
        })
    })?;
    Ok(ConsistencyReport {
        method: tag,
        full,
        entries,
    })
}

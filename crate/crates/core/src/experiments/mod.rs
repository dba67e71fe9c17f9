//! Validation studies: conditioning and cutoff surfaces over the gamma AIF
//! family, TSVD weight panoramas, and weight consistency under image-reduction
//! schedules.

mod panorama;
mod schedule;
mod surface;

pub use panorama::{weight_panorama, PanoramaEntry};
pub use schedule::{
    apply_strategy, consistency_experiment, consistency_experiment_with, method_weights,
    AlphaRule, ConsistencyReport, ExperimentSource, MethodParams, Reduced, ScheduleStrategy,
    Schedulable, StrategyOutcome,
};
pub use surface::{
    condition_surface, condition_surface_with, cutoff_index, cutoff_surface, cutoff_surface_with,
    gamma_spectrum, SurfaceGrid, SurfaceKind,
};

//! Fixtures shared by the criterion benchmarks.

use kinanneal::fokker_planck::PhaseGrid;
use kinanneal::{CoolingSchedule, PotentialModel, VarianceMap};

/// Tilted double well with the slow logarithmic schedule used by the dichotomy study.
pub fn double_well() -> (PotentialModel, CoolingSchedule, VarianceMap) {
    (PotentialModel::tilted_double_well(0.3), CoolingSchedule::logarithmic(1.5 * 0.717), VarianceMap::identity())
}

/// Default 128 x 128 phase grid at temperature `eps`.
pub fn phase_grid(model: &PotentialModel, var: &VarianceMap, eps: f64) -> PhaseGrid {
    PhaseGrid::default_for(model, var, eps).expect("default grid")
}

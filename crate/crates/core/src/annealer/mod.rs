//! Kinetic and overdamped annealing dynamics, trial ensembles and the steering control.

mod ensemble;
mod integrator;
mod steering;

pub use ensemble::{
    run_ensemble, run_trial, trapping_minimum, wilson_interval, Checkpoint, Dynamics, EnsembleReport, InitSpec,
    Initializer, TrialReport, TrialSetup, Z_95,
};
pub use integrator::{
    default_dt, drift, kick, step_kinetic, step_overdamped, IntegratorConfig, KineticStepper, OverdampedState,
    OverdampedStepper, PhaseState, Scheme,
};
pub use steering::{steering_control, SteeringControl, SteeringReport};

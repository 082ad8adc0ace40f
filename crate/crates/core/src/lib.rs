//! Simulated annealing with the inhomogeneous kinetic Langevin diffusion.
//!
//! The process on `R^d x R^d` is
//!
//! ```text
//! dX = Y dt
//! dY = -(sigma(eps_t)/eps_t) grad U(X) dt - Y / sigma(eps_t) dt + sqrt(2) dB
//! ```
//!
//! with a cooling schedule `eps_t` and a variance map `sigma(eps)`. Alongside the
//! samplers the crate carries the diagnostics used to check convergence on small
//! problems: critical depth, Lyapunov drift, moment growth, Gibbs quadrature,
//! a phase-space Fokker-Planck solver with hypocoercive entropy functionals and a
//! discrete Gamma-calculus checker.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod annealer;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod fokker_planck;
pub mod potentials;
pub mod rng;
pub mod sampling;
pub mod schedules;

pub use annealer::{EnsembleReport, PhaseState, TrialReport};
pub use error::{Error, Result};
pub use potentials::{GrowthConstants, LandscapeAnalysis, LandscapeGrid, PotentialModel};
pub use sampling::GridBox;
pub use schedules::{CoolingSchedule, VarianceMap};

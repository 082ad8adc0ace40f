//! Phase-space (`d = 1`) Fokker-Planck solver and hypocoercive entropy functionals.

mod decay;
mod entropy;
mod generator;
mod grid;
mod solver;

pub use decay::{decay_study, DecayInit, DecayStudy};
pub use entropy::{entropy_suite, entropy_with, gamma_eps, EntropyReport, EXCLUDE_REL, HIGH_MU_REL};
pub use generator::{bernoulli, ColumnFactors, DiscreteGenerator, Stencil};
pub use grid::{
    gibbs_density, DensityField, GibbsField, PhaseGrid, DEFAULT_CELLS, DEFAULT_Y_WIDTH, GIBBS_TRUNCATION_TOL,
};
pub use solver::{evolve, FokkerPlanckSolver, CFL_SAFETY, CLIP_TOL, REFRESH_TOL};

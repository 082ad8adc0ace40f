//! Lyapunov drift, moment growth, Gibbs tails and discrete Gamma calculus.

mod gamma;
mod gibbs;
mod lyapunov;
mod moments;

pub(crate) use moments::least_squares_slope;

pub use gamma::{
    beta_constant, carre_du_champ, carre_du_champ_residual, entropic_residual, gamma_check, gamma_check_with,
    gamma_field, phi2_constant, quadratic_lemma_residual, random_test_function, GammaFunctional, GammaReport,
    Phi2Constant, ResidualReport, BOUNDARY_LAYER,
};
pub use gibbs::{gibbs_tail, GibbsTail, QuadratureGrid, TRUNCATION_TOL};
pub use lyapunov::{
    check_lyapunov_drift, generator_of_r, lyapunov_value, phase_box, DriftReport, LyapunovParams, RHO_CANDIDATES,
    RHO_MAX, RHO_MIN,
};
pub use moments::{fit_growth_exponent, track_moments, MomentSample, MomentSeries};

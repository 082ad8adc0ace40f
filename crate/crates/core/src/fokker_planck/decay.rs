//! Time series of the entropy functionals along an annealed Fokker-Planck run.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::entropy::{entropy_with, gamma_eps, EntropyReport};
use super::grid::{DensityField, GibbsField, PhaseGrid};
use super::solver::FokkerPlanckSolver;
use crate::annealer::trapping_minimum;
use crate::diagnostics::least_squares_slope;
use crate::error::{Error, Result};
use crate::potentials::{critical_depth, LandscapeGrid, PotentialModel};
use crate::schedules::{validate, CoolingSchedule, VarianceMap};

/// Initial density of a decay study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum DecayInit {
    /// `mu_{eps0}` itself.
    Gibbs,
    /// Gaussian in `x` around `center` (default: the trapping minimum) with standard
    /// deviation `x_sd` (default: the Laplace width at `eps0`), Gibbs velocities.
    LocalGaussian {
        #[serde(default)]
        center: Option<f64>,
        #[serde(default)]
        x_sd: Option<f64>,
    },
}

impl Default for DecayInit {
    fn default() -> Self {
        DecayInit::LocalGaussian { center: None, x_sd: None }
    }
}

impl DecayInit {
    pub fn build(
        &self,
        model: &PotentialModel,
        var: &VarianceMap,
        eps0: f64,
        grid: &PhaseGrid,
    ) -> Result<DensityField> {
        let sigma = var.sigma(eps0);
        match self {
            DecayInit::Gibbs => {
                let g = GibbsField::new(model, var, eps0, grid);
                DensityField::new(grid.clone(), g.mu, 0.0)
            }
            DecayInit::LocalGaussian { center, x_sd } => {
                let c = match center {
                    Some(c) => *c,
                    None => trapping_minimum(model)?[0],
                };
                let sd = match x_sd {
                    Some(s) => *s,
                    None => {
                        let mut h = [0.0];
                        model.hessian(&[c], &mut h);
                        if !(h[0] > 0.0) {
                            return Err(Error::Config(format!("no Laplace width at x = {c}: U'' = {}", h[0])));
                        }
                        (eps0 / h[0]).sqrt()
                    }
                };
                if !(sd > 0.0) {
                    return Err(Error::Config("initial x standard deviation must be positive".into()));
                }
                DensityField::from_product(
                    grid.clone(),
                    |x| (-(x - c).powi(2) / (2.0 * sd * sd)).exp(),
                    |y| (-y * y / (2.0 * sigma)).exp(),
                    0.0,
                )
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayStudy {
    pub samples: Vec<EntropyReport>,
    pub e_star: f64,
    pub energy: f64,
    /// Slope of `ln H` against `ln t` over the tail half of the positive-time checkpoints.
    pub fitted_exponent: Option<f64>,
    /// `-(1 - E*/E)/2`, reported for comparison only.
    pub predicted_exponent: f64,
    pub pde_steps: u64,
    pub operator_rebuilds: u64,
}

impl DecayStudy {
    /// `H` never rises by more than `rel_tol` over the tail fraction `tail` of the checkpoints.
    pub fn tail_non_increasing(&self, tail: f64, rel_tol: f64) -> bool {
        let n = self.samples.len();
        let start = n - ((tail * n as f64).ceil() as usize).min(n);
        self.samples[start..].windows(2).all(|w| w[1].h <= w[0].h * (1.0 + rel_tol))
    }

    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "t,Ent,I,H,L1,mass,boundary_mass,eps")?;
        for s in &self.samples {
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                s.t, s.ent, s.fisher, s.h, s.l1, s.mass, s.boundary_mass, s.eps
            )?;
        }
        Ok(())
    }
}

/// Evolve `m0` (or the initial density described by `init`) through the checkpoints and
/// record the entropy functionals at `t = 0` and at every checkpoint.
pub fn decay_study(
    model: &PotentialModel,
    sched: &CoolingSchedule,
    var: &VarianceMap,
    grid: &PhaseGrid,
    init: &DecayInit,
    checkpoints: &[f64],
    dt_pde: Option<f64>,
) -> Result<DecayStudy> {
    if checkpoints.windows(2).any(|w| w[1] <= w[0]) || checkpoints.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Config("checkpoint times must be positive and strictly increasing".into()));
    }
    let e_star = critical_depth(model, &LandscapeGrid::default_for(model))?.unwrap_or(0.0);
    let horizon = checkpoints.last().copied().unwrap_or(1.0);
    let cert = validate(sched, var, e_star, horizon, 64);
    if !cert.admissible {
        return Err(Error::Assumption(format!("schedule is not admissible: {}", cert.violations.join("; "))));
    }
    let eps0 = sched.eps0();
    let mut m = init.build(model, var, eps0, grid)?;
    let mut solver = FokkerPlanckSolver::new(model, sched, var, dt_pde)?;
    let report = |m: &DensityField| {
        let eps = sched.epsilon_at(m.time);
        entropy_with(m, &GibbsField::new(model, var, eps, &m.grid), gamma_eps(model, var, eps))
    };
    let mut samples = vec![report(&m)?];
    for &t in checkpoints {
        solver.advance_to(&mut m, t)?;
        samples.push(report(&m)?);
    }
    let energy = sched.energy();
    let tail: Vec<&EntropyReport> = {
        let pos: Vec<&EntropyReport> = samples.iter().filter(|s| s.t > 0.0).collect();
        let start = pos.len() / 2;
        pos[start..].to_vec()
    };
    let fitted_exponent = (tail.len() >= 2 && tail.iter().all(|s| s.h > 0.0)).then(|| {
        let xs: Vec<f64> = tail.iter().map(|s| s.t.ln()).collect();
        let ys: Vec<f64> = tail.iter().map(|s| s.h.ln()).collect();
        least_squares_slope(&xs, &ys)
    });
    Ok(DecayStudy {
        samples,
        e_star,
        energy,
        fitted_exponent,
        predicted_exponent: -(1.0 - e_star / energy) / 2.0,
        pde_steps: solver.steps,
        operator_rebuilds: solver.rebuilds,
    })
}

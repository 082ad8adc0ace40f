//! Finite-volume time stepping of the kinetic Fokker-Planck equation: explicit
//! transport in `x`, implicit velocity jumps column by column.

use super::generator::{ColumnFactors, DiscreteGenerator, Stencil};
use super::grid::DensityField;
use crate::error::{Error, Result};
use crate::potentials::PotentialModel;
use crate::schedules::{CoolingSchedule, VarianceMap};

/// Fraction of the positivity limit `1 / max_x_rate` used by automatic steps.
pub const CFL_SAFETY: f64 = 0.9;
/// The frozen-temperature operator is rebuilt when `eps_t` has drifted by this relative amount.
pub const REFRESH_TOL: f64 = 1e-4;
/// Largest negative mass per step that may be clipped away.
pub const CLIP_TOL: f64 = 1e-12;

pub struct FokkerPlanckSolver<'a> {
    model: &'a PotentialModel,
    sched: &'a CoolingSchedule,
    var: &'a VarianceMap,
    gen: Option<DiscreteGenerator>,
    factors: Option<ColumnFactors>,
    scratch: Vec<f64>,
    /// Fixed step requested by the caller; `None` picks `CFL_SAFETY / max_rate`.
    pub dt: Option<f64>,
    pub steps: u64,
    pub rebuilds: u64,
}

impl<'a> FokkerPlanckSolver<'a> {
    pub fn new(
        model: &'a PotentialModel,
        sched: &'a CoolingSchedule,
        var: &'a VarianceMap,
        dt: Option<f64>,
    ) -> Result<Self> {
        if model.dim() != 1 {
            return Err(Error::Config("the phase-space solver handles one-dimensional positions only".into()));
        }
        sched.check()?;
        var.check()?;
        if let Some(dt) = dt {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("PDE time step must be positive, got {dt}")));
            }
        }
        Ok(Self { model, sched, var, gen: None, factors: None, scratch: Vec::new(), dt, steps: 0, rebuilds: 0 })
    }

    fn refresh(&mut self, m: &DensityField) -> Result<()> {
        let eps = self.sched.epsilon_at(m.time);
        let stale = match &self.gen {
            None => true,
            Some(g) => g.grid != m.grid || (eps / g.eps - 1.0).abs() > REFRESH_TOL,
        };
        if stale {
            self.gen = Some(DiscreteGenerator::new(self.model, self.var, eps, &m.grid, Stencil::Upwind)?);
            self.factors = None;
            self.rebuilds += 1;
        }
        Ok(())
    }

    /// Step size the solver would use now, and the positivity limit.
    fn step_size(&self) -> Result<(f64, f64)> {
        let gen = self.gen.as_ref().expect("generator built");
        let limit = 1.0 / gen.max_x_rate();
        match self.dt {
            Some(dt) if dt > CFL_SAFETY * limit => Err(Error::Cfl { dt, limit: CFL_SAFETY * limit }),
            Some(dt) => Ok((dt, limit)),
            None => Ok((CFL_SAFETY * limit, limit)),
        }
    }

    /// Advance `m` to `t_end`, landing on it exactly.
    pub fn advance_to(&mut self, m: &mut DensityField, t_end: f64) -> Result<()> {
        if !(t_end >= m.time) {
            return Err(Error::Config(format!("cannot evolve backwards from t = {} to {t_end}", m.time)));
        }
        self.scratch.resize(m.values.len(), 0.0);
        let area = m.grid.cell_area();
        while m.time < t_end {
            self.refresh(m)?;
            let (dt, _) = self.step_size()?;
            let h = dt.min(t_end - m.time);
            let gen = self.gen.as_ref().expect("generator built");
            if self.factors.as_ref().is_none_or(|f| f.dt != h) {
                self.factors = Some(gen.column_factors(h)?);
            }
            let factors = self.factors.as_ref().expect("factors built");
            let most_negative = gen.advance_density_imex(&m.values, &mut self.scratch, factors)?;
            std::mem::swap(&mut m.values, &mut self.scratch);
            if most_negative < 0.0 {
                let clipped: f64 = m.values.iter().filter(|v| **v < 0.0).map(|v| -v).sum::<f64>() * area;
                if clipped > CLIP_TOL {
                    return Err(Error::Numerical(format!(
                        "step at t = {} produced {clipped:.3e} of negative mass; the grid under-resolves the flow",
                        m.time
                    )));
                }
                let before = m.mass();
                m.values.iter_mut().for_each(|v| *v = v.max(0.0));
                let after = m.mass();
                m.values.iter_mut().for_each(|v| *v *= before / after);
            }
            m.time = if t_end - m.time <= h { t_end } else { m.time + h };
            self.steps += 1;
        }
        Ok(())
    }
}

/// Evolve `m` under the schedule until `t_end`; `dt_pde = None` uses the automatic stable step.
pub fn evolve(
    m: &DensityField,
    model: &PotentialModel,
    sched: &CoolingSchedule,
    var: &VarianceMap,
    t_end: f64,
    dt_pde: Option<f64>,
) -> Result<DensityField> {
    let mut out = m.clone();
    FokkerPlanckSolver::new(model, sched, var, dt_pde)?.advance_to(&mut out, t_end)?;
    Ok(out)
}

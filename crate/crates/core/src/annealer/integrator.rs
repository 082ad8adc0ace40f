use serde::{Deserialize, Serialize};

use crate::potentials::PotentialModel;
use crate::rng::{NoiseStream, SUBSTEP_DYNAMICS};
use crate::schedules::{CoolingSchedule, VarianceMap};
use crate::{Error, Result};

/// Point `(x, y, t)` of the position-velocity process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
}

impl PhaseState {
    pub fn new(x: Vec<f64>, y: Vec<f64>, t: f64) -> Self {
        assert_eq!(x.len(), y.len());
        Self { x, y, t }
    }

    pub fn at_rest(x: Vec<f64>) -> Self {
        let d = x.len();
        Self::new(x, vec![0.0; d], 0.0)
    }

    pub fn kinetic(&self) -> f64 {
        self.y.iter().map(|v| v * v).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Splitting,
    EulerMaruyama,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub divergence_radius: f64,
}

impl IntegratorConfig {
    /// `dt = min(1e-2, sigma(eps0)/10)`, radius ten times the landscape radius.
    pub fn default_for(model: &PotentialModel, sched: &CoolingSchedule, var: &VarianceMap) -> Self {
        Self {
            scheme: Scheme::Splitting,
            dt: default_dt(sched, var),
            divergence_radius: 10.0 * model.domain().radius(),
        }
    }

    pub fn check(&self, model: &PotentialModel) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("integrator dt must be positive, got {}", self.dt)));
        }
        if !(self.divergence_radius > model.domain().radius()) {
            return Err(Error::Config(format!(
                "divergence radius {} must exceed the landscape radius {}",
                self.divergence_radius,
                model.domain().radius()
            )));
        }
        Ok(())
    }
}

pub fn default_dt(sched: &CoolingSchedule, var: &VarianceMap) -> f64 {
    (var.sigma(sched.eps0()) / 10.0).min(1e-2)
}

#[inline]
fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

/// Splitting or Euler-Maruyama stepper for the kinetic process.
///
/// The gradient at the current position is cached between steps, so the
/// splitting scheme costs one gradient evaluation per step.
#[derive(Clone, Debug)]
pub struct KineticStepper<'a> {
    model: &'a PotentialModel,
    sched: &'a CoolingSchedule,
    var: &'a VarianceMap,
    scheme: Scheme,
    radius2: f64,
    grad: Vec<f64>,
    xi: Vec<f64>,
    grad_valid: bool,
}

impl<'a> KineticStepper<'a> {
    pub fn new(
        model: &'a PotentialModel,
        sched: &'a CoolingSchedule,
        var: &'a VarianceMap,
        cfg: &IntegratorConfig,
    ) -> Self {
        let d = model.dim();
        Self {
            model,
            sched,
            var,
            scheme: cfg.scheme,
            radius2: cfg.divergence_radius * cfg.divergence_radius,
            grad: vec![0.0; d],
            xi: vec![0.0; d],
            grad_valid: false,
        }
    }

    /// Forget the cached gradient (call after editing the state by hand).
    pub fn invalidate(&mut self) {
        self.grad_valid = false;
    }

    /// Advance by `dt` using normals number `step` of the dynamics stream.
    /// Returns false when the new state leaves the divergence ball.
    #[inline]
    pub fn step(&mut self, s: &mut PhaseState, dt: f64, noise: &mut NoiseStream, step: u64) -> bool {
        let mut xi = std::mem::take(&mut self.xi);
        noise.fill_normals(SUBSTEP_DYNAMICS, step, &mut xi);
        let ok = self.step_with(s, dt, &xi);
        self.xi = xi;
        ok
    }

    /// Advance by `dt` with caller-supplied standard normals.
    #[inline]
    pub fn step_with(&mut self, s: &mut PhaseState, dt: f64, xi: &[f64]) -> bool {
        if !self.grad_valid {
            self.model.gradient(&s.x, &mut self.grad);
            self.grad_valid = true;
        }
        let eps = self.sched.epsilon_at(s.t);
        let sigma = self.var.sigma(eps);
        let alpha = sigma / eps;
        match self.scheme {
            Scheme::Splitting => {
                let h = 0.5 * dt;
                let c = (-dt / sigma).exp();
                let amp = (sigma * (1.0 - c * c)).sqrt();
                for k in 0..s.x.len() {
                    s.y[k] -= alpha * self.grad[k] * h;
                    s.x[k] += s.y[k] * h;
                    s.y[k] = c * s.y[k] + amp * xi[k];
                    s.x[k] += s.y[k] * h;
                }
                self.model.gradient(&s.x, &mut self.grad);
                for k in 0..s.x.len() {
                    s.y[k] -= alpha * self.grad[k] * h;
                }
            }
            Scheme::EulerMaruyama => {
                let amp = (2.0 * dt).sqrt();
                for k in 0..s.x.len() {
                    let yk = s.y[k];
                    s.x[k] += yk * dt;
                    s.y[k] += -(alpha * self.grad[k] + yk / sigma) * dt + amp * xi[k];
                }
                self.model.gradient(&s.x, &mut self.grad);
            }
        }
        s.t += dt;
        norm2(&s.x) <= self.radius2 && norm2(&s.y) <= self.radius2 && s.x.iter().chain(&s.y).all(|v| v.is_finite())
    }
}

/// One splitting step with noise supplied by the caller.
pub fn step_kinetic(
    state: &PhaseState,
    model: &PotentialModel,
    sched: &CoolingSchedule,
    var: &VarianceMap,
    cfg: &IntegratorConfig,
    noise: &mut NoiseStream,
    step: u64,
) -> Result<PhaseState> {
    if state.x.len() != model.dim() || state.y.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: state.x.len() });
    }
    let mut next = state.clone();
    let mut stepper = KineticStepper::new(model, sched, var, cfg);
    if stepper.step(&mut next, cfg.dt, noise, step) {
        Ok(next)
    } else {
        Err(Error::Numerical(format!("trajectory left the divergence ball at t = {}", next.t)))
    }
}

/// Deterministic kick and drift substeps, exposed for reversibility checks.
pub fn kick(y: &mut [f64], grad: &[f64], alpha: f64, h: f64) {
    for (yk, g) in y.iter_mut().zip(grad) {
        *yk -= alpha * g * h;
    }
}

pub fn drift(x: &mut [f64], y: &[f64], h: f64) {
    for (xk, yk) in x.iter_mut().zip(y) {
        *xk += yk * h;
    }
}

/// Overdamped state `(z, t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverdampedState {
    pub z: Vec<f64>,
    pub t: f64,
}

/// Euler-Maruyama for `dZ = -grad U dt + sqrt(2 T_t) dB`.
#[derive(Clone, Debug)]
pub struct OverdampedStepper<'a, F> {
    model: &'a PotentialModel,
    temp_at: F,
    radius2: f64,
    grad: Vec<f64>,
    xi: Vec<f64>,
}

impl<'a, F: Fn(f64) -> f64> OverdampedStepper<'a, F> {
    pub fn new(model: &'a PotentialModel, temp_at: F, divergence_radius: f64) -> Self {
        let d = model.dim();
        Self { model, temp_at, radius2: divergence_radius * divergence_radius, grad: vec![0.0; d], xi: vec![0.0; d] }
    }

    #[inline]
    pub fn step(&mut self, s: &mut OverdampedState, dt: f64, noise: &mut NoiseStream, step: u64) -> bool {
        let temp = (self.temp_at)(s.t);
        self.model.gradient(&s.z, &mut self.grad);
        noise.fill_normals(SUBSTEP_DYNAMICS, step, &mut self.xi);
        let amp = (2.0 * temp * dt).sqrt();
        for k in 0..s.z.len() {
            s.z[k] += -self.grad[k] * dt + amp * self.xi[k];
        }
        s.t += dt;
        norm2(&s.z) <= self.radius2 && s.z.iter().all(|v| v.is_finite())
    }
}

pub fn step_overdamped(
    state: &OverdampedState,
    model: &PotentialModel,
    temp_at: impl Fn(f64) -> f64,
    dt: f64,
    divergence_radius: f64,
    noise: &mut NoiseStream,
    step: u64,
) -> Result<OverdampedState> {
    let mut next = state.clone();
    let mut stepper = OverdampedStepper::new(model, temp_at, divergence_radius);
    if stepper.step(&mut next, dt, noise, step) {
        Ok(next)
    } else {
        Err(Error::Numerical(format!("trajectory left the divergence ball at t = {}", next.t)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PotentialModel;

    fn flat() -> PotentialModel {
        PotentialModel::quadratic(0.0, 1)
    }

    #[test]
    fn ou_substep_variance() {
        // grad U = 0 and y0 = 0: one step leaves y ~ N(0, sigma (1 - e^{-2 dt/sigma}))
        let model = flat();
        let sched = CoolingSchedule::constant(0.7);
        let var = VarianceMap::identity();
        let cfg = IntegratorConfig { scheme: Scheme::Splitting, dt: 0.05, divergence_radius: 1e6 };
        let n = 200_000u64;
        let mut acc = 0.0;
        for i in 0..n {
            let mut noise = NoiseStream::new(3, i);
            let s = step_kinetic(&PhaseState::at_rest(vec![0.0]), &model, &sched, &var, &cfg, &mut noise, 0).unwrap();
            acc += s.y[0] * s.y[0];
        }
        let expected = 0.7 * (1.0 - (-2.0 * 0.05 / 0.7f64).exp());
        let rel_se = (2.0 / n as f64).sqrt();
        assert!((acc / n as f64 / expected - 1.0).abs() < 5.0 * rel_se);
    }

    #[test]
    fn splitting_matches_euler_in_mean_drift() {
        // With xi = 0 both schemes give the conditional mean increment; they differ by O(dt^2).
        let model = PotentialModel::tilted_double_well(0.3);
        let sched = CoolingSchedule::constant(0.5);
        let var = VarianceMap::identity();
        let start = PhaseState::new(vec![0.4], vec![-0.3], 0.0);
        let mut errs = Vec::new();
        for dt in [1e-2, 1e-3] {
            let mk = |scheme| IntegratorConfig { scheme, dt, divergence_radius: 1e3 };
            let mut a = start.clone();
            let mut b = start.clone();
            KineticStepper::new(&model, &sched, &var, &mk(Scheme::Splitting)).step_with(&mut a, dt, &[0.0]);
            KineticStepper::new(&model, &sched, &var, &mk(Scheme::EulerMaruyama)).step_with(&mut b, dt, &[0.0]);
            errs.push((a.x[0] - b.x[0]).abs().max((a.y[0] - b.y[0]).abs()));
        }
        assert!(errs[0] < 1e-3, "{errs:?}");
        let ratio = errs[0] / errs[1];
        assert!(ratio > 70.0 && ratio < 130.0, "{errs:?}");
    }

    #[test]
    fn deterministic_core_is_reversible() {
        let model = PotentialModel::tilted_double_well(0.3);
        let (mut x, mut y) = (vec![0.37], vec![-1.1]);
        let (x0, y0) = (x.clone(), y.clone());
        let h = 0.013;
        let alpha = 1.7;
        let mut g = model.gradient_vec(&x);
        for _ in 0..1000 {
            kick(&mut y, &g, alpha, h);
            drift(&mut x, &y, 2.0 * h);
            g = model.gradient_vec(&x);
            kick(&mut y, &g, alpha, h);
        }
        y.iter_mut().for_each(|v| *v = -*v);
        for _ in 0..1000 {
            kick(&mut y, &g, alpha, h);
            drift(&mut x, &y, 2.0 * h);
            g = model.gradient_vec(&x);
            kick(&mut y, &g, alpha, h);
        }
        assert!((x[0] - x0[0]).abs() < 1e-10, "{} vs {}", x[0], x0[0]);
        assert!((y[0] + y0[0]).abs() < 1e-10);
    }

    #[test]
    fn overdamped_without_force_or_noise_is_still() {
        let model = flat();
        let mut noise = NoiseStream::new(1, 0);
        let s = OverdampedState { z: vec![0.3], t: 0.0 };
        let next = step_overdamped(&s, &model, |_| 0.0, 0.01, 100.0, &mut noise, 0).unwrap();
        assert_eq!(next.z, vec![0.3]);
        assert_eq!(next.t, 0.01);
    }

    #[test]
    fn overdamped_stationary_variance() {
        // U = z^2/2 at temperature T: Euler-Maruyama variance is T / (1 - dt/2)
        let model = PotentialModel::quadratic(1.0, 1);
        let (temp, dt) = (0.3, 0.01);
        let mut st = OverdampedStepper::new(&model, |_| temp, 100.0);
        let mut s = OverdampedState { z: vec![0.0], t: 0.0 };
        let mut noise = NoiseStream::new(9, 0);
        let (mut m2, mut n) = (0.0, 0.0);
        for k in 0..2_000_000u64 {
            st.step(&mut s, dt, &mut noise, k);
            if k >= 10_000 {
                m2 += s.z[0] * s.z[0];
                n += 1.0;
            }
        }
        let expected = temp / (1.0 - dt / 2.0);
        assert!((m2 / n - expected).abs() < 0.02 * expected, "{} vs {expected}", m2 / n);
    }

    #[test]
    fn default_dt_resolves_friction() {
        let var = VarianceMap::identity();
        assert_eq!(default_dt(&CoolingSchedule::logarithmic(2.0), &var), 1e-2);
        assert!((default_dt(&CoolingSchedule::constant(0.05), &var) - 5e-3).abs() < 1e-15);
    }
}

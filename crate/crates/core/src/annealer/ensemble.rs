use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrator::{IntegratorConfig, KineticStepper, OverdampedState, OverdampedStepper, PhaseState};
use crate::potentials::{LandscapeGrid, PotentialModel};
use crate::rng::{NoiseStream, SUBSTEP_INIT};
use crate::schedules::{CoolingSchedule, VarianceMap};
use crate::{Error, Result};

/// 97.5% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let den = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / den;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / den;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dynamics {
    Kinetic,
    Overdamped,
}

/// Initial condition. Missing positions default to the deepest-trapping non-global minimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum InitSpec {
    /// Fixed position; velocity drawn from `N(0, sigma(eps0))` unless given.
    Point {
        #[serde(default)]
        x: Option<Vec<f64>>,
        #[serde(default)]
        y: Option<Vec<f64>>,
    },
    /// Laplace approximation of the Gibbs measure at `eps0` around a minimum.
    GibbsLocal {
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::Point { x: None, y: None }
    }
}

/// The non-global minimum with the largest barrier, if any.
pub fn trapping_minimum(model: &PotentialModel) -> Result<Vec<f64>> {
    let a = crate::potentials::analyze(model, &LandscapeGrid::default_for(model))?;
    a.barriers
        .iter()
        .max_by(|p, q| p.depth.total_cmp(&q.depth))
        .map(|b| b.minimum.clone())
        .ok_or_else(|| Error::Config("potential has no non-global minimum to start from".into()))
}

/// Initial sampler with positions resolved against the model.
#[derive(Clone, Debug)]
pub struct Initializer {
    spec: InitSpec,
    position: Vec<f64>,
    /// Lower Cholesky factor of `eps0 * Hess^{-1}` for the local Gibbs mode.
    chol: Vec<f64>,
    vel_sd: f64,
}

impl Initializer {
    pub fn new(spec: &InitSpec, model: &PotentialModel, sched: &CoolingSchedule, var: &VarianceMap) -> Result<Self> {
        let d = model.dim();
        let eps0 = sched.eps0();
        let given = match spec {
            InitSpec::Point { x, .. } => x.clone(),
            InitSpec::GibbsLocal { center } => center.clone(),
        };
        let position = match given {
            Some(p) => p,
            None => trapping_minimum(model)?,
        };
        if position.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: position.len() });
        }
        if let InitSpec::Point { y: Some(y), .. } = spec {
            if y.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: y.len() });
            }
        }
        let mut chol = vec![0.0; d * d];
        if let InitSpec::GibbsLocal { .. } = spec {
            let mut h = vec![0.0; d * d];
            model.hessian(&position, &mut h);
            let cov = invert_spd(&h, d)
                .ok_or_else(|| Error::Config("gibbs-local centre is not a non-degenerate minimum".into()))?;
            let cov: Vec<f64> = cov.iter().map(|c| c * eps0).collect();
            chol = cholesky(&cov, d).ok_or_else(|| Error::Numerical("local covariance is not positive".into()))?;
        }
        Ok(Self { spec: spec.clone(), position, chol, vel_sd: var.sigma(eps0).sqrt() })
    }

    pub fn position(&self) -> &[f64] {
        &self.position
    }

    pub fn sample(&self, noise: &mut NoiseStream) -> PhaseState {
        let d = self.position.len();
        let mut x = self.position.clone();
        if let InitSpec::GibbsLocal { .. } = self.spec {
            let z: Vec<f64> = (0..d).map(|k| noise.normal(SUBSTEP_INIT, (d + k) as u64)).collect();
            for i in 0..d {
                for j in 0..=i {
                    x[i] += self.chol[i * d + j] * z[j];
                }
            }
        }
        let y = match &self.spec {
            InitSpec::Point { y: Some(y), .. } => y.clone(),
            _ => (0..d).map(|k| self.vel_sd * noise.normal(SUBSTEP_INIT, k as u64)).collect(),
        };
        PhaseState::new(x, y, 0.0)
    }
}

fn invert_spd(h: &[f64], d: usize) -> Option<Vec<f64>> {
    match d {
        1 => (h[0] > 0.0).then(|| vec![1.0 / h[0]]),
        2 => {
            let det = h[0] * h[3] - h[1] * h[2];
            (h[0] > 0.0 && det > 0.0).then(|| vec![h[3] / det, -h[1] / det, -h[2] / det, h[0] / det])
        }
        _ => {
            // diagonal fallback for the isotropic quadratic in higher dimension
            let diag: Option<Vec<f64>> = (0..d).map(|i| (h[i * d + i] > 0.0).then(|| 1.0 / h[i * d + i])).collect();
            diag.map(|v| {
                let mut out = vec![0.0; d * d];
                for i in 0..d {
                    out[i * d + i] = v[i];
                }
                out
            })
        }
    }
}

fn cholesky(a: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum();
            if i == j {
                let v = a[i * d + i] - s;
                if v <= 0.0 {
                    return None;
                }
                l[i * d + i] = v.sqrt();
            } else {
                l[i * d + j] = (a[i * d + j] - s) / l[j * d + j];
            }
        }
    }
    Some(l)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: f64,
    pub energy: f64,
    /// `|y|^2`; zero for overdamped trials.
    pub kinetic: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial_index: u64,
    pub final_state: PhaseState,
    pub success: bool,
    pub diverged: bool,
    pub diverged_at: Option<f64>,
    pub checkpoints: Vec<Checkpoint>,
}

/// Everything a trial needs besides its initial state and noise.
#[derive(Clone, Debug)]
pub struct TrialSetup<'a> {
    pub model: &'a PotentialModel,
    pub sched: &'a CoolingSchedule,
    pub var: &'a VarianceMap,
    pub cfg: &'a IntegratorConfig,
    pub dynamics: Dynamics,
    pub t_final: f64,
    pub delta: f64,
    /// Sorted, strictly increasing, within `(0, t_final]`.
    pub checkpoints: &'a [f64],
}

impl TrialSetup<'_> {
    pub fn check(&self) -> Result<()> {
        self.cfg.check(self.model)?;
        self.sched.check()?;
        self.var.check()?;
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::Config(format!("T_final must be a finite nonnegative time, got {}", self.t_final)));
        }
        if !(self.delta > 0.0) {
            return Err(Error::Config(format!("delta must be positive, got {}", self.delta)));
        }
        if self.checkpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("checkpoint times must be strictly increasing".into()));
        }
        if self.checkpoints.iter().any(|&t| t < 0.0 || t > self.t_final) {
            return Err(Error::Config("checkpoint times must lie in [0, T_final]".into()));
        }
        Ok(())
    }

    fn threshold(&self) -> f64 {
        self.model.global_min_value() + self.delta
    }
}

/// Integrate one trajectory, landing exactly on every checkpoint time.
///
/// Segments between stops are covered by whole steps of `dt` plus one shorter
/// closing step; the noise index advances by one per step taken.
pub fn run_trial(init: PhaseState, setup: &TrialSetup, noise: &mut NoiseStream, trial_index: u64) -> TrialReport {
    let mut stops: Vec<f64> = setup.checkpoints.to_vec();
    if stops.last().is_none_or(|&t| t < setup.t_final) {
        stops.push(setup.t_final);
    }
    let dt = setup.cfg.dt;
    let mut state = init;
    let mut checkpoints = Vec::with_capacity(setup.checkpoints.len());
    let mut diverged_at = None;
    let mut step: u64 = 0;

    let record = |s: &PhaseState, out: &mut Vec<Checkpoint>| {
        if setup.checkpoints.binary_search_by(|t| t.total_cmp(&s.t)).is_ok() {
            out.push(Checkpoint { t: s.t, energy: setup.model.energy(&s.x), kinetic: s.kinetic() });
        }
    };

    match setup.dynamics {
        Dynamics::Kinetic => {
            let mut stepper = KineticStepper::new(setup.model, setup.sched, setup.var, setup.cfg);
            'outer: for &stop in &stops {
                let start = state.t;
                let span = stop - start;
                let whole = (span / dt).floor() as u64;
                for k in 1..=whole {
                    let ok = stepper.step(&mut state, dt, noise, step);
                    step += 1;
                    state.t = start + k as f64 * dt;
                    if !ok {
                        diverged_at = Some(state.t);
                        break 'outer;
                    }
                }
                let rest = stop - state.t;
                if rest > 1e-12 * dt {
                    let ok = stepper.step(&mut state, rest, noise, step);
                    step += 1;
                    if !ok {
                        diverged_at = Some(stop);
                        break 'outer;
                    }
                }
                state.t = stop;
                record(&state, &mut checkpoints);
            }
        }
        Dynamics::Overdamped => {
            let sched = setup.sched;
            let mut stepper = OverdampedStepper::new(setup.model, |t| sched.epsilon_at(t), setup.cfg.divergence_radius);
            let mut od = OverdampedState { z: state.x.clone(), t: state.t };
            'outer: for &stop in &stops {
                let start = od.t;
                let whole = ((stop - start) / dt).floor() as u64;
                for k in 1..=whole {
                    let ok = stepper.step(&mut od, dt, noise, step);
                    step += 1;
                    od.t = start + k as f64 * dt;
                    if !ok {
                        diverged_at = Some(od.t);
                        break 'outer;
                    }
                }
                let rest = stop - od.t;
                if rest > 1e-12 * dt {
                    let ok = stepper.step(&mut od, rest, noise, step);
                    step += 1;
                    if !ok {
                        diverged_at = Some(stop);
                        break 'outer;
                    }
                }
                od.t = stop;
                let s = PhaseState::new(od.z.clone(), vec![0.0; od.z.len()], od.t);
                record(&s, &mut checkpoints);
            }
            let d = od.z.len();
            state = PhaseState::new(od.z, vec![0.0; d], od.t);
        }
    }
    let diverged = diverged_at.is_some();
    let success = !diverged && setup.model.energy(&state.x) <= setup.threshold();
    TrialReport { trial_index, final_state: state, success, diverged, diverged_at, checkpoints }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub n: usize,
    pub dynamics: Dynamics,
    pub delta: f64,
    pub threshold: f64,
    pub eval_times: Vec<f64>,
    pub successes: Vec<usize>,
    pub p_hat: Vec<f64>,
    pub wilson_low: Vec<f64>,
    pub wilson_high: Vec<f64>,
    pub diverged_count: usize,
    pub trials: Vec<TrialReport>,
}

impl EnsembleReport {
    pub fn final_p_hat(&self) -> f64 {
        *self.p_hat.last().unwrap_or(&0.0)
    }

    pub fn final_interval(&self) -> (f64, f64) {
        (*self.wilson_low.last().unwrap_or(&0.0), *self.wilson_high.last().unwrap_or(&1.0))
    }

    /// Aggregate trial reports (sorted by index first, so input order is irrelevant).
    pub fn from_trials(mut trials: Vec<TrialReport>, setup: &TrialSetup) -> Self {
        trials.sort_by_key(|t| t.trial_index);
        let eval_times: Vec<f64> = setup.checkpoints.to_vec();
        let threshold = setup.threshold();
        let n = trials.len();
        let successes: Vec<usize> = eval_times
            .iter()
            .map(|&t| {
                trials.iter().filter(|tr| tr.checkpoints.iter().any(|c| c.t == t && c.energy <= threshold)).count()
            })
            .collect();
        let p_hat = successes.iter().map(|&k| if n == 0 { 0.0 } else { k as f64 / n as f64 }).collect();
        let (wilson_low, wilson_high) = successes.iter().map(|&k| wilson_interval(k, n, Z_95)).unzip();
        Self {
            n,
            dynamics: setup.dynamics,
            delta: setup.delta,
            threshold,
            eval_times,
            successes,
            p_hat,
            wilson_low,
            wilson_high,
            diverged_count: trials.iter().filter(|t| t.diverged).count(),
            trials,
        }
    }
}

/// Run `n` independent trials in parallel; trial `i` uses stream `(master_seed, i)`.
///
/// `eval_times` are the setup's checkpoints and must include `t_final` when the
/// final success probability is wanted.
pub fn run_ensemble(n: usize, init: &Initializer, setup: &TrialSetup, master_seed: u64) -> Result<EnsembleReport> {
    setup.check()?;
    if n == 0 {
        return Err(Error::Config("ensemble needs at least one trial".into()));
    }
    let trials: Vec<TrialReport> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut noise = NoiseStream::new(master_seed, i);
            let start = init.sample(&mut noise);
            run_trial(start, setup, &mut noise, i)
        })
        .collect();
    Ok(EnsembleReport::from_trials(trials, setup))
}

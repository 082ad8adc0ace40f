//! Open-loop control steering the noiseless dynamics between two phase points.
//!
//! The controlled system is `x' = y`, `y' = F_t(x, y) + u(t)` with the drift
//! `F_t(x, y) = -(sigma/eps) grad U(x) - y / sigma` of the velocity equation.
//!
//! The control follows a planned path: the velocity ramps from `y0` to a cruise
//! value `v` over `[0, delta]`, cruises, and ramps to `y1` over `[T - delta, T]`.
//! `v` tends to `(x1 - x0)/T` as `delta -> 0` and is chosen so the plan ends at
//! `x1`. The control is the plan's acceleration minus the drift along the plan.
//! The two velocity impulses are switched off through linear joins of length
//! `delta^2`; their amplitude is scaled by `1/(1 + delta/2)` so each impulse
//! still delivers the planned velocity change. The joins are the only part the
//! plan does not model, which leaves an endpoint error of order `delta^2`.

use serde::{Deserialize, Serialize};

use super::integrator::PhaseState;
use crate::potentials::PotentialModel;
use crate::schedules::{CoolingSchedule, VarianceMap};
use crate::{Error, Result};

/// Largest RK4 step.
pub const MAX_STEP: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct SteeringControl<'a> {
    model: &'a PotentialModel,
    sched: &'a CoolingSchedule,
    var: &'a VarianceMap,
    z0: PhaseState,
    z1: PhaseState,
    horizon: f64,
    delta: f64,
    velocity: Vec<f64>,
    /// `z0 == z1` with zero velocity: hold the point by cancelling the drift there.
    stationary: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringReport {
    pub endpoint_error: f64,
    pub final_state: PhaseState,
    pub delta_ctrl: f64,
    pub rk_steps: usize,
}

impl<'a> SteeringControl<'a> {
    pub fn new(
        z0: PhaseState,
        z1: PhaseState,
        horizon: f64,
        delta: f64,
        model: &'a PotentialModel,
        sched: &'a CoolingSchedule,
        var: &'a VarianceMap,
    ) -> Result<Self> {
        let d = model.dim();
        for z in [&z0, &z1] {
            if z.x.len() != d || z.y.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: z.x.len() });
            }
        }
        if !(horizon > 0.0) {
            return Err(Error::Config("steering horizon must be positive".into()));
        }
        if !(delta > 0.0) || 2.0 * (delta + delta * delta) >= horizon {
            return Err(Error::Config(format!("delta_ctrl = {delta} must be positive with 2 (delta + delta^2) < T")));
        }
        let velocity =
            z0.x.iter()
                .zip(&z1.x)
                .zip(z0.y.iter().zip(&z1.y))
                .map(|((a, b), (ya, yb))| (b - a - 0.5 * (ya + yb) * delta) / (horizon - delta))
                .collect();
        let stationary = z0.x == z1.x && z0.y == z1.y && z0.y.iter().all(|v| *v == 0.0);
        Ok(Self { model, sched, var, z0, z1, horizon, delta, velocity, stationary })
    }

    /// `F_t(x, y)` written into `out`.
    pub fn drift(&self, t: f64, x: &[f64], y: &[f64], out: &mut [f64]) {
        let eps = self.sched.epsilon_at(self.z0.t + t);
        let sigma = self.var.sigma(eps);
        self.model.gradient(x, out);
        for k in 0..out.len() {
            out[k] = -(sigma / eps) * out[k] - y[k] / sigma;
        }
    }

    /// Planned state `(x, y)` at time `t`.
    fn plan(&self, t: f64, x: &mut [f64], y: &mut [f64]) {
        let (d, horizon) = (self.delta, self.horizon);
        for k in 0..x.len() {
            let (x0, y0, y1, v) = (self.z0.x[k], self.z0.y[k], self.z1.y[k], self.velocity[k]);
            let cruise_start = x0 + 0.5 * (y0 + v) * d;
            if t < d {
                y[k] = y0 + (v - y0) * t / d;
                x[k] = x0 + y0 * t + 0.5 * (v - y0) * t * t / d;
            } else if t < horizon - d {
                y[k] = v;
                x[k] = cruise_start + v * (t - d);
            } else {
                let r = t - (horizon - d);
                y[k] = v + (y1 - v) * r / d;
                x[k] = cruise_start + v * (horizon - 2.0 * d) + v * r + 0.5 * (y1 - v) * r * r / d;
            }
        }
    }

    /// Boundaries of the five pieces.
    fn knots(&self) -> [f64; 6] {
        let (d, t) = (self.delta, self.horizon);
        [0.0, d, d + d * d, t - d - d * d, t - d, t]
    }

    /// Impulse part of the control (velocity kicks and their joins).
    fn impulse(&self, t: f64, k: usize) -> f64 {
        let knots = self.knots();
        let d = self.delta;
        let scale = 1.0 / (d * (1.0 + 0.5 * d));
        let first = (self.velocity[k] - self.z0.y[k]) * scale;
        let last = (self.z1.y[k] - self.velocity[k]) * scale;
        if t < knots[1] {
            first
        } else if t < knots[2] {
            first * (knots[2] - t) / (knots[2] - knots[1])
        } else if t < knots[3] {
            0.0
        } else if t < knots[4] {
            last * (t - knots[3]) / (knots[4] - knots[3])
        } else {
            last
        }
    }

    /// Control value at time `t` (relative to the start).
    pub fn control_at(&self, t: f64, out: &mut [f64]) {
        let d = out.len();
        if self.stationary {
            self.drift(t, &self.z0.x, &self.z0.y, out);
            out.iter_mut().for_each(|v| *v = -*v);
            return;
        }
        let (mut px, mut py) = (vec![0.0; d], vec![0.0; d]);
        self.plan(t, &mut px, &mut py);
        self.drift(t, &px, &py, out);
        for k in 0..d {
            out[k] = self.impulse(t, k) - out[k];
        }
    }

    fn rhs(&self, t: f64, x: &[f64], y: &[f64], dx: &mut [f64], dy: &mut [f64], u: &mut [f64]) {
        dx.copy_from_slice(y);
        self.drift(t, x, y, dy);
        self.control_at(t, u);
        for k in 0..dy.len() {
            dy[k] += u[k];
        }
    }

    /// Integrate the controlled ODE with classical RK4, piece by piece so the
    /// control is smooth inside every step.
    pub fn integrate(&self) -> Result<SteeringReport> {
        let d = self.z0.x.len();
        let mut x = self.z0.x.clone();
        let mut y = self.z0.y.clone();
        let mut kx = vec![vec![0.0; d]; 4];
        let mut ky = vec![vec![0.0; d]; 4];
        let mut u = vec![0.0; d];
        let (mut xs, mut ys) = (vec![0.0; d], vec![0.0; d]);
        let mut steps = 0usize;
        let knots = if self.stationary { [0.0, 0.0, 0.0, 0.0, 0.0, self.horizon] } else { self.knots() };
        for piece in knots.windows(2) {
            let (a, b) = (piece[0], piece[1]);
            if b <= a {
                continue;
            }
            let n = (((b - a) / MAX_STEP).ceil() as usize).max(4);
            let h = (b - a) / n as f64;
            for i in 0..n {
                let t = a + i as f64 * h;
                // evaluate just inside the piece so one-sided control values are used at the knots
                let tin = |s: f64| s.clamp(a, b - 1e-12 * (b - a));
                self.rhs(tin(t), &x, &y, &mut kx[0], &mut ky[0], &mut u);
                for k in 0..d {
                    xs[k] = x[k] + 0.5 * h * kx[0][k];
                    ys[k] = y[k] + 0.5 * h * ky[0][k];
                }
                self.rhs(tin(t + 0.5 * h), &xs, &ys, &mut kx[1], &mut ky[1], &mut u);
                for k in 0..d {
                    xs[k] = x[k] + 0.5 * h * kx[1][k];
                    ys[k] = y[k] + 0.5 * h * ky[1][k];
                }
                self.rhs(tin(t + 0.5 * h), &xs, &ys, &mut kx[2], &mut ky[2], &mut u);
                for k in 0..d {
                    xs[k] = x[k] + h * kx[2][k];
                    ys[k] = y[k] + h * ky[2][k];
                }
                self.rhs(tin(t + h), &xs, &ys, &mut kx[3], &mut ky[3], &mut u);
                for k in 0..d {
                    x[k] += h / 6.0 * (kx[0][k] + 2.0 * kx[1][k] + 2.0 * kx[2][k] + kx[3][k]);
                    y[k] += h / 6.0 * (ky[0][k] + 2.0 * ky[1][k] + 2.0 * ky[2][k] + ky[3][k]);
                }
                steps += 1;
                if !x.iter().chain(&y).all(|v| v.is_finite()) {
                    return Err(Error::Numerical(format!("controlled dynamics blew up at t = {t}")));
                }
            }
        }
        let err =
            x.iter().zip(&self.z1.x).chain(y.iter().zip(&self.z1.y)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        Ok(SteeringReport {
            endpoint_error: err,
            final_state: PhaseState::new(x, y, self.z0.t + self.horizon),
            delta_ctrl: self.delta,
            rk_steps: steps,
        })
    }
}

/// Build the control from `z0` to `z1` over `[0, T]` and report `|z(T) - z1|`.
pub fn steering_control(
    z0: &PhaseState,
    z1: &PhaseState,
    horizon: f64,
    delta_ctrl: f64,
    model: &PotentialModel,
    sched: &CoolingSchedule,
    var: &VarianceMap,
) -> Result<SteeringReport> {
    SteeringControl::new(z0.clone(), z1.clone(), horizon, delta_ctrl, model, sched, var)?.integrate()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (PotentialModel, CoolingSchedule, VarianceMap) {
        (PotentialModel::quadratic(1.0, 1), CoolingSchedule::constant(0.5), VarianceMap::identity())
    }

    #[test]
    fn fixed_point_is_held() {
        let (m, s, v) = fixture();
        let z = PhaseState::at_rest(vec![0.7]);
        let rep = steering_control(&z, &z, 2.0, 1e-2, &m, &s, &v).unwrap();
        assert!(rep.endpoint_error < 1e-12, "{}", rep.endpoint_error);
    }

    #[test]
    fn quadratic_transfer_error() {
        let (m, s, v) = fixture();
        let z0 = PhaseState::at_rest(vec![0.0]);
        let z1 = PhaseState::at_rest(vec![1.0]);
        let rep = steering_control(&z0, &z1, 1.0, 1e-2, &m, &s, &v).unwrap();
        assert!(rep.endpoint_error <= 1e-2, "{}", rep.endpoint_error);
    }

    #[test]
    fn error_shrinks_with_delta() {
        let (m, s, v) = fixture();
        let z0 = PhaseState::new(vec![-0.5], vec![0.3], 0.0);
        let z1 = PhaseState::new(vec![1.0], vec![-0.2], 0.0);
        let errs: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&d| steering_control(&z0, &z1, 1.0, d, &m, &s, &v).unwrap().endpoint_error)
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn control_is_continuous_across_ramps() {
        let (m, s, v) = fixture();
        let z0 = PhaseState::at_rest(vec![0.0]);
        let z1 = PhaseState::at_rest(vec![1.0]);
        let c = SteeringControl::new(z0, z1, 1.0, 0.1, &m, &s, &v).unwrap();
        let k = c.knots();
        let mut a = [0.0];
        let mut b = [0.0];
        for &t in &k[1..5] {
            c.control_at(t - 1e-12, &mut a);
            c.control_at(t + 1e-12, &mut b);
            // the impulse pieces jump into the ramps only through the ramp itself
            assert!((a[0] - b[0]).abs() < 1e-6 * (1.0 + a[0].abs()), "t = {t}: {} vs {}", a[0], b[0]);
        }
    }

    #[test]
    fn rejects_bad_delta() {
        let (m, s, v) = fixture();
        let z = PhaseState::at_rest(vec![0.0]);
        assert!(steering_control(&z, &z, 1.0, 0.6, &m, &s, &v).is_err());
        assert!(steering_control(&z, &z, 1.0, 0.0, &m, &s, &v).is_err());
    }
}

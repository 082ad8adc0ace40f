//! The Lyapunov function `R = alpha U + |y|^2/2 + delta x.y` and its generator drift.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{GrowthConstants, PotentialModel};
use crate::sampling::{halton_points, log_spaced, GridBox};
use crate::schedules::VarianceMap;

/// Number of candidate drift rates tried by [`check_lyapunov_drift`].
pub const RHO_CANDIDATES: usize = 32;
pub const RHO_MIN: f64 = 1e-6;
pub const RHO_MAX: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovParams {
    pub a1: f64,
    pub l: f64,
    pub r: f64,
    pub m: f64,
    pub var: VarianceMap,
}

impl LyapunovParams {
    pub fn new(growth: GrowthConstants, var: &VarianceMap) -> Self {
        Self { a1: growth.a1, l: var.l, r: growth.r, m: growth.m, var: var.clone() }
    }

    pub fn from_model(model: &PotentialModel, var: &VarianceMap) -> Result<Self> {
        let g = model
            .growth()
            .ok_or_else(|| Error::Assumption("the Lyapunov drift check needs growth constants a1, a2, M, r".into()))?;
        Ok(Self::new(g, var))
    }

    /// `1 / [4 (1 + 1/sqrt(a1 l)) (1 + eps / (2 r sigma^3))]`.
    pub fn delta_of_eps(&self, eps: f64) -> f64 {
        let s = self.var.sigma(eps);
        1.0 / (4.0 * (1.0 + 1.0 / (self.a1 * self.l).sqrt()) * (1.0 + eps / (2.0 * self.r * s * s * s)))
    }
}

pub fn lyapunov_value(p: &LyapunovParams, model: &PotentialModel, eps: f64, x: &[f64], y: &[f64]) -> f64 {
    let alpha = p.var.sigma(eps) / eps;
    let delta = p.delta_of_eps(eps);
    let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let yy: f64 = y.iter().map(|v| v * v).sum();
    alpha * model.energy(x) + 0.5 * yy + delta * xy
}

/// `L_eps R_eps` in closed form.
///
/// With `alpha = sigma/eps`, the transport terms `alpha y.grad U` cancel and
/// `L R = delta |y|^2 - alpha delta grad U.x - |y|^2/sigma - delta x.y/sigma + d`.
pub fn generator_of_r(p: &LyapunovParams, model: &PotentialModel, eps: f64, x: &[f64], y: &[f64]) -> f64 {
    let sigma = p.var.sigma(eps);
    let alpha = sigma / eps;
    let delta = p.delta_of_eps(eps);
    let mut g = vec![0.0; x.len()];
    model.gradient(x, &mut g);
    let gx: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum();
    let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let yy: f64 = y.iter().map(|v| v * v).sum();
    delta * yy - alpha * delta * gx - yy / sigma - delta * xy / sigma + x.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub eps: f64,
    pub delta: f64,
    pub rho_hat: f64,
    pub n_hat: f64,
    /// `rho_hat eps^2`, the effective contraction rate.
    pub rate: f64,
    pub sandwich_ok: bool,
    pub c: f64,
    pub big_c: f64,
    pub n_sandwich: f64,
    pub n_points: usize,
    /// Candidate rates that passed validation on the full sample.
    pub valid_rhos: Vec<f64>,
}

/// Sample box in phase space: the model's domain in `x`, `[-half, half]^d` in `y`.
pub fn phase_box(model: &PotentialModel, y_half_width: f64) -> GridBox {
    let d = model.dim();
    let mut lower = model.domain().lower.clone();
    let mut upper = model.domain().upper.clone();
    lower.extend(std::iter::repeat_n(-y_half_width, d));
    upper.extend(std::iter::repeat_n(y_half_width, d));
    GridBox::new(lower, upper)
}

/// Look for a witness `(rho, N)` of `L R <= -rho eps^2 R + N sigma/eps`.
///
/// For each candidate `rho`, `N(rho)` is fitted as the smallest value that works on
/// the inner half of the box plus the origin; the candidate is kept if the same
/// `N` also works on the whole sample, i.e. the drift is negative enough outside
/// the fitting compact. `rho_hat` is the largest kept candidate.
///
/// The sandwich `c (U + |y|^2) - N <= R <= C (alpha U + |y|^2) + N` is checked with
/// `c = min(7l/8, 3/8)`, `C = 9/8`, `N = alpha M + l M / 8`, which follow from
/// `delta <= sqrt(a1 l)/4` and the growth bounds.
pub fn check_lyapunov_drift(
    model: &PotentialModel,
    var: &VarianceMap,
    eps: f64,
    sample_box: &GridBox,
    n: usize,
) -> Result<DriftReport> {
    let d = model.dim();
    if sample_box.dim() != 2 * d {
        return Err(Error::DimensionMismatch { expected: 2 * d, got: sample_box.dim() });
    }
    if !(eps > 0.0) {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    if n == 0 {
        return Err(Error::Config("drift check needs at least one sample".into()));
    }
    let p = LyapunovParams::from_model(model, var)?;
    let sigma = var.sigma(eps);
    let alpha = sigma / eps;

    let mut pts = halton_points(sample_box, n);
    pts.push(vec![0.0; 2 * d]);
    let inner = sample_box.scaled(0.5);
    // (R, L R, in fitting set)
    let evals: Vec<(f64, f64, bool)> = pts
        .iter()
        .map(|z| {
            let (x, y) = z.split_at(d);
            (lyapunov_value(&p, model, eps, x, y), generator_of_r(&p, model, eps, x, y), inner.contains(z))
        })
        .collect();

    let scale = eps / sigma;
    let mut valid = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    for rho in log_spaced(RHO_MIN, RHO_MAX, RHO_CANDIDATES) {
        let need = |&(r, lr, _): &(f64, f64, bool)| (lr + rho * eps * eps * r) * scale;
        let n_fit = evals.iter().filter(|e| e.2).map(need).fold(0.0, f64::max);
        let n_all = evals.iter().map(need).fold(0.0, f64::max);
        if n_all <= n_fit * (1.0 + 1e-12) {
            valid.push(rho);
            best = Some((rho, n_fit));
        }
    }
    let (rho_hat, n_hat) = best.ok_or_else(|| {
        Error::Numerical(format!(
            "no drift rate in [{RHO_MIN:e}, {RHO_MAX}] satisfies the Lyapunov inequality at eps = {eps}"
        ))
    })?;

    let c = (7.0 * p.l / 8.0).min(3.0 / 8.0);
    let big_c = 9.0 / 8.0;
    let n_sandwich = alpha * p.m + p.l * p.m / 8.0;
    let sandwich_ok = pts.iter().zip(&evals).all(|(z, &(r, _, _))| {
        let (x, y) = z.split_at(d);
        let u = model.energy(x);
        let yy: f64 = y.iter().map(|v| v * v).sum();
        let slack = 1e-9 * (1.0 + r.abs());
        c * (u + yy) - n_sandwich <= r + slack && r <= big_c * (alpha * u + yy) + n_sandwich + slack
    });

    Ok(DriftReport {
        eps,
        delta: p.delta_of_eps(eps),
        rho_hat,
        n_hat,
        rate: rho_hat * eps * eps,
        sandwich_ok,
        c,
        big_c,
        n_sandwich,
        n_points: pts.len(),
        valid_rhos: valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_params() -> LyapunovParams {
        LyapunovParams::new(GrowthConstants { a1: 1.0, a2: 1.0, m: 0.0, r: 1.0 }, &VarianceMap::identity())
    }

    #[test]
    fn delta_at_unit_constants() {
        assert_relative_eq!(unit_params().delta_of_eps(1.0), 1.0 / 12.0, max_relative = 1e-15);
    }

    #[test]
    fn value_examples() {
        let p = unit_params();
        let q = PotentialModel::quadratic(1.0, 1);
        assert_eq!(lyapunov_value(&p, &q, 1.0, &[0.0], &[0.0]), 0.0);
        let r = lyapunov_value(&p, &q, 1.0, &[1.0], &[1.0]);
        assert_relative_eq!(r, 0.5 + 0.5 + 1.0 / 12.0, max_relative = 1e-14);
    }

    #[test]
    fn delta_below_quarter_root() {
        let var = VarianceMap::identity();
        for model in [PotentialModel::quadratic(1.0, 1), PotentialModel::tilted_double_well(0.3)] {
            let p = LyapunovParams::from_model(&model, &var).unwrap();
            for eps in log_spaced(1e-3, 10.0, 50) {
                assert!(p.delta_of_eps(eps) <= 0.25 * (p.a1 * p.l).sqrt());
            }
        }
    }

    #[test]
    fn generator_matches_finite_differences() {
        // L R = y.grad_x R - (y/sigma + alpha grad U).grad_y R + lap_y R
        let model = PotentialModel::tilted_double_well(0.3);
        let var = VarianceMap::identity();
        let p = LyapunovParams::from_model(&model, &var).unwrap();
        let eps = 0.7;
        let alpha = var.sigma(eps) / eps;
        let h = 1e-4;
        for &(x, y) in &[(0.3, -1.2), (-1.7, 0.4), (2.2, 2.5)] {
            let r = |x: f64, y: f64| lyapunov_value(&p, &model, eps, &[x], &[y]);
            let rx = (r(x + h, y) - r(x - h, y)) / (2.0 * h);
            let ry = (r(x, y + h) - r(x, y - h)) / (2.0 * h);
            let ryy = (r(x, y + h) - 2.0 * r(x, y) + r(x, y - h)) / (h * h);
            let fd = y * rx - (y / var.sigma(eps) + alpha * model.gradient_vec(&[x])[0]) * ry + ryy;
            let exact = generator_of_r(&p, &model, eps, &[x], &[y]);
            assert!((fd - exact).abs() < 1e-5 * (1.0 + exact.abs()), "{fd} vs {exact}");
        }
    }

    #[test]
    fn even_potential_symmetry() {
        let model = PotentialModel::tilted_double_well(0.0);
        let p = LyapunovParams::from_model(&model, &VarianceMap::identity()).unwrap();
        for &(x, y) in &[(0.3, -1.2), (-1.7, 0.4), (2.2, 2.5)] {
            let a = lyapunov_value(&p, &model, 0.5, &[x], &[y]);
            let b = lyapunov_value(&p, &model, 0.5, &[-x], &[-y]);
            assert_relative_eq!(a, b, max_relative = 1e-14);
        }
    }

    #[test]
    fn quadratic_drift_witness() {
        let model = PotentialModel::quadratic(2.0, 1);
        let var = VarianceMap::identity();
        let bx = GridBox::cube(2, 5.0);
        let rep = check_lyapunov_drift(&model, &var, 1.0, &bx, 4000).unwrap();
        assert!(rep.rho_hat > 0.0 && rep.n_hat.is_finite());
        assert!(rep.sandwich_ok);
        // origin: L R = d, R = 0
        assert!(rep.n_hat >= 1.0 * 1.0 / var.sigma(1.0));
        // oracle: dense lattice, same rho and N
        let p = LyapunovParams::from_model(&model, &var).unwrap();
        for z in crate::sampling::lattice_points(&bx, 200 * 200) {
            let r = lyapunov_value(&p, &model, 1.0, &z[..1], &z[1..]);
            let lr = generator_of_r(&p, &model, 1.0, &z[..1], &z[1..]);
            assert!(lr <= -rep.rho_hat * r + rep.n_hat + 1e-9);
        }
    }

    #[test]
    fn rate_stays_positive_when_cooling() {
        let model = PotentialModel::quadratic(2.0, 1);
        let var = VarianceMap::identity();
        let bx = GridBox::cube(2, 5.0);
        for eps in [1.0, 0.5, 0.25] {
            let rep = check_lyapunov_drift(&model, &var, eps, &bx, 4000).unwrap();
            assert!(rep.rate >= 1e-6, "eps {eps}: rate {}", rep.rate);
            assert!(rep.sandwich_ok);
        }
    }

    #[test]
    fn missing_growth_constants_is_an_assumption_error() {
        let model = PotentialModel::quadratic(2.0, 1).with_growth(None);
        let err = check_lyapunov_drift(&model, &VarianceMap::identity(), 1.0, &GridBox::cube(2, 1.0), 10);
        assert!(matches!(err, Err(Error::Assumption(_))));
    }
}

//! Relative entropy, Fisher information, distorted entropy and L1 distance to Gibbs.

use serde::{Deserialize, Serialize};

use super::grid::{DensityField, GibbsField};
use crate::error::{Error, Result};
use crate::potentials::PotentialModel;
use crate::schedules::VarianceMap;

/// Cells with `mu < EXCLUDE_REL * max mu` are left out of the gradient functionals.
pub const EXCLUDE_REL: f64 = 1e-14;
/// Region where a vanishing density is treated as an error.
pub const HIGH_MU_REL: f64 = 1e-6;
const LOG_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub t: f64,
    pub eps: f64,
    /// `Ent_mu(h)`.
    pub ent: f64,
    /// `int |grad h|^2 / h dmu`.
    pub fisher: f64,
    /// `int |(d_x + d_y) h|^2 / h dmu`.
    pub mixed_fisher: f64,
    /// `mixed_fisher + gamma_eps ent`.
    pub h: f64,
    /// `int |h - 1| dmu`.
    pub l1: f64,
    pub gamma_eps: f64,
    pub mass: f64,
    pub boundary_mass: f64,
    /// Mass of `m` on cells excluded from the gradient functionals.
    pub excluded_mass: f64,
}

/// `1/2 + (alpha |U''|_inf + 1 + 1/sigma)^2` with the instantaneous force scale `alpha = sigma/eps`.
pub fn gamma_eps(model: &PotentialModel, var: &VarianceMap, eps: f64) -> f64 {
    let s = var.sigma(eps);
    let k = s / eps * model.hessian_bound().value + 1.0 + 1.0 / s;
    0.5 + k * k
}

pub fn entropy_suite(m: &DensityField, model: &PotentialModel, var: &VarianceMap, eps: f64) -> Result<EntropyReport> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    let gibbs = GibbsField::new(model, var, eps, &m.grid);
    entropy_with(m, &gibbs, gamma_eps(model, var, eps))
}

/// Functionals of `m` against a precomputed Gibbs field.
pub fn entropy_with(m: &DensityField, gibbs: &GibbsField, gamma: f64) -> Result<EntropyReport> {
    let g = &m.grid;
    let area = g.cell_area();
    let (dx, dy) = (g.dx(), g.dy());
    let lmax = gibbs.log_mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let excl = lmax + EXCLUDE_REL.ln();
    let high = lmax + HIGH_MU_REL.ln();

    let mut ent = 0.0;
    let mut l1 = 0.0;
    let mut log_h = vec![0.0; g.len()];
    for k in 0..g.len() {
        let v = m.values[k];
        let lm = gibbs.log_mu[k];
        if v <= 0.0 && lm >= high {
            return Err(Error::Numerical(format!("density vanishes in a high-probability cell ({k})")));
        }
        log_h[k] = v.max(LOG_FLOOR).ln() - lm;
        if v > 0.0 {
            ent += v * log_h[k];
        }
        l1 += (v - gibbs.mu[k]).abs();
    }
    let mass = m.mass();
    ent = ent * area - if mass > 0.0 { mass * mass.ln() } else { 0.0 };
    l1 *= area;

    let keep = |k: usize| gibbs.log_mu[k] >= excl;
    // one-sided differences where a neighbour is excluded or missing
    let deriv = |k: usize, lo: Option<usize>, hi: Option<usize>, h: f64| -> f64 {
        let lo = lo.filter(|&n| keep(n));
        let hi = hi.filter(|&n| keep(n));
        match (lo, hi) {
            (Some(a), Some(b)) => (log_h[b] - log_h[a]) / (2.0 * h),
            (Some(a), None) => (log_h[k] - log_h[a]) / h,
            (None, Some(b)) => (log_h[b] - log_h[k]) / h,
            (None, None) => 0.0,
        }
    };
    let mut fisher = 0.0;
    let mut mixed = 0.0;
    let mut excluded_mass = 0.0;
    for i in 0..g.nx {
        for j in 0..g.ny {
            let k = g.idx(i, j);
            if !keep(k) {
                excluded_mass += m.values[k];
                continue;
            }
            let gx = deriv(k, (i > 0).then(|| k - g.ny), (i + 1 < g.nx).then(|| k + g.ny), dx);
            let gy = deriv(k, (j > 0).then(|| k - 1), (j + 1 < g.ny).then(|| k + 1), dy);
            fisher += m.values[k] * (gx * gx + gy * gy);
            mixed += m.values[k] * (gx + gy).powi(2);
        }
    }
    fisher *= area;
    mixed *= area;
    Ok(EntropyReport {
        t: m.time,
        eps: gibbs.eps,
        ent,
        fisher,
        mixed_fisher: mixed,
        h: mixed + gamma * ent,
        l1,
        gamma_eps: gamma,
        mass,
        boundary_mass: m.boundary_mass(),
        excluded_mass: excluded_mass * area,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fokker_planck::grid::{gibbs_density, PhaseGrid};

    #[test]
    fn gibbs_has_zero_functionals() {
        let model = PotentialModel::tilted_double_well(0.3);
        let var = VarianceMap::identity();
        let grid = PhaseGrid::default_for(&model, &var, 0.6).unwrap();
        let mu = gibbs_density(&model, &var, 0.6, &grid).unwrap();
        let r = entropy_suite(&mu, &model, &var, 0.6).unwrap();
        assert!(r.ent.abs() < 1e-12 && r.fisher < 1e-20 && r.h.abs() < 1e-8 && r.l1 < 1e-12, "{r:?}");
    }

    #[test]
    fn shifted_gaussian_matches_closed_form() {
        // quadratic U = x^2/2, eps = sigma = 1, m = N((a, b), I): Ent = (a^2 + b^2)/2, I = a^2 + b^2,
        // mixed Fisher = (a + b)^2, L1 = 2 (2 Phi(r/2) - 1) with r = |(a, b)|
        let model = PotentialModel::quadratic(1.0, 1);
        let var = VarianceMap::identity();
        let grid = PhaseGrid::new(-9.0, 9.0, -9.0, 9.0, 256, 256).unwrap();
        let (a, b) = (0.6, -0.3);
        let m = DensityField::from_product(
            grid.clone(),
            |x| (-(x - a) * (x - a) / 2.0).exp(),
            |y| (-(y - b) * (y - b) / 2.0).exp(),
            0.0,
        )
        .unwrap();
        let r = entropy_suite(&m, &model, &var, 1.0).unwrap();
        let r2 = a * a + b * b;
        assert!((r.ent - r2 / 2.0).abs() < 1e-3, "{}", r.ent);
        assert!((r.fisher - r2).abs() < 2e-3, "{}", r.fisher);
        assert!((r.mixed_fisher - (a + b) * (a + b)).abs() < 2e-3, "{}", r.mixed_fisher);
        // oracle: scipy 2*(2*norm.cdf(sqrt(0.45)/2) - 1)
        assert!((r.l1 - 0.5253686455671636).abs() < 2e-3, "{}", r.l1);
        assert!(r.l1 <= (2.0 * r.ent).sqrt());
        assert!(r.ent <= r.h);
    }
}

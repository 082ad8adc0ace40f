//! Quadrature of the Gibbs position marginal and its large-deviation tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{LandscapeGrid, PotentialModel};

/// Default bound on the estimated truncated mass, relative to `Z`.
pub const TRUNCATION_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub grid: LandscapeGrid,
    /// `None` disables the truncation check, so the result is the integral over the box.
    pub truncation_tol: Option<f64>,
}

impl QuadratureGrid {
    pub fn new(grid: LandscapeGrid) -> Self {
        Self { grid, truncation_tol: Some(TRUNCATION_TOL) }
    }

    pub fn box_only(grid: LandscapeGrid) -> Self {
        Self { grid, truncation_tol: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsTail {
    pub eps: f64,
    pub delta: f64,
    /// `int exp(-(U - min U)/eps) dx` over the box.
    pub z: f64,
    /// `ln int exp(-U/eps) dx`.
    pub log_z: f64,
    /// `mu_eps[U > min U + delta]`.
    pub tail_mass: f64,
    /// `exp(delta/eps) tail_mass`.
    pub scaled_tail: f64,
    /// `eps ln(scaled_tail)`.
    pub eps_log_scaled: f64,
    /// Laplace estimate of the mass outside the box, relative to `z`.
    pub truncation: f64,
    pub nodes: usize,
}

struct Axis {
    lo: f64,
    h: f64,
    n: usize,
}

impl Axis {
    fn new(lo: f64, hi: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) || !(hi > lo) {
            return Err(Error::EmptyGrid(format!("bad quadrature axis [{lo}, {hi}] at spacing {spacing}")));
        }
        let cells = ((hi - lo) / spacing).round().max(2.0) as usize;
        Ok(Self { lo, h: (hi - lo) / cells as f64, n: cells + 1 })
    }

    fn at(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.h
    }

    fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.n {
            0.5 * self.h
        } else {
            self.h
        }
    }
}

/// Trapezoid quadrature of `exp(-U/eps)` and of its restriction to `{U > min U + delta}`.
///
/// In one dimension the cells where the indicator switches are split at the
/// level crossing, which keeps the tail second-order accurate.
/// In two dimensions the indicator is sampled at the nodes.
pub fn gibbs_tail(model: &PotentialModel, eps: f64, delta: f64, quad: &QuadratureGrid) -> Result<GibbsTail> {
    let d = model.dim();
    if quad.grid.bounds.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: quad.grid.bounds.dim() });
    }
    if d > 2 {
        return Err(Error::Config("Gibbs quadrature supports dimensions 1 and 2 only".into()));
    }
    if !(eps > 0.0) || !(delta > 0.0) {
        return Err(Error::Config(format!("eps and delta must be positive (eps = {eps}, delta = {delta})")));
    }
    let axes: Vec<Axis> = (0..d)
        .map(|k| Axis::new(quad.grid.bounds.lower[k], quad.grid.bounds.upper[k], quad.grid.spacing))
        .collect::<Result<_>>()?;
    let min_u = model.global_min_value();
    let level = min_u + delta;
    let w = |u: f64| (-(u - min_u) / eps).exp();

    let (z, tail, truncation_abs, nodes) = if d == 1 {
        let ax = &axes[0];
        let u: Vec<f64> = (0..ax.n).map(|i| model.energy(&[ax.at(i)])).collect();
        let f: Vec<f64> = u.iter().map(|&v| w(v)).collect();
        let z: f64 = (0..ax.n).map(|i| ax.weight(i) * f[i]).sum();
        let mut tail = 0.0;
        for i in 0..ax.n - 1 {
            let (g0, g1) = (u[i] - level, u[i + 1] - level);
            match (g0 > 0.0, g1 > 0.0) {
                (true, true) => tail += 0.5 * ax.h * (f[i] + f[i + 1]),
                (false, false) => {}
                (in0, _) => {
                    let xc = crossing(|x| model.energy(&[x]) - level, ax.at(i), ax.at(i + 1), g0, g1);
                    let fc = w(level);
                    if in0 {
                        tail += 0.5 * (xc - ax.at(i)) * (f[i] + fc);
                    } else {
                        tail += 0.5 * (ax.at(i + 1) - xc) * (fc + f[i + 1]);
                    }
                }
            }
        }
        let mut trunc = 0.0;
        for (i, outward) in [(0usize, -1.0), (ax.n - 1, 1.0)] {
            let slope = outward * model.gradient_vec(&[ax.at(i)])[0];
            trunc += edge_mass(f[i], slope, eps);
        }
        (z, tail, trunc, ax.n)
    } else {
        let (ax, ay) = (&axes[0], &axes[1]);
        let mut z = 0.0;
        let mut tail = 0.0;
        let mut trunc = 0.0;
        let mut g = [0.0; 2];
        for i in 0..ax.n {
            for j in 0..ay.n {
                let p = [ax.at(i), ay.at(j)];
                let u = model.energy(&p);
                let fw = w(u) * ax.weight(i) * ay.weight(j);
                z += fw;
                if u > level {
                    tail += fw;
                }
                let edge_x = i == 0 || i + 1 == ax.n;
                let edge_y = j == 0 || j + 1 == ay.n;
                if edge_x || edge_y {
                    model.gradient(&p, &mut g);
                    let f = w(u);
                    if edge_x {
                        let outward = if i == 0 { -1.0 } else { 1.0 };
                        trunc += ay.weight(j) * edge_mass(f, outward * g[0], eps);
                    }
                    if edge_y {
                        let outward = if j == 0 { -1.0 } else { 1.0 };
                        trunc += ax.weight(i) * edge_mass(f, outward * g[1], eps);
                    }
                }
            }
        }
        (z, tail, trunc, ax.n * ay.n)
    };

    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Numerical(format!("Gibbs normalisation is not finite and positive: {z}")));
    }
    let truncation = truncation_abs / z;
    if let Some(tol) = quad.truncation_tol {
        if !(truncation <= tol) {
            return Err(Error::Numerical(format!(
                "quadrature box truncates an estimated {truncation:.3e} of the Gibbs mass (limit {tol:e})"
            )));
        }
    }
    let tail_mass = tail / z;
    let scaled_tail = (delta / eps).exp() * tail_mass;
    Ok(GibbsTail {
        eps,
        delta,
        z,
        log_z: z.ln() - min_u / eps,
        tail_mass,
        scaled_tail,
        eps_log_scaled: eps * (delta / eps + tail_mass.ln()),
        truncation,
        nodes,
    })
}

/// Root of `g` in `[a, b]` from a sign change, by a few safeguarded secant steps.
fn crossing(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut ga: f64, mut gb: f64) -> f64 {
    for _ in 0..6 {
        let x = a + (b - a) * ga / (ga - gb);
        let gx = g(x);
        if gx == 0.0 {
            return x;
        }
        if (gx > 0.0) == (ga > 0.0) {
            a = x;
            ga = gx;
        } else {
            b = x;
            gb = gx;
        }
    }
    a + (b - a) * ga / (ga - gb)
}

/// Mass beyond an edge where `U` grows at rate `slope` outward: `f eps / slope`.
fn edge_mass(f: f64, slope: f64, eps: f64) -> f64 {
    if f == 0.0 {
        0.0
    } else if slope > 0.0 {
        f * eps / slope
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::GridBox;
    use statrs::function::erf::erfc;

    fn grid1(hw: f64, h: f64) -> QuadratureGrid {
        QuadratureGrid::new(LandscapeGrid::new(GridBox::cube(1, hw), h))
    }

    #[test]
    fn quadratic_tail_matches_erfc() {
        // U = x^2: mu[x^2 > delta] = erfc(sqrt(delta/eps))
        let model = PotentialModel::quadratic(2.0, 1);
        for &(eps, delta) in &[(0.5, 0.3), (0.2, 0.5), (1.0, 1.0)] {
            let r = gibbs_tail(&model, eps, delta, &grid1(8.0, 1e-3)).unwrap();
            let oracle = erfc((delta / eps).sqrt());
            assert!((r.tail_mass - oracle).abs() < 1e-5 * oracle, "eps {eps}: {} vs {oracle}", r.tail_mass);
            assert!((r.z - (std::f64::consts::PI * eps).sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn refinement_stability() {
        let model = PotentialModel::tilted_double_well(0.3);
        let a = gibbs_tail(&model, 0.25, 0.07, &grid1(3.0, 2e-3)).unwrap();
        let b = gibbs_tail(&model, 0.25, 0.07, &grid1(3.0, 1e-3)).unwrap();
        assert!((a.z - b.z).abs() < 1e-8 * b.z);
        assert!((a.tail_mass - b.tail_mass).abs() < 1e-4 * b.tail_mass);
    }

    #[test]
    fn flat_limit_is_lebesgue_fraction() {
        let model = PotentialModel::quadratic(2.0, 1);
        let q = QuadratureGrid::box_only(LandscapeGrid::new(GridBox::cube(1, 2.0), 1e-3));
        let r = gibbs_tail(&model, 1e6, 1.0, &q).unwrap();
        // {x^2 > 1} covers half of [-2, 2]
        assert!((r.tail_mass - 0.5).abs() < 1e-5);
        assert!(gibbs_tail(&model, 1e6, 1.0, &QuadratureGrid::new(q.grid.clone())).is_err());
    }

    #[test]
    fn double_well_tail_against_adaptive_quadrature() {
        // oracle: scipy quad split at the roots of U = min U + delta, delta = 0.1 (U(x_loc) - U(x_glob))
        let model = PotentialModel::tilted_double_well(0.3);
        let depth = model.energy(&crate::annealer::trapping_minimum(&model).unwrap()) - model.global_min_value();
        let delta = 0.1 * depth;
        assert!((delta - 0.05995749647721789).abs() < 1e-9);
        let oracle = [
            (0.5, 0.7466335838934888, -0.08613286905691411),
            (0.25, 0.5573612695068503, -0.08617791615992045),
            (0.125, 0.3438051000575129, -0.0735025474940567),
        ];
        for (eps, tail, eln) in oracle {
            let r = gibbs_tail(&model, eps, delta, &grid1(3.0, 1e-3)).unwrap();
            assert!((r.tail_mass - tail).abs() < 1e-5 * tail, "eps {eps}: {}", r.tail_mass);
            assert!((r.eps_log_scaled - eln).abs() < 1e-5, "eps {eps}: {}", r.eps_log_scaled);
        }
    }

    #[test]
    fn two_dimensional_quadratic() {
        // U = |x|^2 / 2 in 2-D: mass of {|x|^2/2 > delta} is exp(-delta/eps)
        let model = PotentialModel::quadratic(1.0, 2);
        let q = QuadratureGrid::new(LandscapeGrid::new(GridBox::cube(2, 7.0), 2e-2));
        let r = gibbs_tail(&model, 0.5, 0.4, &q).unwrap();
        assert!((r.z - 2.0 * std::f64::consts::PI * 0.5).abs() < 1e-9);
        // node-sampled indicator: first order in the spacing
        assert!((r.tail_mass - (-0.8f64).exp()).abs() < 2e-2);
    }

    #[test]
    fn truncated_box_is_rejected() {
        let model = PotentialModel::quadratic(2.0, 1);
        assert!(gibbs_tail(&model, 1.0, 0.5, &grid1(1.0, 1e-3)).is_err());
    }
}

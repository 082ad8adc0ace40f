//! Cell-centred phase-space grids for `d = 1` and densities living on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::PotentialModel;
use crate::schedules::VarianceMap;

/// Largest Gibbs mass allowed outside the grid box.
pub const GIBBS_TRUNCATION_TOL: f64 = 1e-9;
/// Velocity half-width of the default grid in units of `sqrt(sigma(eps0))`.
pub const DEFAULT_Y_WIDTH: f64 = 6.5;
pub const DEFAULT_CELLS: usize = 128;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl PhaseGrid {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(x_max > x_min) || !(y_max > y_min) || nx < 4 || ny < 4 {
            return Err(Error::Config(format!(
                "phase grid needs a nonempty box and at least 4 cells per axis, got [{x_min}, {x_max}] x [{y_min}, {y_max}] with {nx} x {ny}"
            )));
        }
        Ok(Self { x_min, x_max, y_min, y_max, nx, ny })
    }

    /// Model domain in `x` (widened if needed so that `U - min U >= 25 eps0` on the edges),
    /// `|y| <= 6.5 sqrt(sigma(eps0))`, 128 x 128 cells.
    pub fn default_for(model: &PotentialModel, var: &VarianceMap, eps0: f64) -> Result<Self> {
        if model.dim() != 1 {
            return Err(Error::Config("the phase-space solver handles one-dimensional positions only".into()));
        }
        let (mut a, mut b) = (model.domain().lower[0], model.domain().upper[0]);
        let floor = model.global_min_value() + 25.0 * eps0;
        for _ in 0..200 {
            if model.energy(&[a]) >= floor {
                break;
            }
            a -= 0.5;
        }
        for _ in 0..200 {
            if model.energy(&[b]) >= floor {
                break;
            }
            b += 0.5;
        }
        let yh = DEFAULT_Y_WIDTH * var.sigma(eps0).sqrt();
        Self::new(a, b, -yh, yh, DEFAULT_CELLS, DEFAULT_CELLS)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y_min + (j as f64 + 0.5) * self.dy()
    }

    /// Row-major index, `y` fastest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    pub fn on_rim(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }
}

/// Probability density (with respect to Lebesgue measure) at the cell centres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub grid: PhaseGrid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl DensityField {
    pub fn new(grid: PhaseGrid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Numerical("density values must be finite and nonnegative".into()));
        }
        Ok(Self { grid, values, time })
    }

    /// Midpoint quadrature of the total mass.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// Mass held by the outermost ring of cells.
    pub fn boundary_mass(&self) -> f64 {
        let g = &self.grid;
        let mut s = 0.0;
        for i in 0..g.nx {
            for j in 0..g.ny {
                if g.on_rim(i, j) {
                    s += self.values[g.idx(i, j)];
                }
            }
        }
        s * g.cell_area()
    }

    pub fn normalize(&mut self) {
        let m = self.mass();
        if m > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= m);
        }
    }

    /// Product density `f(x) g(y)` normalised on the grid.
    pub fn from_product(grid: PhaseGrid, fx: impl Fn(f64) -> f64, fy: impl Fn(f64) -> f64, time: f64) -> Result<Self> {
        let gx: Vec<f64> = (0..grid.nx).map(|i| fx(grid.x(i))).collect();
        let gy: Vec<f64> = (0..grid.ny).map(|j| fy(grid.y(j))).collect();
        let mut values = Vec::with_capacity(grid.len());
        for a in &gx {
            for b in &gy {
                values.push(a * b);
            }
        }
        let mut d = Self::new(grid, values, time)?;
        if !(d.mass() > 0.0) {
            return Err(Error::Numerical("initial density has no mass on the grid".into()));
        }
        d.normalize();
        Ok(d)
    }
}

/// Discrete Gibbs measure on the grid, normalised so that `sum mu dA = 1`.
#[derive(Clone, Debug)]
pub struct GibbsField {
    pub eps: f64,
    pub sigma: f64,
    pub log_mu: Vec<f64>,
    pub mu: Vec<f64>,
    /// Estimated mass of the continuous Gibbs measure outside the box.
    pub truncated: f64,
}

impl GibbsField {
    pub fn new(model: &PotentialModel, var: &VarianceMap, eps: f64, grid: &PhaseGrid) -> Self {
        let sigma = var.sigma(eps);
        let min_u = model.global_min_value();
        let ux: Vec<f64> = (0..grid.nx).map(|i| (model.energy(&[grid.x(i)]) - min_u) / eps).collect();
        let vy: Vec<f64> = (0..grid.ny).map(|j| grid.y(j).powi(2) / (2.0 * sigma)).collect();
        // log-sum-exp normaliser
        let top = ux.iter().cloned().fold(f64::INFINITY, f64::min) + vy.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut s = 0.0;
        for a in &ux {
            for b in &vy {
                s += (top - a - b).exp();
            }
        }
        let log_norm = -top + (s * grid.cell_area()).ln();
        let mut log_mu = Vec::with_capacity(grid.len());
        for a in &ux {
            for b in &vy {
                log_mu.push(-a - b - log_norm);
            }
        }
        let mu = log_mu.iter().map(|l| l.exp()).collect();

        // Mass beyond the box: Laplace tails in x, Gaussian tails in y.
        let zx: f64 = ux.iter().map(|a| (-a).exp()).sum::<f64>() * grid.dx();
        let mut tx = 0.0;
        for (x, outward) in [(grid.x_min, -1.0), (grid.x_max, 1.0)] {
            let slope = outward * model.gradient_vec(&[x])[0];
            let f = (-(model.energy(&[x]) - min_u) / eps).exp();
            tx += if f == 0.0 {
                0.0
            } else if slope > 0.0 {
                f * eps / slope
            } else {
                f64::INFINITY
            };
        }
        let ty = gaussian_tail(grid.y_max / sigma.sqrt()) + gaussian_tail(-grid.y_min / sigma.sqrt());
        Self { eps, sigma, log_mu, mu, truncated: tx / zx + ty }
    }
}

/// `P(N(0,1) > a)` for `a > 0`, by the upper Mills-ratio bound `phi(a)/a`.
fn gaussian_tail(a: f64) -> f64 {
    if a <= 0.0 {
        return 0.5;
    }
    (-0.5 * a * a).exp() / (a * (2.0 * std::f64::consts::PI).sqrt())
}

/// Normalised Gibbs density `exp(-U/eps - y^2/(2 sigma))` at the cell centres.
pub fn gibbs_density(model: &PotentialModel, var: &VarianceMap, eps: f64, grid: &PhaseGrid) -> Result<DensityField> {
    if model.dim() != 1 {
        return Err(Error::Config("the phase-space solver handles one-dimensional positions only".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    let g = GibbsField::new(model, var, eps, grid);
    if !(g.truncated <= GIBBS_TRUNCATION_TOL) {
        return Err(Error::Config(format!(
            "grid box misses an estimated {:.3e} of the Gibbs mass at eps = {eps} (limit {GIBBS_TRUNCATION_TOL:e})",
            g.truncated
        )));
    }
    DensityField::new(grid.clone(), g.mu, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gibbs_is_a_gaussian_product() {
        let model = PotentialModel::quadratic(1.0, 1);
        let var = VarianceMap::identity();
        let grid = PhaseGrid::default_for(&model, &var, 1.0).unwrap();
        assert!(grid.x_max >= 7.0, "x range widened for the light quadratic tail");
        let m = gibbs_density(&model, &var, 1.0, &grid).unwrap();
        assert!((m.mass() - 1.0).abs() < 1e-12);
        let two_pi = 2.0 * std::f64::consts::PI;
        for &(i, j) in &[(64, 64), (40, 70), (100, 20)] {
            let (x, y) = (grid.x(i), grid.y(j));
            let exact = (-(x * x + y * y) / 2.0).exp() / two_pi;
            // midpoint normalisation differs from the continuum by O(h^2)
            assert!((m.values[grid.idx(i, j)] / exact - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn double_well_mode_ratio() {
        let model = PotentialModel::tilted_double_well(0.3);
        let var = VarianceMap::identity();
        let grid = PhaseGrid::default_for(&model, &var, 0.2).unwrap();
        let m = gibbs_density(&model, &var, 0.2, &grid).unwrap();
        let marginal: Vec<f64> =
            (0..grid.nx).map(|i| (0..grid.ny).map(|j| m.values[grid.idx(i, j)]).sum::<f64>() * grid.dy()).collect();
        // marginal ratio between two nodes equals exp(-(U_a - U_b)/eps)
        let (a, b) = (30, 90);
        let ratio = marginal[a] / marginal[b];
        let oracle = (-(model.energy(&[grid.x(a)]) - model.energy(&[grid.x(b)])) / 0.2).exp();
        assert!((ratio / oracle - 1.0).abs() < 1e-12);
    }

    #[test]
    fn narrow_box_is_rejected() {
        let model = PotentialModel::quadratic(1.0, 1);
        let var = VarianceMap::identity();
        let grid = PhaseGrid::new(-3.0, 3.0, -4.0, 4.0, 64, 64).unwrap();
        assert!(matches!(gibbs_density(&model, &var, 1.0, &grid), Err(Error::Config(_))));
    }
}

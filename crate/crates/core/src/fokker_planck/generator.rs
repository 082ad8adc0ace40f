//! Discrete kinetic generators on a phase grid at frozen temperature.
//!
//! The upwind operator is a continuous-time Markov chain on the cells with
//! rates built so that the discrete Gibbs density is exactly invariant:
//!
//! * the Hamiltonian transport uses the flux of a corner stream function
//!   `psi = sigma min(mu of the adjacent cells)`, divergence free by construction,
//!   upwinded in `h = m/mu`;
//! * the Ornstein-Uhlenbeck part in `y` uses Scharfetter-Gummel fluxes, whose
//!   discrete equilibrium is the Gaussian at the cell centres.
//!
//! `L` is the chain generator and `L*` its adjoint in `l^2(mu)`, so duality holds
//! exactly. The centred operator applies the differential expressions with
//! second-order stencils (mirror ghosts at the rim) and is what the Gamma-calculus
//! checks use.

use serde::{Deserialize, Serialize};

use super::grid::{GibbsField, PhaseGrid};
use crate::error::{Error, Result};
use crate::potentials::PotentialModel;
use crate::schedules::VarianceMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stencil {
    Upwind,
    Centered,
}

/// Jump rates out of each cell, one array per direction.
#[derive(Clone, Debug, Default)]
pub(crate) struct Rates {
    pub right: Vec<f64>,
    pub left: Vec<f64>,
    pub up: Vec<f64>,
    pub down: Vec<f64>,
    pub total: Vec<f64>,
}

/// Per-column tridiagonal LU of `I - dt A_y`.
#[derive(Clone, Debug)]
pub struct ColumnFactors {
    pub dt: f64,
    lower: Vec<f64>,
    cprime: Vec<f64>,
    inv_piv: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct DiscreteGenerator {
    pub grid: PhaseGrid,
    pub eps: f64,
    pub sigma: f64,
    /// Force prefactor `sigma/eps`.
    pub alpha: f64,
    pub stencil: Stencil,
    /// `U'` at the cell centres.
    pub du: Vec<f64>,
    /// `U''` at the cell centres.
    pub d2u: Vec<f64>,
    pub gibbs: GibbsField,
    rates: Rates,
}

/// Bernoulli function `z / (e^z - 1)`.
#[inline]
pub fn bernoulli(z: f64) -> f64 {
    if z.abs() < 1e-10 {
        1.0 - 0.5 * z
    } else {
        z / z.exp_m1()
    }
}

impl DiscreteGenerator {
    pub fn new(
        model: &PotentialModel,
        var: &VarianceMap,
        eps: f64,
        grid: &PhaseGrid,
        stencil: Stencil,
    ) -> Result<Self> {
        if model.dim() != 1 {
            return Err(Error::Config("the phase-space solver handles one-dimensional positions only".into()));
        }
        if !(eps > 0.0) {
            return Err(Error::Config(format!("eps must be positive, got {eps}")));
        }
        let sigma = var.sigma(eps);
        let gibbs = GibbsField::new(model, var, eps, grid);
        let du = (0..grid.nx).map(|i| model.gradient_vec(&[grid.x(i)])[0]).collect();
        let mut h = [0.0];
        let d2u = (0..grid.nx)
            .map(|i| {
                model.hessian(&[grid.x(i)], &mut h);
                h[0]
            })
            .collect();
        let mut g = Self {
            grid: grid.clone(),
            eps,
            sigma,
            alpha: sigma / eps,
            stencil,
            du,
            d2u,
            gibbs,
            rates: Rates::default(),
        };
        if stencil == Stencil::Upwind {
            g.rates = g.build_rates();
        }
        Ok(g)
    }

    fn build_rates(&self) -> Rates {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let (dx, dy) = (g.dx(), g.dy());
        let lm = &self.gibbs.log_mu;
        // log(psi / sigma) at corner (ci, cj), ci in 0..=nx, cj in 0..=ny
        let corner = |ci: usize, cj: usize| -> f64 {
            if ci == 0 || cj == 0 || ci == nx || cj == ny {
                return f64::NEG_INFINITY;
            }
            let a = lm[g.idx(ci - 1, cj - 1)].min(lm[g.idx(ci, cj - 1)]);
            let b = lm[g.idx(ci - 1, cj)].min(lm[g.idx(ci, cj)]);
            a.min(b)
        };
        let n = g.len();
        let mut r = Rates {
            right: vec![0.0; n],
            left: vec![0.0; n],
            up: vec![0.0; n],
            down: vec![0.0; n],
            total: vec![0.0; n],
        };
        let s = self.sigma;
        for i in 0..nx {
            for j in 0..ny {
                let k = g.idx(i, j);
                let l0 = lm[k];
                if i + 1 < nx {
                    // Fx / mu_k = -sigma (psi_top - psi_bottom) / (dy mu_k)
                    let f = -s * ((corner(i + 1, j + 1) - l0).exp() - (corner(i + 1, j) - l0).exp()) / dy;
                    if f > 0.0 {
                        r.right[k] = f / dx;
                    } else {
                        let k1 = g.idx(i + 1, j);
                        let f1 = -s * ((corner(i + 1, j + 1) - lm[k1]).exp() - (corner(i + 1, j) - lm[k1]).exp()) / dy;
                        r.left[k1] = (-f1).max(0.0) / dx;
                    }
                }
                if j + 1 < ny {
                    // Hamiltonian part: Fy / mu_k = sigma (psi_right - psi_left) / (dx mu_k)
                    let f = s * ((corner(i + 1, j + 1) - l0).exp() - (corner(i, j + 1) - l0).exp()) / dx;
                    let k1 = g.idx(i, j + 1);
                    if f > 0.0 {
                        r.up[k] = f / dy;
                    } else {
                        let f1 = s * ((corner(i + 1, j + 1) - lm[k1]).exp() - (corner(i, j + 1) - lm[k1]).exp()) / dx;
                        r.down[k1] = (-f1).max(0.0) / dy;
                    }
                    // Scharfetter-Gummel for velocity -y/sigma with unit diffusion
                    let yf = g.y_min + (j + 1) as f64 * dy;
                    let z = -yf / s * dy;
                    r.up[k] += bernoulli(-z) / (dy * dy);
                    r.down[k1] += bernoulli(z) / (dy * dy);
                }
            }
        }
        for k in 0..n {
            r.total[k] = r.right[k] + r.left[k] + r.up[k] + r.down[k];
        }
        r
    }

    /// Largest total jump rate; explicit Euler keeps densities nonnegative for `dt <= 1/max_rate`.
    pub fn max_rate(&self) -> f64 {
        self.rates.total.iter().cloned().fold(0.0, f64::max)
    }

    fn need_upwind(&self) -> Result<()> {
        if self.stencil != Stencil::Upwind {
            return Err(Error::Config("operation needs the upwind generator".into()));
        }
        Ok(())
    }

    /// `(L f)` on grid functions.
    pub fn apply_forward(&self, f: &[f64]) -> Vec<f64> {
        match self.stencil {
            Stencil::Upwind => self.chain_forward(f),
            Stencil::Centered => self.centered(f, false),
        }
    }

    /// `(L* f)`, the adjoint in `l^2(mu)`.
    pub fn apply_adjoint(&self, f: &[f64]) -> Vec<f64> {
        match self.stencil {
            Stencil::Upwind => self.chain_adjoint(f),
            Stencil::Centered => self.centered(f, true),
        }
    }

    fn chain_forward(&self, f: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let r = &self.rates;
        let mut out = vec![0.0; g.len()];
        for i in 0..g.nx {
            for j in 0..g.ny {
                let k = g.idx(i, j);
                let mut s = 0.0;
                if i + 1 < g.nx {
                    s += r.right[k] * (f[k + g.ny] - f[k]);
                }
                if i > 0 {
                    s += r.left[k] * (f[k - g.ny] - f[k]);
                }
                if j + 1 < g.ny {
                    s += r.up[k] * (f[k + 1] - f[k]);
                }
                if j > 0 {
                    s += r.down[k] * (f[k - 1] - f[k]);
                }
                out[k] = s;
            }
        }
        out
    }

    fn chain_adjoint(&self, f: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let r = &self.rates;
        let lm = &self.gibbs.log_mu;
        let mut out = vec![0.0; g.len()];
        for i in 0..g.nx {
            for j in 0..g.ny {
                let k = g.idx(i, j);
                let mut s = 0.0;
                let mut add = |src: usize, rate: f64| {
                    if rate > 0.0 {
                        s += (lm[src] - lm[k]).exp() * rate * (f[src] - f[k]);
                    }
                };
                if i > 0 {
                    add(k - g.ny, r.right[k - g.ny]);
                }
                if i + 1 < g.nx {
                    add(k + g.ny, r.left[k + g.ny]);
                }
                if j > 0 {
                    add(k - 1, r.up[k - 1]);
                }
                if j + 1 < g.ny {
                    add(k + 1, r.down[k + 1]);
                }
                out[k] = s;
            }
        }
        out
    }

    /// Centred stencils for `L` (`adjoint = false`) or `L*`; mirror ghosts at the rim.
    pub(crate) fn centered(&self, f: &[f64], adjoint: bool) -> Vec<f64> {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let (dx, dy) = (g.dx(), g.dy());
        let mut out = vec![0.0; g.len()];
        for i in 0..nx {
            let (ip, im) = ((i + 1).min(nx - 1), i.saturating_sub(1));
            for j in 0..ny {
                let (jp, jm) = ((j + 1).min(ny - 1), j.saturating_sub(1));
                let k = g.idx(i, j);
                let fx = (f[g.idx(ip, j)] - f[g.idx(im, j)]) / (2.0 * dx);
                let fy = (f[g.idx(i, jp)] - f[g.idx(i, jm)]) / (2.0 * dy);
                let fyy = (f[g.idx(i, jp)] - 2.0 * f[k] + f[g.idx(i, jm)]) / (dy * dy);
                let y = g.y(j);
                let force = self.alpha * self.du[i];
                out[k] = if adjoint {
                    -y * fx + (force - y / self.sigma) * fy + fyy
                } else {
                    y * fx - (y / self.sigma + force) * fy + fyy
                };
            }
        }
        out
    }

    /// Exact `l^2(mu)` inner product `sum f g mu dA`.
    pub fn mu_inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter().zip(g).zip(&self.gibbs.mu).map(|((a, b), m)| a * b * m).sum::<f64>() * self.grid.cell_area()
    }

    /// Largest jump rate along `x`; bounds the step of [`Self::advance_density_imex`].
    pub fn max_x_rate(&self) -> f64 {
        self.rates.right.iter().zip(&self.rates.left).map(|(a, b)| a + b).fold(0.0, f64::max)
    }

    /// Thomas factors of `I - dt A_y` for every column, `A_y` being the velocity jumps.
    pub fn column_factors(&self, dt: f64) -> Result<ColumnFactors> {
        self.need_upwind()?;
        let g = &self.grid;
        let ny = g.ny;
        let r = &self.rates;
        let n = g.len();
        let mut f = ColumnFactors { dt, lower: vec![0.0; n], cprime: vec![0.0; n], inv_piv: vec![0.0; n] };
        for i in 0..g.nx {
            let row = i * ny;
            let mut prev_c = 0.0;
            for j in 0..ny {
                let k = row + j;
                let diag = 1.0 + dt * (r.up[k] + r.down[k]);
                let lower = if j > 0 { -dt * r.up[k - 1] } else { 0.0 };
                let upper = if j + 1 < ny { -dt * r.down[k + 1] } else { 0.0 };
                let piv = diag - lower * prev_c;
                f.lower[k] = lower;
                f.inv_piv[k] = 1.0 / piv;
                prev_c = upper / piv;
                f.cprime[k] = prev_c;
            }
        }
        Ok(f)
    }

    /// One step explicit in `x`, implicit in `y`:
    /// `(I - dt A_y) m' = (I + dt A_x) m`.
    ///
    /// Both operators are generators of jump processes, so mass is conserved, the result is
    /// nonnegative for `dt max_x_rate <= 1`, and since `(A_x + A_y) mu = 0` the discrete Gibbs
    /// density is an exact fixed point.
    pub fn advance_density_imex(&self, m: &[f64], out: &mut [f64], f: &ColumnFactors) -> Result<f64> {
        self.need_upwind()?;
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let r = &self.rates;
        let dt = f.dt;
        let mut most_negative = 0.0f64;
        for i in 0..nx {
            let row = i * ny;
            let cur = &m[row..row + ny];
            let rr = &r.right[row..row + ny];
            let rl = &r.left[row..row + ny];
            let dst = &mut out[row..row + ny];
            for j in 0..ny {
                dst[j] = cur[j] * (1.0 - dt * (rr[j] + rl[j]));
            }
            if i > 0 {
                let prev = &m[row - ny..row];
                let pr = &r.right[row - ny..row];
                for j in 0..ny {
                    dst[j] += dt * prev[j] * pr[j];
                }
            }
            if i + 1 < nx {
                let next = &m[row + ny..row + 2 * ny];
                let nl = &r.left[row + ny..row + 2 * ny];
                for j in 0..ny {
                    dst[j] += dt * next[j] * nl[j];
                }
            }
            let lo = &f.lower[row..row + ny];
            let cp = &f.cprime[row..row + ny];
            let ip = &f.inv_piv[row..row + ny];
            dst[0] *= ip[0];
            for j in 1..ny {
                dst[j] = (dst[j] - lo[j] * dst[j - 1]) * ip[j];
            }
            for j in (0..ny - 1).rev() {
                dst[j] -= cp[j] * dst[j + 1];
            }
            for v in dst.iter() {
                most_negative = most_negative.min(*v);
            }
        }
        Ok(most_negative)
    }

    /// One explicit Euler step of the forward (density) equation: `m <- m + dt (L*h) mu`.
    ///
    /// Returns the most negative value produced, 0 when the result is nonnegative.
    pub fn advance_density(&self, m: &[f64], out: &mut [f64], dt: f64) -> Result<f64> {
        self.need_upwind()?;
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let r = &self.rates;
        let mut most_negative = 0.0f64;
        for i in 0..nx {
            let row = i * ny;
            let cur = &m[row..row + ny];
            let tot = &r.total[row..row + ny];
            let up = &r.up[row..row + ny];
            let down = &r.down[row..row + ny];
            let dst = &mut out[row..row + ny];
            for j in 0..ny {
                let mut inflow = 0.0;
                if j > 0 {
                    inflow += cur[j - 1] * up[j - 1];
                }
                if j + 1 < ny {
                    inflow += cur[j + 1] * down[j + 1];
                }
                dst[j] = cur[j] - dt * cur[j] * tot[j] + dt * inflow;
            }
            if i > 0 {
                let prev = &m[row - ny..row];
                let rr = &r.right[row - ny..row];
                for j in 0..ny {
                    dst[j] += dt * prev[j] * rr[j];
                }
            }
            if i + 1 < nx {
                let next = &m[row + ny..row + 2 * ny];
                let rl = &r.left[row + ny..row + 2 * ny];
                for j in 0..ny {
                    dst[j] += dt * next[j] * rl[j];
                }
            }
            for v in dst.iter() {
                most_negative = most_negative.min(*v);
            }
        }
        Ok(most_negative)
    }
}

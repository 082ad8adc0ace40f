//! Pointwise Gamma-calculus inequalities for the kinetic generator on a phase grid.
//!
//! With `L = -y d_x + (alpha U' - y/sigma) d_y + d_yy` (the generator acting on
//! `h = m/mu`), `Gamma_{L,Phi}(h) = (L Phi(h) - D Phi(h) . L h) / 2` is evaluated with
//! centred differences and compared to the lower bounds
//!
//! * `Phi0 = h ln h`:                      `Gamma >= 0`, in fact `= h_y^2 / (2h)`;
//! * `Phi1 = |(d_x + d_y) h|^2 / h`:       `Gamma >= (M grad h).[L, M grad] h / h`;
//! * `Phi2 = |grad h|^2 / h`:              `Gamma >= -kappa Phi2`;
//! * `Psi = Phi1 + beta Phi0`:             `Gamma >= Phi2 / 2`,
//!
//! with `beta = 1/2 + (alpha |U''| + 1 + 1/sigma)^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fokker_planck::{DiscreteGenerator, PhaseGrid};
use crate::rng::NoiseStream;

/// Cells excluded along each edge.
pub const BOUNDARY_LAYER: usize = 3;
/// Calibration of the derivative-product error estimate, which bounds the Taylor
/// remainders without their `1/6`, `1/12` factors. Residuals of the exact identities on
/// random smooth functions stay below 0.1 of the raw estimate.
pub const TOL_SAFETY: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaFunctional {
    Phi0,
    Phi1,
    Phi2,
    Psi,
}

impl std::str::FromStr for GammaFunctional {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "phi0" => Ok(Self::Phi0),
            "phi1" => Ok(Self::Phi1),
            "phi2" => Ok(Self::Phi2),
            "psi" => Ok(Self::Psi),
            _ => Err(Error::Config(format!("unknown functional {s:?}; expected phi0, phi1, phi2 or psi"))),
        }
    }
}

/// Which constant bounds `Gamma_{L,Phi2}` from below.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phi2Constant {
    /// `(alpha |U''| + 1) / 2`, what the commutator computation gives.
    #[default]
    Hessian,
    /// `alpha |U'| + 1 + 1/sigma`.
    Gradient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub which: GammaFunctional,
    pub eps: f64,
    pub beta: f64,
    pub kappa: f64,
    /// Minimum over interior cells of `Gamma_{L,Phi}(h) - bound`.
    pub min_slack: f64,
    pub argmin: (f64, f64),
    pub tol_grid: f64,
    pub c_h: f64,
    pub interior_pass: bool,
    pub n_interior: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_abs_residual: f64,
    /// Largest magnitude of the terms being compared, for scale.
    pub magnitude: f64,
    pub tol_grid: f64,
    pub pass: bool,
}

fn dx(g: &PhaseGrid, f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    let h = g.dx();
    for i in 0..g.nx {
        let (ip, im) = ((i + 1).min(g.nx - 1), i.saturating_sub(1));
        let w = (ip - im) as f64 * h;
        for j in 0..g.ny {
            out[g.idx(i, j)] = (f[g.idx(ip, j)] - f[g.idx(im, j)]) / w;
        }
    }
    out
}

fn dy(g: &PhaseGrid, f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    let h = g.dy();
    for i in 0..g.nx {
        for j in 0..g.ny {
            let (jp, jm) = ((j + 1).min(g.ny - 1), j.saturating_sub(1));
            out[g.idx(i, j)] = (f[g.idx(i, jp)] - f[g.idx(i, jm)]) / ((jp - jm) as f64 * h);
        }
    }
    out
}

fn interior(g: &PhaseGrid) -> impl Iterator<Item = (usize, usize)> + '_ {
    let b = BOUNDARY_LAYER;
    (b..g.nx.saturating_sub(b)).flat_map(move |i| (b..g.ny.saturating_sub(b)).map(move |j| (i, j)))
}

fn validate(h: &[f64], gen: &DiscreteGenerator) -> Result<()> {
    let g = &gen.grid;
    if h.len() != g.len() {
        return Err(Error::DimensionMismatch { expected: g.len(), got: h.len() });
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("test function has non-finite values".into()));
    }
    if h.iter().any(|v| *v <= 0.0) {
        return Err(Error::Config("test function must be strictly positive".into()));
    }
    if g.nx <= 2 * BOUNDARY_LAYER || g.ny <= 2 * BOUNDARY_LAYER {
        return Err(Error::Config("grid has no interior beyond the boundary layer".into()));
    }
    Ok(())
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical(format!("non-finite values in {what}")))
    }
}

/// `beta = 1/2 + (alpha sup|U''| + 1 + 1/sigma)^2`, sup over the grid.
pub fn beta_constant(gen: &DiscreteGenerator) -> f64 {
    let k = gen.alpha * sup_abs(&gen.d2u) + 1.0 + 1.0 / gen.sigma;
    0.5 + k * k
}

pub fn phi2_constant(gen: &DiscreteGenerator, which: Phi2Constant) -> f64 {
    match which {
        Phi2Constant::Hessian => (gen.alpha * sup_abs(&gen.d2u) + 1.0) / 2.0,
        Phi2Constant::Gradient => gen.alpha * sup_abs(&gen.du) + 1.0 + 1.0 / gen.sigma,
    }
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Pointwise `Gamma_{L,Phi}(h)` by the defining formula.
pub fn gamma_field(h: &[f64], gen: &DiscreteGenerator, which: GammaFunctional) -> Result<Vec<f64>> {
    validate(h, gen)?;
    let g = &gen.grid;
    let lh = gen.centered(h, true);
    let (hx, hy) = (dx(g, h), dy(g, h));
    let (gx, gy) = (dx(g, &lh), dy(g, &lh));
    let n = h.len();
    let phi0 = || -> Vec<f64> {
        let p: Vec<f64> = h.iter().map(|v| v * v.ln()).collect();
        let lp = gen.centered(&p, true);
        (0..n).map(|k| 0.5 * (lp[k] - (1.0 + h[k].ln()) * lh[k])).collect()
    };
    // Gamma of |A h|^2 / h for a pair of first-order coefficients (a, b) per component
    let fisher = |mixed: bool| -> Vec<f64> {
        let p: Vec<f64> = (0..n)
            .map(|k| if mixed { (hx[k] + hy[k]).powi(2) / h[k] } else { (hx[k] * hx[k] + hy[k] * hy[k]) / h[k] })
            .collect();
        let lp = gen.centered(&p, true);
        (0..n)
            .map(|k| {
                let dphi = if mixed {
                    let s = hx[k] + hy[k];
                    -s * s / (h[k] * h[k]) * lh[k] + 2.0 * s * (gx[k] + gy[k]) / h[k]
                } else {
                    -(hx[k] * hx[k] + hy[k] * hy[k]) / (h[k] * h[k]) * lh[k]
                        + 2.0 * (hx[k] * gx[k] + hy[k] * gy[k]) / h[k]
                };
                0.5 * (lp[k] - dphi)
            })
            .collect()
    };
    let out = match which {
        GammaFunctional::Phi0 => phi0(),
        GammaFunctional::Phi1 => fisher(true),
        GammaFunctional::Phi2 => fisher(false),
        GammaFunctional::Psi => {
            let beta = beta_constant(gen);
            fisher(true).into_iter().zip(phi0()).map(|(a, b)| a + beta * b).collect()
        }
    };
    check_finite(&out, "Gamma")?;
    Ok(out)
}

/// Error scale `C_h` such that centred-difference errors of `Gamma` are about `C_h (dx^2 + dy^2)`.
///
/// Pointwise estimate from the relative derivatives of `h` up to fourth differences,
/// weighted per axis by the generator coefficients acting along it; the maximum over
/// the interior is returned.
pub fn error_scale(h: &[f64], gen: &DiscreteGenerator, weight: f64) -> f64 {
    let g = &gen.grid;
    let (hx, hy) = (dx(g, h), dy(g, h));
    let (hxx, hyy) = (dx(g, &hx), dy(g, &hy));
    let (hxxx, hyyy) = (dx(g, &hxx), dy(g, &hyy));
    let (hxxxx, hyyyy, hxxyy) = (dx(g, &hxxx), dy(g, &hyyy), dy(g, &dy(g, &hxx)));
    let (dx2, dy2) = (g.dx().powi(2), g.dy().powi(2));
    let b = BOUNDARY_LAYER;
    let mut worst = 0.0f64;
    for (i, j) in interior(g) {
        // fourth differences reach two cells out; skip where they touch the rim stencils
        if i < b + 1 || j < b + 1 || i + b + 1 >= g.nx || j + b + 1 >= g.ny {
            continue;
        }
        let k = g.idx(i, j);
        let r = 1.0 / h[k];
        let rel = |d: [f64; 4]| d.map(|v| v.abs() * r);
        // transport terms leave third-order remainders, diffusion fourth-order ones
        let s3 = |m: [f64; 4]| m[2] + m[0] * m[1] + m[0].powi(3);
        let s4 = |m: [f64; 4]| m[3] + m[0] * m[2] + m[1] * m[1] + m[0] * m[0] * m[1] + m[0].powi(4);
        let (mx, my) = (rel([hx[k], hxx[k], hxxx[k], hxxxx[k]]), rel([hy[k], hyy[k], hyyy[k], hyyyy[k]]));
        let y = g.y(j).abs();
        let ex = (y + gen.alpha * gen.d2u[i].abs()) * s3(mx) * dx2;
        let ey = ((gen.alpha * gen.du[i].abs() + y / gen.sigma) * s3(my) + s4(my) + hxxyy[k].abs() * r) * dy2;
        worst = worst.max(h[k] * (ex + ey));
    }
    TOL_SAFETY * weight * worst / (dx2 + dy2)
}

pub fn gamma_check(h: &[f64], gen: &DiscreteGenerator, which: GammaFunctional) -> Result<GammaReport> {
    gamma_check_with(h, gen, which, Phi2Constant::default())
}

pub fn gamma_check_with(
    h: &[f64],
    gen: &DiscreteGenerator,
    which: GammaFunctional,
    c2: Phi2Constant,
) -> Result<GammaReport> {
    let gam = gamma_field(h, gen, which)?;
    let g = &gen.grid;
    let (hx, hy) = (dx(g, h), dy(g, h));
    let beta = beta_constant(gen);
    let kappa = phi2_constant(gen, c2);
    let phi2 = |k: usize| (hx[k] * hx[k] + hy[k] * hy[k]) / h[k];
    let weight = match which {
        GammaFunctional::Psi => 1.0 + beta,
        GammaFunctional::Phi2 => 1.0 + kappa,
        _ => 1.0,
    };
    let mut min_slack = f64::INFINITY;
    let mut argmin = (f64::NAN, f64::NAN);
    let mut n_interior = 0;
    for (i, j) in interior(g) {
        let k = g.idx(i, j);
        let bound = match which {
            GammaFunctional::Phi0 => 0.0,
            GammaFunctional::Phi1 => {
                // (h_x + h_y) ([L, d_x] + [L, d_y]) h / h
                let s = hx[k] + hy[k];
                s * (-gen.alpha * gen.d2u[i] * hy[k] + hx[k] + hy[k] / gen.sigma) / h[k]
            }
            GammaFunctional::Phi2 => -kappa * phi2(k),
            GammaFunctional::Psi => 0.5 * phi2(k),
        };
        let slack = gam[k] - bound;
        n_interior += 1;
        if slack < min_slack {
            min_slack = slack;
            argmin = (g.x(i), g.y(j));
        }
    }
    let c_h = error_scale(h, gen, weight);
    let tol_grid = c_h * (g.dx().powi(2) + g.dy().powi(2));
    Ok(GammaReport {
        which,
        eps: gen.eps,
        beta,
        kappa,
        min_slack,
        argmin,
        tol_grid,
        c_h,
        interior_pass: min_slack >= -tol_grid,
        n_interior,
    })
}

fn residual_report(lhs: &[f64], rhs: &[f64], g: &PhaseGrid, c_h: f64) -> ResidualReport {
    let mut worst = 0.0f64;
    let mut magnitude = 0.0f64;
    for (i, j) in interior(g) {
        let k = g.idx(i, j);
        worst = worst.max((lhs[k] - rhs[k]).abs());
        magnitude = magnitude.max(lhs[k].abs()).max(rhs[k].abs());
    }
    let tol_grid = c_h * (g.dx().powi(2) + g.dy().powi(2));
    ResidualReport { max_abs_residual: worst, magnitude, tol_grid, pass: worst <= tol_grid }
}

/// `Gamma_{L,|A.|^2}(h) - [Gamma(Ah) + (Ah)[L,A]h]` with `A = d_y`, where
/// `[L, d_y] = d_x + d_y / sigma` and `Gamma(f) = (L f^2)/2 - f L f`.
pub fn quadratic_lemma_residual(h: &[f64], gen: &DiscreteGenerator) -> Result<ResidualReport> {
    if h.len() != gen.grid.len() {
        return Err(Error::DimensionMismatch { expected: gen.grid.len(), got: h.len() });
    }
    check_finite(h, "test function")?;
    let g = &gen.grid;
    let n = h.len();
    let hy = dy(g, h);
    let hx = dx(g, h);
    let lh = gen.centered(h, true);
    let lhy = dy(g, &lh);
    let sq: Vec<f64> = hy.iter().map(|v| v * v).collect();
    let lsq = gen.centered(&sq, true);
    let lhs: Vec<f64> = (0..n).map(|k| 0.5 * lsq[k] - hy[k] * lhy[k]).collect();
    let carre = carre_du_champ(&hy, gen);
    let rhs: Vec<f64> = (0..n).map(|k| carre[k] + hy[k] * (hx[k] + hy[k] / gen.sigma)).collect();
    check_finite(&lhs, "quadratic lemma")?;
    Ok(residual_report(&lhs, &rhs, g, error_scale(&positive_proxy(h), gen, 1.0)))
}

/// `f` itself when positive, otherwise `|f| + max |f|`, so relative derivatives stay finite.
fn positive_proxy(f: &[f64]) -> Vec<f64> {
    if f.iter().all(|v| *v > 0.0) {
        return f.to_vec();
    }
    let top = sup_abs(f).max(f64::MIN_POSITIVE);
    f.iter().map(|v| v.abs() + top).collect()
}

/// `Gamma(f) = (L f^2)/2 - f L f` on the grid.
pub fn carre_du_champ(f: &[f64], gen: &DiscreteGenerator) -> Vec<f64> {
    let sq: Vec<f64> = f.iter().map(|v| v * v).collect();
    let lsq = gen.centered(&sq, true);
    let lf = gen.centered(f, true);
    (0..f.len()).map(|k| 0.5 * lsq[k] - f[k] * lf[k]).collect()
}

/// `Gamma(f) - f_y^2`.
pub fn carre_du_champ_residual(f: &[f64], gen: &DiscreteGenerator) -> Result<ResidualReport> {
    if f.len() != gen.grid.len() {
        return Err(Error::DimensionMismatch { expected: gen.grid.len(), got: f.len() });
    }
    check_finite(f, "test function")?;
    let g = &gen.grid;
    let lhs = carre_du_champ(f, gen);
    let fy = dy(g, f);
    let rhs: Vec<f64> = fy.iter().map(|v| v * v).collect();
    Ok(residual_report(&lhs, &rhs, g, error_scale(&positive_proxy(f), gen, 1.0)))
}

/// `Gamma_{L,Phi0}(h) - h_y^2 / (2h)`.
pub fn entropic_residual(h: &[f64], gen: &DiscreteGenerator) -> Result<ResidualReport> {
    let lhs = gamma_field(h, gen, GammaFunctional::Phi0)?;
    let hy = dy(&gen.grid, h);
    let rhs: Vec<f64> = (0..h.len()).map(|k| hy[k] * hy[k] / (2.0 * h[k])).collect();
    Ok(residual_report(&lhs, &rhs, &gen.grid, error_scale(h, gen, 1.0)))
}

/// Smooth positive test function `exp(sum of a few random plane waves)`, at most
/// `max_periods` oscillations across the box along each axis.
pub fn random_test_function(grid: &PhaseGrid, seed: u64, index: u64, max_periods: f64) -> Vec<f64> {
    const MODES: u64 = 4;
    let noise = NoiseStream::new(seed, index);
    let (lx, ly) = (grid.x_max - grid.x_min, grid.y_max - grid.y_min);
    let modes: Vec<[f64; 4]> = (0..MODES)
        .map(|m| {
            let (u1, u2) = noise.uniform_pair(2 * m, 0);
            let (u3, u4) = noise.uniform_pair(2 * m + 1, 0);
            let kx = std::f64::consts::TAU * max_periods * (2.0 * u1 - 1.0) / lx;
            let ky = std::f64::consts::TAU * max_periods * (2.0 * u2 - 1.0) / ly;
            [kx, ky, std::f64::consts::TAU * u3, 0.6 * u4]
        })
        .collect();
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            let (x, y) = (grid.x(i), grid.y(j));
            let s: f64 = modes.iter().map(|[kx, ky, ph, a]| a * (kx * x + ky * y + ph).sin()).sum();
            out.push(s.exp());
        }
    }
    out
}

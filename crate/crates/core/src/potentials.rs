//! Benchmark potentials, growth-condition checks and landscape analysis.
//!
//! Every built-in potential carries growth constants `(a1, a2, M, r)` with
//!
//! ```text
//! a1 |x|^2 - M <= U(x) <= a2 |x|^2 + M,     -grad U(x) . x <= -r |x|^2 + M
//! ```
//!
//! holding on the model's reference domain, together with an analytic bound on
//! the Frobenius norm of the Hessian over that domain.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::sampling::{lattice_points, GridBox};
use crate::{Error, Result};

/// Absolute tolerance used to decide whether a minimum is global.
pub const GLOBAL_VALUE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstants {
    pub a1: f64,
    pub a2: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianWell {
    pub center: [f64; 2],
    pub depth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialKind {
    /// `k/2 |x|^2`.
    Quadratic { stiffness: f64, dim: usize },
    /// `(x^2 - 1)^2 + tilt * x`.
    TiltedDoubleWell { tilt: f64 },
    /// `scale * x^2 (x^2 - 4)^2 + tilt * x`.
    TripleWell { scale: f64, tilt: f64 },
    /// `k/2 |x|^2 - sum_i depth_i exp(-|x - c_i|^2 / (2 w^2))` in two dimensions.
    GaussianWells { stiffness: f64, width: f64, wells: Vec<GaussianWell> },
    /// One-dimensional polynomial, coefficients in ascending powers.
    Polynomial { coeffs: Vec<f64> },
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect()
}

impl PotentialKind {
    pub fn dim(&self) -> usize {
        match self {
            PotentialKind::Quadratic { dim, .. } => *dim,
            PotentialKind::GaussianWells { .. } => 2,
            _ => 1,
        }
    }

    pub fn energy(&self, x: &[f64]) -> f64 {
        match self {
            PotentialKind::Quadratic { stiffness, .. } => 0.5 * stiffness * x.iter().map(|v| v * v).sum::<f64>(),
            PotentialKind::TiltedDoubleWell { tilt } => {
                let s = x[0] * x[0] - 1.0;
                s * s + tilt * x[0]
            }
            PotentialKind::TripleWell { scale, tilt } => {
                let x2 = x[0] * x[0];
                let s = x2 - 4.0;
                scale * x2 * s * s + tilt * x[0]
            }
            PotentialKind::GaussianWells { stiffness, width, wells } => {
                let inv = 1.0 / (2.0 * width * width);
                let mut u = 0.5 * stiffness * (x[0] * x[0] + x[1] * x[1]);
                for w in wells {
                    let (dx, dy) = (x[0] - w.center[0], x[1] - w.center[1]);
                    u -= w.depth * (-(dx * dx + dy * dy) * inv).exp();
                }
                u
            }
            PotentialKind::Polynomial { coeffs } => horner(coeffs, x[0]),
        }
    }

    #[inline]
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match self {
            PotentialKind::Quadratic { stiffness, .. } => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = stiffness * v;
                }
            }
            PotentialKind::TiltedDoubleWell { tilt } => {
                out[0] = 4.0 * x[0] * (x[0] * x[0] - 1.0) + tilt;
            }
            PotentialKind::TripleWell { scale, tilt } => {
                // d/dx [x^2 (x^2-4)^2] = 2x (x^2-4)(3x^2-4)
                let x2 = x[0] * x[0];
                out[0] = scale * 2.0 * x[0] * (x2 - 4.0) * (3.0 * x2 - 4.0) + tilt;
            }
            PotentialKind::GaussianWells { stiffness, width, wells } => {
                let w2 = width * width;
                out[0] = stiffness * x[0];
                out[1] = stiffness * x[1];
                for w in wells {
                    let (dx, dy) = (x[0] - w.center[0], x[1] - w.center[1]);
                    let g = w.depth * (-(dx * dx + dy * dy) / (2.0 * w2)).exp() / w2;
                    out[0] += g * dx;
                    out[1] += g * dy;
                }
            }
            PotentialKind::Polynomial { coeffs } => {
                out[0] = horner(&poly_derivative(coeffs), x[0]);
            }
        }
    }

    /// Hessian, row-major `dim x dim`.
    pub fn hessian(&self, x: &[f64], out: &mut [f64]) {
        match self {
            PotentialKind::Quadratic { stiffness, dim } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                for i in 0..*dim {
                    out[i * dim + i] = *stiffness;
                }
            }
            PotentialKind::TiltedDoubleWell { .. } => out[0] = 12.0 * x[0] * x[0] - 4.0,
            PotentialKind::TripleWell { scale, .. } => {
                let x2 = x[0] * x[0];
                out[0] = scale * (30.0 * x2 * x2 - 96.0 * x2 + 32.0);
            }
            PotentialKind::GaussianWells { stiffness, width, wells } => {
                let w2 = width * width;
                out[0] = *stiffness;
                out[1] = 0.0;
                out[2] = 0.0;
                out[3] = *stiffness;
                for w in wells {
                    let d = [x[0] - w.center[0], x[1] - w.center[1]];
                    let g = w.depth * (-(d[0] * d[0] + d[1] * d[1]) / (2.0 * w2)).exp() / w2;
                    for i in 0..2 {
                        for j in 0..2 {
                            let delta = if i == j { 1.0 } else { 0.0 };
                            out[i * 2 + j] += g * (delta - d[i] * d[j] / w2);
                        }
                    }
                }
            }
            PotentialKind::Polynomial { coeffs } => {
                out[0] = horner(&poly_derivative(&poly_derivative(coeffs)), x[0]);
            }
        }
    }
}

/// Bound on `sup |Hess U|_F` over the reference domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HessianBound {
    pub value: f64,
    /// True when the value was obtained by sampling and is only a lower bound.
    pub estimated: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PotentialModel {
    kind: PotentialKind,
    offset: f64,
    domain: GridBox,
    growth: Option<GrowthConstants>,
    hessian: HessianBound,
    global_min_value: f64,
    global_min_location: Vec<f64>,
}

impl PotentialModel {
    fn assemble(kind: PotentialKind, domain: GridBox, growth: Option<GrowthConstants>, hessian: Option<f64>) -> Self {
        let mut model = Self {
            kind,
            offset: 0.0,
            domain,
            growth,
            hessian: HessianBound { value: 0.0, estimated: false },
            global_min_value: f64::NAN,
            global_min_location: Vec::new(),
        };
        model.hessian = match hessian {
            Some(value) => HessianBound { value, estimated: false },
            None => HessianBound { value: model.sampled_hessian_norm(4096), estimated: true },
        };
        model.locate_global_minimum();
        model
    }

    fn locate_global_minimum(&mut self) {
        let grid = LandscapeGrid::default_for(self);
        let minima = find_local_minima(self, &grid).unwrap_or_default();
        match minima.first() {
            Some(m) => {
                self.global_min_value = m.value;
                self.global_min_location = m.location.clone();
            }
            None => {
                // No interior minimum on the grid: fall back to the lowest node.
                let pts = lattice_points(&self.domain, 20_000);
                let best = pts
                    .into_iter()
                    .map(|p| (self.energy(&p), p))
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .expect("non-empty lattice");
                self.global_min_value = best.0;
                self.global_min_location = best.1;
            }
        }
    }

    /// `k/2 |x|^2` on `[-3, 3]^dim`.
    pub fn quadratic(stiffness: f64, dim: usize) -> Self {
        let growth = (stiffness > 0.0).then_some(GrowthConstants {
            a1: 0.5 * stiffness,
            a2: 0.5 * stiffness,
            m: 0.01,
            r: stiffness * (1.0 - 1e-6),
        });
        Self::assemble(
            PotentialKind::Quadratic { stiffness, dim },
            GridBox::cube(dim, 3.0),
            growth,
            Some(stiffness.abs() * (dim as f64).sqrt()),
        )
    }

    /// `(x^2 - 1)^2 + tilt x` on `[-3, 3]`.
    pub fn tilted_double_well(tilt: f64) -> Self {
        let r_dom: f64 = 3.0;
        let growth = GrowthConstants { a1: 0.5, a2: 8.0, m: 2.0 + r_dom * tilt.abs(), r: 1.0 };
        let hess = (12.0 * r_dom * r_dom - 4.0).abs().max(4.0);
        Self::assemble(PotentialKind::TiltedDoubleWell { tilt }, GridBox::cube(1, r_dom), Some(growth), Some(hess))
    }

    /// `scale x^2 (x^2 - 4)^2 + tilt x` on `[-3, 3]`; three wells near -2, 0, 2.
    pub fn triple_well(scale: f64, tilt: f64) -> Self {
        let r_dom: f64 = 3.0;
        let r2 = r_dom * r_dom;
        let edge = scale * (30.0 * r2 * r2 - 96.0 * r2 + 32.0);
        let hess = edge.abs().max(32.0 * scale).max(44.8 * scale);
        // constants checked for the default parameters only
        let growth = ((scale - 0.1).abs() < 1e-12 && tilt.abs() <= 0.2 + 1e-12).then_some(GrowthConstants {
            a1: 0.5,
            a2: 3.0,
            m: 5.0,
            r: 0.5,
        });
        Self::assemble(PotentialKind::TripleWell { scale, tilt }, GridBox::cube(1, r_dom), growth, Some(hess))
    }

    /// Two Gaussian wells carved into a quadratic bowl; quadratic at infinity.
    pub fn two_well_2d() -> Self {
        let stiffness = 1.0;
        let width: f64 = 0.6;
        let wells =
            vec![GaussianWell { center: [-1.0, 0.0], depth: 2.0 }, GaussianWell { center: [1.1, 0.4], depth: 1.6 }];
        let depth_sum: f64 = wells.iter().map(|w| w.depth).sum();
        let hess = std::f64::consts::SQRT_2 * (stiffness + depth_sum / (width * width));
        Self::assemble(
            PotentialKind::GaussianWells { stiffness, width, wells },
            GridBox::cube(2, 3.0),
            Some(GrowthConstants { a1: 0.5, a2: 0.5, m: 3.0, r: 0.5 }),
            Some(hess),
        )
    }

    /// User-supplied 1-D polynomial on `[-half_width, half_width]`.
    ///
    /// The Hessian bound is estimated by sampling and flagged as such.
    pub fn polynomial(coeffs: Vec<f64>, half_width: f64, growth: Option<GrowthConstants>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Config("polynomial potential needs at least one coefficient".into()));
        }
        if !(half_width > 0.0) {
            return Err(Error::Config("polynomial domain half width must be positive".into()));
        }
        Ok(Self::assemble(PotentialKind::Polynomial { coeffs }, GridBox::cube(1, half_width), growth, None))
    }

    /// Built-in potential selected by name with optional parameters.
    pub fn builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |k: &str, default: f64| params.get(k).copied().unwrap_or(default);
        let allowed: &[&str] = match name {
            "quadratic" => &["stiffness", "dim"],
            "tilted-double-well" => &["tilt"],
            "triple-well" => &["scale", "tilt"],
            "two-well-2d" => &[],
            _ => {
                return Err(Error::Config(format!(
                    "unknown potential '{name}' (expected quadratic, tilted-double-well, triple-well, two-well-2d or polynomial)"
                )))
            }
        };
        if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Config(format!("potential '{name}' has no parameter '{bad}'")));
        }
        Ok(match name {
            "quadratic" => {
                let dim = get("dim", 1.0);
                if dim < 1.0 || dim.fract() != 0.0 {
                    return Err(Error::Config("quadratic dim must be a positive integer".into()));
                }
                Self::quadratic(get("stiffness", 1.0), dim as usize)
            }
            "tilted-double-well" => Self::tilted_double_well(get("tilt", 0.3)),
            "triple-well" => Self::triple_well(get("scale", 0.1), get("tilt", 0.2)),
            _ => Self::two_well_2d(),
        })
    }

    /// Same potential shifted by a constant.
    pub fn with_offset(mut self, offset: f64) -> Self {
        self.global_min_value += offset - self.offset;
        self.offset = offset;
        self
    }

    pub fn with_growth(mut self, growth: Option<GrowthConstants>) -> Self {
        self.growth = growth;
        self
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn domain(&self) -> &GridBox {
        &self.domain
    }

    pub fn growth(&self) -> Option<GrowthConstants> {
        self.growth
    }

    pub fn hessian_bound(&self) -> HessianBound {
        self.hessian
    }

    pub fn global_min_value(&self) -> f64 {
        self.global_min_value
    }

    pub fn global_min_location(&self) -> &[f64] {
        &self.global_min_location
    }

    #[inline]
    pub fn energy(&self, x: &[f64]) -> f64 {
        self.kind.energy(x) + self.offset
    }

    #[inline]
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.kind.gradient(x, out)
    }

    pub fn hessian(&self, x: &[f64], out: &mut [f64]) {
        self.kind.hessian(x, out)
    }

    /// Checked energy evaluation.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(self.energy(x))
    }

    pub fn gradient_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gradient(x, &mut g);
        g
    }

    /// Largest Frobenius norm of the central-difference Hessian over a lattice of the domain.
    pub fn sampled_hessian_norm(&self, n: usize) -> f64 {
        let d = self.dim();
        let h = 1e-4 * (1.0 + self.domain.radius());
        let mut best: f64 = 0.0;
        let mut gp = vec![0.0; d];
        let mut gm = vec![0.0; d];
        for p in lattice_points(&self.domain, n) {
            let mut frob = 0.0;
            for j in 0..d {
                let mut xp = p.clone();
                let mut xm = p.clone();
                xp[j] += h;
                xm[j] -= h;
                self.gradient(&xp, &mut gp);
                self.gradient(&xm, &mut gm);
                for i in 0..d {
                    frob += ((gp[i] - gm[i]) / (2.0 * h)).powi(2);
                }
            }
            best = best.max(frob.sqrt());
        }
        best
    }

    /// Largest gradient norm over a lattice of the domain.
    pub fn gradient_sup_norm(&self, n: usize) -> f64 {
        let mut g = vec![0.0; self.dim()];
        lattice_points(&self.domain, n)
            .iter()
            .map(|p| {
                self.gradient(p, &mut g);
                g.iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub pass: bool,
    /// Tightest slack of the lower bound, the upper bound and the radial drift bound.
    pub worst_margins: [f64; 3],
    pub n_samples: usize,
}

/// Check the quadratic growth inequalities on a lattice of at least `n_samples` points.
pub fn verify_growth(model: &PotentialModel, domain: &GridBox, n_samples: usize) -> Result<GrowthReport> {
    let gc = model.growth().ok_or_else(|| Error::Config("potential has no growth constants".into()))?;
    if n_samples == 0 {
        return Err(Error::Config("verify_growth needs at least one sample".into()));
    }
    if domain.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: domain.dim() });
    }
    let pts = lattice_points(domain, n_samples);
    let mut g = vec![0.0; model.dim()];
    let mut worst = [f64::INFINITY; 3];
    for p in &pts {
        let r2: f64 = p.iter().map(|v| v * v).sum();
        let u = model.energy(p);
        model.gradient(p, &mut g);
        let radial: f64 = g.iter().zip(p).map(|(a, b)| a * b).sum();
        let margins = [u - (gc.a1 * r2 - gc.m), gc.a2 * r2 + gc.m - u, (-gc.r * r2 + gc.m) + radial];
        for (w, m) in worst.iter_mut().zip(margins) {
            *w = w.min(m);
        }
    }
    Ok(GrowthReport { pass: worst.iter().all(|m| *m >= 0.0), worst_margins: worst, n_samples: pts.len() })
}

/// Regular grid used for landscape scans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeGrid {
    pub bounds: GridBox,
    pub spacing: f64,
}

impl LandscapeGrid {
    pub fn new(bounds: GridBox, spacing: f64) -> Self {
        Self { bounds, spacing }
    }

    /// Reference domain at spacing 1e-3 (1-D) or 2e-2 (2-D).
    pub fn default_for(model: &PotentialModel) -> Self {
        let spacing = if model.dim() == 1 { 1e-3 } else { 2e-2 };
        Self::new(model.domain().clone(), spacing)
    }
}

struct Lattice {
    lower: Vec<f64>,
    spacing: f64,
    counts: Vec<usize>,
    values: Vec<f64>,
}

impl Lattice {
    fn build(model: &PotentialModel, grid: &LandscapeGrid) -> Result<Self> {
        if !(grid.spacing > 0.0) {
            return Err(Error::EmptyGrid("spacing must be positive".into()));
        }
        if grid.bounds.dim() != model.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), got: grid.bounds.dim() });
        }
        if model.dim() > 2 {
            return Err(Error::Config("landscape analysis supports dimensions 1 and 2 only".into()));
        }
        let counts: Vec<usize> = grid
            .bounds
            .lower
            .iter()
            .zip(&grid.bounds.upper)
            .map(|(a, b)| if b > a { ((b - a) / grid.spacing + 1e-9).floor() as usize + 1 } else { 0 })
            .collect();
        if counts.iter().any(|&c| c < 3) {
            return Err(Error::EmptyGrid(format!("grid has fewer than 3 nodes along an axis: {counts:?}")));
        }
        let total: usize = counts.iter().product();
        let mut lat =
            Self { lower: grid.bounds.lower.clone(), spacing: grid.spacing, counts, values: Vec::with_capacity(total) };
        let mut x = vec![0.0; model.dim()];
        for idx in 0..total {
            lat.coords_into(idx, &mut x);
            lat.values.push(model.energy(&x));
        }
        Ok(lat)
    }

    fn coords_into(&self, mut idx: usize, out: &mut [f64]) {
        for k in 0..self.counts.len() {
            let i = idx % self.counts[k];
            idx /= self.counts[k];
            out[k] = self.lower[k] + i as f64 * self.spacing;
        }
    }

    fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        self.counts
            .iter()
            .map(|&c| {
                let i = idx % c;
                idx /= c;
                i
            })
            .collect()
    }

    fn flat(&self, mi: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (k, &i) in mi.iter().enumerate() {
            idx += i * stride;
            stride *= self.counts[k];
        }
        idx
    }

    fn on_boundary(&self, idx: usize) -> bool {
        self.multi_index(idx).iter().zip(&self.counts).any(|(&i, &c)| i == 0 || i + 1 == c)
    }

    /// Axis neighbours (2 per dimension at most).
    fn axis_neighbors(&self, idx: usize, out: &mut Vec<usize>) {
        out.clear();
        let mut stride = 1;
        let mi = self.multi_index(idx);
        for (k, &c) in self.counts.iter().enumerate() {
            if mi[k] > 0 {
                out.push(idx - stride);
            }
            if mi[k] + 1 < c {
                out.push(idx + stride);
            }
            stride *= c;
        }
    }

    /// Interior node no higher than any of its 3^d - 1 neighbours.
    fn is_local_min(&self, idx: usize) -> bool {
        if self.on_boundary(idx) {
            return false;
        }
        let v = self.values[idx];
        let mi = self.multi_index(idx);
        let d = mi.len();
        let mut nb = mi.clone();
        for code in 0..3usize.pow(d as u32) {
            let mut c = code;
            let mut is_center = true;
            for k in 0..d {
                let off = (c % 3) as isize - 1;
                c /= 3;
                if off != 0 {
                    is_center = false;
                }
                nb[k] = (mi[k] as isize + off) as usize;
            }
            if !is_center && self.values[self.flat(&nb)] < v {
                return false;
            }
        }
        true
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub location: Vec<f64>,
    pub value: f64,
    pub is_global: bool,
    /// Lattice node the refinement started from.
    #[serde(skip)]
    pub grid_node: usize,
}

/// Gradient descent with Armijo backtracking until `|grad U| < 1e-8`.
pub fn refine_minimum(model: &PotentialModel, start: &[f64]) -> Vec<f64> {
    let d = model.dim();
    let mut x = start.to_vec();
    let mut g = vec![0.0; d];
    let mut trial = vec![0.0; d];
    let mut step: f64 = 1.0;
    let mut gt = vec![0.0; d];
    let mut u = model.energy(&x);
    for _ in 0..200_000 {
        model.gradient(&x, &mut g);
        let gn2: f64 = g.iter().map(|v| v * v).sum();
        if gn2.sqrt() < 1e-8 {
            break;
        }
        step = (step * 2.0).min(1.0);
        loop {
            for k in 0..d {
                trial[k] = x[k] - step * g[k];
            }
            let ut = model.energy(&trial);
            // near the minimum energy differences drown in round-off; fall back to gradient decrease
            let flat = (ut - u).abs() <= 8.0 * f64::EPSILON * u.abs().max(1.0) && {
                model.gradient(&trial, &mut gt);
                gt.iter().map(|v| v * v).sum::<f64>() < gn2
            };
            if ut <= u - 1e-4 * step * gn2 || flat {
                x.copy_from_slice(&trial);
                u = ut;
                break;
            }
            step *= 0.5;
            if step < 1e-30 {
                return x;
            }
        }
    }
    x
}

/// Grid-local minima refined by descent, deduplicated within 10 grid spacings,
/// sorted by increasing value.
pub fn find_local_minima(model: &PotentialModel, grid: &LandscapeGrid) -> Result<Vec<Minimum>> {
    let lat = Lattice::build(model, grid)?;
    find_minima_on(model, &lat)
}

fn find_minima_on(model: &PotentialModel, lat: &Lattice) -> Result<Vec<Minimum>> {
    let d = model.dim();
    let mut x = vec![0.0; d];
    let mut found: Vec<Minimum> = Vec::new();
    for idx in 0..lat.values.len() {
        if lat.is_local_min(idx) {
            lat.coords_into(idx, &mut x);
            let loc = refine_minimum(model, &x);
            let value = model.energy(&loc);
            found.push(Minimum { location: loc, value, is_global: false, grid_node: idx });
        }
    }
    found.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.grid_node.cmp(&b.grid_node)));
    let radius = 10.0 * lat.spacing;
    let mut kept: Vec<Minimum> = Vec::new();
    for m in found {
        let close = kept
            .iter()
            .any(|k| k.location.iter().zip(&m.location).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() < radius);
        if !close {
            kept.push(m);
        }
    }
    if let Some(gmin) = kept.first().map(|m| m.value) {
        for m in &mut kept {
            m.is_global = m.value <= gmin + GLOBAL_VALUE_TOL;
        }
    }
    Ok(kept)
}

/// Total order on heap keys.
#[derive(Clone, Copy, Debug)]
struct Key(f64);
impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Barrier of one non-global minimum: lowest sublevel threshold connecting it to a lower minimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierEstimate {
    pub minimum: Vec<f64>,
    pub minimum_value: f64,
    pub depth: f64,
    pub saddle: Vec<f64>,
    pub saddle_value: f64,
}

fn barrier_from(lat: &Lattice, start: usize, start_value: f64, targets: &[usize]) -> Result<(f64, usize)> {
    let n = lat.values.len();
    let mut best = vec![f64::INFINITY; n];
    let mut arg = vec![usize::MAX; n];
    let mut is_target = vec![false; n];
    for &t in targets {
        is_target[t] = true;
    }
    let mut heap = BinaryHeap::new();
    best[start] = lat.values[start];
    arg[start] = start;
    heap.push(Reverse((Key(best[start]), start)));
    let mut nb = Vec::with_capacity(4);
    while let Some(Reverse((Key(b), node))) = heap.pop() {
        if b > best[node] {
            continue;
        }
        if is_target[node] {
            let saddle = arg[node];
            if lat.on_boundary(saddle) {
                return Err(Error::Unresolved(
                    "lowest connecting path peaks on the grid boundary; enlarge the grid".into(),
                ));
            }
            return Ok((b - start_value, saddle));
        }
        lat.axis_neighbors(node, &mut nb);
        for &m in &nb {
            let v = lat.values[m];
            let (cand, cand_arg) = if v > b { (v, m) } else { (b, arg[node]) };
            if cand < best[m] {
                best[m] = cand;
                arg[m] = cand_arg;
                heap.push(Reverse((Key(cand), m)));
            }
        }
    }
    Err(Error::Unresolved("no lower minimum reachable on the grid".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeAnalysis {
    pub minima: Vec<Minimum>,
    /// Largest barrier among non-global minima; `None` when every minimum is global.
    pub critical_depth: Option<f64>,
    pub barriers: Vec<BarrierEstimate>,
    pub grid_resolution: f64,
}

/// Full landscape scan: minima, per-minimum barriers and the critical depth.
pub fn analyze(model: &PotentialModel, grid: &LandscapeGrid) -> Result<LandscapeAnalysis> {
    let lat = Lattice::build(model, grid)?;
    let minima = find_minima_on(model, &lat)?;
    let mut barriers = Vec::new();
    let mut x = vec![0.0; model.dim()];
    for m in minima.iter().filter(|m| !m.is_global) {
        let targets: Vec<usize> =
            minima.iter().filter(|o| o.value < m.value - GLOBAL_VALUE_TOL).map(|o| o.grid_node).collect();
        let (depth, saddle) = barrier_from(&lat, m.grid_node, m.value, &targets)?;
        lat.coords_into(saddle, &mut x);
        barriers.push(BarrierEstimate {
            minimum: m.location.clone(),
            minimum_value: m.value,
            depth,
            saddle: x.clone(),
            saddle_value: lat.values[saddle],
        });
    }
    let critical_depth = barriers.iter().map(|b| b.depth).reduce(f64::max);
    Ok(LandscapeAnalysis { minima, critical_depth, barriers, grid_resolution: grid.spacing })
}

/// Critical depth `E*` by sublevel flood fill on the grid (axis-neighbour connectivity).
pub fn critical_depth(model: &PotentialModel, grid: &LandscapeGrid) -> Result<Option<f64>> {
    Ok(analyze(model, grid)?.critical_depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_scan(f: impl Fn(f64) -> f64, a: f64, b: f64, h: f64) -> (f64, f64) {
        let n = ((b - a) / h).round() as usize;
        (0..=n)
            .map(|i| {
                let x = a + i as f64 * h;
                (x, f(x))
            })
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let q = PotentialModel::quadratic(2.0, 1);
        assert_eq!(q.evaluate(&[0.0]).unwrap(), 0.0);
        let dw = PotentialModel::tilted_double_well(0.3);
        assert_eq!(dw.evaluate(&[0.0]).unwrap(), 1.0);
        // global minimiser from a dense scan with spacing 1e-4
        let (_, vmin) = dense_scan(|x| (x * x - 1.0).powi(2) + 0.3 * x, -3.0, 3.0, 1e-4);
        assert!((dw.global_min_value() - vmin).abs() < 1e-7);
        assert!(dw.evaluate(dw.global_min_location()).unwrap() <= vmin + 1e-12);
    }

    #[test]
    fn evaluate_rejects_wrong_dimension() {
        let dw = PotentialModel::tilted_double_well(0.3);
        assert!(matches!(dw.evaluate(&[0.0, 1.0]), Err(Error::DimensionMismatch { expected: 1, got: 2 })));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let models = [
            PotentialModel::quadratic(1.5, 2),
            PotentialModel::tilted_double_well(0.3),
            PotentialModel::triple_well(0.1, 0.2),
            PotentialModel::two_well_2d(),
            PotentialModel::polynomial(vec![0.5, -1.0, 0.2, 0.0, 0.1], 3.0, None).unwrap(),
        ];
        for m in &models {
            let d = m.dim();
            for p in crate::sampling::halton_points(m.domain(), 200) {
                let g = m.gradient_vec(&p);
                for k in 0..d {
                    let h = 1e-6;
                    let mut xp = p.clone();
                    let mut xm = p.clone();
                    xp[k] += h;
                    xm[k] -= h;
                    let fd = (m.energy(&xp) - m.energy(&xm)) / (2.0 * h);
                    let scale = g[k].abs().max(1.0);
                    assert!((fd - g[k]).abs() / scale < 1e-5, "{:?} at {p:?}: fd {fd} vs {}", m.kind(), g[k]);
                }
            }
        }
    }

    #[test]
    fn analytic_hessian_bounds_dominate_samples() {
        for m in [
            PotentialModel::quadratic(2.0, 2),
            PotentialModel::tilted_double_well(0.3),
            PotentialModel::triple_well(0.1, 0.2),
            PotentialModel::two_well_2d(),
        ] {
            let hb = m.hessian_bound();
            assert!(!hb.estimated);
            assert!(m.sampled_hessian_norm(10_000) <= hb.value * (1.0 + 1e-6), "{:?}", m.kind());
        }
        let p = PotentialModel::polynomial(vec![0.0, 0.0, 1.0], 2.0, None).unwrap();
        assert!(p.hessian_bound().estimated);
        assert!((p.hessian_bound().value - 2.0).abs() < 1e-4);
    }

    #[test]
    fn growth_examples() {
        let q = PotentialModel::quadratic(2.0, 1).with_growth(Some(GrowthConstants {
            a1: 1.0,
            a2: 1.0,
            m: 0.01,
            r: 2.0 - 1e-6,
        }));
        assert!(verify_growth(&q, &GridBox::cube(1, 5.0), 1000).unwrap().pass);

        // x^4 with a2 = 1 fails the upper bound for every M <= 10 on [-5, 5]
        for m in [0.1, 1.0, 10.0] {
            let quartic = PotentialModel::polynomial(
                vec![0.0, 0.0, 0.0, 0.0, 1.0],
                5.0,
                Some(GrowthConstants { a1: 0.1, a2: 1.0, m, r: 0.1 }),
            )
            .unwrap();
            let rep = verify_growth(&quartic, &GridBox::cube(1, 5.0), 10_000).unwrap();
            assert!(!rep.pass);
            assert!(rep.worst_margins[1] < 0.0);
        }
    }

    #[test]
    fn growth_double_well_matches_exhaustive_oracle() {
        let gc = GrowthConstants { a1: 0.5, a2: 2.0, m: 5.0, r: 1.0 };
        let dw = PotentialModel::tilted_double_well(0.3).with_growth(Some(gc));
        let rep = verify_growth(&dw, &GridBox::cube(1, 5.0), 10_000).unwrap();
        // independent oracle: the same three inequalities on 10^4 evenly spaced points
        let mut ok = true;
        for i in 0..10_000 {
            let x = -5.0 + 10.0 * i as f64 / 9_999.0;
            let u = (x * x - 1.0).powi(2) + 0.3 * x;
            let du = 4.0 * x * (x * x - 1.0) + 0.3;
            ok &= u >= gc.a1 * x * x - gc.m && u <= gc.a2 * x * x + gc.m && -du * x <= -gc.r * x * x + gc.m;
        }
        assert_eq!(rep.pass, ok);
        assert!(!ok, "quartic growth beats 2x^2 + 5 near |x| = 5");
    }

    #[test]
    fn builtin_growth_constants_hold_on_reference_domains() {
        for m in [
            PotentialModel::quadratic(1.0, 2),
            PotentialModel::tilted_double_well(0.3),
            PotentialModel::tilted_double_well(-0.5),
            PotentialModel::triple_well(0.1, 0.2),
            PotentialModel::two_well_2d(),
        ] {
            let rep = verify_growth(&m, &m.domain().clone(), 40_000).unwrap();
            assert!(rep.pass, "{:?}: {:?}", m.kind(), rep.worst_margins);
        }
    }

    #[test]
    fn minima_examples() {
        let q = PotentialModel::quadratic(2.0, 1);
        let mins = find_local_minima(&q, &LandscapeGrid::new(GridBox::cube(1, 2.0), 1e-2)).unwrap();
        assert_eq!(mins.len(), 1);
        assert!(mins[0].location[0].abs() < 1e-8);

        let dw = PotentialModel::tilted_double_well(0.3);
        let mins = find_local_minima(&dw, &LandscapeGrid::new(GridBox::cube(1, 3.0), 1e-3)).unwrap();
        assert_eq!(mins.len(), 2);
        assert!(mins[0].is_global && !mins[1].is_global);
        assert!(mins[0].location[0] < 0.0 && mins[1].location[0] > 0.0);
        // oracle: dense scans restricted to each half line
        let f = |x: f64| (x * x - 1.0).powi(2) + 0.3 * x;
        let (xl, _) = dense_scan(f, -3.0, 0.0, 1e-5);
        let (xr, _) = dense_scan(f, 0.2, 3.0, 1e-5);
        assert!((mins[0].location[0] - xl).abs() < 2e-5);
        assert!((mins[1].location[0] - xr).abs() < 2e-5);
        for m in &mins {
            let g = dw.gradient_vec(&m.location);
            assert!(g[0].abs() < 1e-8);
        }

        let q2 = PotentialModel::quadratic(2.0, 2);
        let mins = find_local_minima(&q2, &LandscapeGrid::new(GridBox::cube(2, 1.0), 0.05)).unwrap();
        assert_eq!(mins.len(), 1);
        assert!(mins[0].location.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn minima_have_no_lower_axis_neighbours() {
        for m in [PotentialModel::triple_well(0.1, 0.2), PotentialModel::two_well_2d()] {
            let grid = LandscapeGrid::default_for(&m);
            for min in find_local_minima(&m, &grid).unwrap() {
                for k in 0..m.dim() {
                    for s in [-1.0, 1.0] {
                        let mut p = min.location.clone();
                        p[k] += s * grid.spacing;
                        assert!(m.energy(&p) >= min.value);
                    }
                }
            }
        }
    }

    #[test]
    fn empty_grid_is_an_error() {
        let q = PotentialModel::quadratic(2.0, 1);
        assert!(matches!(
            find_local_minima(&q, &LandscapeGrid::new(GridBox::cube(1, 1.0), 5.0)),
            Err(Error::EmptyGrid(_))
        ));
        assert!(matches!(
            find_local_minima(&q, &LandscapeGrid::new(GridBox::cube(1, 1.0), 0.0)),
            Err(Error::EmptyGrid(_))
        ));
    }

    /// Barrier between the two wells from a dense 1-D scan between the minima.
    fn double_well_barrier_oracle(tilt: f64) -> f64 {
        let f = |x: f64| (x * x - 1.0).powi(2) + tilt * x;
        let (xl, ul) = dense_scan(f, -3.0, 0.0, 1e-6);
        let (xr, ur) = dense_scan(f, 0.0, 3.0, 1e-6);
        let (_, neg_peak) = dense_scan(|x| -f(x), xl, xr, 1e-6);
        -neg_peak - ul.max(ur)
    }

    #[test]
    fn critical_depth_examples() {
        let q = PotentialModel::quadratic(2.0, 1);
        assert_eq!(critical_depth(&q, &LandscapeGrid::default_for(&q)).unwrap(), None);

        let dw = PotentialModel::tilted_double_well(0.3);
        let e = critical_depth(&dw, &LandscapeGrid::new(GridBox::cube(1, 3.0), 1e-3)).unwrap().unwrap();
        let oracle = double_well_barrier_oracle(0.3);
        assert!((e - oracle).abs() < 1e-5, "{e} vs {oracle}");

        let sym = PotentialModel::tilted_double_well(0.0);
        assert_eq!(critical_depth(&sym, &LandscapeGrid::new(GridBox::cube(1, 3.0), 1e-3)).unwrap(), None);
    }

    #[test]
    fn critical_depth_converges_under_refinement() {
        for m in [PotentialModel::tilted_double_well(0.3), PotentialModel::triple_well(0.1, 0.2)] {
            let depths: Vec<f64> = [4e-2, 2e-2, 1e-2, 5e-3]
                .iter()
                .map(|&h| critical_depth(&m, &LandscapeGrid::new(m.domain().clone(), h)).unwrap().unwrap())
                .collect();
            let reference = critical_depth(&m, &LandscapeGrid::new(m.domain().clone(), 1e-3)).unwrap().unwrap();
            for (pair, h) in depths.windows(2).zip([4e-2, 2e-2, 1e-2]) {
                assert!((pair[1] - pair[0]).abs() <= h, "{depths:?}");
            }
            // grid saddles sit within h of the true one, so the error is O(h^2)
            for (d, h) in depths.iter().zip([4e-2, 2e-2, 1e-2, 5e-3]) {
                assert!((d - reference).abs() <= 10.0 * h * h, "{depths:?} vs {reference}");
            }
        }
    }

    #[test]
    fn critical_depth_ignores_constant_shift() {
        let grid = LandscapeGrid::new(GridBox::cube(1, 3.0), 1e-3);
        let a = PotentialModel::triple_well(0.1, 0.2);
        let b = PotentialModel::triple_well(0.1, 0.2).with_offset(7.25);
        let ea = critical_depth(&a, &grid).unwrap().unwrap();
        let eb = critical_depth(&b, &grid).unwrap().unwrap();
        assert!((ea - eb).abs() < 1e-9);
    }

    #[test]
    fn raising_the_global_floor_swaps_roles() {
        // Flipping the tilt raises the left floor above the right one.
        let grid = LandscapeGrid::new(GridBox::cube(1, 3.0), 1e-3);
        let left = analyze(&PotentialModel::tilted_double_well(0.3), &grid).unwrap();
        let right = analyze(&PotentialModel::tilted_double_well(-0.3), &grid).unwrap();
        assert!(left.barriers[0].minimum[0] > 0.0);
        assert!(right.barriers[0].minimum[0] < 0.0);
        assert!((left.critical_depth.unwrap() - double_well_barrier_oracle(0.3)).abs() < 1e-5);
        assert!((right.critical_depth.unwrap() - double_well_barrier_oracle(-0.3)).abs() < 1e-5);
    }

    #[test]
    fn coarse_box_is_unresolved() {
        // Box cuts through the saddle region: the connecting path peaks on the boundary.
        let dw = PotentialModel::tilted_double_well(0.3);
        let grid = LandscapeGrid::new(GridBox::new(vec![-1.5], vec![0.05]), 1e-3);
        let res = analyze(&dw, &grid);
        assert!(res.map(|a| a.critical_depth.is_none()).unwrap_or(true));
    }

    #[test]
    fn two_dimensional_landscape() {
        let m = PotentialModel::two_well_2d();
        let a = analyze(&m, &LandscapeGrid::default_for(&m)).unwrap();
        assert_eq!(a.minima.len(), 2);
        assert!(a.critical_depth.unwrap() > 0.0);
        let sub = analyze(&m, &LandscapeGrid::new(m.domain().clone(), 1e-2)).unwrap();
        assert!((sub.critical_depth.unwrap() - a.critical_depth.unwrap()).abs() < 2e-2);
    }
}

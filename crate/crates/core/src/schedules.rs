//! Cooling schedules `eps_t`, variance maps `sigma(eps)` and their admissibility checks.

use serde::{Deserialize, Serialize};

use crate::sampling::log_spaced;
use crate::{Error, Result};

fn default_offset() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum CoolingSchedule {
    /// `eps_t = E / (A + ln(1 + t))`.
    Logarithmic {
        #[serde(rename = "E")]
        energy: f64,
        #[serde(rename = "A", default = "default_offset")]
        offset: f64,
    },
    Constant {
        value: f64,
    },
    /// `(t, eps)` nodes joined by straight lines in `ln eps`; constant past the last node.
    Table {
        times: Vec<f64>,
        values: Vec<f64>,
        /// Cooling energy the table claims to respect.
        #[serde(rename = "E")]
        energy: f64,
    },
}

impl CoolingSchedule {
    pub fn logarithmic(energy: f64) -> Self {
        CoolingSchedule::Logarithmic { energy, offset: 1.0 }
    }

    pub fn constant(value: f64) -> Self {
        CoolingSchedule::Constant { value }
    }

    pub fn table(times: Vec<f64>, values: Vec<f64>, energy: f64) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(Error::Config("schedule table needs matching, non-empty times and values".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("schedule table times must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Config("schedule table values must be positive".into()));
        }
        Ok(CoolingSchedule::Table { times, values, energy })
    }

    /// Structural checks on parameters.
    pub fn check(&self) -> Result<()> {
        match self {
            CoolingSchedule::Logarithmic { energy, offset } => {
                if !(*energy > 0.0) || !(*offset > 0.0) {
                    return Err(Error::Config("logarithmic schedule needs E > 0 and A > 0".into()));
                }
            }
            CoolingSchedule::Constant { value } => {
                if !(*value > 0.0) {
                    return Err(Error::Config("constant schedule needs a positive value".into()));
                }
            }
            CoolingSchedule::Table { times, values, energy } => {
                Self::table(times.clone(), values.clone(), *energy)?;
            }
        }
        Ok(())
    }

    /// Cooling energy `E`; infinite for a constant schedule.
    pub fn energy(&self) -> f64 {
        match self {
            CoolingSchedule::Logarithmic { energy, .. } | CoolingSchedule::Table { energy, .. } => *energy,
            CoolingSchedule::Constant { .. } => f64::INFINITY,
        }
    }

    pub fn eps0(&self) -> f64 {
        self.epsilon_at(0.0)
    }

    fn segment(times: &[f64], t: f64) -> Option<usize> {
        if t <= times[0] || t >= times[times.len() - 1] {
            return None;
        }
        Some(times.partition_point(|&s| s <= t) - 1)
    }

    #[inline]
    pub fn epsilon_at(&self, t: f64) -> f64 {
        match self {
            CoolingSchedule::Logarithmic { energy, offset } => energy / (offset + t.ln_1p()),
            CoolingSchedule::Constant { value } => *value,
            CoolingSchedule::Table { times, values, .. } => match Self::segment(times, t) {
                None if t <= times[0] => values[0],
                None => values[values.len() - 1],
                Some(i) => {
                    let w = (t - times[i]) / (times[i + 1] - times[i]);
                    values[i] * (values[i + 1] / values[i]).powf(w)
                }
            },
        }
    }

    /// Analytic `d eps / dt`.
    pub fn epsilon_rate(&self, t: f64) -> f64 {
        match self {
            CoolingSchedule::Logarithmic { energy, offset } => {
                let den = offset + t.ln_1p();
                -energy / (den * den * (1.0 + t))
            }
            CoolingSchedule::Constant { .. } => 0.0,
            CoolingSchedule::Table { times, values, .. } => match Self::segment(times, t) {
                None => 0.0,
                Some(i) => {
                    let slope = (values[i + 1] / values[i]).ln() / (times[i + 1] - times[i]);
                    slope * self.epsilon_at(t)
                }
            },
        }
    }

    /// `d/dt (1 / eps_t)`.
    pub fn inverse_rate(&self, t: f64) -> f64 {
        let e = self.epsilon_at(t);
        -self.epsilon_rate(t) / (e * e)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum VarianceForm {
    /// `sigma(eps) = eps`.
    Identity,
    /// `sigma(eps) = l eps + offset`.
    Affine {
        offset: f64,
    },
    Constant {
        value: f64,
    },
}

/// `sigma(eps)` together with the slope `l` of the lower bound `sigma(eps) >= l eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceMap {
    #[serde(flatten)]
    pub form: VarianceForm,
    pub l: f64,
}

impl VarianceMap {
    pub fn identity() -> Self {
        Self { form: VarianceForm::Identity, l: 1.0 }
    }

    #[inline]
    pub fn sigma(&self, eps: f64) -> f64 {
        match self.form {
            VarianceForm::Identity => eps,
            VarianceForm::Affine { offset } => self.l * eps + offset,
            VarianceForm::Constant { value } => value,
        }
    }

    pub fn dsigma(&self, _eps: f64) -> f64 {
        match self.form {
            VarianceForm::Identity => 1.0,
            VarianceForm::Affine { .. } => self.l,
            VarianceForm::Constant { .. } => 0.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.l > 0.0) {
            return Err(Error::Config("variance map needs l > 0".into()));
        }
        match self.form {
            VarianceForm::Affine { offset } if offset < 0.0 => {
                Err(Error::Config("affine variance map needs a nonnegative offset".into()))
            }
            VarianceForm::Constant { value } if !(value > 0.0) => {
                Err(Error::Config("constant variance map needs a positive value".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub admissible: bool,
    pub violations: Vec<String>,
    pub n_checks: usize,
    pub horizon: f64,
    pub note: String,
}

/// Sanity gate on a finite grid: `E > E*`, `(1/eps)' <= 1/(E t)` on `[1, horizon]`,
/// monotonicity of `eps` and `sigma(eps) >= l eps`.
pub fn validate(s: &CoolingSchedule, v: &VarianceMap, e_star: f64, horizon: f64, n_checks: usize) -> Certificate {
    let mut violations = Vec::new();
    let energy = s.energy();
    if !(energy > e_star) {
        violations.push(format!("E <= E_*: E = {energy}, E_* = {e_star}"));
    }
    let n = n_checks.max(2);
    let ts: Vec<f64> = if horizon > 1.0 { log_spaced(1.0, horizon, n) } else { vec![1.0] };

    if let Some(&t) = ts.iter().find(|&&t| s.inverse_rate(t) > (1.0 + 1e-12) / (energy * t)) {
        violations.push(format!(
            "(1/eps)' > 1/(E t) at t = {t:.6e}: {:.6e} > {:.6e}",
            s.inverse_rate(t),
            1.0 / (energy * t)
        ));
    }

    let mut grid = vec![0.0];
    grid.extend_from_slice(&ts);
    let eps: Vec<f64> = grid.iter().map(|&t| s.epsilon_at(t)).collect();
    if let Some(i) = (1..grid.len()).find(|&i| eps[i] > eps[i - 1] || s.epsilon_rate(grid[i]) > 0.0) {
        violations.push(format!("eps increases near t = {:.6e}", grid[i]));
    }
    if let Some(e) = eps.iter().find(|&&e| !(e > 0.0)) {
        violations.push(format!("eps not positive: {e}"));
    }
    if let Some((t, e)) = grid.iter().zip(&eps).find(|(_, &e)| v.sigma(e) < v.l * e * (1.0 - 1e-12)) {
        violations.push(format!(
            "sigma(eps) < l eps at t = {t:.6e}: sigma = {:.6e}, l eps = {:.6e}",
            v.sigma(*e),
            v.l * e
        ));
    }

    Certificate {
        admissible: violations.is_empty(),
        violations,
        n_checks: grid.len(),
        horizon,
        note: "conditions checked on a finite log-spaced grid starting at t = 1; not a proof".into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Decreasing,
    Flat,
    Increasing,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    /// `(eps, eps ln f(eps))` along the grid.
    pub values: Vec<(f64, f64)>,
    /// Largest `|eps ln f|` over the second half of the grid.
    pub tail_max: f64,
    /// Trend of `|eps ln f|` as eps decreases.
    pub trend: Trend,
}

/// Tabulate `eps ln f(eps)` on a decreasing grid. Diagnostic only.
pub fn subexponential_probe(f: impl Fn(f64) -> f64, eps_grid: &[f64]) -> Result<ProbeReport> {
    if eps_grid.is_empty() || eps_grid.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Config("probe grid must be non-empty and positive".into()));
    }
    if eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("probe grid must be strictly decreasing".into()));
    }
    let mut values = Vec::with_capacity(eps_grid.len());
    for &e in eps_grid {
        let fv = f(e);
        if !(fv > 0.0) || !fv.is_finite() {
            return Err(Error::Numerical(format!("probe function is not positive and finite at eps = {e}: {fv}")));
        }
        values.push((e, e * fv.ln()));
    }
    let mags: Vec<f64> = values.iter().map(|v| v.1.abs()).collect();
    let scale = mags.iter().fold(1.0f64, |a, b| a.max(*b));
    let tol = 1e-9 * scale;
    let diffs: Vec<f64> = mags.windows(2).map(|w| w[1] - w[0]).collect();
    let trend = if diffs.iter().all(|d| d.abs() <= tol) {
        Trend::Flat
    } else if diffs.iter().all(|d| *d <= tol) {
        Trend::Decreasing
    } else if diffs.iter().all(|d| *d >= -tol) {
        Trend::Increasing
    } else {
        Trend::Mixed
    };
    let tail_max = mags[mags.len() / 2..].iter().fold(0.0f64, |a, b| a.max(*b));
    Ok(ProbeReport { values, tail_max, trend })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn epsilon_examples() {
        let s = CoolingSchedule::logarithmic(2.0);
        assert_eq!(s.epsilon_at(0.0), 2.0);
        assert!((s.epsilon_at(std::f64::consts::E - 1.0) - 1.0).abs() < 1e-15);
        let c = CoolingSchedule::constant(0.5);
        assert_eq!(c.epsilon_at(0.0), 0.5);
        assert_eq!(c.epsilon_at(1e7), 0.5);
    }

    #[test]
    fn validate_examples() {
        let id = VarianceMap::identity();
        let ok = validate(&CoolingSchedule::logarithmic(2.0), &id, 1.5, 1e6, 200);
        assert!(ok.admissible, "{:?}", ok.violations);
        let bad = validate(&CoolingSchedule::logarithmic(1.0), &id, 1.5, 1e6, 200);
        assert!(!bad.admissible);
        assert!(bad.violations[0].starts_with("E <= E_*"));
    }

    #[test]
    fn fast_table_schedule_is_caught() {
        // eps_t = 2/(1+t) tabulated densely; closed form (1/eps)' = 1/2 exceeds 1/(2t) for t > 1.
        let times: Vec<f64> = (0..=4000).map(|i| i as f64 * 0.25).collect();
        let values: Vec<f64> = times.iter().map(|t| 2.0 / (1.0 + t)).collect();
        let s = CoolingSchedule::table(times, values, 2.0).unwrap();
        for t in [1.5, 10.0, 300.0] {
            // the interpolant's derivative stays within a few percent of the closed form
            assert!((s.inverse_rate(t) - 0.5).abs() < 0.06, "{}", s.inverse_rate(t));
        }
        let cert = validate(&s, &VarianceMap::identity(), 1.0, 1000.0, 100);
        assert!(!cert.admissible);
        assert!(cert.violations.iter().any(|v| v.starts_with("(1/eps)'")));
    }

    #[test]
    fn variance_lower_bound_is_checked() {
        let v = VarianceMap { form: VarianceForm::Constant { value: 0.1 }, l: 1.0 };
        let cert = validate(&CoolingSchedule::logarithmic(2.0), &v, 1.0, 100.0, 20);
        assert!(cert.violations.iter().any(|s| s.starts_with("sigma(eps) < l eps")));
        let aff = VarianceMap { form: VarianceForm::Affine { offset: 0.2 }, l: 0.5 };
        assert!(validate(&CoolingSchedule::logarithmic(2.0), &aff, 1.0, 100.0, 20).admissible);
    }

    #[test]
    fn probe_examples() {
        let grid: Vec<f64> = (1..=6).map(|k| 10f64.powi(-k)).collect();
        let a = subexponential_probe(|e| 1.0 / e, &grid).unwrap();
        assert_eq!(a.trend, Trend::Decreasing);
        assert!(a.values.last().unwrap().1 < 1e-4);
        let b = subexponential_probe(|e| (1.0 / e).exp(), &[0.5, 0.2, 0.1, 0.05, 0.02, 0.01]).unwrap();
        assert_eq!(b.trend, Trend::Flat);
        assert!(b.values.iter().all(|v| (v.1 - 1.0).abs() < 1e-12));
        let id = VarianceMap::identity();
        let c = subexponential_probe(|e| id.sigma(e) / e, &grid).unwrap();
        assert!(c.values.iter().all(|v| v.1 == 0.0));
        assert!(subexponential_probe(|_| 0.0, &grid).is_err());
        assert!(subexponential_probe(|_| 1.0, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let s = CoolingSchedule::logarithmic(1.2);
        let txt = serde_json::to_string(&s).unwrap();
        assert_eq!(txt, r#"{"form":"logarithmic","E":1.2,"A":1.0}"#);
        assert_eq!(serde_json::from_str::<CoolingSchedule>(r#"{"form":"logarithmic","E":1.2}"#).unwrap(), s);
        let v = VarianceMap { form: VarianceForm::Affine { offset: 0.1 }, l: 0.5 };
        let back: VarianceMap = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back, v);
    }

    proptest! {
        #[test]
        fn logarithmic_is_non_increasing(e in 0.05f64..10.0, t in 0.0f64..1e8, dt in 0.0f64..1e3) {
            let s = CoolingSchedule::logarithmic(e);
            prop_assert!(s.epsilon_at(t + dt) <= s.epsilon_at(t));
            prop_assert!(s.epsilon_at(t) >= e / (1.0 + t.ln_1p()));
            // (1/eps)' = 1/(E(1+t)) <= 1/(E t)
            prop_assert!(s.inverse_rate(t) <= 1.0 / (e * (1.0 + t)) * (1.0 + 1e-12));
        }

        #[test]
        fn admissible_iff_energy_exceeds_depth(e in 0.1f64..5.0, e_star in 0.0f64..5.0) {
            let cert = validate(&CoolingSchedule::logarithmic(e), &VarianceMap::identity(), e_star, 1e5, 50);
            prop_assert_eq!(cert.admissible, e > e_star);
        }
    }
}

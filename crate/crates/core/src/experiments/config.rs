//! TOML experiment configuration with defaults for every field.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annealer::{Dynamics, InitSpec, IntegratorConfig, Scheme};
use crate::error::{Error, Result};
use crate::fokker_planck::{DecayInit, PhaseGrid};
use crate::potentials::{GrowthConstants, PotentialModel};
use crate::schedules::{CoolingSchedule, VarianceMap};

pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub potential: PotentialSpec,
    /// Schedule for single-schedule commands; `None` means logarithmic with `E = c_slow E*`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<CoolingSchedule>,
    pub variance: VarianceMap,
    pub integrator: IntegratorSpec,
    pub ensemble: EnsembleSpec,
    pub dichotomy: DichotomySpec,
    pub fokker_planck: FokkerPlanckSpec,
    pub gamma: GammaSpec,
    pub lyapunov: LyapunovSpec,
    pub output: OutputSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: DEFAULT_SEED,
            potential: PotentialSpec::default(),
            schedule: None,
            variance: VarianceMap::identity(),
            integrator: IntegratorSpec::default(),
            ensemble: EnsembleSpec::default(),
            dichotomy: DichotomySpec::default(),
            fokker_planck: FokkerPlanckSpec::default(),
            gamma: GammaSpec::default(),
            lyapunov: LyapunovSpec::default(),
            output: OutputSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialSpec {
    /// `quadratic`, `tilted-double-well`, `triple-well`, `two-well-2d` or `polynomial`.
    pub name: String,
    /// Unset parameters take the built-in defaults (tilt 0.3 for the double well).
    pub params: BTreeMap<String, f64>,
    /// Polynomial coefficients, lowest degree first.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthConstants>,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self {
            name: "tilted-double-well".into(),
            params: BTreeMap::new(),
            coeffs: None,
            half_width: None,
            growth: None,
        }
    }
}

impl PotentialSpec {
    pub fn build(&self) -> Result<PotentialModel> {
        if self.name == "polynomial" {
            let coeffs =
                self.coeffs.clone().ok_or_else(|| Error::Config("polynomial potential needs `coeffs`".into()))?;
            return PotentialModel::polynomial(coeffs, self.half_width.unwrap_or(3.0), self.growth);
        }
        if self.coeffs.is_some() || self.half_width.is_some() {
            return Err(Error::Config(format!(
                "`coeffs` and `half_width` only apply to polynomial, not {}",
                self.name
            )));
        }
        let model = PotentialModel::builtin(&self.name, &self.params)?;
        Ok(match self.growth {
            Some(g) => model.with_growth(Some(g)),
            None => model,
        })
    }
}

/// Integrator settings; unset fields take the model-dependent defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence_radius: Option<f64>,
}

impl IntegratorSpec {
    pub fn resolve(
        &self,
        model: &PotentialModel,
        sched: &CoolingSchedule,
        var: &VarianceMap,
    ) -> Result<IntegratorConfig> {
        let mut cfg = IntegratorConfig::default_for(model, sched, var);
        if let Some(s) = self.scheme {
            cfg.scheme = s;
        }
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(r) = self.divergence_radius {
            cfg.divergence_radius = r;
        }
        cfg.check(model)?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSpec {
    pub n: usize,
    pub t_final: f64,
    /// Number of log-spaced evaluation times in `[t_first, t_final]`.
    pub n_eval: usize,
    pub t_first: f64,
    /// Success threshold above `min U`; default `0.1 (U(trap) - min U)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub init: InitSpec,
    pub dynamics: Dynamics,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            n: 400,
            t_final: 1e5,
            n_eval: 26,
            t_first: 1.0,
            delta: None,
            init: InitSpec::default(),
            dynamics: Dynamics::Kinetic,
        }
    }
}

impl EnsembleSpec {
    pub fn eval_times(&self) -> Result<Vec<f64>> {
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::Config(format!("t_final must be positive and finite, got {}", self.t_final)));
        }
        if self.n_eval == 0 {
            return Err(Error::Config("n_eval must be at least 1".into()));
        }
        if self.n_eval == 1 {
            return Ok(vec![self.t_final]);
        }
        if !(self.t_first > 0.0 && self.t_first < self.t_final) {
            return Err(Error::Config(format!("t_first must lie in (0, t_final), got {}", self.t_first)));
        }
        let mut ts = crate::sampling::log_spaced(self.t_first, self.t_final, self.n_eval);
        // pin the end exactly so the final success is evaluated at t_final
        *ts.last_mut().expect("n_eval >= 2") = self.t_final;
        Ok(ts)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DichotomySpec {
    pub c_slow: f64,
    pub c_fast: f64,
    /// Slow arm must reach this final success rate.
    pub slow_target: f64,
    /// Fast arm must trail the slow arm by at least this much.
    pub gap: f64,
}

impl Default for DichotomySpec {
    fn default() -> Self {
        Self { c_slow: 1.5, c_fast: 0.4, slow_target: 0.9, gap: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FokkerPlanckSpec {
    pub t_final: f64,
    pub t_first: f64,
    pub n_checkpoints: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    pub init: DecayInit,
    /// Fixed PDE step; automatic when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl Default for FokkerPlanckSpec {
    fn default() -> Self {
        Self { t_final: 1e4, t_first: 1.0, n_checkpoints: 20, nx: None, ny: None, init: DecayInit::default(), dt: None }
    }
}

impl FokkerPlanckSpec {
    pub fn grid(&self, model: &PotentialModel, var: &VarianceMap, eps0: f64) -> Result<PhaseGrid> {
        let g = PhaseGrid::default_for(model, var, eps0)?;
        PhaseGrid::new(g.x_min, g.x_max, g.y_min, g.y_max, self.nx.unwrap_or(g.nx), self.ny.unwrap_or(g.ny))
    }

    pub fn checkpoints(&self) -> Result<Vec<f64>> {
        if self.n_checkpoints == 0 || !(self.t_first > 0.0) || !(self.t_final >= self.t_first) {
            return Err(Error::Config("fokker_planck needs n_checkpoints >= 1 and 0 < t_first <= t_final".into()));
        }
        if self.n_checkpoints == 1 {
            return Ok(vec![self.t_final]);
        }
        if !(self.t_first < self.t_final) {
            return Err(Error::Config("fokker_planck needs t_first < t_final for two or more checkpoints".into()));
        }
        let mut ts = crate::sampling::log_spaced(self.t_first, self.t_final, self.n_checkpoints);
        *ts.last_mut().expect("two or more checkpoints") = self.t_final;
        Ok(ts)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaSpec {
    pub eps: Vec<f64>,
    pub n_functions: usize,
    /// Oscillations of the random test functions across the box, per axis.
    pub max_periods: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
}

impl Default for GammaSpec {
    fn default() -> Self {
        Self { eps: vec![1.0, 0.5], n_functions: 20, max_periods: 1.5, nx: None, ny: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovSpec {
    pub eps: Vec<f64>,
    pub n_points: usize,
    /// Velocity half-width of the sampled box.
    pub y_width: f64,
}

impl Default for LyapunovSpec {
    fn default() -> Self {
        Self { eps: vec![1.0, 0.5, 0.1], n_points: 4096, y_width: 4.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(format!("invalid configuration: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read configuration {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialise configuration: {e}")))
    }

    /// SHA-256 of the canonical JSON form, output location excluded.
    pub fn hash(&self) -> String {
        let mut semantic = self.clone();
        semantic.output = OutputSpec::default();
        // serde_json maps are ordered by key, so this is canonical
        let value = serde_json::to_value(&semantic).expect("configuration serialises");
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

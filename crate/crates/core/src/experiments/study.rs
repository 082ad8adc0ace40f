//! Orchestration of the slow/fast cooling study and the kinetic-vs-overdamped comparison.

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::annealer::{run_ensemble, run_trial, Dynamics, EnsembleReport, Initializer, TrialReport, TrialSetup};
use crate::error::{Error, Result};
use crate::potentials::{analyze, LandscapeGrid, PotentialModel};
use crate::rng::NoiseStream;
use crate::schedules::CoolingSchedule;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub version: String,
    pub config_hash: String,
}

impl Fingerprint {
    pub fn of(cfg: &ExperimentConfig) -> Self {
        Self { version: env!("CARGO_PKG_VERSION").to_string(), config_hash: cfg.hash() }
    }
}

/// Critical depth, or a configuration error naming the missing-minimum assumption.
pub fn require_critical_depth(model: &PotentialModel) -> Result<f64> {
    analyze(model, &LandscapeGrid::default_for(model))?.critical_depth.ok_or_else(|| {
        Error::Config(
            "potential has no non-global minimum; the cooling dichotomy assumes at least one non-global minimum".into(),
        )
    })
}

/// `0.1 (U(trapping minimum) - min U)`.
pub fn default_delta(model: &PotentialModel) -> Result<f64> {
    let a = analyze(model, &LandscapeGrid::default_for(model))?;
    let trap = a.barriers.iter().max_by(|p, q| p.depth.total_cmp(&q.depth)).ok_or_else(|| {
        Error::Config("no non-global minimum to derive delta from; set ensemble.delta explicitly".into())
    })?;
    Ok(0.1 * (trap.minimum_value - model.global_min_value()))
}

/// The configured schedule, else logarithmic with `E = c_slow E*`.
pub fn resolve_schedule(cfg: &ExperimentConfig, e_star: Option<f64>) -> Result<CoolingSchedule> {
    let sched = match &cfg.schedule {
        Some(s) => s.clone(),
        None => {
            let e = e_star.ok_or_else(|| {
                Error::Config("no schedule given and the potential has no critical depth to scale one from".into())
            })?;
            CoolingSchedule::logarithmic(cfg.dichotomy.c_slow * e)
        }
    };
    sched.check()?;
    Ok(sched)
}

/// Context shared by the commands: the built model and the resolved schedule and threshold.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub model: PotentialModel,
    pub e_star: Option<f64>,
    pub sched: CoolingSchedule,
    pub delta: f64,
    pub eval_times: Vec<f64>,
}

impl Resolved {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let model = cfg.potential.build()?;
        cfg.variance.check()?;
        let e_star = analyze(&model, &LandscapeGrid::default_for(&model))?.critical_depth;
        let sched = resolve_schedule(cfg, e_star)?;
        let delta = match cfg.ensemble.delta {
            Some(d) => d,
            None => default_delta(&model)?,
        };
        Ok(Self { model, e_star, sched, delta, eval_times: cfg.ensemble.eval_times()? })
    }
}

fn ensemble_for(
    cfg: &ExperimentConfig,
    r: &Resolved,
    sched: &CoolingSchedule,
    dynamics: Dynamics,
) -> Result<EnsembleReport> {
    if cfg.ensemble.n == 0 {
        return Err(Error::Config("ensemble.n must be at least 1".into()));
    }
    let icfg = cfg.integrator.resolve(&r.model, sched, &cfg.variance)?;
    let init = Initializer::new(&cfg.ensemble.init, &r.model, sched, &cfg.variance)?;
    let setup = TrialSetup {
        model: &r.model,
        sched,
        var: &cfg.variance,
        cfg: &icfg,
        dynamics,
        t_final: cfg.ensemble.t_final,
        delta: r.delta,
        checkpoints: &r.eval_times,
    };
    run_ensemble(cfg.ensemble.n, &init, &setup, cfg.master_seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRun {
    pub fingerprint: Fingerprint,
    pub e_star: Option<f64>,
    pub schedule: CoolingSchedule,
    pub report: EnsembleReport,
}

/// One ensemble under the configured schedule and dynamics.
pub fn run_configured_ensemble(cfg: &ExperimentConfig) -> Result<EnsembleRun> {
    let r = Resolved::new(cfg)?;
    let report = ensemble_for(cfg, &r, &r.sched, cfg.ensemble.dynamics)?;
    Ok(EnsembleRun { fingerprint: Fingerprint::of(cfg), e_star: r.e_star, schedule: r.sched, report })
}

/// A single trajectory (trial 0 of the master seed) checkpointed at the evaluation times.
pub fn run_single_trial(cfg: &ExperimentConfig) -> Result<TrialReport> {
    let r = Resolved::new(cfg)?;
    let icfg = cfg.integrator.resolve(&r.model, &r.sched, &cfg.variance)?;
    let init = Initializer::new(&cfg.ensemble.init, &r.model, &r.sched, &cfg.variance)?;
    let setup = TrialSetup {
        model: &r.model,
        sched: &r.sched,
        var: &cfg.variance,
        cfg: &icfg,
        dynamics: cfg.ensemble.dynamics,
        t_final: cfg.ensemble.t_final,
        delta: r.delta,
        checkpoints: &r.eval_times,
    };
    setup.check()?;
    let mut noise = NoiseStream::new(cfg.master_seed, 0);
    let start = init.sample(&mut noise);
    Ok(run_trial(start, &setup, &mut noise, 0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The start already lies in the success set, so nothing is tested.
    UninformativeInit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    pub slow_converges: Verdict,
    pub fast_traps: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub c: f64,
    pub energy: f64,
    pub dt: f64,
    pub ensemble: EnsembleReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub fingerprint: Fingerprint,
    pub e_star: f64,
    pub delta: f64,
    pub init_position: Vec<f64>,
    pub init_energy: f64,
    pub slow_target: f64,
    pub gap: f64,
    pub slow: ArmReport,
    pub fast: ArmReport,
    pub verdicts: Verdicts,
}

impl StudyReport {
    /// Verdicts from the stored numbers alone.
    pub fn derive_verdicts(&self) -> Verdicts {
        if self.init_energy <= self.slow.ensemble.threshold {
            return Verdicts { slow_converges: Verdict::UninformativeInit, fast_traps: Verdict::UninformativeInit };
        }
        let pass = |b: bool| if b { Verdict::Pass } else { Verdict::Fail };
        let (ps, pf) = (self.slow.ensemble.final_p_hat(), self.fast.ensemble.final_p_hat());
        let (slow_lo, _) = self.slow.ensemble.final_interval();
        let (_, fast_hi) = self.fast.ensemble.final_interval();
        Verdicts {
            slow_converges: pass(ps >= self.slow_target),
            fast_traps: pass(pf <= ps - self.gap && fast_hi < slow_lo),
        }
    }
}

/// Two ensembles from the same start: `E = c_slow E*` and `E = c_fast E*`.
pub fn run_dichotomy_study(cfg: &ExperimentConfig) -> Result<StudyReport> {
    if cfg.ensemble.n == 0 {
        return Err(Error::Config("ensemble.n must be at least 1".into()));
    }
    let model = cfg.potential.build()?;
    let e_star = require_critical_depth(&model)?;
    let d = &cfg.dichotomy;
    if !(d.c_slow > 1.0 && d.c_fast > 0.0 && d.c_fast < 1.0) {
        return Err(Error::Config(format!(
            "need c_slow > 1 and 0 < c_fast < 1, got c_slow = {}, c_fast = {}",
            d.c_slow, d.c_fast
        )));
    }
    let delta = match cfg.ensemble.delta {
        Some(v) => v,
        None => default_delta(&model)?,
    };
    let r = Resolved {
        model,
        e_star: Some(e_star),
        sched: CoolingSchedule::logarithmic(d.c_slow * e_star),
        delta,
        eval_times: cfg.ensemble.eval_times()?,
    };
    let arm = |c: f64| -> Result<ArmReport> {
        let sched = CoolingSchedule::logarithmic(c * e_star);
        let dt = cfg.integrator.resolve(&r.model, &sched, &cfg.variance)?.dt;
        Ok(ArmReport { c, energy: c * e_star, dt, ensemble: ensemble_for(cfg, &r, &sched, cfg.ensemble.dynamics)? })
    };
    let slow = arm(d.c_slow)?;
    let fast = arm(d.c_fast)?;
    let init = Initializer::new(&cfg.ensemble.init, &r.model, &r.sched, &cfg.variance)?;
    let init_position = init.position().to_vec();
    let mut report = StudyReport {
        fingerprint: Fingerprint::of(cfg),
        e_star,
        delta,
        init_energy: r.model.energy(&init_position),
        init_position,
        slow_target: d.slow_target,
        gap: d.gap,
        slow,
        fast,
        verdicts: Verdicts { slow_converges: Verdict::Fail, fast_traps: Verdict::Fail },
    };
    report.verdicts = report.derive_verdicts();
    Ok(report)
}

/// Descriptive only: no ordering between the two dynamics is asserted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub fingerprint: Fingerprint,
    pub e_star: Option<f64>,
    pub schedule: CoolingSchedule,
    pub delta: f64,
    pub kinetic: EnsembleReport,
    pub overdamped: EnsembleReport,
}

/// Same schedule, seeds and start for the kinetic and the overdamped dynamics.
pub fn run_baseline_comparison(cfg: &ExperimentConfig) -> Result<BaselineReport> {
    let r = Resolved::new(cfg)?;
    let kinetic = ensemble_for(cfg, &r, &r.sched, Dynamics::Kinetic)?;
    let overdamped = ensemble_for(cfg, &r, &r.sched, Dynamics::Overdamped)?;
    Ok(BaselineReport {
        fingerprint: Fingerprint::of(cfg),
        e_star: r.e_star,
        schedule: r.sched,
        delta: r.delta,
        kinetic,
        overdamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annealer::InitSpec;
    use std::collections::BTreeMap;

    fn small(n: usize, t_final: f64) -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.ensemble.n = n;
        c.ensemble.t_final = t_final;
        c.ensemble.n_eval = 4;
        c
    }

    #[test]
    fn zero_trials_is_a_config_error() {
        let c = small(0, 10.0);
        assert!(matches!(run_dichotomy_study(&c), Err(Error::Config(_))));
        assert!(matches!(run_baseline_comparison(&c), Err(Error::Config(_))));
    }

    #[test]
    fn missing_non_global_minimum_names_the_assumption() {
        let mut c = small(4, 10.0);
        c.potential.name = "quadratic".into();
        c.potential.params = BTreeMap::new();
        match run_dichotomy_study(&c) {
            Err(Error::Config(msg)) => assert!(msg.contains("non-global minimum"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn start_in_the_global_basin_is_uninformative() {
        let mut c = small(8, 20.0);
        let model = c.potential.build().unwrap();
        c.ensemble.init = InitSpec::Point { x: Some(model.global_min_location().to_vec()), y: Some(vec![0.0]) };
        let rep = run_dichotomy_study(&c).unwrap();
        assert_eq!(rep.verdicts.slow_converges, Verdict::UninformativeInit);
        assert_eq!(rep.verdicts.fast_traps, Verdict::UninformativeInit);
        assert_eq!(rep.verdicts, rep.derive_verdicts());
    }

    #[test]
    fn study_is_reproducible_and_uses_the_default_delta() {
        let c = small(6, 30.0);
        let a = run_dichotomy_study(&c).unwrap();
        let b = run_dichotomy_study(&c).unwrap();
        assert_eq!(a, b);
        // tilted double well: local minimum near x = 0.92, global near x = -1.07
        let model = c.potential.build().unwrap();
        let trap = crate::annealer::trapping_minimum(&model).unwrap();
        let expect = 0.1 * (model.energy(&trap) - model.global_min_value());
        assert!((a.delta - expect).abs() < 1e-9 * expect.abs().max(1.0));
        assert!((a.slow.energy / a.e_star - 1.5).abs() < 1e-12);
        assert!((a.fast.energy / a.e_star - 0.4).abs() < 1e-12);
        assert_eq!(a.slow.ensemble.eval_times.len(), 4);
    }

    #[test]
    fn baseline_on_a_quadratic_reaches_the_sublevel() {
        let mut c = small(40, 60.0);
        c.potential.name = "quadratic".into();
        c.potential.params = BTreeMap::new();
        c.schedule = Some(CoolingSchedule::logarithmic(1.0));
        c.ensemble.delta = Some(2.0);
        c.ensemble.init = InitSpec::Point { x: Some(vec![2.0]), y: None };
        let rep = run_baseline_comparison(&c).unwrap();
        assert_eq!(rep.kinetic.final_p_hat(), 1.0, "{:?}", rep.kinetic.p_hat);
        assert_eq!(rep.overdamped.final_p_hat(), 1.0, "{:?}", rep.overdamped.p_hat);
        assert_eq!(rep.kinetic.wilson_low.len(), rep.kinetic.eval_times.len());
        assert_eq!(rep.overdamped.wilson_high.len(), rep.overdamped.eval_times.len());
        assert_eq!(rep, run_baseline_comparison(&c).unwrap());
    }
}

//! Runners for the diagnostic commands: landscape, schedule, Fokker-Planck, Gamma and Lyapunov.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::study::{resolve_schedule, Fingerprint};
use crate::diagnostics::{
    check_lyapunov_drift, gamma_check, phase_box, quadratic_lemma_residual, random_test_function, DriftReport,
    GammaFunctional, GammaReport, ResidualReport,
};
use crate::error::Result;
use crate::fokker_planck::{decay_study, DecayStudy, DiscreteGenerator, PhaseGrid, Stencil};
use crate::potentials::{analyze, HessianBound, LandscapeAnalysis, LandscapeGrid};
use crate::schedules::{validate, Certificate, CoolingSchedule};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub fingerprint: Fingerprint,
    pub potential: String,
    pub global_min_value: f64,
    pub global_min_location: Vec<f64>,
    pub hessian_bound: HessianBound,
    pub analysis: LandscapeAnalysis,
}

pub fn run_analysis(cfg: &ExperimentConfig) -> Result<AnalysisReport> {
    let model = cfg.potential.build()?;
    let analysis = analyze(&model, &LandscapeGrid::default_for(&model))?;
    Ok(AnalysisReport {
        fingerprint: Fingerprint::of(cfg),
        potential: cfg.potential.name.clone(),
        global_min_value: model.global_min_value(),
        global_min_location: model.global_min_location().to_vec(),
        hessian_bound: model.hessian_bound(),
        analysis,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub fingerprint: Fingerprint,
    pub schedule: CoolingSchedule,
    /// Zero when the potential has no non-global minimum.
    pub e_star: f64,
    pub certificate: Certificate,
}

/// Admissibility of the resolved schedule up to `ensemble.t_final`.
pub fn run_schedule_validation(cfg: &ExperimentConfig) -> Result<ScheduleReport> {
    let model = cfg.potential.build()?;
    cfg.variance.check()?;
    let e_star = analyze(&model, &LandscapeGrid::default_for(&model))?.critical_depth;
    let schedule = resolve_schedule(cfg, e_star)?;
    let e_star = e_star.unwrap_or(0.0);
    let certificate = validate(&schedule, &cfg.variance, e_star, cfg.ensemble.t_final, 64);
    Ok(ScheduleReport { fingerprint: Fingerprint::of(cfg), schedule, e_star, certificate })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FokkerPlanckRun {
    pub fingerprint: Fingerprint,
    pub schedule: CoolingSchedule,
    pub nx: usize,
    pub ny: usize,
    /// `H(T) / H(0)`.
    pub h_ratio: f64,
    /// `H` rises by at most 1% between consecutive checkpoints of the tail half.
    pub tail_non_increasing: bool,
    /// `L1 <= sqrt(2 Ent) + 1e-12` at every checkpoint.
    pub pinsker_holds: bool,
    pub study: DecayStudy,
}

pub fn run_fokker_planck(cfg: &ExperimentConfig) -> Result<FokkerPlanckRun> {
    let model = cfg.potential.build()?;
    cfg.variance.check()?;
    let e_star = analyze(&model, &LandscapeGrid::default_for(&model))?.critical_depth;
    let schedule = resolve_schedule(cfg, e_star)?;
    let fp = &cfg.fokker_planck;
    let grid = fp.grid(&model, &cfg.variance, schedule.eps0())?;
    let study = decay_study(&model, &schedule, &cfg.variance, &grid, &fp.init, &fp.checkpoints()?, fp.dt)?;
    let h0 = study.samples[0].h;
    let h_ratio = study.samples.last().map_or(1.0, |s| s.h) / h0;
    Ok(FokkerPlanckRun {
        fingerprint: Fingerprint::of(cfg),
        schedule,
        nx: grid.nx,
        ny: grid.ny,
        h_ratio,
        tail_non_increasing: study.tail_non_increasing(0.5, 0.01),
        pinsker_holds: study.samples.iter().all(|s| s.l1 <= (2.0 * s.ent.max(0.0)).sqrt() + 1e-12),
        study,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaFunctionReport {
    pub index: u64,
    pub checks: Vec<GammaReport>,
    pub lemma: ResidualReport,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaEpsReport {
    pub eps: f64,
    pub nx: usize,
    pub ny: usize,
    pub functions: Vec<GammaFunctionReport>,
    pub all_pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaStudy {
    pub fingerprint: Fingerprint,
    pub results: Vec<GammaEpsReport>,
    pub all_pass: bool,
}

const FUNCTIONALS: [GammaFunctional; 4] =
    [GammaFunctional::Phi0, GammaFunctional::Phi1, GammaFunctional::Phi2, GammaFunctional::Psi];

/// Every functional on `n_functions` random smooth positive `h` at each configured `eps`.
pub fn run_gamma_study(cfg: &ExperimentConfig) -> Result<GammaStudy> {
    let model = cfg.potential.build()?;
    cfg.variance.check()?;
    let g = &cfg.gamma;
    let mut results = Vec::with_capacity(g.eps.len());
    for &eps in &g.eps {
        let base = PhaseGrid::default_for(&model, &cfg.variance, eps)?;
        let grid = PhaseGrid::new(
            base.x_min,
            base.x_max,
            base.y_min,
            base.y_max,
            g.nx.unwrap_or(base.nx),
            g.ny.unwrap_or(base.ny),
        )?;
        let gen = DiscreteGenerator::new(&model, &cfg.variance, eps, &grid, Stencil::Centered)?;
        let functions = (0..g.n_functions as u64)
            .into_par_iter()
            .map(|index| -> Result<GammaFunctionReport> {
                let h = random_test_function(&grid, cfg.master_seed, index, g.max_periods);
                let checks = FUNCTIONALS.iter().map(|&w| gamma_check(&h, &gen, w)).collect::<Result<Vec<_>>>()?;
                let lemma = quadratic_lemma_residual(&h, &gen)?;
                let pass = lemma.pass && checks.iter().all(|c| c.interior_pass);
                Ok(GammaFunctionReport { index, checks, lemma, pass })
            })
            .collect::<Result<Vec<_>>>()?;
        let all_pass = functions.iter().all(|f| f.pass);
        results.push(GammaEpsReport { eps, nx: grid.nx, ny: grid.ny, functions, all_pass });
    }
    let all_pass = results.iter().all(|r| r.all_pass);
    Ok(GammaStudy { fingerprint: Fingerprint::of(cfg), results, all_pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovStudy {
    pub fingerprint: Fingerprint,
    pub y_half_width: f64,
    pub reports: Vec<DriftReport>,
    /// A witness `rho_hat > 0` with finite `N` and the sandwich bounds, at every `eps`.
    pub all_pass: bool,
}

pub fn drift_passes(r: &DriftReport) -> bool {
    r.rho_hat > 0.0 && r.n_hat.is_finite() && r.sandwich_ok
}

pub fn run_lyapunov_study(cfg: &ExperimentConfig) -> Result<LyapunovStudy> {
    let model = cfg.potential.build()?;
    cfg.variance.check()?;
    let l = &cfg.lyapunov;
    let bx = phase_box(&model, l.y_width);
    let reports = l
        .eps
        .iter()
        .map(|&eps| check_lyapunov_drift(&model, &cfg.variance, eps, &bx, l.n_points))
        .collect::<Result<Vec<_>>>()?;
    let all_pass = reports.iter().all(drift_passes);
    Ok(LyapunovStudy { fingerprint: Fingerprint::of(cfg), y_half_width: l.y_width, reports, all_pass })
}

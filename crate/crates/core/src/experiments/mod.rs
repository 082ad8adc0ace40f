//! Experiment configuration, the cooling dichotomy study and result serialization.

mod checks;
mod config;
mod output;
mod study;

pub use checks::{
    drift_passes, run_analysis, run_fokker_planck, run_gamma_study, run_lyapunov_study, run_schedule_validation,
    AnalysisReport, FokkerPlanckRun, GammaEpsReport, GammaFunctionReport, GammaStudy, LyapunovStudy, ScheduleReport,
};
pub use config::{
    DichotomySpec, EnsembleSpec, ExperimentConfig, FokkerPlanckSpec, GammaSpec, IntegratorSpec, LyapunovSpec,
    OutputSpec, PotentialSpec, DEFAULT_SEED,
};
pub use output::{
    baseline_csv, dichotomy_csv, ensemble_csv, to_json, trials_csv, without_trials, write_baseline, write_ensemble,
    write_json, write_study,
};
pub use study::{
    default_delta, require_critical_depth, resolve_schedule, run_baseline_comparison, run_configured_ensemble,
    run_dichotomy_study, run_single_trial, ArmReport, BaselineReport, EnsembleRun, Fingerprint, Resolved, StudyReport,
    Verdict, Verdicts,
};

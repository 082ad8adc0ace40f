//! Deterministic CSV/JSON writers. Floats use Rust's shortest round-trip formatting.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::study::{BaselineReport, EnsembleRun, StudyReport};
use crate::annealer::{EnsembleReport, TrialReport};
use crate::error::{Error, Result};

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(format!("cannot serialise report: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    write_file(dir, name, &to_json(value)?)
}

/// Copy without the per-trial records, for compact summaries.
pub fn without_trials(r: &EnsembleReport) -> EnsembleReport {
    EnsembleReport { trials: Vec::new(), ..r.clone() }
}

pub fn ensemble_csv(r: &EnsembleReport) -> String {
    let mut s = String::from("t,successes,n,p_hat,wilson_low,wilson_high\n");
    for k in 0..r.eval_times.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.eval_times[k], r.successes[k], r.n, r.p_hat[k], r.wilson_low[k], r.wilson_high[k]
        );
    }
    s
}

pub fn trials_csv(trials: &[TrialReport]) -> String {
    let d = trials.first().map_or(0, |t| t.final_state.x.len());
    let mut s = String::from("trial,success,diverged,diverged_at,final_energy");
    for i in 0..d {
        let _ = write!(s, ",x{i}");
    }
    for i in 0..d {
        let _ = write!(s, ",y{i}");
    }
    s.push('\n');
    for t in trials {
        let energy = t.checkpoints.last().map_or(f64::NAN, |c| c.energy);
        let at = t.diverged_at.map_or(String::new(), |v| v.to_string());
        let _ = write!(s, "{},{},{},{},{}", t.trial_index, t.success as u8, t.diverged as u8, at, energy);
        for v in t.final_state.x.iter().chain(&t.final_state.y) {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

pub fn write_ensemble(dir: &Path, run: &EnsembleRun) -> Result<Vec<PathBuf>> {
    let summary = EnsembleRun { report: without_trials(&run.report), ..run.clone() };
    Ok(vec![
        write_json(dir, "ensemble.json", &summary)?,
        write_file(dir, "ensemble.csv", &ensemble_csv(&run.report))?,
        write_file(dir, "trials.csv", &trials_csv(&run.report.trials))?,
    ])
}

pub fn dichotomy_csv(r: &StudyReport) -> String {
    let mut s = String::from("arm,E,t,successes,n,p_hat,wilson_low,wilson_high\n");
    for (name, arm) in [("slow", &r.slow), ("fast", &r.fast)] {
        let e = &arm.ensemble;
        for k in 0..e.eval_times.len() {
            let _ = writeln!(
                s,
                "{name},{},{},{},{},{},{},{}",
                arm.energy, e.eval_times[k], e.successes[k], e.n, e.p_hat[k], e.wilson_low[k], e.wilson_high[k]
            );
        }
    }
    s
}

pub fn write_study(dir: &Path, r: &StudyReport) -> Result<Vec<PathBuf>> {
    let mut summary = r.clone();
    summary.slow.ensemble = without_trials(&r.slow.ensemble);
    summary.fast.ensemble = without_trials(&r.fast.ensemble);
    Ok(vec![
        write_json(dir, "dichotomy.json", &summary)?,
        write_file(dir, "dichotomy.csv", &dichotomy_csv(r))?,
        write_file(dir, "trials_slow.csv", &trials_csv(&r.slow.ensemble.trials))?,
        write_file(dir, "trials_fast.csv", &trials_csv(&r.fast.ensemble.trials))?,
    ])
}

/// One row per evaluation time with both dynamics side by side.
pub fn baseline_csv(r: &BaselineReport) -> String {
    let (k, o) = (&r.kinetic, &r.overdamped);
    let mut s = String::from(
        "t,kinetic_p_hat,kinetic_wilson_low,kinetic_wilson_high,overdamped_p_hat,overdamped_wilson_low,overdamped_wilson_high\n",
    );
    for i in 0..k.eval_times.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            k.eval_times[i],
            k.p_hat[i],
            k.wilson_low[i],
            k.wilson_high[i],
            o.p_hat[i],
            o.wilson_low[i],
            o.wilson_high[i]
        );
    }
    s
}

pub fn write_baseline(dir: &Path, r: &BaselineReport) -> Result<Vec<PathBuf>> {
    let summary =
        BaselineReport { kinetic: without_trials(&r.kinetic), overdamped: without_trials(&r.overdamped), ..r.clone() };
    Ok(vec![write_json(dir, "baseline.json", &summary)?, write_file(dir, "baseline.csv", &baseline_csv(r))?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annealer::{Checkpoint, Dynamics, PhaseState};

    fn report() -> EnsembleReport {
        let trial = TrialReport {
            trial_index: 0,
            final_state: PhaseState::new(vec![0.5], vec![-0.25], 2.0),
            success: true,
            diverged: false,
            diverged_at: None,
            checkpoints: vec![Checkpoint { t: 2.0, energy: 0.125, kinetic: 0.0625 }],
        };
        EnsembleReport {
            n: 1,
            dynamics: Dynamics::Kinetic,
            delta: 0.1,
            threshold: 0.1,
            eval_times: vec![2.0],
            successes: vec![1],
            p_hat: vec![1.0],
            wilson_low: vec![0.2],
            wilson_high: vec![1.0],
            diverged_count: 0,
            trials: vec![trial],
        }
    }

    #[test]
    fn csv_layout_is_fixed() {
        let r = report();
        assert_eq!(ensemble_csv(&r), "t,successes,n,p_hat,wilson_low,wilson_high\n2,1,1,1,0.2,1\n");
        assert_eq!(
            trials_csv(&r.trials),
            "trial,success,diverged,diverged_at,final_energy,x0,y0\n0,1,0,,0.125,0.5,-0.25\n"
        );
    }

    #[test]
    fn summaries_drop_trials_only() {
        let r = report();
        let s = without_trials(&r);
        assert!(s.trials.is_empty());
        assert_eq!(s.p_hat, r.p_hat);
    }
}

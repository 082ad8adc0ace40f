//! `kinanneal` command line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kinanneal::experiments::{self as ex, ExperimentConfig};
use kinanneal::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "kinanneal", version, about = "Kinetic Langevin simulated annealing experiments")]
struct Cli {
    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override `master_seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads. Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Minima, barriers and critical depth of the potential.
    AnalyzePotential,
    /// Admissibility certificate of the cooling schedule.
    ValidateSchedule,
    /// One annealing trajectory.
    Anneal,
    /// Ensemble success probability under the configured schedule.
    Ensemble,
    /// Slow versus fast logarithmic cooling from the trapping minimum.
    Dichotomy,
    /// Kinetic versus overdamped annealing on the same schedule.
    CompareBaseline,
    /// Entropy decay of the phase-space Fokker-Planck equation.
    FokkerPlanck,
    /// Discrete Gamma-calculus inequalities on random test functions.
    GammaCheck,
    /// Lyapunov drift witness at the configured temperatures.
    LyapunovCheck,
}

/// What a command produced: files written and whether a checked assumption failed.
struct Outcome {
    files: Vec<PathBuf>,
    violation: Option<String>,
}

impl Outcome {
    fn ok(files: Vec<PathBuf>) -> Self {
        Self { files, violation: None }
    }

    fn checked(files: Vec<PathBuf>, pass: bool, what: &str) -> Self {
        Self { files, violation: (!pass).then(|| what.to_string()) }
    }
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let p = dir.join(name);
    std::fs::write(&p, text)?;
    Ok(p)
}

fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    let dir = cfg.output.dir.as_path();
    match cmd {
        Command::AnalyzePotential => {
            let r = ex::run_analysis(cfg)?;
            Ok(Outcome::ok(vec![ex::write_json(dir, "analysis.json", &r)?]))
        }
        Command::ValidateSchedule => {
            let r = ex::run_schedule_validation(cfg)?;
            let f = ex::write_json(dir, "schedule.json", &r)?;
            let what = format!("schedule is not admissible: {}", r.certificate.violations.join("; "));
            Ok(Outcome::checked(vec![f], r.certificate.admissible, &what))
        }
        Command::Anneal => {
            let r = ex::run_single_trial(cfg)?;
            let mut csv = String::from("t,energy,kinetic\n");
            for c in &r.checkpoints {
                csv.push_str(&format!("{},{},{}\n", c.t, c.energy, c.kinetic));
            }
            Ok(Outcome::ok(vec![ex::write_json(dir, "anneal.json", &r)?, write_text(dir, "anneal.csv", &csv)?]))
        }
        Command::Ensemble => Ok(Outcome::ok(ex::write_ensemble(dir, &ex::run_configured_ensemble(cfg)?)?)),
        Command::Dichotomy => Ok(Outcome::ok(ex::write_study(dir, &ex::run_dichotomy_study(cfg)?)?)),
        Command::CompareBaseline => Ok(Outcome::ok(ex::write_baseline(dir, &ex::run_baseline_comparison(cfg)?)?)),
        Command::FokkerPlanck => {
            let r = ex::run_fokker_planck(cfg)?;
            let mut csv = Vec::new();
            r.study.write_csv(&mut csv)?;
            let csv = String::from_utf8(csv).expect("ascii csv");
            Ok(Outcome::ok(vec![
                ex::write_json(dir, "fokker_planck.json", &r)?,
                write_text(dir, "fokker_planck.csv", &csv)?,
            ]))
        }
        Command::GammaCheck => {
            let r = ex::run_gamma_study(cfg)?;
            let f = ex::write_json(dir, "gamma.json", &r)?;
            Ok(Outcome::checked(vec![f], r.all_pass, "a Gamma inequality failed on the grid interior"))
        }
        Command::LyapunovCheck => {
            let r = ex::run_lyapunov_study(cfg)?;
            let f = ex::write_json(dir, "lyapunov.json", &r)?;
            Ok(Outcome::checked(vec![f], r.all_pass, "no Lyapunov drift witness at some temperature"))
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(&cli).and_then(|cfg| {
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.threads {
            if n == 0 {
                return Err(Error::Config("--threads must be at least 1".into()));
            }
            pool = pool.num_threads(n);
        }
        let pool = pool.build().map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        pool.install(|| run(cli.command, &cfg))
    });
    match result {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
            match out.violation {
                Some(msg) => {
                    eprintln!("kinanneal: {msg}");
                    ExitCode::from(3)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("kinanneal: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

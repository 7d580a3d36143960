//! Experiment runners that turn a validated configuration into artifact
//! files. Every file carries the config echo; the only nondeterministic
//! content (a timestamp) goes to `metadata.json`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    audit_deterministic_bound, ldp_envelope, ldp_experiment, mean_gap_markov_check, rate_study,
    small_noise_convergence, LdpConfig, SmallNoiseConfig,
};
use crate::checks::{default_geometries, geometry_suite, problem_probe, product_suite, solution_gaps, PropertyResult};
use crate::config::{Experiment, RunConfig};
use crate::dynamics::{ensemble_csv, simulate, TrajectoryRecord};
use crate::ensemble::{par_map, seed_range};
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::problems::VIProblem;

/// What a run produced and whether its audits passed.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub experiment: Experiment,
    pub summary: String,
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    /// Write `name.partial`, then rename it into place. A crash leaves the
    /// `.partial` file behind as a marker.
    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let target = self.dir.join(name);
        let partial = self.dir.join(format!("{name}.partial"));
        std::fs::write(&partial, content).map_err(|source| Error::Io {
            path: partial.clone(),
            source,
        })?;
        std::fs::rename(&partial, &target).map_err(|source| Error::Io {
            path: target.clone(),
            source,
        })?;
        self.files.push(target);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::InvalidArgument(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        self.write(name, &text)
    }

    fn finish(mut self, experiment: Experiment, summary: String, passed: bool) -> Result<Outcome> {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.json(
            "metadata.json",
            &json!({ "experiment": experiment.name(), "created_unix": secs }),
        )?;
        Ok(Outcome {
            experiment,
            summary,
            passed,
            files: self.files,
        })
    }
}

fn config_comment(echo: &Value) -> String {
    format!("# config: {}\n", serde_json::to_string(echo).unwrap_or_default())
}

fn check_experiment(cfg: &RunConfig, expected: Experiment) -> Result<()> {
    match cfg.experiment {
        Some(e) if e != expected => Err(Error::InvalidArgument(format!(
            "config declares experiment '{}' but '{}' was requested",
            e.name(),
            expected.name()
        ))),
        _ => Ok(()),
    }
}

fn default_check_problems() -> Result<Vec<VIProblem>> {
    Ok(vec![
        VIProblem::matrix_game(DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]))?,
        VIProblem::toy(
            1.0,
            DVector::from_vec(vec![0.3, -0.2]),
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
            Domain::ball(1.0, vec![0.0, 0.0])?,
        )?,
    ])
}

/// Property suites: mirror-map identities, Fenchel-coupling inequalities,
/// monotonicity probe and gaps at the solution. Without a config the
/// built-in geometries and problems are used.
pub fn run_check(cfg: Option<&RunConfig>, out: &Path) -> Result<Outcome> {
    if let Some(c) = cfg {
        check_experiment(c, Experiment::Check)?;
    }
    let mut results: Vec<PropertyResult> = Vec::new();
    let (pairs, seed) = cfg.map_or((1000, 0), |c| (c.check.probe_pairs, c.check.probe_seed));
    match cfg {
        Some(c) => {
            results.extend(product_suite(c.problem.geometry(), seed)?);
            results.push(problem_probe(&c.problem, pairs, seed)?);
            results.extend(solution_gaps(&c.problem, 200, seed)?);
        }
        None => {
            for (i, g) in default_geometries().iter().enumerate() {
                results.extend(geometry_suite(g, seed.wrapping_add(1000 * i as u64))?);
            }
            for p in default_check_problems()? {
                results.push(problem_probe(&p, pairs, seed)?);
                results.extend(solution_gaps(&p, 200, seed)?);
            }
        }
    }
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name.as_str())
        .collect();
    let passed = failed.is_empty();
    let summary = if passed {
        format!("check: {} properties passed", results.len())
    } else {
        format!("check: {} of {} properties FAILED: {}", failed.len(), results.len(), failed.join(", "))
    };
    let mut art = Artifacts::new(out)?;
    art.json(
        "check_report.json",
        &json!({
            "config": cfg.map_or(Value::Null, |c| c.echo.clone()),
            "passed": passed,
            "results": results,
        }),
    )?;
    art.finish(Experiment::Check, summary, passed)
}

fn run_ensemble(cfg: &RunConfig, workers: usize) -> Result<Vec<TrajectoryRecord>> {
    let seeds = seed_range(cfg.base_seed, cfg.ensemble_size);
    par_map(&seeds, workers, |seed| {
        let mut sim = cfg.sim.clone();
        sim.seed = seed;
        simulate(&cfg.problem, &cfg.schedule, &cfg.noise, &sim)
    })?
    .into_iter()
    .collect()
}

/// Simulate one trajectory per seed. Noise-free runs are also audited
/// against the deterministic gap bound.
pub fn run_simulate(cfg: &RunConfig, out: &Path, workers: usize) -> Result<Outcome> {
    check_experiment(cfg, Experiment::Simulate)?;
    let records = run_ensemble(cfg, workers)?;
    let mut runs = Vec::new();
    let mut violations = 0;
    let mut failures = 0;
    for rec in &records {
        let audit = if rec.noisy || rec.failure.is_some() {
            None
        } else {
            Some(audit_deterministic_bound(rec, &cfg.problem, &cfg.schedule)?)
        };
        violations += audit.as_ref().map_or(0, |a| a.violations());
        failures += usize::from(rec.failure.is_some());
        let last = rec.last();
        runs.push(json!({
            "seed": rec.seed,
            "final_t": last.map(|s| s.t),
            "final_gap_x": last.map(|s| s.gap_x),
            "final_gap_xbar": last.map(|s| s.gap_xbar),
            "gap_regime": rec.gap_regime,
            "failure": rec.failure,
            "audit": audit,
        }));
    }
    let passed = violations == 0 && failures == 0;
    let first = &records[0];
    let summary = format!(
        "simulate: {} run(s) to t = {}, final ergodic gap {:.6e} (seed {}), {} bound violation(s), {} failure(s)",
        records.len(),
        first.last().map_or(f64::NAN, |s| s.t),
        first.last().map_or(f64::NAN, |s| s.gap_xbar),
        first.seed,
        violations,
        failures
    );
    let mut art = Artifacts::new(out)?;
    if records.len() == 1 {
        art.write("trajectory.csv", &first.to_csv())?;
    } else {
        art.write("trajectories.csv", &ensemble_csv(&records))?;
    }
    art.json(
        "summary.json",
        &json!({ "config": cfg.echo, "passed": passed, "runs": runs }),
    )?;
    art.finish(Experiment::Simulate, summary, passed)
}

/// Ensemble-mean ergodic gap and its log-log rate fit.
pub fn run_rates(cfg: &RunConfig, out: &Path, workers: usize) -> Result<Outcome> {
    check_experiment(cfg, Experiment::Rates)?;
    let seeds = seed_range(cfg.base_seed, cfg.ensemble_size);
    let window = cfg.rates.window.map(|[a, b]| (a, b));
    let (study, _) = rate_study(
        &cfg.problem,
        &cfg.schedule,
        &cfg.noise,
        &cfg.sim,
        &seeds,
        workers,
        window,
    )?;
    let fit = &study.fit;
    let in_range = cfg
        .rates
        .exponent_range
        .is_none_or(|[lo, hi]| (lo..=hi).contains(&fit.exponent));
    let r2_ok = cfg.rates.min_r_squared.is_none_or(|m| fit.r_squared >= m);
    let passed = in_range && r2_ok && study.failures.is_empty();
    let summary = format!(
        "rates: exponent {:.4} (r_squared {:.4}) over [{}, {}] from {} seed(s){}",
        fit.exponent,
        fit.r_squared,
        fit.window.0,
        fit.window.1,
        study.ensemble_size,
        if passed { "" } else { " FAILED" }
    );
    let mut csv = config_comment(&cfg.echo);
    csv.push_str("t,mean_gap\n");
    for (t, g) in study.times.iter().zip(&study.mean_gap) {
        let _ = writeln!(csv, "{t:?},{g:?}");
    }
    let mut art = Artifacts::new(out)?;
    art.json(
        "rates.json",
        &json!({
            "config": cfg.echo,
            "passed": passed,
            "exponent": fit.exponent,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "window": [fit.window.0, fit.window.1],
            "points": fit.points,
            "excluded": fit.excluded,
            "ensemble_size": study.ensemble_size,
            "exponent_range": cfg.rates.exponent_range,
            "min_r_squared": cfg.rates.min_r_squared,
            "failures": study.failures,
        }),
    )?;
    art.write("rates.csv", &csv)?;
    art.finish(Experiment::Rates, summary, passed)
}

/// Large-deviation exceedance frequencies against `exp(-delta²/4)`, plus
/// the mean-gap Markov check.
pub fn run_ldp(cfg: &RunConfig, out: &Path, workers: usize) -> Result<Outcome> {
    check_experiment(cfg, Experiment::Ldp)?;
    let lc = LdpConfig {
        t_eval: cfg.ldp.t_eval,
        deltas: cfg.ldp.deltas.clone(),
        ensemble_size: cfg.ensemble_size,
        base_seed: cfg.base_seed,
        dt: cfg.sim.dt,
        workers,
    };
    let report = ldp_experiment(&cfg.problem, &cfg.schedule, &cfg.noise, &lc)?;
    let env = ldp_envelope(
        cfg.problem.geometry(),
        &cfg.schedule,
        report.sigma_star,
        report.t_eval,
    )?;
    let markov = mean_gap_markov_check(&report.markov_samples, &env)?;
    let failing = report.failing_rows().len();
    let passed = failing == 0 && markov.holds && report.failures.is_empty();
    let mut summary = format!(
        "ldp: t = {}, {} seeds, Q0 = {:.4e}, Q1 = {:.4e};",
        report.t_eval, report.ensemble_size, report.q0, report.q1
    );
    for r in &report.rows {
        let _ = write!(summary, " delta {}: {:.4} vs {:.4};", r.delta, r.empirical, r.bound);
    }
    let _ = write!(
        summary,
        " markov {}{}",
        if markov.holds { "holds" } else { "violated" },
        if passed { "" } else { " FAILED" }
    );

    let mut csv = config_comment(&cfg.echo);
    csv.push_str("delta,threshold,exceedances,empirical,std_error,bound\n");
    for r in &report.rows {
        let _ = writeln!(
            csv,
            "{:?},{:?},{},{:?},{:?},{:?}",
            r.delta, r.threshold, r.exceedances, r.empirical, r.std_error, r.bound
        );
    }
    let mut gaps_csv = config_comment(&cfg.echo);
    gaps_csv.push_str("seed,gap_xbar,markov_sample\n");
    for ((s, g), m) in report.seeds.iter().zip(&report.gaps).zip(&report.markov_samples) {
        let _ = writeln!(gaps_csv, "{s},{g:?},{m:?}");
    }
    let mut art = Artifacts::new(out)?;
    art.json(
        "ldp.json",
        &json!({
            "config": cfg.echo,
            "passed": passed,
            "report": report,
            "delta_grid": report.rows.iter().map(|r| r.delta).collect::<Vec<_>>(),
            "empirical_exceedance": report.rows.iter().map(|r| r.empirical).collect::<Vec<_>>(),
            "theoretical_bound": report.rows.iter().map(|r| r.bound).collect::<Vec<_>>(),
            "markov": markov,
        }),
    )?;
    art.write("ldp.csv", &csv)?;
    art.write("ldp_gaps.csv", &gaps_csv)?;
    art.finish(Experiment::Ldp, summary, passed)
}

/// Small-noise convergence: distance to the solution at the horizon and the
/// Fenchel energy at each checkpoint.
pub fn run_smallnoise(cfg: &RunConfig, out: &Path, workers: usize) -> Result<Outcome> {
    check_experiment(cfg, Experiment::Smallnoise)?;
    let sn = &cfg.smallnoise;
    let mut sc = SmallNoiseConfig::new(cfg.sim.horizon, cfg.sim.dt, cfg.ensemble_size);
    sc.base_seed = cfg.base_seed;
    sc.threshold = sn.threshold;
    if !sn.checkpoints.is_empty() {
        sc.checkpoints = sn.checkpoints.clone();
    }
    sc.tail_samples = sn.tail_samples;
    sc.workers = workers;
    let report = small_noise_convergence(&cfg.problem, &cfg.noise, &sc)?;
    let fraction_ok = report
        .fraction_within_at_checkpoints
        .iter()
        .chain([&report.fraction_within])
        .all(|f| *f >= sn.required_fraction);
    let energy_ok = report
        .mean_fenchel_at_checkpoints
        .windows(2)
        .all(|w| w[1] <= w[0]);
    let passed = fraction_ok && energy_ok && report.failures.is_empty();
    let summary = format!(
        "smallnoise: {:.1}% of {} seeds within {} of x* at t = {}; mean energy at checkpoints {:?}{}",
        100.0 * report.fraction_within,
        cfg.ensemble_size,
        report.threshold,
        report.horizon,
        report.mean_fenchel_at_checkpoints,
        if passed { "" } else { " FAILED" }
    );
    let mut csv = config_comment(&cfg.echo);
    csv.push_str("seed,final_distance,tail_max_fenchel");
    for c in &report.checkpoints {
        let _ = write!(csv, ",fenchel_t{c:?}");
    }
    csv.push('\n');
    for s in &report.seeds {
        let _ = write!(csv, "{},{:?},{:?}", s.seed, s.final_distance, s.tail_max_fenchel);
        for f in &s.fenchel_at_checkpoints {
            let _ = write!(csv, ",{f:?}");
        }
        csv.push('\n');
    }
    let mut art = Artifacts::new(out)?;
    art.json(
        "smallnoise.json",
        &json!({
            "config": cfg.echo,
            "passed": passed,
            "required_fraction": sn.required_fraction,
            "energy_nonincreasing": energy_ok,
            "horizon": report.horizon,
            "threshold": report.threshold,
            "fraction_within": report.fraction_within,
            "checkpoints": report.checkpoints,
            "mean_fenchel_at_checkpoints": report.mean_fenchel_at_checkpoints,
            "fraction_within_at_checkpoints": report.fraction_within_at_checkpoints,
            "mean_tail_max_fenchel": report.mean_tail_max_fenchel,
            "calibrated_threshold": report.calibrated_threshold,
            "failures": report.failures,
        }),
    )?;
    art.write("smallnoise.csv", &csv)?;
    art.finish(Experiment::Smallnoise, summary, passed)
}

/// Dispatch on the experiment kind.
pub fn run(experiment: Experiment, cfg: Option<&RunConfig>, out: &Path, workers: usize) -> Result<Outcome> {
    let need = || {
        cfg.ok_or_else(|| {
            Error::InvalidArgument(format!("'{}' needs a --config file", experiment.name()))
        })
    };
    match experiment {
        Experiment::Check => run_check(cfg, out),
        Experiment::Simulate => run_simulate(need()?, out, workers),
        Experiment::Rates => run_rates(need()?, out, workers),
        Experiment::Ldp => run_ldp(need()?, out, workers),
        Experiment::Smallnoise => run_smallnoise(need()?, out, workers),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::validate_config;

    const PENNIES: &str = r#"
experiment = "simulate"

[problem]
kind = "matrix_game"
matrix = [[1.0, -1.0], [-1.0, 1.0]]

[integrator]
dt = 0.01
horizon = 10.0
y0 = [0.5, -0.5, 0.2, 0.0]
"#;

    #[test]
    fn simulate_writes_artifacts_and_passes_audit() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = validate_config(PENNIES).unwrap();
        let out = run_simulate(&cfg, dir.path(), 1).unwrap();
        assert!(out.passed, "{}", out.summary);
        let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
        assert!(csv.starts_with("# config: {"));
        assert!(csv.lines().nth(1).unwrap().starts_with("t,x_1,x_2,x_3,x_4,xbar_1"));
        assert!(dir.path().join("metadata.json").exists());
        let leftovers = std::fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "partial"))
            .count();
        assert_eq!(leftovers, 0);
    }

    #[test]
    fn mismatched_experiment_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = validate_config(PENNIES).unwrap();
        assert!(run_rates(&cfg, dir.path(), 1).is_err());
    }
}

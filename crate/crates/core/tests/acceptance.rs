//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero on any
//! failure so `cargo test` reports it.

use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use smd_core::analysis::{
    audit_deterministic_bound, ergodic_gap_series, fit_rate, ldp_experiment, rate_study,
    small_noise_convergence, LdpConfig, SmallNoiseConfig,
};
use smd_core::checks::{
    default_geometries, fenchel_increment, fenchel_lower_bound, gradient_identity,
    mirror_lipschitz,
};
use smd_core::config::validate_config;
use smd_core::dynamics::{
    det_step, discrete_dual_averaging_step, simulate, GapEval, NoiseModel, SampleGrid, Schedule,
    Scheme, SimConfig, TrajectoryState,
};
use smd_core::ensemble::{mean_and_std_error, par_map, seed_range};
use smd_core::experiments::run;
use smd_core::geometry::{DistanceGenerator, Domain};
use smd_core::problems::{MonotoneOperator, OperatorKind, VIProblem};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome, Option<u64>);

fn pennies() -> VIProblem {
    VIProblem::matrix_game(DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])).unwrap()
}

fn toy() -> VIProblem {
    VIProblem::toy(
        1.0,
        DVector::from_vec(vec![0.3, -0.2]),
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
        Domain::ball(1.0, vec![0.0, 0.0]).unwrap(),
    )
    .unwrap()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn c1_mirror_identities() -> Outcome {
    let mut worst_fd: f64 = 0.0;
    let mut worst_lip = f64::NEG_INFINITY;
    let mut ok = true;
    for (i, g) in default_geometries().iter().enumerate() {
        let a = gradient_identity(g, 100, 10 + i as u64).map_err(err)?;
        let b = mirror_lipschitz(g, 1000, 20 + i as u64).map_err(err)?;
        ok &= a.passed && b.passed;
        worst_fd = worst_fd.max(a.worst);
        worst_lip = worst_lip.max(b.worst);
    }
    Ok((
        ok,
        format!("worst FD rel. error {worst_fd:.2e} (tol 1e-5), worst Lipschitz excess {worst_lip:.2e}"),
    ))
}

fn c2_fenchel_suite() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for (i, g) in default_geometries().iter().enumerate() {
        let a = fenchel_lower_bound(g, 1000, 30 + i as u64).map_err(err)?;
        let b = fenchel_increment(g, 1000, 40 + i as u64).map_err(err)?;
        ok &= a.passed && b.passed;
        worst = worst.min(a.worst).min(b.worst);
    }
    Ok((ok, format!("minimum slack {worst:.2e} (tol -1e-9)")))
}

fn c3_deterministic_audit() -> Outcome {
    let c11 = Schedule::constant(1.0, 1.0).map_err(err)?;
    let cases: [(&str, VIProblem, Option<Vec<f64>>); 3] = [
        ("pennies from origin", pennies(), None),
        ("pennies from y0", pennies(), Some(vec![0.5, 0.0, -0.3, 0.0])),
        ("toy", toy(), None),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, p, y0) in cases {
        let mut cfg = SimConfig::new(1e-3, 100.0);
        cfg.y0 = y0;
        let rec = simulate(&p, &c11, &NoiseModel::Zero, &cfg).map_err(err)?;
        let audit = audit_deterministic_bound(&rec, &p, &c11).map_err(err)?;
        let v = audit.violations();
        ok &= v == 0 && rec.failure.is_none();
        let dist = audit.distance.as_ref().map_or(String::new(), |d| {
            format!(", squared-distance min slack {:.2e}", d.min_slack())
        });
        parts.push(format!("{name}: {v} violations, gap min slack {:.2e}{dist}", audit.gap.min_slack()));
    }
    Ok((ok, parts.join("; ")))
}

fn c4_deterministic_rate() -> Outcome {
    // dominance-solvable game, pure saddle at (e2, e2)
    let p = VIProblem::matrix_game(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]))
        .map_err(err)?;
    let c11 = Schedule::constant(1.0, 1.0).map_err(err)?;
    let mut cfg = SimConfig::new(1e-3, 100.0);
    cfg.gaps = GapEval::ErgodicOnly;
    let rec = simulate(&p, &c11, &NoiseModel::Zero, &cfg).map_err(err)?;
    let series = ergodic_gap_series(&rec, &p).map_err(err)?;
    let fit = fit_rate(&series.times, &series.values, Some((10.0, 100.0))).map_err(err)?;
    Ok((
        fit.exponent <= -0.9 && fit.r_squared >= 0.98,
        format!(
            "exponent {:.4} (<= -0.9), r^2 {:.5} (>= 0.98), {} points",
            fit.exponent, fit.r_squared, fit.points
        ),
    ))
}

fn c5_stochastic_rate() -> Outcome {
    let p = pennies();
    let s = Schedule::power(0.25, 0.25).map_err(err)?;
    let nm = NoiseModel::isotropic(4, 0.5).map_err(err)?;
    let mut cfg = SimConfig::new(1e-3, 200.0);
    cfg.gaps = GapEval::ErgodicOnly;
    let (study, _) =
        rate_study(&p, &s, &nm, &cfg, &seed_range(0, 100), 0, Some((20.0, 200.0))).map_err(err)?;
    let e = study.fit.exponent;
    Ok((
        (-0.65..=-0.35).contains(&e) && study.failures.is_empty(),
        format!(
            "exponent {e:.4} in [-0.65, -0.35], r^2 {:.4}, 100 seeds",
            study.fit.r_squared
        ),
    ))
}

fn c6_ldp() -> Outcome {
    let p = pennies();
    let s = Schedule::power(0.25, 0.25).map_err(err)?;
    let nm = NoiseModel::isotropic(4, 0.5).map_err(err)?;
    let cfg = LdpConfig {
        t_eval: 50.0,
        deltas: vec![1.0, 2.0, 3.0],
        ensemble_size: 500,
        base_seed: 0,
        dt: 1e-3,
        workers: 0,
    };
    let r = ldp_experiment(&p, &s, &nm, &cfg).map_err(err)?;
    let rows: Vec<String> = r
        .rows
        .iter()
        .map(|row| format!("delta {}: {:.4} <= {:.4}", row.delta, row.empirical, row.bound))
        .collect();
    Ok((
        r.failing_rows().is_empty() && r.failures.is_empty(),
        format!("Q0 {:.4}, Q1 {:.4}; {}", r.q0, r.q1, rows.join(", ")),
    ))
}

fn c7_small_noise() -> Outcome {
    let n = 10;
    let xs: Vec<f64> = (0..n).map(|i| 0.1 * ((i % 3) as f64 - 1.0)).collect();
    let p = VIProblem::toy(
        5.0,
        DVector::from_vec(xs),
        DMatrix::zeros(n, n),
        Domain::ball(1.0, vec![0.0; n]).map_err(err)?,
    )
    .map_err(err)?;
    let nm = NoiseModel::decaying(n, 0.5).map_err(err)?;
    let mut cfg = SmallNoiseConfig::new(400.0, 1e-2, 50);
    cfg.checkpoints = vec![200.0, 400.0];
    let r = small_noise_convergence(&p, &nm, &cfg).map_err(err)?;
    let frac = r.fraction_within_at_checkpoints[0];
    let (f200, f400) = (r.mean_fenchel_at_checkpoints[0], r.mean_fenchel_at_checkpoints[1]);
    Ok((
        frac >= 0.95 && f400 <= f200 && r.failures.is_empty(),
        format!(
            "{:.0}% within 0.05 at T=200, mean F(x*,Y) {f200:.3e} at 200 -> {f400:.3e} at 400",
            100.0 * frac
        ),
    ))
}

fn c8_sde_variance() -> Outcome {
    let c = 0.7;
    let p = VIProblem::new(
        MonotoneOperator::new(OperatorKind::Affine {
            a: DMatrix::zeros(2, 2),
            b: DVector::zeros(2),
        })
        .map_err(err)?,
        DistanceGenerator::euclidean(Domain::cube(2, 0.0, 1.0).map_err(err)?)
            .map_err(err)?
            .into(),
        None,
    )
    .map_err(err)?;
    let s = Schedule::constant(1.0, 1.0).map_err(err)?;
    let nm = NoiseModel::ConstantVolatility {
        sigma: DMatrix::identity(2, 2) * c,
    };
    let mut cfg = SimConfig::new(1e-2, 1.0);
    cfg.grid = SampleGrid::Explicit { times: vec![1.0] };
    cfg.gaps = GapEval::None;
    let finals = par_map(&seed_range(0, 2000), 0, |seed| {
        let mut c = cfg.clone();
        c.seed = seed;
        simulate(&p, &s, &nm, &c).map(|r| r.last().unwrap().y.clone())
    })
    .map_err(err)?;
    let finals: Vec<Vec<f64>> = finals.into_iter().collect::<Result<_, _>>().map_err(err)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for j in 0..2 {
        let col: Vec<f64> = finals.iter().map(|y| y[j]).collect();
        let (m, _) = mean_and_std_error(&col);
        let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
        let rel = (var - c * c).abs() / (c * c);
        ok &= rel <= 0.1;
        parts.push(format!("Var[Y_{}(1)] = {var:.4} vs {:.4} ({:.1}%)", j + 1, c * c, 100.0 * rel));
    }
    Ok((ok, parts.join(", ")))
}

fn c9_discrete_consistency() -> Outcome {
    // bit-for-bit agreement with dual averaging, lambda_t = dt
    let p = toy();
    let c11 = Schedule::constant(1.0, 1.0).map_err(err)?;
    let dt = 0.01;
    let mut st = TrajectoryState::new(&p, &c11, 0.0, &[0.8, 0.9]).map_err(err)?;
    let (mut y, mut x) = (st.y.clone(), st.x.clone());
    let mut identical = true;
    for _ in 0..2000 {
        let (yn, xn) = discrete_dual_averaging_step(&p, &y, &x, dt, 1.0).map_err(err)?;
        y = yn;
        x = xn;
        det_step(&p, &c11, &mut st, dt, Scheme::Euler).map_err(err)?;
        identical &= st.y == y && st.x == x;
    }

    // Euler deviation from an RK4 reference on a shared grid
    let run = |dt: f64, scheme: Scheme| {
        let mut cfg = SimConfig::new(dt, 10.0);
        cfg.scheme = scheme;
        cfg.grid = SampleGrid::Uniform { spacing: 0.1 };
        cfg.gaps = GapEval::None;
        cfg.y0 = Some(vec![0.8, 0.9]);
        simulate(&p, &c11, &NoiseModel::Zero, &cfg)
    };
    let reference = run(1e-4, Scheme::Rk4).map_err(err)?;
    let deviation = |dt: f64| -> Result<f64, String> {
        let rec = run(dt, Scheme::Euler).map_err(err)?;
        Ok(rec
            .samples
            .iter()
            .zip(&reference.samples)
            .map(|(a, b)| {
                a.x.iter()
                    .zip(&b.x)
                    .map(|(u, v)| (u - v).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max))
    };
    let (e1, e2) = (deviation(0.02)?, deviation(0.01)?);
    let ratio = e2 / e1;
    Ok((
        identical && (0.4..=0.6).contains(&ratio),
        format!(
            "bitwise identical: {identical}; deviation {e1:.3e} (dt=0.02) -> {e2:.3e} (dt=0.01), ratio {ratio:.3}"
        ),
    ))
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "metadata.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn c10_reproducibility() -> Outcome {
    let configs = [
        include_str!("../../../configs/pennies_simulate.toml").replace("horizon = 100.0", "horizon = 10.0"),
        include_str!("../../../configs/stochastic_rates.toml")
            .replace("size = 100", "size = 20")
            .replace("horizon = 200.0", "horizon = 20.0")
            .replace("dt = 0.001", "dt = 0.01")
            .replace("window = [20.0, 200.0]", "window = [2.0, 20.0]"),
        include_str!("../../../configs/pennies_ldp.toml")
            .replace("size = 500", "size = 120")
            .replace("dt = 0.001", "dt = 0.01"),
        include_str!("../../../configs/toy_smallnoise.toml")
            .replace("size = 50", "size = 12")
            .replace("horizon = 400.0", "horizon = 40.0")
            .replace("[200.0, 400.0]", "[20.0, 40.0]"),
    ];
    let tmp = tempfile::tempdir().map_err(err)?;
    let mut checked = 0;
    for (i, text) in configs.iter().enumerate() {
        let cfg = validate_config(text).map_err(err)?;
        let exp = cfg.experiment.unwrap();
        let mut outputs = Vec::new();
        for (j, workers) in [1usize, 4, 4].iter().enumerate() {
            let dir = tmp.path().join(format!("{i}_{j}"));
            run(exp, Some(&cfg), &dir, *workers).map_err(err)?;
            outputs.push(artifacts(&dir));
        }
        if outputs[0] != outputs[1] || outputs[1] != outputs[2] {
            return Ok((false, format!("{} artifacts differ between runs", exp.name())));
        }
        checked += outputs[0].len();
    }
    Ok((
        true,
        format!("{checked} artifacts byte-identical across reruns and worker counts 1/4"),
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 mirror-map identities", c1_mirror_identities, Some(10)),
        ("2 Fenchel coupling inequalities", c2_fenchel_suite, Some(10)),
        ("3 deterministic bound audit", c3_deterministic_audit, Some(60)),
        ("4 deterministic O(1/t) rate", c4_deterministic_rate, None),
        ("5 stochastic ergodic rate", c5_stochastic_rate, Some(600)),
        ("6 large-deviation concentration", c6_ldp, Some(900)),
        ("7 small-noise convergence", c7_small_noise, None),
        ("8 SDE variance micro-oracle", c8_sde_variance, None),
        ("9 discrete/continuous consistency", c9_discrete_consistency, None),
        ("10 reproducibility", c10_reproducibility, None),
    ];
    let mut failed = 0;
    for (name, f, limit) in criteria {
        let start = Instant::now();
        let result = f();
        let took = start.elapsed();
        let in_time = limit.is_none_or(|s| took <= Duration::from_secs(s));
        let (ok, detail) = match result {
            Ok((ok, d)) => (ok && in_time, d),
            Err(e) => (false, format!("error: {e}")),
        };
        let budget = limit.map_or(String::new(), |s| format!(", limit {s} s"));
        println!(
            "{} [{name}] {detail} ({:.1} s{budget})",
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
        failed += usize::from(!ok);
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

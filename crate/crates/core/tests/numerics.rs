use nalgebra::{DMatrix, DVector};
use smd_core::analysis::{ldp_envelope, ldp_experiment, mean_gap_markov_check, rate_study, LdpConfig};
use smd_core::dynamics::{simulate, GapEval, NoiseModel, SampleGrid, Schedule, SimConfig};
use smd_core::ensemble::seed_range;
use smd_core::geometry::Domain;
use smd_core::problems::VIProblem;

fn toy() -> VIProblem {
    VIProblem::toy(
        1.0,
        DVector::from_vec(vec![0.3, -0.2]),
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
        Domain::ball(1.0, vec![0.0, 0.0]).unwrap(),
    )
    .unwrap()
}

fn pennies() -> VIProblem {
    VIProblem::matrix_game(DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])).unwrap()
}

/// Final dual state of an EM run whose Brownian path is sampled at
/// `dt / refine`, so every resolution sees the same path.
fn em_final(p: &VIProblem, nm: &NoiseModel, seed: u64, dt: f64, refine: u32) -> Vec<f64> {
    let s = Schedule::constant(1.0, 1.0).unwrap();
    let mut cfg = SimConfig::new(dt, 2.0);
    cfg.seed = seed;
    cfg.brownian_refine = refine;
    cfg.grid = SampleGrid::Explicit { times: vec![2.0] };
    cfg.gaps = GapEval::None;
    let rec = simulate(p, &s, nm, &cfg).unwrap();
    rec.last().unwrap().y.clone()
}

#[test]
fn euler_maruyama_converges_strongly_under_common_noise() {
    let p = toy();
    let nm = NoiseModel::isotropic(2, 0.3).unwrap();
    let fine = 1.0 / 512.0;
    let mut e_coarse = 0.0;
    let mut e_half = 0.0;
    for seed in 0..40 {
        let reference = em_final(&p, &nm, seed, fine, 1);
        let coarse = em_final(&p, &nm, seed, 64.0 * fine, 64);
        let half = em_final(&p, &nm, seed, 32.0 * fine, 32);
        let dist = |a: &[f64]| {
            a.iter()
                .zip(&reference)
                .map(|(u, v)| (u - v).powi(2))
                .sum::<f64>()
        };
        e_coarse += dist(&coarse);
        e_half += dist(&half);
    }
    let ratio = (e_half / e_coarse).sqrt();
    assert!((0.3..=0.7).contains(&ratio), "ratio {ratio}");
}

#[test]
fn ensemble_statistics_do_not_depend_on_workers() {
    let p = pennies();
    let s = Schedule::power(0.25, 0.25).unwrap();
    let nm = NoiseModel::isotropic(4, 0.5).unwrap();
    let mut cfg = SimConfig::new(0.01, 20.0);
    cfg.gaps = GapEval::ErgodicOnly;
    let seeds = seed_range(5, 24);
    let (one, recs_one) = rate_study(&p, &s, &nm, &cfg, &seeds, 1, Some((2.0, 20.0))).unwrap();
    let (three, recs_three) = rate_study(&p, &s, &nm, &cfg, &seeds, 3, Some((2.0, 20.0))).unwrap();
    assert_eq!(one, three);
    // gap_x is NaN here, so compare serialized records
    let csv = |r: &[smd_core::dynamics::TrajectoryRecord]| r.iter().map(|x| x.to_csv()).collect::<Vec<_>>();
    assert_eq!(csv(&recs_one), csv(&recs_three));
}

#[test]
fn envelope_for_pennies_matches_hand_computation() {
    // power(0.25, 0.25) at t = 50, entropy on two 2-simplices
    let p = pennies();
    let s = Schedule::power(0.25, 0.25).unwrap();
    let t: f64 = 50.0;
    let env = ldp_envelope(p.geometry(), &s, 0.5, t).unwrap();
    let depth = 2.0 * 2f64.ln();
    let big_s = (51f64.powf(0.75) - 1.0) / 0.75;
    let lsq = (51f64.powf(0.5) - 1.0) / 0.5;
    let k_int = (51f64.powf(0.25) - 1.0) / 0.25;
    // two entropy factors with alpha = 1 each combine to 1/2
    let k = 2.0 * depth * 51f64.powf(0.25) + 0.25 / 0.5 * k_int;
    assert!((env.k - k).abs() < 1e-10 * k);
    assert!((env.q0 - k / big_s).abs() < 1e-12);
    let q1 = 0.5 * 2.0 * lsq.sqrt() / big_s;
    assert!((env.q1 - q1).abs() < 1e-12, "{} vs {q1}", env.q1);
}

#[test]
fn noisy_records_are_seed_reproducible() {
    let p = toy();
    let s = Schedule::power(0.5, 0.0).unwrap();
    let nm = NoiseModel::StateScaled {
        base: DMatrix::identity(2, 2) * 0.2,
        ell: 0.1,
    };
    let mut cfg = SimConfig::new(0.01, 5.0);
    cfg.seed = 3;
    let a = simulate(&p, &s, &nm, &cfg).unwrap();
    let b = simulate(&p, &s, &nm, &cfg).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert!(a.failure.is_none());
}

#[test]
fn markov_check_holds_for_noisy_toy() {
    let p = toy();
    let s = Schedule::constant(1.0, 1.0).unwrap();
    let nm = NoiseModel::isotropic(2, 0.5).unwrap();
    let cfg = LdpConfig {
        t_eval: 50.0,
        deltas: vec![1.0],
        ensemble_size: 500,
        base_seed: 1,
        dt: 0.01,
        workers: 0,
    };
    let report = ldp_experiment(&p, &s, &nm, &cfg).unwrap();
    let env = ldp_envelope(p.geometry(), &s, 0.5, 50.0).unwrap();
    let check = mean_gap_markov_check(&report.markov_samples, &env).unwrap();
    assert!(check.holds, "{check:?}");
    assert!(report.failing_rows().is_empty());
}

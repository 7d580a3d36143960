//! Gap series, rate fits, deterministic bound audits, small-noise
//! convergence and the large-deviation experiment.

use nalgebra::DVector;
use serde::Serialize;

use crate::dynamics::{
    simulate, GapEval, NoiseModel, SampleGrid, Schedule, SimConfig, TrajectoryRecord,
};
use crate::ensemble::{compensated_sum, mean_and_std_error, par_map, seed_range};
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::problems::{GapRegime, Monotonicity, VIProblem};

/// Gaps below this are left out of log-log fits (and counted), never floored.
pub const FIT_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub regime: GapRegime,
}

/// Gap of the ergodic average at every sample time of a record.
pub fn ergodic_gap_series(rec: &TrajectoryRecord, p: &VIProblem) -> Result<GapSeries> {
    if rec.samples.is_empty() {
        return Err(Error::InvalidArgument("trajectory record is empty".into()));
    }
    if rec.dim != p.dim() {
        return Err(Error::InvalidArgument(format!(
            "record has dimension {}, problem has {}",
            rec.dim,
            p.dim()
        )));
    }
    let mut values = Vec::with_capacity(rec.samples.len());
    let mut regime = GapRegime::NikaidoIsoda;
    for s in &rec.samples {
        let g = p.gap_unchecked(&s.xbar);
        regime = g.regime;
        values.push(g.value);
    }
    Ok(GapSeries {
        times: rec.times(),
        values,
        regime,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
    /// Points in the window left out for lying below [`FIT_FLOOR`].
    pub excluded: usize,
}

/// Least-squares fit of `log gap = intercept + exponent * log t` over
/// `window` (default: the last decade of the series).
pub fn fit_rate(times: &[f64], values: &[f64], window: Option<(f64, f64)>) -> Result<RateFit> {
    if times.len() != values.len() || times.is_empty() {
        return Err(Error::InvalidArgument(
            "times and values must be nonempty and of equal length".into(),
        ));
    }
    let t_end = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = window.unwrap_or((t_end / 10.0, t_end));
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("bad fit window ({lo}, {hi})")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = 0;
    for (&t, &g) in times.iter().zip(values) {
        if t < lo || t > hi {
            continue;
        }
        if !(g > 0.0) {
            return Err(Error::DegenerateData(format!(
                "gap value {g} at t = {t} is not positive"
            )));
        }
        if g < FIT_FLOOR {
            excluded += 1;
            continue;
        }
        xs.push(t.ln());
        ys.push(g.ln());
    }
    if xs.len() < 10 {
        return Err(Error::DegenerateData(format!(
            "only {} usable points in window [{lo}, {hi}]; need at least 10",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = compensated_sum(xs.iter().copied()) / n;
    let my = compensated_sum(ys.iter().copied()) / n;
    let sxx = compensated_sum(xs.iter().map(|x| (x - mx).powi(2)));
    let sxy = compensated_sum(xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)));
    let syy = compensated_sum(ys.iter().map(|y| (y - my).powi(2)));
    if sxx == 0.0 {
        return Err(Error::DegenerateData("all fit times coincide".into()));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        let ssr = compensated_sum(
            xs.iter()
                .zip(&ys)
                .map(|(x, y)| (y - intercept - exponent * x).powi(2)),
        );
        (1.0 - ssr / syy).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        exponent,
        intercept,
        r_squared,
        window: (lo, hi),
        points: xs.len(),
        excluded,
    })
}

/// Observed quantity versus its deterministic bound at each sample time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundAudit {
    pub quantity: &'static str,
    pub sample_times: Vec<f64>,
    pub observed: Vec<f64>,
    pub bound: Vec<f64>,
    pub slack: Vec<f64>,
    pub violations: usize,
    pub tol_rel: f64,
}

impl BoundAudit {
    fn build(quantity: &'static str, tol_rel: f64, rows: Vec<(f64, f64, f64)>) -> Self {
        let mut audit = BoundAudit {
            quantity,
            sample_times: Vec::new(),
            observed: Vec::new(),
            bound: Vec::new(),
            slack: Vec::new(),
            violations: 0,
            tol_rel,
        };
        for (t, obs, b) in rows {
            if obs - b > tol_rel * b + AUDIT_ABS_SLACK {
                audit.violations += 1;
            }
            audit.sample_times.push(t);
            audit.observed.push(obs);
            audit.bound.push(b);
            audit.slack.push(b - obs);
        }
        audit
    }

    pub fn min_slack(&self) -> f64 {
        self.slack.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

const AUDIT_TOL_REL: f64 = 1e-3;
/// Integrator slack added to the relative tolerance.
const AUDIT_ABS_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeterministicAudit {
    /// Gap of `X̄(t)` against `D / (eta(t) S(t))`.
    pub gap: BoundAudit,
    /// `||X̄(t) - x*||²` against `D / (gamma eta(t) S(t))`, strong problems only.
    pub distance: Option<BoundAudit>,
    pub depth: f64,
    /// Extra numerator term for a start away from the origin.
    pub init_slack: f64,
}

impl DeterministicAudit {
    pub fn violations(&self) -> usize {
        self.gap.violations + self.distance.as_ref().map_or(0, |d| d.violations)
    }
}

/// Audit a noise-free record against the deterministic gap bound (the depth
/// is the sum of per-factor depths on product domains), and for strongly
/// monotone problems against the squared-distance bound.
///
/// For a start `(t0, y0)` away from the origin the numerator gains
/// `||y0||₂ diam(X)`, an `O(1/S(t))` correction.
pub fn audit_deterministic_bound(
    rec: &TrajectoryRecord,
    p: &VIProblem,
    s: &Schedule,
) -> Result<DeterministicAudit> {
    if rec.noisy {
        return Err(Error::InvalidArgument(
            "the deterministic bound holds pathwise only for noise-free runs".into(),
        ));
    }
    let series = ergodic_gap_series(rec, p)?;
    let geo = p.geometry();
    let depth = geo.depth();
    let y0_norm = rec.y0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let init_slack = y0_norm * geo.euclidean_diameter();
    let numer = |t: f64| depth / s.eta(t) + init_slack;

    let rows = rec
        .samples
        .iter()
        .zip(&series.values)
        .map(|(smp, &g)| (smp.t, g, numer(smp.t) / smp.s))
        .collect();
    let gap = BoundAudit::build("gap", AUDIT_TOL_REL, rows);

    let distance = match p.operator().class() {
        Monotonicity::Strong(gamma) => {
            let xs = p.reference_solution()?;
            let rows = rec
                .samples
                .iter()
                .map(|smp| {
                    let d2 = (DVector::from_column_slice(&smp.xbar) - &xs).norm_squared();
                    (smp.t, d2, numer(smp.t) / (gamma * smp.s))
                })
                .collect();
            Some(BoundAudit::build("squared_distance", AUDIT_TOL_REL, rows))
        }
        _ => None,
    };
    Ok(DeterministicAudit {
        gap,
        distance,
        depth,
        init_slack,
    })
}

/// Settings of the small-noise experiment, run with `lambda = eta = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallNoiseConfig {
    pub horizon: f64,
    pub dt: f64,
    pub ensemble_size: usize,
    pub base_seed: u64,
    /// Distance to `x*` counted as converged.
    pub threshold: f64,
    /// Times at which the ensemble mean of `F(x*, Y(t))` is reported.
    pub checkpoints: Vec<f64>,
    /// Number of samples over the tail window `[T/2, T]`.
    pub tail_samples: usize,
    pub workers: usize,
}

impl SmallNoiseConfig {
    pub fn new(horizon: f64, dt: f64, ensemble_size: usize) -> Self {
        Self {
            horizon,
            dt,
            ensemble_size,
            base_seed: 0,
            threshold: 0.05,
            checkpoints: vec![horizon],
            tail_samples: 200,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallNoiseSeed {
    pub seed: u64,
    pub final_distance: f64,
    /// Largest sampled `F(x*, Y(t))` over `[T/2, T]`.
    pub tail_max_fenchel: f64,
    /// `F(x*, Y(t))` at each checkpoint.
    pub fenchel_at_checkpoints: Vec<f64>,
    /// `||X(t) - x*||` at each checkpoint.
    pub distance_at_checkpoints: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallNoiseReport {
    pub horizon: f64,
    pub threshold: f64,
    pub fraction_within: f64,
    pub checkpoints: Vec<f64>,
    pub mean_fenchel_at_checkpoints: Vec<f64>,
    /// Fraction of seeds within the threshold at each checkpoint.
    pub fraction_within_at_checkpoints: Vec<f64>,
    pub mean_tail_max_fenchel: f64,
    pub seeds: Vec<SmallNoiseSeed>,
    pub failures: Vec<(u64, String)>,
    /// The threshold and ensemble fraction are calibration choices.
    pub calibrated_threshold: bool,
}

/// Run the ensemble with unit weights and decaying noise, tracking distance
/// to the solution and the Fenchel energy `F(x*, Y(t))`.
pub fn small_noise_convergence(
    p: &VIProblem,
    nm: &NoiseModel,
    cfg: &SmallNoiseConfig,
) -> Result<SmallNoiseReport> {
    match p.operator().class() {
        Monotonicity::Strong(_) | Monotonicity::Strict => {}
        Monotonicity::Monotone => {
            return Err(Error::InvalidArgument(
                "small-noise convergence needs a strictly or strongly monotone problem".into(),
            ))
        }
    }
    if !matches!(nm, NoiseModel::Decaying { .. } | NoiseModel::Zero) {
        return Err(Error::InvalidArgument(
            "small-noise convergence needs a decaying (or zero) volatility".into(),
        ));
    }
    if cfg.ensemble_size == 0 || cfg.tail_samples < 2 {
        return Err(Error::InvalidArgument(
            "need at least one seed and two tail samples".into(),
        ));
    }
    let xs = p.reference_solution().map_err(|e| {
        Error::InvalidArgument(format!("no reference solution available: {e}"))
    })?;
    let xs = xs.as_slice().to_vec();
    let schedule = Schedule::constant(1.0, 1.0)?;
    let t_half = cfg.horizon / 2.0;
    let mut times: Vec<f64> = (0..cfg.tail_samples)
        .map(|i| t_half + (cfg.horizon - t_half) * i as f64 / (cfg.tail_samples - 1) as f64)
        .collect();
    times.extend(cfg.checkpoints.iter().copied());
    let mut sim = SimConfig::new(cfg.dt, cfg.horizon);
    sim.grid = SampleGrid::Explicit { times };
    sim.gaps = GapEval::None;

    let seeds = seed_range(cfg.base_seed, cfg.ensemble_size);
    let runs = par_map(&seeds, cfg.workers, |seed| {
        let mut c = sim.clone();
        c.seed = seed;
        simulate(p, &schedule, nm, &c)
    })?;

    let geo = p.geometry();
    let mut per_seed = Vec::new();
    let mut failures = Vec::new();
    for (seed, run) in seeds.iter().zip(runs) {
        let rec = run?;
        if let Some(f) = &rec.failure {
            failures.push((*seed, f.message.clone()));
            continue;
        }
        let last = rec.last().ok_or_else(|| Error::InvalidArgument("empty record".into()))?;
        let dist = |x: &[f64]| {
            x.iter()
                .zip(&xs)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let final_distance = dist(&last.x);
        let mut tail_max = f64::NEG_INFINITY;
        for smp in rec.samples.iter().filter(|s| s.t >= t_half - 0.5 * cfg.dt) {
            tail_max = tail_max.max(geo.fenchel_coupling(&xs, &smp.y)?);
        }
        let mut at_checkpoints = Vec::new();
        let mut dist_checkpoints = Vec::new();
        for &c in &cfg.checkpoints {
            let smp = rec
                .samples
                .iter()
                .min_by(|a, b| (a.t - c).abs().total_cmp(&(b.t - c).abs()))
                .expect("nonempty");
            at_checkpoints.push(geo.fenchel_coupling(&xs, &smp.y)?);
            dist_checkpoints.push(dist(&smp.x));
        }
        per_seed.push(SmallNoiseSeed {
            seed: *seed,
            final_distance,
            tail_max_fenchel: tail_max,
            fenchel_at_checkpoints: at_checkpoints,
            distance_at_checkpoints: dist_checkpoints,
        });
    }
    let m = per_seed.len().max(1) as f64;
    let within = per_seed
        .iter()
        .filter(|s| s.final_distance <= cfg.threshold)
        .count();
    let mean_at = (0..cfg.checkpoints.len())
        .map(|i| compensated_sum(per_seed.iter().map(|s| s.fenchel_at_checkpoints[i])) / m)
        .collect();
    Ok(SmallNoiseReport {
        horizon: cfg.horizon,
        threshold: cfg.threshold,
        fraction_within: within as f64 / cfg.ensemble_size as f64,
        checkpoints: cfg.checkpoints.clone(),
        mean_fenchel_at_checkpoints: mean_at,
        fraction_within_at_checkpoints: (0..cfg.checkpoints.len())
            .map(|i| {
                per_seed
                    .iter()
                    .filter(|s| s.distance_at_checkpoints[i] <= cfg.threshold)
                    .count() as f64
                    / cfg.ensemble_size as f64
            })
            .collect(),
        mean_tail_max_fenchel: compensated_sum(per_seed.iter().map(|s| s.tail_max_fenchel)) / m,
        seeds: per_seed,
        failures,
        calibrated_threshold: true,
    })
}

/// The large-deviation envelope at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LdpEnvelope {
    pub t: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub q0: f64,
    pub q1: f64,
    pub s: f64,
    pub depth: f64,
    pub alpha: f64,
    pub kappa: f64,
    pub diam: f64,
    pub sigma_star: f64,
}

/// `K = 2D/eta(t) + (sigma*²/alpha) ∫ lambda² eta`, `Q0 = K/S`,
/// `Q1 = sqrt(kappa) sigma* diam sqrt(∫ lambda²) / S`.
pub fn ldp_envelope(g: &Geometry, s: &Schedule, sigma_star: f64, t: f64) -> Result<LdpEnvelope> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    if !(sigma_star >= 0.0 && sigma_star.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sigma_star must be nonnegative, got {sigma_star}"
        )));
    }
    let v = s.eval(t)?;
    let depth = g.depth();
    let alpha = g.alpha();
    let kappa = g.kappa();
    let diam = g.euclidean_diameter();
    let k = 2.0 * depth / v.eta + sigma_star * sigma_star / alpha * s.lam2_eta_integral(t);
    Ok(LdpEnvelope {
        t,
        k,
        q0: k / v.s,
        q1: kappa.sqrt() * sigma_star * diam * v.lsq.sqrt() / v.s,
        s: v.s,
        depth,
        alpha,
        kappa,
        diam,
        sigma_star,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdpConfig {
    pub t_eval: f64,
    pub deltas: Vec<f64>,
    pub ensemble_size: usize,
    pub base_seed: u64,
    pub dt: f64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdpRow {
    pub delta: f64,
    pub threshold: f64,
    pub exceedances: usize,
    pub empirical: f64,
    pub std_error: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdpReport {
    pub t_eval: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub q0: f64,
    pub q1: f64,
    #[serde(rename = "kappa_const")]
    pub kappa: f64,
    pub diam: f64,
    pub alpha: f64,
    pub sigma_star: f64,
    pub ensemble_size: usize,
    /// Nikaido–Isoda for matrix games (it dominates the dual gap, so the
    /// comparison is stricter than the dual-gap statement).
    pub gap_regime: GapRegime,
    pub rows: Vec<LdpRow>,
    pub mean_gap: f64,
    /// Per-seed gaps, written to CSV rather than JSON.
    #[serde(skip)]
    pub gaps: Vec<f64>,
    /// `<v(p), X̄(t) - p>` at `p` = reference solution, per seed.
    #[serde(skip)]
    pub markov_samples: Vec<f64>,
    /// Seeds matching `gaps` and `markov_samples`.
    #[serde(skip)]
    pub seeds: Vec<u64>,
    pub failures: Vec<(u64, String)>,
}

impl LdpReport {
    /// Rows where the empirical frequency exceeds the bound by more than two
    /// binomial standard errors.
    pub fn failing_rows(&self) -> Vec<&LdpRow> {
        self.rows
            .iter()
            .filter(|r| r.empirical > r.bound + 2.0 * r.std_error)
            .collect()
    }
}

pub fn ldp_bound(delta: f64) -> f64 {
    (-delta * delta / 4.0).exp()
}

/// Ensemble estimate of `P(g(X̄(t)) >= Q0 + delta Q1)` for each delta.
pub fn ldp_experiment(
    p: &VIProblem,
    s: &Schedule,
    nm: &NoiseModel,
    cfg: &LdpConfig,
) -> Result<LdpReport> {
    if cfg.ensemble_size < 100 {
        return Err(Error::InvalidArgument(format!(
            "LDP ensembles need at least 100 seeds, got {}",
            cfg.ensemble_size
        )));
    }
    if cfg.deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::InvalidArgument("deltas must be nonnegative".into()));
    }
    let sigma_star = nm.sigma_star(p.geometry());
    let env = ldp_envelope(p.geometry(), s, sigma_star, cfg.t_eval)?;
    let reference = p.reference_solution()?;
    let v_ref = p.operator_value(&reference)?;

    let mut sim = SimConfig::new(cfg.dt, cfg.t_eval);
    sim.grid = SampleGrid::Explicit {
        times: vec![cfg.t_eval],
    };
    sim.gaps = GapEval::ErgodicOnly;
    let seeds = seed_range(cfg.base_seed, cfg.ensemble_size);
    let runs = par_map(&seeds, cfg.workers, |seed| {
        let mut c = sim.clone();
        c.seed = seed;
        simulate(p, s, nm, &c)
    })?;

    let mut gaps = Vec::new();
    let mut markov = Vec::new();
    let mut failures = Vec::new();
    let mut kept = Vec::new();
    let mut regime = GapRegime::CandidateLowerBound;
    for (seed, run) in seeds.iter().zip(runs) {
        let rec = run?;
        if let Some(f) = &rec.failure {
            failures.push((*seed, f.message.clone()));
            continue;
        }
        regime = rec.gap_regime;
        kept.push(*seed);
        let last = rec.last().expect("one sample");
        gaps.push(last.gap_xbar);
        let xbar = DVector::from_column_slice(&last.xbar);
        markov.push(v_ref.dot(&(xbar - &reference)));
    }
    let m = gaps.len();
    let rows = cfg
        .deltas
        .iter()
        .map(|&delta| {
            let threshold = env.q0 + delta * env.q1;
            let exceedances = gaps.iter().filter(|&&g| g >= threshold).count();
            let freq = if m == 0 { 0.0 } else { exceedances as f64 / m as f64 };
            LdpRow {
                delta,
                threshold,
                exceedances,
                empirical: freq,
                std_error: (freq * (1.0 - freq) / m.max(1) as f64).sqrt(),
                bound: ldp_bound(delta),
            }
        })
        .collect();
    Ok(LdpReport {
        t_eval: cfg.t_eval,
        k: env.k,
        q0: env.q0,
        q1: env.q1,
        kappa: env.kappa,
        diam: env.diam,
        alpha: env.alpha,
        sigma_star,
        ensemble_size: cfg.ensemble_size,
        gap_regime: regime,
        rows,
        mean_gap: compensated_sum(gaps.iter().copied()) / m.max(1) as f64,
        gaps,
        markov_samples: markov,
        seeds: kept,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovCheck {
    pub mean: f64,
    pub std_error: f64,
    /// `K(t) / (2 S(t))`.
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
    pub ensemble_size: usize,
}

/// Check `mean <v(p), X̄(t) - p> <= K/(2S) + 2 SE` on ensemble samples.
pub fn mean_gap_markov_check(samples: &[f64], env: &LdpEnvelope) -> Result<MarkovCheck> {
    if samples.len() < 100 {
        return Err(Error::InvalidArgument(format!(
            "need at least 100 samples, got {}",
            samples.len()
        )));
    }
    let (mean, se) = mean_and_std_error(samples);
    let bound = env.k / (2.0 * env.s);
    let slack = bound + 2.0 * se - mean;
    Ok(MarkovCheck {
        mean,
        std_error: se,
        bound,
        slack,
        holds: slack >= 0.0,
        ensemble_size: samples.len(),
    })
}

/// Mean gap series of an ensemble sharing one sample grid, with a rate fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateStudy {
    pub times: Vec<f64>,
    pub mean_gap: Vec<f64>,
    pub fit: RateFit,
    pub ensemble_size: usize,
    pub failures: Vec<(u64, String)>,
}

pub fn rate_study(
    p: &VIProblem,
    s: &Schedule,
    nm: &NoiseModel,
    sim: &SimConfig,
    seeds: &[u64],
    workers: usize,
    window: Option<(f64, f64)>,
) -> Result<(RateStudy, Vec<TrajectoryRecord>)> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("rate study needs at least one seed".into()));
    }
    let runs = par_map(seeds, workers, |seed| {
        let mut c = sim.clone();
        c.seed = seed;
        simulate(p, s, nm, &c)
    })?;
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for run in runs {
        let rec = run?;
        match &rec.failure {
            Some(f) => failures.push((rec.seed, f.message.clone())),
            None => records.push(rec),
        }
    }
    let first = records
        .first()
        .ok_or_else(|| Error::DegenerateData("every run failed".into()))?;
    let times = first.times();
    let m = records.len() as f64;
    let mean_gap: Vec<f64> = (0..times.len())
        .map(|i| compensated_sum(records.iter().map(|r| r.samples[i].gap_xbar)) / m)
        .collect();
    let fit = fit_rate(&times, &mean_gap, window)?;
    Ok((
        RateStudy {
            times,
            mean_gap,
            fit,
            ensemble_size: seeds.len(),
            failures,
        },
        records,
    ))
}

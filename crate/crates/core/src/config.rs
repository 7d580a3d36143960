//! Run configuration: TOML text in, fully typed and validated run out.
//!
//! Syntax errors carry a line and column. Semantic problems are collected
//! rather than reported one at a time, each naming its field and, where it
//! applies, the standing hypothesis it breaks.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{NoiseModel, SampleGrid, Schedule, Scheme, SimConfig};
use crate::error::{ConfigIssue, Error, Hypothesis, Result};
use crate::geometry::{DgfKind, DistanceGenerator, Domain, Geometry};
use crate::problems::{MonotoneOperator, OperatorKind, QuadraticPlayer, VIProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Check,
    Simulate,
    Rates,
    Ldp,
    Smallnoise,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Check => "check",
            Experiment::Simulate => "simulate",
            Experiment::Rates => "rates",
            Experiment::Ldp => "ldp",
            Experiment::Smallnoise => "smallnoise",
        }
    }
}

type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    /// Default output directory; the `--out` flag takes precedence.
    #[serde(default, skip_serializing)]
    pub output_dir: Option<String>,
    pub problem: RawProblem,
    #[serde(default)]
    pub geometry: Vec<RawGeometry>,
    #[serde(default)]
    pub schedule: RawSchedule,
    #[serde(default)]
    pub noise: RawNoise,
    #[serde(default)]
    pub integrator: RawIntegrator,
    #[serde(default)]
    pub ensemble: RawEnsemble,
    #[serde(default)]
    pub rates: RawRates,
    #[serde(default)]
    pub ldp: RawLdp,
    #[serde(default)]
    pub smallnoise: RawSmallNoise,
    #[serde(default)]
    pub check: RawCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawProblem {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_star: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub players: Option<Vec<RawPlayer>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_solution: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPlayer {
    pub own: Matrix,
    pub cross: Matrix,
    pub linear: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGeometry {
    pub key: String,
    pub domain: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSchedule {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lam: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

impl Default for RawSchedule {
    fn default() -> Self {
        Self {
            kind: "constant".into(),
            lam: None,
            eta: None,
            a: None,
            b: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNoise {
    pub kind: String,
    /// Frobenius norm of an isotropic constant volatility.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<String>,
}

impl Default for RawNoise {
    fn default() -> Self {
        Self {
            kind: "zero".into(),
            sigma_star: None,
            sigma: None,
            base: None,
            ell: None,
            sigma0: None,
            beta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawIntegrator {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub grid: SampleGrid,
    #[serde(default)]
    pub t0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<Vec<f64>>,
    #[serde(default = "one_u32")]
    pub brownian_refine: u32,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_horizon() -> f64 {
    100.0
}
fn one_u32() -> u32 {
    1
}

impl Default for RawIntegrator {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            horizon: default_horizon(),
            scheme: Scheme::default(),
            grid: SampleGrid::default(),
            t0: 0.0,
            y0: None,
            brownian_refine: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEnsemble {
    #[serde(default = "one_usize")]
    pub size: usize,
    #[serde(default)]
    pub base_seed: u64,
}

fn one_usize() -> usize {
    1
}

impl Default for RawEnsemble {
    fn default() -> Self {
        Self {
            size: 1,
            base_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RawRates {
    /// `[t_min, t_max]`; defaults to the last decade of the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    /// Acceptance band for the fitted exponent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_r_squared: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawLdp {
    #[serde(default = "default_t_eval")]
    pub t_eval: f64,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
}

fn default_t_eval() -> f64 {
    50.0
}
fn default_deltas() -> Vec<f64> {
    vec![1.0, 2.0, 3.0]
}

impl Default for RawLdp {
    fn default() -> Self {
        Self {
            t_eval: default_t_eval(),
            deltas: default_deltas(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSmallNoise {
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_fraction")]
    pub required_fraction: f64,
    #[serde(default)]
    pub checkpoints: Vec<f64>,
    #[serde(default = "default_tail")]
    pub tail_samples: usize,
}

fn default_threshold() -> f64 {
    0.05
}
fn default_fraction() -> f64 {
    0.95
}
fn default_tail() -> usize {
    200
}

impl Default for RawSmallNoise {
    fn default() -> Self {
        Self {
            threshold: default_threshold(),
            required_fraction: default_fraction(),
            checkpoints: Vec::new(),
            tail_samples: default_tail(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCheck {
    #[serde(default = "default_pairs")]
    pub probe_pairs: usize,
    #[serde(default)]
    pub probe_seed: u64,
}

fn default_pairs() -> usize {
    1000
}

impl Default for RawCheck {
    fn default() -> Self {
        Self {
            probe_pairs: default_pairs(),
            probe_seed: 0,
        }
    }
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub output_dir: Option<String>,
    pub problem: VIProblem,
    pub schedule: Schedule,
    pub noise: NoiseModel,
    pub sim: SimConfig,
    pub ensemble_size: usize,
    pub base_seed: u64,
    pub rates: RawRates,
    pub ldp: RawLdp,
    pub smallnoise: RawSmallNoise,
    pub check: RawCheck,
    /// The normalized configuration, embedded in every artifact.
    pub echo: serde_json::Value,
    pub raw: RawConfig,
}

impl RunConfig {
    /// Replace the base seed (the `--seed` flag) and refresh the echo.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.base_seed = seed;
        self.sim.seed = seed;
        self.raw.ensemble.base_seed = seed;
        self.echo = serde_json::to_value(&self.raw).expect("config serializes");
        self.sim.config_echo = self.echo.clone();
        self
    }
}

/// Parse and validate configuration text.
pub fn validate_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|r| line_col(text, r.start))
            .unwrap_or((0, 0));
        Error::ConfigParse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    validate_raw(raw)
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    validate_config(&text)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

struct Issues(Vec<ConfigIssue>);

impl Issues {
    fn push(&mut self, field: &str, message: impl Into<String>, hypothesis: Option<Hypothesis>) {
        self.0.push(ConfigIssue {
            field: field.into(),
            message: message.into(),
            hypothesis,
        });
    }
}

fn matrix(field: &str, rows: &Matrix, issues: &mut Issues) -> Option<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        issues.push(field, "must be a nonempty rectangular array of rows", None);
        return None;
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        issues.push(field, "entries must be finite", None);
        return None;
    }
    Some(DMatrix::from_row_iterator(r, c, rows.iter().flatten().copied()))
}

fn require<'a, T>(field: &str, v: &'a Option<T>, issues: &mut Issues) -> Option<&'a T> {
    if v.is_none() {
        issues.push(field, "is required for this kind", None);
    }
    v.as_ref()
}

/// Normalize a raw config and build the typed run, collecting every issue.
pub fn validate_raw(mut raw: RawConfig) -> Result<RunConfig> {
    let mut issues = Issues(Vec::new());

    // problem operator
    let op_kind = build_operator_kind(&raw.problem, &mut issues);
    let op = op_kind.and_then(|k| match MonotoneOperator::new(k) {
        Ok(op) => Some(op),
        Err(e) => {
            issues.push(
                "problem",
                e.to_string(),
                Some(Hypothesis::LipschitzMonotone),
            );
            None
        }
    });

    // geometry; matrix games default to entropy on both simplices
    if raw.geometry.is_empty() {
        if let (Some(m), "matrix_game") = (&raw.problem.matrix, raw.problem.kind.as_str()) {
            let (r, c) = (m.len(), m.first().map_or(0, |x| x.len()));
            raw.geometry = [r, c]
                .iter()
                .map(|&n| RawGeometry {
                    key: "entropy".into(),
                    domain: "simplex".into(),
                    n,
                    lo: None,
                    hi: None,
                    radius: None,
                    center: None,
                })
                .collect();
        } else {
            issues.push("geometry", "at least one [[geometry]] factor is required", None);
        }
    }
    let mut factors = Vec::new();
    for (i, g) in raw.geometry.iter().enumerate() {
        if let Some(f) = build_geometry(&format!("geometry[{i}]"), g, &mut issues) {
            factors.push(f);
        }
    }
    let geometry = if factors.len() == raw.geometry.len() && !factors.is_empty() {
        Geometry::product(factors).ok()
    } else {
        None
    };

    let known = raw.problem.known_solution.clone().map(DVector::from_vec);
    let problem = match (op, geometry) {
        (Some(op), Some(geo)) => match VIProblem::new(op, geo, known) {
            Ok(p) => Some(p),
            Err(e) => {
                issues.push("problem", e.to_string(), None);
                None
            }
        },
        _ => None,
    };

    let schedule = build_schedule(&mut raw.schedule, &mut issues);
    let noise = problem
        .as_ref()
        .and_then(|p| build_noise(&mut raw.noise, p.dim(), &mut issues));

    let it = &raw.integrator;
    if !(it.dt.is_finite() && it.dt > 0.0) {
        issues.push("integrator.dt", format!("must be positive, got {}", it.dt), None);
    }
    if !(it.horizon.is_finite() && it.horizon > 0.0) {
        issues.push(
            "integrator.horizon",
            format!("must be positive, got {}", it.horizon),
            None,
        );
    }
    if !(it.t0.is_finite() && it.t0 >= 0.0 && it.t0 < it.horizon) {
        issues.push("integrator.t0", "must lie in [0, horizon)", None);
    }
    if it.brownian_refine == 0 {
        issues.push("integrator.brownian_refine", "must be >= 1", None);
    }
    if let (Some(y0), Some(p)) = (&it.y0, &problem) {
        if y0.len() != p.dim() || y0.iter().any(|v| !v.is_finite()) {
            issues.push(
                "integrator.y0",
                format!("must hold {} finite values", p.dim()),
                None,
            );
        }
    }
    if raw.ensemble.size == 0 {
        issues.push("ensemble.size", "must be >= 1", None);
    }
    let mut sim = SimConfig::new(it.dt, it.horizon);
    sim.grid = it.grid.clone();
    sim.t0 = it.t0;
    sim.y0 = it.y0.clone();
    sim.scheme = it.scheme;
    sim.brownian_refine = it.brownian_refine;
    sim.seed = raw.ensemble.base_seed;
    if it.dt > 0.0 && it.horizon > it.t0 {
        if let Err(e) = sim.num_steps() {
            issues.push("integrator.horizon", e.to_string(), None);
        } else if let Ok(n) = sim.num_steps() {
            if let Err(e) = sim.grid.step_indices(sim.t0, sim.dt, n) {
                issues.push("integrator.grid", e.to_string(), None);
            }
        }
    }

    validate_experiment_sections(&raw, schedule.as_ref(), noise.as_ref(), &mut issues);

    if !issues.0.is_empty() {
        return Err(Error::ConfigInvalid(issues.0));
    }
    let echo = serde_json::to_value(&raw).expect("config serializes");
    sim.config_echo = echo.clone();
    Ok(RunConfig {
        experiment: raw.experiment,
        output_dir: raw.output_dir.clone(),
        problem: problem.expect("validated"),
        schedule: schedule.expect("validated"),
        noise: noise.expect("validated"),
        sim,
        ensemble_size: raw.ensemble.size,
        base_seed: raw.ensemble.base_seed,
        rates: raw.rates.clone(),
        ldp: raw.ldp.clone(),
        smallnoise: raw.smallnoise.clone(),
        check: raw.check.clone(),
        echo,
        raw,
    })
}

fn build_operator_kind(p: &RawProblem, issues: &mut Issues) -> Option<OperatorKind> {
    let vec = |v: &Vec<f64>| DVector::from_column_slice(v);
    match p.kind.as_str() {
        "affine" => {
            let a = require("problem.a", &p.a, issues).and_then(|m| matrix("problem.a", m, issues));
            let b = require("problem.b", &p.b, issues);
            Some(OperatorKind::Affine { a: a?, b: vec(b?) })
        }
        "quadratic_gradient" => {
            let m = require("problem.p", &p.p, issues).and_then(|m| matrix("problem.p", m, issues));
            let q = require("problem.q", &p.q, issues);
            Some(OperatorKind::QuadraticGradient { p: m?, q: vec(q?) })
        }
        "matrix_game" => {
            let m = require("problem.matrix", &p.matrix, issues)
                .and_then(|m| matrix("problem.matrix", m, issues));
            Some(OperatorKind::MatrixGame { m: m? })
        }
        "strongly_monotone_toy" => {
            let gamma = require("problem.gamma", &p.gamma, issues);
            let xs = require("problem.x_star", &p.x_star, issues);
            let n = xs.map_or(0, |x| x.len());
            let rotation = match &p.rotation {
                Some(r) => matrix("problem.rotation", r, issues),
                None => Some(DMatrix::zeros(n, n)),
            };
            if let Some(g) = gamma {
                if !(*g > 0.0) {
                    issues.push(
                        "problem.gamma",
                        format!("must be positive for strong monotonicity, got {g}"),
                        Some(Hypothesis::LipschitzMonotone),
                    );
                    return None;
                }
            }
            Some(OperatorKind::StronglyMonotoneToy {
                gamma: *gamma?,
                x_star: vec(xs?),
                rotation: rotation?,
            })
        }
        "convex_game" => {
            let players = require("problem.players", &p.players, issues)?;
            if players.len() != 2 {
                issues.push(
                    "problem.players",
                    format!("convex games are limited to 2 players, got {}", players.len()),
                    None,
                );
                return None;
            }
            let mut built = Vec::new();
            for (i, pl) in players.iter().enumerate() {
                let own = matrix(&format!("problem.players[{i}].own"), &pl.own, issues);
                let cross = matrix(&format!("problem.players[{i}].cross"), &pl.cross, issues);
                built.push(QuadraticPlayer {
                    own: own?,
                    cross: cross?,
                    linear: vec(&pl.linear),
                });
            }
            let [a, b]: [QuadraticPlayer; 2] = built.try_into().ok()?;
            Some(OperatorKind::ConvexGame {
                players: Box::new([a, b]),
            })
        }
        other => {
            issues.push(
                "problem.kind",
                format!(
                    "unknown operator kind '{other}' (expected affine, quadratic_gradient, \
                     matrix_game, strongly_monotone_toy or convex_game)"
                ),
                None,
            );
            None
        }
    }
}

fn build_geometry(field: &str, g: &RawGeometry, issues: &mut Issues) -> Option<DistanceGenerator> {
    let Some(kind) = DgfKind::from_key(&g.key) else {
        issues.push(
            &format!("{field}.key"),
            format!("unknown geometry '{}' (expected euclidean, entropy or fermi_dirac)", g.key),
            None,
        );
        return None;
    };
    let domain = match g.domain.as_str() {
        "simplex" => Domain::simplex(g.n),
        "box" => Domain::cube(g.n, g.lo.unwrap_or(0.0), g.hi.unwrap_or(1.0)),
        "ball" => Domain::ball(
            g.radius.unwrap_or(1.0),
            g.center.clone().unwrap_or_else(|| vec![0.0; g.n]),
        ),
        other => {
            issues.push(
                &format!("{field}.domain"),
                format!("unknown domain '{other}' (expected simplex, box or ball)"),
                None,
            );
            return None;
        }
    };
    let domain = match domain {
        Ok(d) if d.dim() == g.n => d,
        Ok(_) => {
            issues.push(&format!("{field}.center"), "length must equal n", None);
            return None;
        }
        Err(e) => {
            issues.push(&format!("{field}.domain"), e.to_string(), None);
            return None;
        }
    };
    match DistanceGenerator::new(domain, kind) {
        Ok(d) => Some(d),
        Err(e) => {
            issues.push(
                field,
                format!("geometry/domain mismatch: {e}"),
                None,
            );
            None
        }
    }
}

fn build_schedule(s: &mut RawSchedule, issues: &mut Issues) -> Option<Schedule> {
    match s.kind.as_str() {
        "constant" => {
            let lam = *s.lam.get_or_insert(1.0);
            let eta = *s.eta.get_or_insert(1.0);
            let mut ok = true;
            for (name, v) in [("lam", lam), ("eta", eta)] {
                if !(v.is_finite() && v > 0.0) {
                    issues.push(
                        &format!("schedule.{name}"),
                        format!("must be positive, got {v}"),
                        Some(Hypothesis::SmoothNonincreasingWeights),
                    );
                    ok = false;
                }
            }
            ok.then_some(Schedule::Constant { lam, eta })
        }
        "power" => {
            let a = *s.a.get_or_insert(0.0);
            let b = *s.b.get_or_insert(0.0);
            let mut ok = true;
            for (name, v) in [("a", a), ("b", b)] {
                if !(0.0..=1.0).contains(&v) {
                    // a negative exponent makes the weight increase
                    let h = (v < 0.0).then_some(Hypothesis::SmoothNonincreasingWeights);
                    issues.push(
                        &format!("schedule.{name}"),
                        format!("{name} must lie in [0,1], got {v}"),
                        h,
                    );
                    ok = false;
                }
            }
            ok.then_some(Schedule::Power { a, b })
        }
        other => {
            issues.push(
                "schedule.kind",
                format!(
                    "unsupported schedule '{other}'; only the C1 families constant and power \
                     are admitted"
                ),
                Some(Hypothesis::SmoothNonincreasingWeights),
            );
            None
        }
    }
}

fn build_noise(raw: &mut RawNoise, n: usize, issues: &mut Issues) -> Option<NoiseModel> {
    let h3 = Some(Hypothesis::BoundedLipschitzNoise);
    let model = match raw.kind.as_str() {
        "zero" => Some(NoiseModel::Zero),
        "constant_volatility" => match (&raw.sigma, raw.sigma_star) {
            (Some(m), None) => matrix("noise.sigma", m, issues)
                .map(|sigma| NoiseModel::ConstantVolatility { sigma }),
            (None, Some(s)) if s.is_finite() && s >= 0.0 => NoiseModel::isotropic(n, s).ok(),
            (None, Some(s)) => {
                issues.push(
                    "noise.sigma_star",
                    format!("must be finite and nonnegative, got {s}"),
                    h3,
                );
                None
            }
            _ => {
                issues.push("noise", "give exactly one of sigma or sigma_star", None);
                None
            }
        },
        "state_scaled" => {
            let base = require("noise.base", &raw.base, issues)
                .and_then(|m| matrix("noise.base", m, issues));
            let ell = require("noise.ell", &raw.ell, issues).copied();
            if let Some(l) = ell {
                if !(l.is_finite() && l >= 0.0) {
                    issues.push("noise.ell", format!("must be finite and nonnegative, got {l}"), h3);
                    return None;
                }
            }
            Some(NoiseModel::StateScaled {
                base: base?,
                ell: ell?,
            })
        }
        "decaying" => {
            let beta = raw.beta.get_or_insert_with(|| "log_decay".into()).clone();
            if beta != "log_decay" {
                issues.push(
                    "noise.beta",
                    format!("unsupported decay '{beta}'; only log_decay is admitted"),
                    Some(Hypothesis::LogarithmicNoiseDecay),
                );
                return None;
            }
            let s0 = *require("noise.sigma0", &raw.sigma0, issues)?;
            if !(s0.is_finite() && s0 >= 0.0) {
                issues.push(
                    "noise.sigma0",
                    format!("must be finite and nonnegative, got {s0}"),
                    Some(Hypothesis::LogarithmicNoiseDecay),
                );
                return None;
            }
            Some(NoiseModel::Decaying { sigma0: s0, n })
        }
        other => {
            issues.push(
                "noise.kind",
                format!(
                    "unknown noise '{other}' (expected zero, constant_volatility, state_scaled \
                     or decaying)"
                ),
                h3,
            );
            None
        }
    }?;
    if let Err(e) = model.validate(n) {
        issues.push("noise", e.to_string(), h3);
        return None;
    }
    Some(model)
}

fn validate_experiment_sections(
    raw: &RawConfig,
    schedule: Option<&Schedule>,
    noise: Option<&NoiseModel>,
    issues: &mut Issues,
) {
    let exp = raw.experiment;
    if let Some([lo, hi]) = raw.rates.window {
        if !(lo > 0.0 && hi > lo) {
            issues.push("rates.window", "must satisfy 0 < t_min < t_max", None);
        }
    }
    if let Some([lo, hi]) = raw.rates.exponent_range {
        if !(lo <= hi) {
            issues.push("rates.exponent_range", "lower end exceeds upper end", None);
        }
    }
    if !(raw.ldp.t_eval > 0.0) {
        issues.push("ldp.t_eval", "must be positive", None);
    }
    if raw.ldp.deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        issues.push("ldp.deltas", "must be finite and nonnegative", None);
    }
    if exp == Some(Experiment::Ldp) && raw.ensemble.size < 100 {
        issues.push(
            "ensemble.size",
            format!("ldp needs at least 100 seeds, got {}", raw.ensemble.size),
            None,
        );
    }
    if exp == Some(Experiment::Smallnoise) {
        if let Some(s) = schedule {
            if !s.is_unit() {
                issues.push(
                    "schedule",
                    "smallnoise runs with lambda = eta = 1",
                    None,
                );
            }
        }
        if let Some(nm) = noise {
            if !matches!(nm, NoiseModel::Decaying { .. } | NoiseModel::Zero) {
                issues.push(
                    "noise.kind",
                    "smallnoise needs a volatility vanishing at a logarithmic rate (decaying)",
                    Some(Hypothesis::LogarithmicNoiseDecay),
                );
            }
        }
    }
    let sn = &raw.smallnoise;
    if !(sn.threshold > 0.0) || !(0.0..=1.0).contains(&sn.required_fraction) {
        issues.push(
            "smallnoise",
            "threshold must be positive and required_fraction in [0,1]",
            None,
        );
    }
    if sn.tail_samples < 2 {
        issues.push("smallnoise.tail_samples", "must be >= 2", None);
    }
    if sn
        .checkpoints
        .iter()
        .any(|c| !(*c > raw.integrator.t0 && *c <= raw.integrator.horizon))
    {
        issues.push("smallnoise.checkpoints", "must lie in (t0, horizon]", None);
    }
    if raw.check.probe_pairs == 0 {
        issues.push("check.probe_pairs", "must be >= 1", None);
    }
}

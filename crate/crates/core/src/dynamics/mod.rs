//! Time integration of the mirror-descent flow
//!
//! ```text
//! dY = -lambda(t) [ v(X) dt + sigma(X, t) dW ],   X = Q(eta(t) Y)
//! ```
//!
//! with RK4 or Euler for the deterministic flow, Euler–Maruyama for the
//! stochastic one, and the discrete dual-averaging recursion.

mod noise;
mod record;
mod schedule;

pub use noise::NoiseModel;
pub use record::{ensemble_csv, Failure, Sample, TrajectoryRecord};
pub use schedule::{Schedule, ScheduleValues};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::VIProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Rk4,
    Euler,
}

/// Dual state, primal image and running integrals at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryState {
    pub t: f64,
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    /// `∫ lambda` since the start time.
    pub s_accum: f64,
    /// `∫ lambda²` since the start time.
    pub lsq_accum: f64,
    /// `∫ lambda(s) X(s) ds` since the start time.
    pub xbar_accum: Vec<f64>,
    t0: f64,
    steps: u64,
}

impl TrajectoryState {
    pub fn new(p: &VIProblem, s: &Schedule, t0: f64, y0: &[f64]) -> Result<Self> {
        if y0.len() != p.dim() {
            return Err(Error::InvalidArgument(format!(
                "initial dual state has length {}, expected {}",
                y0.len(),
                p.dim()
            )));
        }
        if !(t0.is_finite() && t0 >= 0.0) {
            return Err(Error::InvalidArgument(format!("start time must be >= 0, got {t0}")));
        }
        if !y0.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericInput("initial dual state is not finite".into()));
        }
        let mut x = vec![0.0; y0.len()];
        mirror_scaled(p, s.eta(t0), y0, &mut x);
        Ok(Self {
            t: t0,
            y: y0.to_vec(),
            x,
            s_accum: 0.0,
            lsq_accum: 0.0,
            xbar_accum: vec![0.0; y0.len()],
            t0,
            steps: 0,
        })
    }

    /// Start at `(t, y) = (0, 0)`.
    pub fn origin(p: &VIProblem, s: &Schedule) -> Result<Self> {
        Self::new(p, s, 0.0, &vec![0.0; p.dim()])
    }

    pub fn start_time(&self) -> f64 {
        self.t0
    }

    /// Ergodic average `X̄(t)`; `None` before any time has elapsed.
    pub fn xbar(&self) -> Option<Vec<f64>> {
        (self.s_accum > 0.0).then(|| self.xbar_accum.iter().map(|v| v / self.s_accum).collect())
    }

    fn time_after(&self, dt: f64) -> f64 {
        self.t0 + (self.steps + 1) as f64 * dt
    }

    fn advance_accumulators(&mut self, s: &Schedule, t_new: f64) {
        self.s_accum = s.s(t_new) - s.s(self.t0);
        self.lsq_accum = s.lsq(t_new) - s.lsq(self.t0);
        self.t = t_new;
        self.steps += 1;
    }
}

fn mirror_scaled(p: &VIProblem, eta: f64, y: &[f64], out: &mut [f64]) {
    let z: Vec<f64> = y.iter().map(|v| eta * v).collect();
    p.geometry().mirror_into(&z, out);
}

fn check_finite(st: &TrajectoryState, y: &[f64]) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericDivergence {
            last_valid_t: st.t,
            message: "dual state became non-finite".into(),
        })
    }
}

/// Seeded Brownian increments. Each step of length `dt` sums `refine`
/// sub-increments of length `dt / refine`, so a run at `dt` with `refine = 2k`
/// sees the same Brownian path as a run at `dt / 2` with `refine = k`.
#[derive(Debug, Clone)]
pub struct Brownian {
    rng: ChaCha8Rng,
    refine: u32,
    dim: usize,
}

impl Brownian {
    pub fn new(seed: u64, dim: usize, refine: u32) -> Result<Self> {
        if refine == 0 {
            return Err(Error::InvalidArgument("brownian refinement must be >= 1".into()));
        }
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            refine,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn increment(&mut self, dt: f64, out: &mut [f64]) {
        let h = (dt / self.refine as f64).sqrt();
        out.fill(0.0);
        for _ in 0..self.refine {
            for o in out.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                *o += h * z;
            }
        }
    }
}

/// One deterministic step of length `dt` with the given scheme.
pub fn det_step(
    p: &VIProblem,
    s: &Schedule,
    st: &mut TrajectoryState,
    dt: f64,
    scheme: Scheme,
) -> Result<()> {
    check_dt(dt)?;
    match scheme {
        Scheme::Euler => euler_maruyama(p, s, None, st, dt),
        Scheme::Rk4 => rk4(p, s, st, dt),
    }
}

/// One Euler–Maruyama step `Y <- Y - lambda(t) [v(X) dt + sigma(X, t) dW]`.
/// With zero noise no random numbers are drawn and the step equals the
/// deterministic Euler step bit for bit.
pub fn sde_step(
    p: &VIProblem,
    s: &Schedule,
    nm: &NoiseModel,
    st: &mut TrajectoryState,
    dt: f64,
    w: &mut Brownian,
) -> Result<()> {
    check_dt(dt)?;
    if nm.is_zero() {
        euler_maruyama(p, s, None, st, dt)
    } else {
        if w.dim() != nm.wiener_dim() {
            return Err(Error::InvalidArgument(format!(
                "Brownian dimension {} does not match the volatility's {}",
                w.dim(),
                nm.wiener_dim()
            )));
        }
        euler_maruyama(p, s, Some((nm, w)), st, dt)
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")))
    }
}

fn euler_maruyama(
    p: &VIProblem,
    s: &Schedule,
    noise: Option<(&NoiseModel, &mut Brownian)>,
    st: &mut TrajectoryState,
    dt: f64,
) -> Result<()> {
    let n = st.y.len();
    let lam = s.lambda(st.t);
    let mut v = vec![0.0; n];
    p.operator().value_into(&st.x, &mut v);
    let mut y = st.y.clone();
    let w = lam * dt;
    for (yj, vj) in y.iter_mut().zip(&v) {
        *yj -= w * vj;
    }
    if let Some((nm, bm)) = noise {
        let mut dw = vec![0.0; bm.dim()];
        bm.increment(dt, &mut dw);
        let mut kick = vec![0.0; n];
        nm.apply(&st.x, st.t, &dw, &mut kick);
        for (yj, kj) in y.iter_mut().zip(&kick) {
            *yj -= lam * kj;
        }
    }
    check_finite(st, &y)?;

    let t_new = st.time_after(dt);
    let ds = s.s(t_new) - s.s(st.t);
    for (a, xj) in st.xbar_accum.iter_mut().zip(&st.x) {
        *a += ds * xj;
    }
    st.advance_accumulators(s, t_new);
    st.y = y;
    mirror_scaled(p, s.eta(t_new), &st.y, &mut st.x);
    Ok(())
}

fn rk4(p: &VIProblem, s: &Schedule, st: &mut TrajectoryState, dt: f64) -> Result<()> {
    let n = st.y.len();
    let t = st.t;
    let t_new = st.time_after(dt);
    let t_mid = t + 0.5 * (t_new - t);
    let h = t_new - t;

    // drift k = -lambda(tt) v(Q(eta(tt) yy)); returns the stage's primal point too
    let drift = |tt: f64, yy: &[f64], xs: &mut Vec<f64>| -> Vec<f64> {
        mirror_scaled(p, s.eta(tt), yy, xs);
        let mut v = vec![0.0; n];
        p.operator().value_into(xs, &mut v);
        let lam = s.lambda(tt);
        v.iter().map(|vj| -lam * vj).collect()
    };
    let shifted = |k: &[f64], c: f64| -> Vec<f64> {
        st.y.iter().zip(k).map(|(y, k)| y + c * k).collect()
    };

    let mut x1 = vec![0.0; n];
    let mut x2 = vec![0.0; n];
    let mut x3 = vec![0.0; n];
    let mut x4 = vec![0.0; n];
    let k1 = drift(t, &st.y, &mut x1);
    let k2 = drift(t_mid, &shifted(&k1, 0.5 * h), &mut x2);
    let k3 = drift(t_mid, &shifted(&k2, 0.5 * h), &mut x3);
    let k4 = drift(t_new, &shifted(&k3, h), &mut x4);

    let y: Vec<f64> = (0..n)
        .map(|j| st.y[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
        .collect();
    check_finite(st, &y)?;

    // Simpson weights on the stage points, renormalized so the increment is an
    // exact multiple of ΔS times a convex combination
    let (l0, lm, l1) = (s.lambda(t), s.lambda(t_mid), s.lambda(t_new));
    let wsum = l0 + 4.0 * lm + l1;
    let ds = s.s(t_new) - s.s(t);
    for j in 0..n {
        let avg = (l0 * x1[j] + 2.0 * lm * (x2[j] + x3[j]) + l1 * x4[j]) / wsum;
        st.xbar_accum[j] += ds * avg;
    }
    st.advance_accumulators(s, t_new);
    st.y = y;
    mirror_scaled(p, s.eta(t_new), &st.y, &mut st.x);
    Ok(())
}

/// One step of dual averaging: `y' = y - lam_t v(x)`, `x' = Q(eta_next y')`.
pub fn discrete_dual_averaging_step(
    p: &VIProblem,
    y: &[f64],
    x: &[f64],
    lam_t: f64,
    eta_next: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(lam_t > 0.0 && eta_next > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "weights must be positive, got lam_t={lam_t}, eta_next={eta_next}"
        )));
    }
    let mut v = vec![0.0; y.len()];
    p.operator().value_into(x, &mut v);
    let mut y_next = y.to_vec();
    for (yj, vj) in y_next.iter_mut().zip(&v) {
        *yj -= lam_t * vj;
    }
    if !y_next.iter().all(|v| v.is_finite()) {
        return Err(Error::NumericInput("dual iterate became non-finite".into()));
    }
    let mut x_next = vec![0.0; y.len()];
    mirror_scaled(p, eta_next, &y_next, &mut x_next);
    Ok((y_next, x_next))
}

/// Where the record takes its samples. Times are snapped to the step grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampleGrid {
    /// Log-spaced from `t_min` to the horizon.
    Geometric { per_decade: u32, t_min: f64 },
    Uniform { spacing: f64 },
    Explicit { times: Vec<f64> },
    EveryStep,
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid::Geometric {
            per_decade: 40,
            t_min: 0.1,
        }
    }
}

impl SampleGrid {
    /// Step indices `k >= 1` at which to sample, always ending at `nsteps`.
    pub fn step_indices(&self, t0: f64, dt: f64, nsteps: u64) -> Result<Vec<u64>> {
        let to_k = |t: f64| (((t - t0) / dt).round().max(1.0) as u64).min(nsteps);
        let end = t0 + nsteps as f64 * dt;
        let mut ks: Vec<u64> = match self {
            SampleGrid::Geometric { per_decade, t_min } => {
                if *per_decade == 0 || !(*t_min > 0.0) {
                    return Err(Error::InvalidArgument(
                        "geometric grid needs per_decade >= 1 and t_min > 0".into(),
                    ));
                }
                let start = t_min.max(t0 + dt);
                let mut out = Vec::new();
                let ratio = 10f64.powf(1.0 / *per_decade as f64);
                let mut i = 0;
                loop {
                    let t = start * ratio.powi(i);
                    if t > end {
                        break;
                    }
                    out.push(to_k(t));
                    i += 1;
                }
                out
            }
            SampleGrid::Uniform { spacing } => {
                if !(*spacing >= dt * (1.0 - 1e-9)) {
                    return Err(Error::InvalidArgument(format!(
                        "sample spacing {spacing} is finer than dt {dt}"
                    )));
                }
                let count = ((end - t0) / spacing + 1e-9).floor() as u64;
                (1..=count).map(|i| to_k(t0 + i as f64 * spacing)).collect()
            }
            SampleGrid::Explicit { times } => {
                if times.iter().any(|t| !(t.is_finite() && *t > t0 && *t <= end * (1.0 + 1e-12))) {
                    return Err(Error::InvalidArgument(
                        "explicit sample times must lie in (t0, horizon]".into(),
                    ));
                }
                times.iter().map(|t| to_k(*t)).collect()
            }
            SampleGrid::EveryStep => (1..=nsteps).collect(),
        };
        ks.push(nsteps);
        ks.sort_unstable();
        ks.dedup();
        Ok(ks)
    }
}

/// Which gap values a record evaluates at its sample times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GapEval {
    #[default]
    Both,
    ErgodicOnly,
    None,
}

/// Integrator settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub grid: SampleGrid,
    pub seed: u64,
    pub t0: f64,
    pub y0: Option<Vec<f64>>,
    /// Deterministic scheme; noisy runs always use Euler–Maruyama.
    pub scheme: Scheme,
    pub brownian_refine: u32,
    pub gaps: GapEval,
    pub config_echo: serde_json::Value,
}

impl SimConfig {
    pub fn new(dt: f64, horizon: f64) -> Self {
        Self {
            dt,
            horizon,
            grid: SampleGrid::default(),
            seed: 0,
            t0: 0.0,
            y0: None,
            scheme: Scheme::Rk4,
            brownian_refine: 1,
            gaps: GapEval::Both,
            config_echo: serde_json::Value::Null,
        }
    }

    pub fn num_steps(&self) -> Result<u64> {
        check_dt(self.dt)?;
        let span = self.horizon - self.t0;
        if !(span > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "horizon {} must exceed the start time {}",
                self.horizon, self.t0
            )));
        }
        let k = (span / self.dt).round();
        if (k * self.dt - span).abs() > 1e-9 * span.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "horizon span {span} is not a whole number of steps of {}",
                self.dt
            )));
        }
        Ok(k as u64)
    }
}

/// Integrate one trajectory and evaluate the gap series at the sample times.
///
/// A step failure does not discard the run: the record keeps the samples
/// taken so far and carries a [`Failure`] marker.
pub fn simulate(
    p: &VIProblem,
    s: &Schedule,
    nm: &NoiseModel,
    cfg: &SimConfig,
) -> Result<TrajectoryRecord> {
    s.validate()?;
    nm.validate(p.dim())?;
    let nsteps = cfg.num_steps()?;
    let ks = cfg.grid.step_indices(cfg.t0, cfg.dt, nsteps)?;
    let y0 = cfg.y0.clone().unwrap_or_else(|| vec![0.0; p.dim()]);
    let mut st = TrajectoryState::new(p, s, cfg.t0, &y0)?;
    let noisy = !nm.is_zero();
    let mut bm = Brownian::new(cfg.seed, nm.wiener_dim(), cfg.brownian_refine)?;

    let mut rec = TrajectoryRecord::new(p, cfg, noisy, y0);
    let mut next = ks.iter().peekable();
    for k in 1..=nsteps {
        let res = if noisy {
            sde_step(p, s, nm, &mut st, cfg.dt, &mut bm)
        } else {
            det_step(p, s, &mut st, cfg.dt, cfg.scheme)
        };
        if let Err(e) = res {
            let last_valid_t = match &e {
                Error::NumericDivergence { last_valid_t, .. } => *last_valid_t,
                _ => st.t,
            };
            rec.failure = Some(Failure {
                last_valid_t,
                message: e.to_string(),
            });
            return Ok(rec);
        }
        if next.peek() == Some(&&k) {
            next.next();
            rec.push_state(p, &st, cfg.gaps);
        }
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use nalgebra::{DMatrix, DVector};

    fn toy(gamma: f64, xs: &[f64], radius: f64) -> VIProblem {
        let n = xs.len();
        VIProblem::toy(
            gamma,
            DVector::from_column_slice(xs),
            DMatrix::zeros(n, n),
            Domain::ball(radius, vec![0.0; n]).unwrap(),
        )
        .unwrap()
    }

    fn pennies() -> VIProblem {
        VIProblem::matrix_game(DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])).unwrap()
    }

    #[test]
    fn zero_drift_keeps_dual_state() {
        let zero = VIProblem::new(
            crate::problems::MonotoneOperator::new(crate::problems::OperatorKind::Affine {
                a: DMatrix::zeros(2, 2),
                b: DVector::zeros(2),
            })
            .unwrap(),
            crate::geometry::DistanceGenerator::entropy(2).unwrap().into(),
            None,
        )
        .unwrap();
        let s = Schedule::power(0.0, 0.5).unwrap();
        let mut st = TrajectoryState::new(&zero, &s, 0.0, &[1.0, 0.0]).unwrap();
        for _ in 0..100 {
            det_step(&zero, &s, &mut st, 0.05, Scheme::Rk4).unwrap();
        }
        assert_eq!(st.y, vec![1.0, 0.0]);
        // x moves only because eta shrinks
        let eta = s.eta(st.t);
        let expect = 1.0 / (1.0 + (-eta).exp());
        assert!((st.x[0] - expect).abs() < 1e-14);
    }

    #[test]
    fn toy_converges_exponentially() {
        let p = toy(1.0, &[0.2, -0.1], 1.0);
        let s = Schedule::constant(1.0, 1.0).unwrap();
        let mut st = TrajectoryState::origin(&p, &s).unwrap();
        let xs = [0.2, -0.1];
        let mut prev = f64::INFINITY;
        for _ in 0..20_000 {
            det_step(&p, &s, &mut st, 1e-3, Scheme::Rk4).unwrap();
            let d = ((st.x[0] - xs[0]).powi(2) + (st.x[1] - xs[1]).powi(2)).sqrt();
            assert!(d <= prev + 1e-15);
            prev = d;
        }
        assert!(prev <= 1e-6);
        // inside the ball y(t) = x* (1 - e^-t)
        let oracle = 0.2 * (1.0 - (-20.0f64).exp());
        assert!((st.y[0] - oracle).abs() < 1e-10);
    }

    #[test]
    fn fenchel_energy_decreases_for_pennies() {
        let p = pennies();
        let s = Schedule::constant(1.0, 1.0).unwrap();
        let xs = p.known_solution().unwrap().as_slice().to_vec();
        let mut st = TrajectoryState::new(&p, &s, 0.0, &[1.0, 0.0, -0.5, 0.3]).unwrap();
        let mut prev = p.geometry().fenchel_coupling(&xs, &st.y).unwrap();
        for _ in 0..5000 {
            det_step(&p, &s, &mut st, 1e-3, Scheme::Rk4).unwrap();
            let f = p.geometry().fenchel_coupling(&xs, &st.y).unwrap();
            assert!(f <= prev + 1e-8);
            prev = f;
        }
    }

    #[test]
    fn zero_noise_sde_equals_euler() {
        let p = toy(2.0, &[0.1, 0.3], 1.0);
        let s = Schedule::power(0.3, 0.2).unwrap();
        let mut a = TrajectoryState::origin(&p, &s).unwrap();
        let mut b = a.clone();
        let mut w = Brownian::new(7, 2, 1).unwrap();
        for _ in 0..500 {
            det_step(&p, &s, &mut a, 0.01, Scheme::Euler).unwrap();
            sde_step(&p, &s, &NoiseModel::Zero, &mut b, 0.01, &mut w).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn euler_matches_dual_averaging_bitwise() {
        let p = pennies();
        let s = Schedule::power(0.4, 0.3).unwrap();
        let dt = 0.01;
        let mut st = TrajectoryState::new(&p, &s, 0.0, &[0.3, 0.0, 0.0, -0.2]).unwrap();
        let mut y = st.y.clone();
        let mut x = st.x.clone();
        for k in 0..1000u64 {
            let t = k as f64 * dt;
            let t1 = (k + 1) as f64 * dt;
            let (yn, xn) = discrete_dual_averaging_step(&p, &y, &x, s.lambda(t) * dt, s.eta(t1)).unwrap();
            y = yn;
            x = xn;
            det_step(&p, &s, &mut st, dt, Scheme::Euler).unwrap();
            assert_eq!(st.y, y);
            assert_eq!(st.x, x);
        }
    }

    #[test]
    fn dual_average_matches_running_mean_form() {
        // lambda_t = 1, eta_t = 1/t gives x_t = Q(-(1/t) Σ_{s<t} v(x_s))
        let p = pennies();
        let mut y = vec![0.0; 4];
        let mut x = p.geometry().prox_center().as_slice().to_vec();
        x[0] = 0.9;
        x[1] = 0.1;
        let mut vs: Vec<Vec<f64>> = Vec::new();
        for t in 1..=5 {
            vs.push(p.operator_value(&DVector::from_column_slice(&x)).unwrap().as_slice().to_vec());
            let (yn, xn) = discrete_dual_averaging_step(&p, &y, &x, 1.0, 1.0 / t as f64).unwrap();
            let avg: Vec<f64> = (0..4).map(|j| -vs.iter().map(|v| v[j]).sum::<f64>() / t as f64).collect();
            let direct = p.geometry().mirror(&DVector::from_vec(avg)).unwrap();
            for j in 0..4 {
                assert!((xn[j] - direct[j]).abs() < 1e-14);
            }
            y = yn;
            x = xn;
        }
    }

    #[test]
    fn brownian_variance_and_refinement() {
        let mut coarse = Brownian::new(3, 1, 2).unwrap();
        let mut fine = Brownian::new(3, 1, 1).unwrap();
        for _ in 0..100 {
            let mut c = [0.0];
            coarse.increment(0.02, &mut c);
            let (mut f1, mut f2) = ([0.0], [0.0]);
            fine.increment(0.01, &mut f1);
            fine.increment(0.01, &mut f2);
            assert!((c[0] - (f1[0] + f2[0])).abs() < 1e-15);
        }
    }

    #[test]
    fn accumulators_match_closed_form_and_raw_states() {
        let p = toy(1.0, &[0.1, 0.1], 1.0);
        let s = Schedule::power(0.5, 0.25).unwrap();
        let nm = NoiseModel::isotropic(2, 0.3).unwrap();
        let mut cfg = SimConfig::new(0.01, 5.0);
        cfg.grid = SampleGrid::EveryStep;
        cfg.seed = 11;
        let rec = simulate(&p, &s, &nm, &cfg).unwrap();
        assert!(rec.failure.is_none());
        let mut acc = [0.0, 0.0];
        let mut prev_t = 0.0;
        let mut prev_x = p.geometry().prox_center().as_slice().to_vec();
        for smp in &rec.samples {
            let exact = s.s(smp.t);
            assert!((smp.s - exact).abs() <= 1e-6 * exact);
            let ds = s.s(smp.t) - s.s(prev_t);
            for j in 0..2 {
                acc[j] += ds * prev_x[j];
                assert!((acc[j] / smp.s - smp.xbar[j]).abs() < 1e-9);
            }
            assert!(p.geometry().contains(&smp.x) && p.geometry().contains(&smp.xbar));
            prev_t = smp.t;
            prev_x = smp.x.clone();
        }
    }

    #[test]
    fn identical_seeds_give_identical_records() {
        let p = pennies();
        let s = Schedule::power(0.25, 0.25).unwrap();
        let nm = NoiseModel::isotropic(4, 0.5).unwrap();
        let mut cfg = SimConfig::new(0.01, 10.0);
        cfg.seed = 99;
        let a = simulate(&p, &s, &nm, &cfg).unwrap();
        let b = simulate(&p, &s, &nm, &cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        cfg.seed = 100;
        let c = simulate(&p, &s, &nm, &cfg).unwrap();
        assert_ne!(a.to_csv(), c.to_csv());
    }

    #[test]
    fn sample_grid_snaps_and_ends_at_horizon() {
        let ks = SampleGrid::default().step_indices(0.0, 1e-3, 100_000).unwrap();
        assert_eq!(*ks.last().unwrap(), 100_000);
        assert!(ks.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(ks[0], 100);
        let u = SampleGrid::Uniform { spacing: 0.5 }.step_indices(0.0, 0.1, 20).unwrap();
        assert_eq!(u, vec![5, 10, 15, 20]);
        assert!(SampleGrid::Uniform { spacing: 0.01 }.step_indices(0.0, 0.1, 20).is_err());
    }

    #[test]
    fn bad_steps_are_rejected() {
        let p = pennies();
        let s = Schedule::constant(1.0, 1.0).unwrap();
        let mut st = TrajectoryState::origin(&p, &s).unwrap();
        assert!(det_step(&p, &s, &mut st, 0.0, Scheme::Rk4).is_err());
        assert!(SimConfig::new(0.3, 1.0).num_steps().is_err());
        assert!(discrete_dual_averaging_step(&p, &[0.0; 4], &[0.5; 4], 0.0, 1.0).is_err());
    }
}

//! Monotone operator test beds and their gap functions.
//!
//! Every operator shipped here is affine, `v(x) = J x + c`, which keeps the
//! monotonicity class and the Lipschitz constant closed-form (smallest
//! eigenvalue of the symmetric part and spectral norm of `J`). The kinds only
//! differ in how `J` and `c` are assembled.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{DistanceGenerator, Domain, Geometry};

const PSD_TOL: f64 = 1e-9;
const MINTY_TOL: f64 = 1e-7;
const MINTY_SAMPLES: usize = 1000;
const ORACLE_RESIDUAL: f64 = 1e-10;
const ORACLE_MAX_ITERS: usize = 2_000_000;

/// Quadratic cost `c(x) = ½ xᵢᵀ own xᵢ + xᵢᵀ cross x₋ᵢ + linearᵀ xᵢ` of one player.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPlayer {
    pub own: DMatrix<f64>,
    pub cross: DMatrix<f64>,
    pub linear: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    /// `v(x) = A x + b`.
    Affine { a: DMatrix<f64>, b: DVector<f64> },
    /// Gradient of `½ xᵀ P x + qᵀ x` with `P` symmetric positive semidefinite.
    QuadraticGradient { p: DMatrix<f64>, q: DVector<f64> },
    /// Two-player zero-sum game; player 1 minimizes `<x¹, M x²>`.
    MatrixGame { m: DMatrix<f64> },
    /// `v(x) = gamma (x - x*) + R (x - x*)` with `R` skew-symmetric.
    StronglyMonotoneToy {
        gamma: f64,
        x_star: DVector<f64>,
        rotation: DMatrix<f64>,
    },
    /// Two players with individually convex quadratic costs.
    ConvexGame { players: Box<[QuadraticPlayer; 2]> },
}

impl OperatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::Affine { .. } => "affine",
            OperatorKind::QuadraticGradient { .. } => "quadratic_gradient",
            OperatorKind::MatrixGame { .. } => "matrix_game",
            OperatorKind::StronglyMonotoneToy { .. } => "strongly_monotone_toy",
            OperatorKind::ConvexGame { .. } => "convex_game",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Monotone,
    Strict,
    Strong(f64),
}

impl Monotonicity {
    pub fn strong_modulus(&self) -> Option<f64> {
        match self {
            Monotonicity::Strong(g) => Some(*g),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneOperator {
    kind: OperatorKind,
    jacobian: DMatrix<f64>,
    offset: DVector<f64>,
    lipschitz: f64,
    class: Monotonicity,
}

fn square(name: &str, m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::InvalidArgument(format!(
            "{name} must be a nonempty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

fn finite(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericInput(format!("{name} has non-finite entries")))
    }
}

fn sym_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn min_eigenvalue(sym: &DMatrix<f64>) -> f64 {
    sym.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

impl MonotoneOperator {
    pub fn new(kind: OperatorKind) -> Result<Self> {
        let (jacobian, offset) = match &kind {
            OperatorKind::Affine { a, b } => {
                let n = square("A", a)?;
                if b.len() != n {
                    return Err(Error::InvalidArgument(format!(
                        "b has length {}, expected {n}",
                        b.len()
                    )));
                }
                (a.clone(), b.clone())
            }
            OperatorKind::QuadraticGradient { p, q } => {
                let n = square("P", p)?;
                if q.len() != n {
                    return Err(Error::InvalidArgument(format!(
                        "q has length {}, expected {n}",
                        q.len()
                    )));
                }
                if (p - p.transpose()).amax() > 1e-12 * p.amax().max(1.0) {
                    return Err(Error::InvalidArgument("P must be symmetric".into()));
                }
                (p.clone(), q.clone())
            }
            OperatorKind::MatrixGame { m } => {
                let (r, c) = m.shape();
                if r == 0 || c == 0 {
                    return Err(Error::InvalidArgument("game matrix is empty".into()));
                }
                let mut j = DMatrix::zeros(r + c, r + c);
                j.view_mut((0, r), (r, c)).copy_from(m);
                j.view_mut((r, 0), (c, r)).copy_from(&(-m.transpose()));
                (j, DVector::zeros(r + c))
            }
            OperatorKind::StronglyMonotoneToy {
                gamma,
                x_star,
                rotation,
            } => {
                let n = square("rotation", rotation)?;
                if x_star.len() != n {
                    return Err(Error::InvalidArgument(format!(
                        "x_star has length {}, expected {n}",
                        x_star.len()
                    )));
                }
                if !(gamma.is_finite() && *gamma > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "gamma must be positive, got {gamma}"
                    )));
                }
                if (rotation + rotation.transpose()).amax() > 1e-12 {
                    return Err(Error::InvalidArgument(
                        "rotation must be skew-symmetric".into(),
                    ));
                }
                let j = DMatrix::identity(n, n) * *gamma + rotation;
                let c = -(&j * x_star);
                (j, c)
            }
            OperatorKind::ConvexGame { players } => {
                let [p1, p2] = players.as_ref();
                let n1 = square("player 1 own", &p1.own)?;
                let n2 = square("player 2 own", &p2.own)?;
                if p1.cross.shape() != (n1, n2) || p2.cross.shape() != (n2, n1) {
                    return Err(Error::InvalidArgument(
                        "cross-cost matrices have inconsistent shapes".into(),
                    ));
                }
                if p1.linear.len() != n1 || p2.linear.len() != n2 {
                    return Err(Error::InvalidArgument(
                        "linear cost vectors have inconsistent lengths".into(),
                    ));
                }
                for (i, p) in [p1, p2].iter().enumerate() {
                    if min_eigenvalue(&sym_part(&p.own)) < -PSD_TOL {
                        return Err(Error::InvalidArgument(format!(
                            "player {} cost is not convex in its own action",
                            i + 1
                        )));
                    }
                }
                let n = n1 + n2;
                let mut j = DMatrix::zeros(n, n);
                j.view_mut((0, 0), (n1, n1)).copy_from(&p1.own);
                j.view_mut((0, n1), (n1, n2)).copy_from(&p1.cross);
                j.view_mut((n1, 0), (n2, n1)).copy_from(&p2.cross);
                j.view_mut((n1, n1), (n2, n2)).copy_from(&p2.own);
                let c = DVector::from_iterator(
                    n,
                    p1.linear.iter().chain(p2.linear.iter()).copied(),
                );
                (j, c)
            }
        };
        finite("operator matrix", jacobian.as_slice())?;
        finite("operator offset", offset.as_slice())?;

        let mu = min_eigenvalue(&sym_part(&jacobian));
        let scale = jacobian.amax().max(1.0);
        if mu < -PSD_TOL * scale {
            return Err(Error::InvalidArgument(format!(
                "operator is not monotone: symmetric part has eigenvalue {mu:.3e}"
            )));
        }
        let class = match &kind {
            OperatorKind::StronglyMonotoneToy { gamma, .. } => Monotonicity::Strong(*gamma),
            _ if mu > 1e-10 * scale => Monotonicity::Strong(mu),
            _ => Monotonicity::Monotone,
        };
        let lipschitz = spectral_norm(&jacobian);
        Ok(Self {
            kind,
            jacobian,
            offset,
            lipschitz,
            class,
        })
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    /// Euclidean Lipschitz constant (spectral norm of the Jacobian).
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn class(&self) -> Monotonicity {
        self.class
    }

    pub fn jacobian(&self) -> &DMatrix<f64> {
        &self.jacobian
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    /// `out = J x + c` without a membership check.
    pub fn value_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(self.offset.as_slice());
        let n = self.dim();
        let j = self.jacobian.as_slice();
        for (col, &xc) in x.iter().enumerate() {
            if xc == 0.0 {
                continue;
            }
            let column = &j[col * n..(col + 1) * n];
            for (o, &a) in out.iter_mut().zip(column) {
                *o += a * xc;
            }
        }
    }

    fn value(&self, x: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        self.value_into(x, out.as_mut_slice());
        out
    }
}

/// Which evaluation regime produced a gap value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapRegime {
    /// Maximum over a finite candidate set only: a lower bound on the true gap.
    CandidateLowerBound,
    /// Exact: the inner objective is linear and the domain a polytope.
    VertexExact,
    /// Exact up to solver tolerance: concave inner maximization was run.
    ConcaveSolve,
    /// Exact Nikaido–Isoda gap of a bilinear game.
    NikaidoIsoda,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapEstimate {
    pub value: f64,
    pub regime: GapRegime,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub num_pairs: usize,
    /// `min <v(x') - v(x), x' - x>`.
    pub min_inner: f64,
    /// `min <v(x') - v(x), x' - x> / ||x' - x||²`.
    pub min_modulus: f64,
    /// `max ||v(x') - v(x)|| / ||x' - x||` (Euclidean).
    pub max_lipschitz_ratio: f64,
    pub declared_lipschitz: f64,
    pub violation: bool,
}

/// A monotone variational inequality on a product domain.
#[derive(Debug, Clone)]
pub struct VIProblem {
    operator: MonotoneOperator,
    geometry: Geometry,
    known_solution: Option<DVector<f64>>,
}

impl VIProblem {
    pub fn new(
        operator: MonotoneOperator,
        geometry: Geometry,
        known_solution: Option<DVector<f64>>,
    ) -> Result<Self> {
        if operator.dim() != geometry.dim() {
            return Err(Error::InvalidArgument(format!(
                "operator dimension {} does not match geometry dimension {}",
                operator.dim(),
                geometry.dim()
            )));
        }
        match operator.kind() {
            OperatorKind::MatrixGame { m } => {
                let f = geometry.factors();
                let ok = f.len() == 2
                    && f[0].dim() == m.nrows()
                    && f[1].dim() == m.ncols()
                    && f.iter().all(|g| matches!(g.domain(), Domain::Simplex { .. }));
                if !ok {
                    return Err(Error::InvalidArgument(
                        "matrix games need a product of two simplices matching the matrix shape"
                            .into(),
                    ));
                }
            }
            OperatorKind::ConvexGame { players } => {
                let f = geometry.factors();
                if f.len() != 2 || f[0].dim() != players[0].own.nrows() {
                    return Err(Error::InvalidArgument(
                        "convex games need one geometry factor per player".into(),
                    ));
                }
            }
            _ => {}
        }

        let mut known = known_solution;
        if known.is_none() {
            known = match operator.kind() {
                OperatorKind::StronglyMonotoneToy { x_star, .. } => {
                    if !geometry.contains(x_star.as_slice()) {
                        return Err(Error::InvalidArgument(
                            "x_star of the toy operator must lie in the domain".into(),
                        ));
                    }
                    Some(x_star.clone())
                }
                OperatorKind::MatrixGame { m } if m.shape() == (2, 2) => {
                    Some(two_by_two_equilibrium(m))
                }
                _ => None,
            };
        }

        let problem = Self {
            operator,
            geometry,
            known_solution: None,
        };
        if let Some(xs) = &known {
            problem.minty_check(xs)?;
        }
        Ok(Self {
            known_solution: known,
            ..problem
        })
    }

    /// Matching-pennies style matrix game with entropy geometry on both simplices.
    pub fn matrix_game(m: DMatrix<f64>) -> Result<Self> {
        let geometry = Geometry::product(vec![
            DistanceGenerator::entropy(m.nrows())?,
            DistanceGenerator::entropy(m.ncols())?,
        ])?;
        Self::new(
            MonotoneOperator::new(OperatorKind::MatrixGame { m })?,
            geometry,
            None,
        )
    }

    /// Strongly monotone toy with the Euclidean geometry of the given domain.
    pub fn toy(
        gamma: f64,
        x_star: DVector<f64>,
        rotation: DMatrix<f64>,
        domain: Domain,
    ) -> Result<Self> {
        Self::new(
            MonotoneOperator::new(OperatorKind::StronglyMonotoneToy {
                gamma,
                x_star,
                rotation,
            })?,
            DistanceGenerator::euclidean(domain)?.into(),
            None,
        )
    }

    fn minty_check(&self, xs: &DVector<f64>) -> Result<()> {
        self.geometry.check_member(xs.as_slice())?;
        let mut rng = ChaCha8Rng::seed_from_u64(0x6d696e7479);
        let mut points: Vec<DVector<f64>> = (0..MINTY_SAMPLES)
            .map(|_| self.geometry.sample(&mut rng))
            .collect();
        if let Some(vs) = self.geometry.vertices() {
            points.extend(vs);
        }
        for x in &points {
            let v = self.operator.value(x.as_slice());
            let m = v.dot(&(x - xs));
            if m < -MINTY_TOL {
                return Err(Error::InvalidArgument(format!(
                    "known solution fails the Minty test: <v(x), x - x*> = {m:.3e}"
                )));
            }
        }
        Ok(())
    }

    pub fn operator(&self) -> &MonotoneOperator {
        &self.operator
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn known_solution(&self) -> Option<&DVector<f64>> {
        self.known_solution.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn is_matrix_game(&self) -> bool {
        matches!(self.operator.kind(), OperatorKind::MatrixGame { .. })
    }

    pub fn operator_value(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.geometry.check_member(x.as_slice())?;
        Ok(self.operator.value(x.as_slice()))
    }

    /// `<v(x'), x - x'>` for one candidate `x'`.
    fn gap_term(&self, x: &[f64], cand: &[f64]) -> f64 {
        let v = self.operator.value(cand);
        v.iter().zip(x.iter().zip(cand)).map(|(a, (b, c))| a * (b - c)).sum()
    }

    fn bilinear_inner(&self) -> bool {
        sym_part(&self.operator.jacobian).amax() <= 1e-14
    }

    /// Maximum of `<v(x'), x - x'>` over the supplied candidates, the domain
    /// vertices and the known solution.
    pub fn restricted_dual_gap(
        &self,
        x: &DVector<f64>,
        candidates: &[DVector<f64>],
    ) -> Result<GapEstimate> {
        if candidates.is_empty() {
            return Err(Error::InvalidArgument("candidate set is empty".into()));
        }
        self.geometry.check_member(x.as_slice())?;
        for c in candidates {
            self.geometry.check_member(c.as_slice())?;
        }
        let (value, _) = self.best_candidate(x.as_slice(), candidates);
        let regime = if self.bilinear_inner() && self.geometry.vertices().is_some() {
            GapRegime::VertexExact
        } else {
            GapRegime::CandidateLowerBound
        };
        Ok(GapEstimate { value, regime })
    }

    fn best_candidate(&self, x: &[f64], extra: &[DVector<f64>]) -> (f64, DVector<f64>) {
        let mut best = (0.0, DVector::from_column_slice(x));
        let vertices = self.geometry.vertices().unwrap_or_default();
        let all = extra
            .iter()
            .chain(vertices.iter())
            .chain(self.known_solution.iter());
        for c in all {
            let g = self.gap_term(x, c.as_slice());
            if g > best.0 {
                best = (g, c.clone());
            }
        }
        best
    }

    /// Dual gap `max_{x'} <v(x'), x - x'>`. Exact by vertex enumeration when
    /// the inner objective is linear on a polytope, otherwise by projected
    /// gradient ascent on the concave quadratic inner problem.
    pub fn dual_gap(&self, x: &DVector<f64>) -> Result<GapEstimate> {
        self.geometry.check_member(x.as_slice())?;
        Ok(self.dual_gap_unchecked(x.as_slice()))
    }

    fn dual_gap_unchecked(&self, x: &[f64]) -> GapEstimate {
        let (best, start) = self.best_candidate(x, &[]);
        if self.bilinear_inner() && self.geometry.is_polytope() {
            return GapEstimate {
                value: best,
                regime: GapRegime::VertexExact,
            };
        }
        let value = self.concave_inner_max(x, start).max(best);
        GapEstimate {
            value,
            regime: GapRegime::ConcaveSolve,
        }
    }

    /// Projected gradient ascent on `phi(x') = <J x' + c, x - x'>`, whose
    /// Hessian `-(J + Jᵀ)` is negative semidefinite.
    fn concave_inner_max(&self, x: &[f64], start: DVector<f64>) -> f64 {
        let j = &self.operator.jacobian;
        let xv = DVector::from_column_slice(x);
        let curvature = spectral_norm(&(j + j.transpose()));
        let step = if curvature > 1e-12 {
            1.0 / curvature
        } else {
            1.0 / self.operator.lipschitz.max(1.0)
        };
        let phi = |p: &DVector<f64>| self.gap_term(x, p.as_slice());
        let mut p = start;
        let mut best = phi(&p);
        for _ in 0..20_000 {
            let grad = j.transpose() * (&xv - &p) - self.operator.value(p.as_slice());
            let next = self.geometry.project((&p + grad * step).as_slice());
            let moved = (&next - &p).norm();
            p = next;
            best = best.max(phi(&p));
            if moved <= 1e-14 {
                break;
            }
        }
        best
    }

    /// Nikaido–Isoda gap `max_j (x¹ᵀM)_j - min_i (M x²)_i` of a matrix game.
    pub fn ni_gap(&self, x1: &[f64], x2: &[f64]) -> Result<f64> {
        let OperatorKind::MatrixGame { m } = self.operator.kind() else {
            return Err(Error::InvalidArgument(format!(
                "Nikaido-Isoda gap needs a matrix game, got {}",
                self.operator.kind().name()
            )));
        };
        let f = self.geometry.factors();
        if !f[0].domain().contains(x1) || !f[1].domain().contains(x2) {
            return Err(Error::DomainMembership(format!(
                "({x1:?}, {x2:?}) is not a pair of mixed strategies"
            )));
        }
        Ok(ni_gap_unchecked(m, x1, x2))
    }

    /// The gap the experiments track: exact NI gap for matrix games, the dual gap otherwise.
    pub fn gap(&self, x: &DVector<f64>) -> Result<GapEstimate> {
        self.geometry.check_member(x.as_slice())?;
        Ok(self.gap_unchecked(x.as_slice()))
    }

    pub(crate) fn gap_unchecked(&self, x: &[f64]) -> GapEstimate {
        match self.operator.kind() {
            OperatorKind::MatrixGame { m } => {
                let r = m.nrows();
                GapEstimate {
                    value: ni_gap_unchecked(m, &x[..r], &x[r..]),
                    regime: GapRegime::NikaidoIsoda,
                }
            }
            _ => self.dual_gap_unchecked(x),
        }
    }

    pub fn monotonicity_probe(&self, num_pairs: usize, rng_seed: u64) -> Result<ProbeReport> {
        if num_pairs == 0 {
            return Err(Error::InvalidArgument("num_pairs must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut min_inner = f64::INFINITY;
        let mut min_modulus = f64::INFINITY;
        let mut max_ratio: f64 = 0.0;
        let mut evaluated = 0;
        while evaluated < num_pairs {
            let a = self.geometry.sample(&mut rng);
            let b = self.geometry.sample(&mut rng);
            let d = &b - &a;
            let d2 = d.norm_squared();
            if d2 == 0.0 {
                continue;
            }
            let dv = self.operator.value(b.as_slice()) - self.operator.value(a.as_slice());
            let inner = dv.dot(&d);
            min_inner = min_inner.min(inner);
            min_modulus = min_modulus.min(inner / d2);
            max_ratio = max_ratio.max(dv.norm() / d2.sqrt());
            evaluated += 1;
        }
        let declared = self.operator.lipschitz;
        Ok(ProbeReport {
            num_pairs,
            min_inner,
            min_modulus,
            max_lipschitz_ratio: max_ratio,
            declared_lipschitz: declared,
            violation: min_inner < -1e-9 || max_ratio > declared * (1.0 + 1e-6) + 1e-12,
        })
    }

    /// A solution of the VI: the known one when available, otherwise an
    /// extragradient fixed point (independent of mirror descent).
    pub fn reference_solution(&self) -> Result<DVector<f64>> {
        if let Some(x) = &self.known_solution {
            return Ok(x.clone());
        }
        self.extragradient_solution()
    }

    /// Projected extragradient iteration to a natural-map residual of 1e-10.
    pub fn extragradient_solution(&self) -> Result<DVector<f64>> {
        let l = self.operator.lipschitz;
        let tau = if l > 0.0 { 0.5 / l } else { 1.0 };
        let g = &self.geometry;
        let step = |x: &DVector<f64>, at: &DVector<f64>| {
            g.project((x - self.operator.value(at.as_slice()) * tau).as_slice())
        };
        let mut x = g.prox_center();
        for _ in 0..ORACLE_MAX_ITERS {
            let half = step(&x, &x);
            if (&half - &x).norm() <= ORACLE_RESIDUAL {
                return Ok(x);
            }
            x = step(&x, &half);
        }
        Err(Error::OracleFailure(format!(
            "extragradient did not reach residual {ORACLE_RESIDUAL:e} in {ORACLE_MAX_ITERS} iterations"
        )))
    }
}

fn ni_gap_unchecked(m: &DMatrix<f64>, x1: &[f64], x2: &[f64]) -> f64 {
    let (r, c) = m.shape();
    let best_response_2 = (0..c)
        .map(|j| (0..r).map(|i| x1[i] * m[(i, j)]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let best_response_1 = (0..r)
        .map(|i| (0..c).map(|j| m[(i, j)] * x2[j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    (best_response_2 - best_response_1).max(0.0)
}

/// Closed-form equilibrium of a 2x2 zero-sum game where the row player minimizes.
fn two_by_two_equilibrium(m: &DMatrix<f64>) -> DVector<f64> {
    // pure saddle: entry that is the max of its row and the min of its column
    for i in 0..2 {
        for j in 0..2 {
            let v = m[(i, j)];
            if v >= m[(i, 1 - j)] && v <= m[(1 - i, j)] {
                let mut x = DVector::zeros(4);
                x[i] = 1.0;
                x[2 + j] = 1.0;
                return x;
            }
        }
    }
    let denom = m[(0, 0)] - m[(0, 1)] - m[(1, 0)] + m[(1, 1)];
    let p = (m[(1, 1)] - m[(1, 0)]) / denom;
    let q = (m[(1, 1)] - m[(0, 1)]) / denom;
    DVector::from_vec(vec![p, 1.0 - p, q, 1.0 - q])
}

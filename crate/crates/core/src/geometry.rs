//! Distance-generating functions on compact convex domains.
//!
//! A [`DistanceGenerator`] bundles a strongly convex regularizer `h` on a
//! single domain together with its mirror map `Q = ∇h*`, its convex conjugate
//! `h*`, the Fenchel coupling `F(x, y) = h(x) + h*(y) - <y, x>` and the depth
//! `max h - min h`. A [`Geometry`] is a finite product of such factors and is
//! what the dynamics actually operate on; a single-factor geometry is the
//! common case.
//!
//! Three regularizers are supported:
//!
//! | kind            | domain      | mirror map             | modulus | primal norm |
//! |-----------------|-------------|------------------------|---------|-------------|
//! | `Euclidean`     | any         | Euclidean projection   | 1       | ℓ2          |
//! | `GibbsShannon`  | simplex     | softmax                | 1       | ℓ1          |
//! | `FermiDirac`    | `[0,1]^n`   | componentwise logistic | 4       | ℓ2          |

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};

/// Membership tolerance shared by all domain checks.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Largest box dimension for which vertices are enumerated.
const MAX_BOX_VERTEX_DIM: usize = 16;

/// A compact convex feasible set.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// The unit simplex `{x >= 0, sum x = 1}` in `R^n`.
    Simplex { n: usize },
    /// The box `[lo, hi]^n`.
    Box { n: usize, lo: f64, hi: f64 },
    /// The closed Euclidean ball of the given radius around `center`.
    Ball {
        n: usize,
        radius: f64,
        center: Vec<f64>,
    },
}

impl Domain {
    pub fn simplex(n: usize) -> Result<Self> {
        let d = Domain::Simplex { n };
        d.validate()?;
        Ok(d)
    }

    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        let d = Domain::Box { n, lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn ball(radius: f64, center: Vec<f64>) -> Result<Self> {
        let d = Domain::Ball {
            n: center.len(),
            radius,
            center,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match self {
            Domain::Simplex { n } if *n == 0 => bad("simplex dimension must be >= 1".into()),
            Domain::Box { n, .. } if *n == 0 => bad("box dimension must be >= 1".into()),
            Domain::Box { lo, hi, .. } if !(lo.is_finite() && hi.is_finite() && lo < hi) => {
                bad(format!("box bounds must be finite with lo < hi, got [{lo}, {hi}]"))
            }
            Domain::Ball { n, .. } if *n == 0 => bad("ball dimension must be >= 1".into()),
            Domain::Ball { radius, .. } if !(radius.is_finite() && *radius > 0.0) => {
                bad(format!("ball radius must be positive, got {radius}"))
            }
            Domain::Ball { n, center, .. } if center.len() != *n => bad(format!(
                "ball center has length {} but dimension is {n}",
                center.len()
            )),
            Domain::Ball { center, .. } if center.iter().any(|c| !c.is_finite()) => {
                bad("ball center must be finite".into())
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Simplex { n } | Domain::Box { n, .. } | Domain::Ball { n, .. } => *n,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Domain::Simplex { .. } => "simplex",
            Domain::Box { .. } => "box",
            Domain::Ball { .. } => "ball",
        }
    }

    /// Total membership test with tolerance [`MEMBERSHIP_TOL`].
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            Domain::Simplex { .. } => {
                let sum: f64 = x.iter().sum();
                x.iter().all(|&v| v >= -MEMBERSHIP_TOL) && (sum - 1.0).abs() <= MEMBERSHIP_TOL
            }
            Domain::Box { lo, hi, .. } => x
                .iter()
                .all(|&v| v >= lo - MEMBERSHIP_TOL && v <= hi + MEMBERSHIP_TOL),
            Domain::Ball { radius, center, .. } => {
                let d2: f64 = x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum();
                d2.sqrt() <= radius + MEMBERSHIP_TOL
            }
        }
    }

    /// Euclidean projection of `y` onto the domain, written into `out`.
    pub fn project_into(&self, y: &[f64], out: &mut [f64]) {
        match self {
            Domain::Simplex { .. } => project_simplex(y, out),
            Domain::Box { lo, hi, .. } => {
                for (o, &v) in out.iter_mut().zip(y) {
                    *o = v.clamp(*lo, *hi);
                }
            }
            Domain::Ball { radius, center, .. } => {
                let d2: f64 = y.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum();
                let d = d2.sqrt();
                let scale = if d <= *radius { 1.0 } else { radius / d };
                for ((o, &v), c) in out.iter_mut().zip(y).zip(center) {
                    *o = c + (v - c) * scale;
                }
            }
        }
    }

    /// Extreme points, when the domain is a polytope of manageable size.
    pub fn vertices(&self) -> Option<Vec<Vec<f64>>> {
        match self {
            Domain::Simplex { n } => Some(
                (0..*n)
                    .map(|i| {
                        let mut v = vec![0.0; *n];
                        v[i] = 1.0;
                        v
                    })
                    .collect(),
            ),
            Domain::Box { n, lo, hi } if *n <= MAX_BOX_VERTEX_DIM => Some(
                (0..1usize << n)
                    .map(|mask| {
                        (0..*n)
                            .map(|j| if mask >> j & 1 == 1 { *hi } else { *lo })
                            .collect()
                    })
                    .collect(),
            ),
            _ => None,
        }
    }

    pub fn is_polytope(&self) -> bool {
        !matches!(self, Domain::Ball { .. })
    }

    /// Euclidean diameter `max ||x' - x||_2`.
    pub fn euclidean_diameter(&self) -> f64 {
        match self {
            Domain::Simplex { n } if *n == 1 => 0.0,
            Domain::Simplex { .. } => std::f64::consts::SQRT_2,
            Domain::Box { n, lo, hi } => (*n as f64).sqrt() * (hi - lo),
            Domain::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// `max ||x||_2` over the domain.
    pub fn max_euclidean_norm(&self) -> f64 {
        match self {
            Domain::Simplex { .. } => 1.0,
            Domain::Box { n, lo, hi } => (*n as f64).sqrt() * lo.abs().max(hi.abs()),
            Domain::Ball { radius, center, .. } => l2(center) + radius,
        }
    }

    /// A random point of the domain (uniform for boxes and balls,
    /// flat Dirichlet for simplices).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Domain::Simplex { n } => {
                let e: Vec<f64> = (0..*n).map(|_| Exp1.sample(rng)).collect();
                let s: f64 = e.iter().sum();
                e.into_iter().map(|v| v / s).collect()
            }
            Domain::Box { n, lo, hi } => (0..*n).map(|_| rng.random_range(*lo..=*hi)).collect(),
            Domain::Ball { n, radius, center } => {
                let g: Vec<f64> = (0..*n).map(|_| StandardNormal.sample(rng)).collect();
                let norm = l2(&g).max(f64::MIN_POSITIVE);
                let r = radius * rng.random::<f64>().powf(1.0 / *n as f64);
                g.iter().zip(center).map(|(v, c)| c + r * v / norm).collect()
            }
        }
    }
}

/// Sort-based Euclidean projection onto the unit simplex.
fn project_simplex(y: &[f64], out: &mut [f64]) {
    let mut u: Vec<f64> = y.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    for (o, &v) in out.iter_mut().zip(y) {
        *o = (v - theta).max(0.0);
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `x log x` with the convention `0 log 0 = 0`.
fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `log(1 + e^y)` without overflow.
fn softplus(y: f64) -> f64 {
    y.max(0.0) + (-y.abs()).exp().ln_1p()
}

fn logistic(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

/// Max-shifted `log sum exp`.
pub fn log_sum_exp(y: &[f64]) -> f64 {
    let (imax, m) = y
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    if !m.is_finite() {
        return m;
    }
    let rest: f64 = y
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != imax)
        .map(|(_, &v)| (v - m).exp())
        .sum();
    m + rest.ln_1p()
}

/// The regularizer family of a [`DistanceGenerator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgfKind {
    /// `h(x) = ||x||² / 2`.
    Euclidean,
    /// Negative Gibbs–Shannon entropy on the simplex.
    GibbsShannon,
    /// Negative Fermi–Dirac entropy on the unit cube.
    FermiDirac,
}

impl DgfKind {
    pub fn key(&self) -> &'static str {
        match self {
            DgfKind::Euclidean => "euclidean",
            DgfKind::GibbsShannon => "entropy",
            DgfKind::FermiDirac => "fermi_dirac",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        match key {
            "euclidean" => Some(DgfKind::Euclidean),
            "entropy" => Some(DgfKind::GibbsShannon),
            "fermi_dirac" => Some(DgfKind::FermiDirac),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimalNorm {
    L1,
    L2,
}

impl PrimalNorm {
    pub fn primal(&self, x: &[f64]) -> f64 {
        match self {
            PrimalNorm::L1 => x.iter().map(|v| v.abs()).sum(),
            PrimalNorm::L2 => l2(x),
        }
    }

    pub fn dual(&self, y: &[f64]) -> f64 {
        match self {
            PrimalNorm::L1 => y.iter().fold(0.0, |m, v| m.max(v.abs())),
            PrimalNorm::L2 => l2(y),
        }
    }

    /// Squared equivalence constant with the Euclidean norm on bounded sets.
    /// Both ℓ1 and ℓ2 dominate ℓ2, so this is 1.
    pub fn kappa(&self) -> f64 {
        1.0
    }
}

/// A strongly convex regularizer on one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceGenerator {
    domain: Domain,
    kind: DgfKind,
    alpha: f64,
    norm: PrimalNorm,
}

impl DistanceGenerator {
    pub fn new(domain: Domain, kind: DgfKind) -> Result<Self> {
        domain.validate()?;
        let (alpha, norm) = match (kind, &domain) {
            (DgfKind::Euclidean, _) => (1.0, PrimalNorm::L2),
            (DgfKind::GibbsShannon, Domain::Simplex { .. }) => (1.0, PrimalNorm::L1),
            (DgfKind::FermiDirac, Domain::Box { lo, hi, .. }) if *lo == 0.0 && *hi == 1.0 => {
                (4.0, PrimalNorm::L2)
            }
            (DgfKind::GibbsShannon, d) => {
                return Err(Error::InvalidArgument(format!(
                    "entropy geometry requires a simplex domain, got {}",
                    d.kind_name()
                )))
            }
            (DgfKind::FermiDirac, d) => {
                return Err(Error::InvalidArgument(format!(
                    "fermi_dirac geometry requires the unit box [0,1]^n, got {}",
                    d.kind_name()
                )))
            }
        };
        Ok(Self {
            domain,
            kind,
            alpha,
            norm,
        })
    }

    pub fn euclidean(domain: Domain) -> Result<Self> {
        Self::new(domain, DgfKind::Euclidean)
    }

    pub fn entropy(n: usize) -> Result<Self> {
        Self::new(Domain::simplex(n)?, DgfKind::GibbsShannon)
    }

    pub fn fermi_dirac(n: usize) -> Result<Self> {
        Self::new(Domain::cube(n, 0.0, 1.0)?, DgfKind::FermiDirac)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn kind(&self) -> DgfKind {
        self.kind
    }

    /// Strong-convexity modulus with respect to [`Self::norm`].
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn norm(&self) -> PrimalNorm {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn check_member(&self, x: &[f64]) -> Result<()> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(Error::DomainMembership(format!(
                "{:?} is not in the {} of dimension {}",
                x,
                self.domain.kind_name(),
                self.dim()
            )))
        }
    }

    fn check_dual(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "dual vector has length {}, expected {}",
                y.len(),
                self.dim()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericInput(format!("dual vector {y:?}")));
        }
        Ok(())
    }

    pub fn eval_h(&self, x: &[f64]) -> Result<f64> {
        self.check_member(x)?;
        Ok(self.h_unchecked(x))
    }

    fn h_unchecked(&self, x: &[f64]) -> f64 {
        match self.kind {
            DgfKind::Euclidean => 0.5 * dot(x, x),
            DgfKind::GibbsShannon => x.iter().map(|&v| xlogx(v)).sum(),
            DgfKind::FermiDirac => x.iter().map(|&v| xlogx(v) + xlogx(1.0 - v)).sum(),
        }
    }

    pub fn mirror(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dual(y)?;
        let mut out = vec![0.0; y.len()];
        self.mirror_into(y, &mut out);
        Ok(out)
    }

    /// `Q(y)` written into `out`; `y` is assumed finite and of the right length.
    pub fn mirror_into(&self, y: &[f64], out: &mut [f64]) {
        match self.kind {
            DgfKind::Euclidean => self.domain.project_into(y, out),
            DgfKind::GibbsShannon => {
                let m = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for (o, &v) in out.iter_mut().zip(y) {
                    *o = (v - m).exp();
                    total += *o;
                }
                for o in out.iter_mut() {
                    *o /= total;
                }
            }
            DgfKind::FermiDirac => {
                for (o, &v) in out.iter_mut().zip(y) {
                    *o = logistic(v);
                }
            }
        }
    }

    pub fn conjugate_value(&self, y: &[f64]) -> Result<f64> {
        self.check_dual(y)?;
        Ok(self.conjugate_unchecked(y))
    }

    fn conjugate_unchecked(&self, y: &[f64]) -> f64 {
        match self.kind {
            DgfKind::Euclidean => {
                let mut x = vec![0.0; y.len()];
                self.domain.project_into(y, &mut x);
                dot(y, &x) - 0.5 * dot(&x, &x)
            }
            DgfKind::GibbsShannon => log_sum_exp(y),
            DgfKind::FermiDirac => y.iter().map(|&v| softplus(v)).sum(),
        }
    }

    /// `F(x, y) = h(x) + h*(y) - <y, x>`, evaluated in a cancellation-free
    /// form for each kind.
    pub fn fenchel_coupling(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_member(x)?;
        self.check_dual(y)?;
        Ok(self.fenchel_unchecked(x, y))
    }

    pub(crate) fn fenchel_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let value = match self.kind {
            DgfKind::Euclidean => {
                let mut q = vec![0.0; y.len()];
                self.domain.project_into(y, &mut q);
                let dx: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
                let dq: f64 = q.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
                0.5 * (dx - dq)
            }
            DgfKind::GibbsShannon => {
                let lse = log_sum_exp(y);
                x.iter()
                    .zip(y)
                    .filter(|(&xj, _)| xj > 0.0)
                    .map(|(&xj, &yj)| xj * (xj.ln() - (yj - lse)))
                    .sum()
            }
            DgfKind::FermiDirac => x
                .iter()
                .zip(y)
                .map(|(&xj, &yj)| {
                    // log q = -softplus(-y), log(1 - q) = -softplus(y)
                    let a = if xj > 0.0 {
                        xj * (xj.ln() + softplus(-yj))
                    } else {
                        0.0
                    };
                    let b = if xj < 1.0 {
                        (1.0 - xj) * ((1.0 - xj).ln() + softplus(yj))
                    } else {
                        0.0
                    };
                    a + b
                })
                .sum(),
        };
        value.max(0.0)
    }

    /// `max h - min h` over the domain, in closed form.
    pub fn depth(&self) -> f64 {
        let n = self.dim() as f64;
        match (self.kind, &self.domain) {
            (DgfKind::GibbsShannon, _) => n.ln(),
            (DgfKind::FermiDirac, _) => n * std::f64::consts::LN_2,
            (DgfKind::Euclidean, Domain::Simplex { .. }) => 0.5 - 0.5 / n,
            (DgfKind::Euclidean, Domain::Box { lo, hi, .. }) => {
                let max = 0.5 * lo.abs().max(hi.abs()).powi(2);
                let min = 0.5 * 0.0f64.clamp(*lo, *hi).powi(2);
                n * (max - min)
            }
            (DgfKind::Euclidean, Domain::Ball { radius, center, .. }) => {
                let c = l2(center);
                0.5 * (c + radius).powi(2) - 0.5 * (c - radius).max(0.0).powi(2)
            }
        }
    }

    /// `Q(0) = argmin h`.
    pub fn prox_center(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.mirror_into(&vec![0.0; self.dim()], &mut out);
        out
    }
}

/// A product of distance generators acting on consecutive coordinate blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    factors: Vec<DistanceGenerator>,
    offsets: Vec<usize>,
    dim: usize,
}

impl From<DistanceGenerator> for Geometry {
    fn from(g: DistanceGenerator) -> Self {
        Geometry::product(vec![g]).expect("a single factor is a valid product")
    }
}

impl Geometry {
    pub fn product(factors: Vec<DistanceGenerator>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument(
                "a geometry needs at least one factor".into(),
            ));
        }
        let mut offsets = Vec::with_capacity(factors.len());
        let mut dim = 0;
        for f in &factors {
            offsets.push(dim);
            dim += f.dim();
        }
        Ok(Self {
            factors,
            offsets,
            dim,
        })
    }

    pub fn factors(&self) -> &[DistanceGenerator] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coordinate ranges of each factor.
    pub fn blocks(&self) -> impl Iterator<Item = (std::ops::Range<usize>, &DistanceGenerator)> {
        self.factors
            .iter()
            .zip(&self.offsets)
            .map(|(f, &o)| (o..o + f.dim(), f))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && self.blocks().all(|(r, f)| f.domain().contains(&x[r]))
    }

    pub fn check_member(&self, x: &[f64]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::DomainMembership(format!(
                "{x:?} is not in the product domain of dimension {}",
                self.dim
            )))
        }
    }

    fn check_dual(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "dual vector has length {}, expected {}",
                y.len(),
                self.dim
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericInput(format!("dual vector {y:?}")));
        }
        Ok(())
    }

    pub fn eval_h(&self, x: &[f64]) -> Result<f64> {
        self.check_member(x)?;
        Ok(self.blocks().map(|(r, f)| f.h_unchecked(&x[r])).sum())
    }

    pub fn mirror(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dual(y.as_slice())?;
        let mut out = DVector::zeros(self.dim);
        self.mirror_into(y.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    pub fn mirror_into(&self, y: &[f64], out: &mut [f64]) {
        for (r, f) in self.blocks() {
            f.mirror_into(&y[r.clone()], &mut out[r]);
        }
    }

    pub fn conjugate_value(&self, y: &[f64]) -> Result<f64> {
        self.check_dual(y)?;
        Ok(self.blocks().map(|(r, f)| f.conjugate_unchecked(&y[r])).sum())
    }

    pub fn fenchel_coupling(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_member(x)?;
        self.check_dual(y)?;
        Ok(self
            .blocks()
            .map(|(r, f)| f.fenchel_unchecked(&x[r.clone()], &y[r]))
            .sum())
    }

    /// Sum of the factor depths.
    pub fn depth(&self) -> f64 {
        self.factors.iter().map(DistanceGenerator::depth).sum()
    }

    pub fn prox_center(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim, self.factors.iter().flat_map(|f| f.prox_center()))
    }

    /// Euclidean projection onto the product domain.
    pub fn project(&self, y: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for (r, f) in self.blocks() {
            f.domain()
                .project_into(&y[r.clone()], &mut out.as_mut_slice()[r]);
        }
        out
    }

    /// Vertices of the product domain (Cartesian product of factor vertices).
    pub fn vertices(&self) -> Option<Vec<DVector<f64>>> {
        let per_factor: Option<Vec<Vec<Vec<f64>>>> =
            self.factors.iter().map(|f| f.domain().vertices()).collect();
        let per_factor = per_factor?;
        let count: usize = per_factor.iter().map(Vec::len).product();
        if count > 1 << MAX_BOX_VERTEX_DIM {
            return None;
        }
        let mut out = Vec::with_capacity(count);
        let mut idx = vec![0usize; per_factor.len()];
        loop {
            out.push(DVector::from_iterator(
                self.dim,
                idx.iter()
                    .zip(&per_factor)
                    .flat_map(|(&i, vs)| vs[i].iter().copied()),
            ));
            let mut k = 0;
            loop {
                if k == idx.len() {
                    return Some(out);
                }
                idx[k] += 1;
                if idx[k] < per_factor[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    pub fn is_polytope(&self) -> bool {
        self.factors.iter().all(|f| f.domain().is_polytope())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        DVector::from_iterator(
            self.dim,
            self.factors.iter().flat_map(|f| f.domain().sample(rng)),
        )
    }

    /// Effective strong-convexity modulus: `1/alpha = sum 1/alpha_i`.
    pub fn alpha(&self) -> f64 {
        1.0 / self.factors.iter().map(|f| 1.0 / f.alpha()).sum::<f64>()
    }

    /// Norm-equivalence constant used by the concentration envelope.
    pub fn kappa(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| f.norm().kappa())
            .fold(0.0, f64::max)
    }

    pub fn euclidean_diameter(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| f.domain().euclidean_diameter().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_euclidean_norm(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| f.domain().max_euclidean_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Human-readable geometry keys, one per factor.
    pub fn keys(&self) -> Vec<&'static str> {
        self.factors.iter().map(|f| f.kind().key()).collect()
    }
}

//! Randomized property suites for mirror maps, Fenchel couplings and
//! problems. Each returns the worst observed margin so a report can show
//! how close a check came to failing.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::Result;
use crate::geometry::{DgfKind, DistanceGenerator, Domain, Geometry};
use crate::problems::VIProblem;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub samples: usize,
    /// Worst value of the checked quantity (an error or a slack).
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl PropertyResult {
    fn error_below(name: String, samples: usize, worst: f64, tolerance: f64) -> Self {
        Self {
            name,
            samples,
            worst,
            tolerance,
            passed: worst <= tolerance,
        }
    }

    fn slack_above(name: String, samples: usize, worst: f64, tolerance: f64) -> Self {
        Self {
            name,
            samples,
            worst,
            tolerance,
            passed: worst >= tolerance,
        }
    }
}

fn label(g: &DistanceGenerator) -> String {
    format!("{}/{}({})", g.kind().key(), g.domain().kind_name(), g.dim())
}

fn random_dual(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, scale).expect("positive scale");
    (0..n).map(|_| normal.sample(rng)).collect()
}

/// Central differences of the conjugate against the mirror map, error
/// `|fd - Q_j| / max(1, |Q_j|)` per coordinate.
pub fn gradient_identity(g: &DistanceGenerator, samples: usize, seed: u64) -> Result<PropertyResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let y = random_dual(&mut rng, n, 2.0);
        let q = g.mirror(&y)?;
        for j in 0..n {
            let h = 1e-6 * y[j].abs().max(1.0);
            let mut up = y.clone();
            let mut dn = y.clone();
            up[j] += h;
            dn[j] -= h;
            let fd = (g.conjugate_value(&up)? - g.conjugate_value(&dn)?) / (up[j] - dn[j]);
            worst = worst.max((fd - q[j]).abs() / q[j].abs().max(1.0));
        }
    }
    Ok(PropertyResult::error_below(
        format!("gradient_identity[{}]", label(g)),
        samples,
        worst,
        1e-5,
    ))
}

/// `||Q(y1) - Q(y2)|| <= (1/alpha) ||y1 - y2||_*`; worst excess reported.
pub fn mirror_lipschitz(g: &DistanceGenerator, pairs: usize, seed: u64) -> Result<PropertyResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.dim();
    let norm = g.norm();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..pairs {
        // alternate far-apart and nearby pairs
        let y1 = random_dual(&mut rng, n, 3.0);
        let y2: Vec<f64> = if i % 2 == 0 {
            random_dual(&mut rng, n, 3.0)
        } else {
            let d = random_dual(&mut rng, n, 1e-3);
            y1.iter().zip(&d).map(|(a, b)| a + b).collect()
        };
        let q1 = g.mirror(&y1)?;
        let q2 = g.mirror(&y2)?;
        let dq: Vec<f64> = q1.iter().zip(&q2).map(|(a, b)| a - b).collect();
        let dy: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a - b).collect();
        worst = worst.max(norm.primal(&dq) - norm.dual(&dy) / g.alpha());
    }
    Ok(PropertyResult::error_below(
        format!("mirror_lipschitz[{}]", label(g)),
        pairs,
        worst,
        1e-9,
    ))
}

/// `F(x, y) - (alpha/2) ||Q(y) - x||² >= 0`; worst slack reported.
pub fn fenchel_lower_bound(g: &DistanceGenerator, samples: usize, seed: u64) -> Result<PropertyResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.dim();
    let norm = g.norm();
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let x = g.domain().sample(&mut rng);
        let y = random_dual(&mut rng, n, 2.0);
        let q = g.mirror(&y)?;
        let d: Vec<f64> = q.iter().zip(&x).map(|(a, b)| a - b).collect();
        let slack = g.fenchel_coupling(&x, &y)? - 0.5 * g.alpha() * norm.primal(&d).powi(2);
        worst = worst.min(slack);
    }
    Ok(PropertyResult::slack_above(
        format!("fenchel_lower_bound[{}]", label(g)),
        samples,
        worst,
        -1e-9,
    ))
}

/// `F(x,y') <= F(x,y) + <y'-y, Q(y)-x> + ||y'-y||_*² / (2 alpha)`; worst slack reported.
pub fn fenchel_increment(g: &DistanceGenerator, samples: usize, seed: u64) -> Result<PropertyResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.dim();
    let norm = g.norm();
    let mut worst = f64::INFINITY;
    for i in 0..samples {
        let x = g.domain().sample(&mut rng);
        let y = random_dual(&mut rng, n, 2.0);
        let scale = if i % 2 == 0 { 1.0 } else { 1e-2 };
        let d = random_dual(&mut rng, n, scale);
        let y2: Vec<f64> = y.iter().zip(&d).map(|(a, b)| a + b).collect();
        let q = g.mirror(&y)?;
        let lin: f64 = d.iter().zip(q.iter().zip(&x)).map(|(a, (b, c))| a * (b - c)).sum();
        let rhs = g.fenchel_coupling(&x, &y)? + lin + norm.dual(&d).powi(2) / (2.0 * g.alpha());
        worst = worst.min(rhs - g.fenchel_coupling(&x, &y2)?);
    }
    Ok(PropertyResult::slack_above(
        format!("fenchel_increment[{}]", label(g)),
        samples,
        worst,
        -1e-9,
    ))
}

/// Sampled monotonicity and Lipschitz probe of a problem.
pub fn problem_probe(p: &VIProblem, pairs: usize, seed: u64) -> Result<PropertyResult> {
    let r = p.monotonicity_probe(pairs, seed)?;
    Ok(PropertyResult {
        name: format!("monotonicity_probe[{}]", p.operator().kind().name()),
        samples: pairs,
        worst: r.min_inner,
        tolerance: -1e-9,
        passed: !r.violation,
    })
}

/// Gap at the reference solution; for matrix games also `NI >= dual gap`
/// at sampled points.
pub fn solution_gaps(p: &VIProblem, samples: usize, seed: u64) -> Result<Vec<PropertyResult>> {
    let kind = p.operator().kind().name();
    let xs = p.reference_solution()?;
    let at_solution = p.dual_gap(&xs)?.value;
    let mut out = vec![PropertyResult::error_below(
        format!("gap_at_solution[{kind}]"),
        1,
        at_solution,
        1e-7,
    )];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_gap = f64::INFINITY;
    let mut worst_order = f64::INFINITY;
    for _ in 0..samples {
        let x: DVector<f64> = p.geometry().sample(&mut rng);
        let dg = p.dual_gap(&x)?.value;
        min_gap = min_gap.min(dg);
        if p.is_matrix_game() {
            let r = p.geometry().factors()[0].dim();
            let ni = p.ni_gap(&x.as_slice()[..r], &x.as_slice()[r..])?;
            worst_order = worst_order.min(ni - dg);
        }
    }
    out.push(PropertyResult::slack_above(
        format!("gap_nonnegative[{kind}]"),
        samples,
        min_gap,
        -1e-12,
    ));
    if p.is_matrix_game() {
        out.push(PropertyResult::slack_above(
            format!("ni_dominates_dual_gap[{kind}]"),
            samples,
            worst_order,
            -1e-9,
        ));
    }
    Ok(out)
}

/// The four mirror-map and Fenchel-coupling suites on one geometry.
pub fn geometry_suite(g: &DistanceGenerator, seed: u64) -> Result<Vec<PropertyResult>> {
    Ok(vec![
        gradient_identity(g, 100, seed)?,
        mirror_lipschitz(g, 1000, seed.wrapping_add(1))?,
        fenchel_lower_bound(g, 1000, seed.wrapping_add(2))?,
        fenchel_increment(g, 1000, seed.wrapping_add(3))?,
    ])
}

/// Geometries exercised when no configuration is given.
pub fn default_geometries() -> Vec<DistanceGenerator> {
    let build = |d: Result<Domain>, k: DgfKind| d.and_then(|d| DistanceGenerator::new(d, k));
    [
        build(Domain::simplex(3), DgfKind::Euclidean),
        build(Domain::cube(3, 0.0, 1.0), DgfKind::Euclidean),
        build(Domain::ball(1.0, vec![0.0, 0.0, 0.0]), DgfKind::Euclidean),
        build(Domain::simplex(4), DgfKind::GibbsShannon),
        build(Domain::cube(3, 0.0, 1.0), DgfKind::FermiDirac),
    ]
    .into_iter()
    .map(|g| g.expect("default geometries are valid"))
    .collect()
}

/// All factors of a product geometry, each run through the geometry suite.
pub fn product_suite(g: &Geometry, seed: u64) -> Result<Vec<PropertyResult>> {
    let mut out = Vec::new();
    for (i, f) in g.factors().iter().enumerate() {
        out.extend(geometry_suite(f, seed.wrapping_add(100 * i as u64))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suites_pass() {
        for g in default_geometries() {
            for r in geometry_suite(&g, 17).unwrap() {
                assert!(r.passed, "{r:?}");
            }
        }
    }
}

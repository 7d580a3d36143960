use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::Geometry;

/// Volatility `sigma(x, t)` of the Itô perturbation, an `n x d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    Zero,
    ConstantVolatility {
        sigma: DMatrix<f64>,
    },
    /// `sigma(x) = base * (1 + c ||x||₂)` with `c = ell / ||base||_F`, so the
    /// map is `ell`-Lipschitz in Frobenius norm.
    StateScaled {
        base: DMatrix<f64>,
        ell: f64,
    },
    /// `sigma(x, t) = (beta(t) / sqrt(n)) I` with `beta(t) = sigma0 / ln(e + t)`,
    /// so the Frobenius norm is exactly `beta(t)`.
    Decaying {
        sigma0: f64,
        n: usize,
    },
}

impl NoiseModel {
    /// Isotropic constant volatility with Frobenius norm `sigma_star`.
    pub fn isotropic(n: usize, sigma_star: f64) -> Result<Self> {
        let m = NoiseModel::ConstantVolatility {
            sigma: DMatrix::identity(n, n) * (sigma_star / (n as f64).sqrt()),
        };
        m.validate(n)?;
        Ok(m)
    }

    pub fn decaying(n: usize, sigma0: f64) -> Result<Self> {
        let m = NoiseModel::Decaying { sigma0, n };
        m.validate(n)?;
        Ok(m)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let check_matrix = |name: &str, m: &DMatrix<f64>| -> Result<()> {
            if m.nrows() != n || m.ncols() == 0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} must have {n} rows and at least one column, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if !m.iter().all(|v| v.is_finite()) {
                return Err(Error::NumericInput(format!("{name} has non-finite entries")));
            }
            Ok(())
        };
        match self {
            NoiseModel::Zero => Ok(()),
            NoiseModel::ConstantVolatility { sigma } => check_matrix("sigma", sigma),
            NoiseModel::StateScaled { base, ell } => {
                check_matrix("base", base)?;
                if !(ell.is_finite() && *ell >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "ell must be finite and nonnegative, got {ell}"
                    )));
                }
                Ok(())
            }
            NoiseModel::Decaying { sigma0, n: m } => {
                if *m != n {
                    return Err(Error::InvalidArgument(format!(
                        "decaying noise built for dimension {m}, problem has {n}"
                    )));
                }
                if !(sigma0.is_finite() && *sigma0 >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "sigma0 must be finite and nonnegative, got {sigma0}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Number of independent Brownian components.
    pub fn wiener_dim(&self) -> usize {
        match self {
            NoiseModel::Zero => 0,
            NoiseModel::ConstantVolatility { sigma } => sigma.ncols(),
            NoiseModel::StateScaled { base, .. } => base.ncols(),
            NoiseModel::Decaying { n, .. } => *n,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            NoiseModel::Zero => true,
            NoiseModel::ConstantVolatility { sigma } => sigma.iter().all(|v| *v == 0.0),
            NoiseModel::StateScaled { base, .. } => base.iter().all(|v| *v == 0.0),
            NoiseModel::Decaying { sigma0, .. } => *sigma0 == 0.0,
        }
    }

    fn scale_factor(base: &DMatrix<f64>, ell: f64, x: &[f64]) -> f64 {
        let fro = base.norm();
        if fro == 0.0 {
            return 1.0;
        }
        1.0 + ell / fro * x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn beta(sigma0: f64, t: f64) -> f64 {
        sigma0 / (std::f64::consts::E + t).ln()
    }

    /// Frobenius norm of `sigma(x, t)`.
    pub fn frobenius(&self, x: &[f64], t: f64) -> f64 {
        match self {
            NoiseModel::Zero => 0.0,
            NoiseModel::ConstantVolatility { sigma } => sigma.norm(),
            NoiseModel::StateScaled { base, ell } => base.norm() * Self::scale_factor(base, *ell, x),
            NoiseModel::Decaying { sigma0, .. } => Self::beta(*sigma0, t),
        }
    }

    /// Uniform bound `sigma_*` on the Frobenius norm over the domain and all `t >= 0`.
    pub fn sigma_star(&self, geometry: &Geometry) -> f64 {
        match self {
            NoiseModel::Zero => 0.0,
            NoiseModel::ConstantVolatility { sigma } => sigma.norm(),
            NoiseModel::StateScaled { base, ell } => {
                base.norm() + ell * geometry.max_euclidean_norm()
            }
            NoiseModel::Decaying { sigma0, .. } => *sigma0,
        }
    }

    /// Dense `sigma(x, t)`, for tests and reports.
    pub fn matrix(&self, x: &[f64], t: f64) -> DMatrix<f64> {
        let n = x.len();
        match self {
            NoiseModel::Zero => DMatrix::zeros(n, 0),
            NoiseModel::ConstantVolatility { sigma } => sigma.clone(),
            NoiseModel::StateScaled { base, ell } => base * Self::scale_factor(base, *ell, x),
            NoiseModel::Decaying { sigma0, n } => {
                DMatrix::identity(*n, *n) * (Self::beta(*sigma0, t) / (*n as f64).sqrt())
            }
        }
    }

    /// `out = sigma(x, t) dw`.
    pub fn apply(&self, x: &[f64], t: f64, dw: &[f64], out: &mut [f64]) {
        match self {
            NoiseModel::Zero => out.fill(0.0),
            NoiseModel::ConstantVolatility { sigma } => mat_vec(sigma, 1.0, dw, out),
            NoiseModel::StateScaled { base, ell } => {
                mat_vec(base, Self::scale_factor(base, *ell, x), dw, out)
            }
            NoiseModel::Decaying { sigma0, n } => {
                let c = Self::beta(*sigma0, t) / (*n as f64).sqrt();
                for (o, w) in out.iter_mut().zip(dw) {
                    *o = c * w;
                }
            }
        }
    }
}

fn mat_vec(m: &DMatrix<f64>, scale: f64, v: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    let n = m.nrows();
    let data = m.as_slice();
    for (j, &vj) in v.iter().enumerate() {
        let col = &data[j * n..(j + 1) * n];
        for (o, &a) in out.iter_mut().zip(col) {
            *o += a * vj;
        }
    }
    if scale != 1.0 {
        for o in out.iter_mut() {
            *o *= scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DistanceGenerator, Domain};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ball_geometry(n: usize) -> Geometry {
        DistanceGenerator::euclidean(Domain::ball(1.5, vec![0.0; n]).unwrap())
            .unwrap()
            .into()
    }

    #[test]
    fn frobenius_is_bounded_by_sigma_star() {
        let g = ball_geometry(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let base = DMatrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
        let models = [
            NoiseModel::isotropic(3, 0.5).unwrap(),
            NoiseModel::StateScaled { base, ell: 0.7 },
            NoiseModel::decaying(3, 0.5).unwrap(),
        ];
        for m in &models {
            let star = m.sigma_star(&g);
            for _ in 0..500 {
                let x = g.sample(&mut rng);
                let t = rng.random_range(0.0..1000.0);
                assert!(m.frobenius(x.as_slice(), t) <= star * (1.0 + 1e-12));
                assert!((m.matrix(x.as_slice(), t).norm() - m.frobenius(x.as_slice(), t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn state_scaled_is_lipschitz() {
        let g = ball_geometry(4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let base = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
        let m = NoiseModel::StateScaled { base, ell: 1.3 };
        for _ in 0..1000 {
            let a = g.sample(&mut rng);
            let b = g.sample(&mut rng);
            let d = (m.matrix(a.as_slice(), 0.0) - m.matrix(b.as_slice(), 0.0)).norm();
            assert!(d <= 1.3 * (&a - &b).norm() + 1e-12);
        }
    }

    #[test]
    fn decaying_matches_log_rate() {
        let m = NoiseModel::decaying(2, 0.5).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let t = i as f64 * 2.5;
            let b = m.frobenius(&[0.0, 0.0], t);
            assert_eq!(b, 0.5 / (std::f64::consts::E + t).ln());
            assert!(b <= prev);
            prev = b;
        }
        assert_eq!(m.frobenius(&[0.0, 0.0], 0.0), 0.5);
    }

    #[test]
    fn apply_matches_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base = DMatrix::from_fn(3, 5, |_, _| rng.random_range(-1.0..1.0));
        let m = NoiseModel::StateScaled { base, ell: 0.4 };
        let x = [0.1, -0.2, 0.3];
        let dw: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut out = [0.0; 3];
        m.apply(&x, 1.0, &dw, &mut out);
        let dense = m.matrix(&x, 1.0) * nalgebra::DVector::from_column_slice(&dw);
        for i in 0..3 {
            assert!((out[i] - dense[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let m = NoiseModel::ConstantVolatility {
            sigma: DMatrix::zeros(2, 2),
        };
        assert!(m.validate(3).is_err());
        assert!(NoiseModel::decaying(2, -1.0).is_err());
    }
}

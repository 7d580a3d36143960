use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight pair `(lambda(t), eta(t))` with closed-form running integrals.
///
/// `Power { a, b }` means `lambda(t) = (1+t)^-a` and `eta(t) = (1+t)^-b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    Constant { lam: f64, eta: f64 },
    Power { a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleValues {
    pub lambda: f64,
    pub eta: f64,
    /// `S(t) = ∫₀ᵗ lambda`.
    pub s: f64,
    /// `L²(t) = ∫₀ᵗ lambda²`.
    pub lsq: f64,
}

/// `∫₀ᵗ (1+s)^-p ds`, exact in the limiting cases `p = 0` and `p = 1`.
pub(crate) fn power_integral(p: f64, t: f64) -> f64 {
    if p == 0.0 {
        t
    } else if p == 1.0 {
        t.ln_1p()
    } else {
        ((1.0 - p) * t.ln_1p()).exp_m1() / (1.0 - p)
    }
}

impl Schedule {
    pub fn constant(lam: f64, eta: f64) -> Result<Self> {
        let s = Schedule::Constant { lam, eta };
        s.validate()?;
        Ok(s)
    }

    pub fn power(a: f64, b: f64) -> Result<Self> {
        let s = Schedule::Power { a, b };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Schedule::Constant { lam, eta } => {
                if !(lam.is_finite() && lam > 0.0 && eta.is_finite() && eta > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "constant weights must be positive and finite, got lam={lam}, eta={eta}"
                    )));
                }
            }
            Schedule::Power { a, b } => {
                for (name, v) in [("a", a), ("b", b)] {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::InvalidArgument(format!(
                            "{name} must lie in [0,1], got {v}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<ScheduleValues> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "schedule evaluated at t = {t}; need a finite t >= 0"
            )));
        }
        Ok(ScheduleValues {
            lambda: self.lambda(t),
            eta: self.eta(t),
            s: self.s(t),
            lsq: self.lsq(t),
        })
    }

    pub fn lambda(&self, t: f64) -> f64 {
        match *self {
            Schedule::Constant { lam, .. } => lam,
            Schedule::Power { a, .. } => (1.0 + t).powf(-a),
        }
    }

    pub fn eta(&self, t: f64) -> f64 {
        match *self {
            Schedule::Constant { eta, .. } => eta,
            Schedule::Power { b, .. } => (1.0 + t).powf(-b),
        }
    }

    pub fn s(&self, t: f64) -> f64 {
        match *self {
            Schedule::Constant { lam, .. } => lam * t,
            Schedule::Power { a, .. } => power_integral(a, t),
        }
    }

    pub fn lsq(&self, t: f64) -> f64 {
        match *self {
            Schedule::Constant { lam, .. } => lam * lam * t,
            Schedule::Power { a, .. } => power_integral(2.0 * a, t),
        }
    }

    /// `∫₀ᵗ lambda² eta`, the noise term of the large-deviation envelope.
    pub fn lam2_eta_integral(&self, t: f64) -> f64 {
        match *self {
            Schedule::Constant { lam, eta } => lam * lam * eta * t,
            Schedule::Power { a, b } => power_integral(2.0 * a + b, t),
        }
    }

    /// True for `lambda = eta = 1`, in either representation.
    pub fn is_unit(&self) -> bool {
        match *self {
            Schedule::Constant { lam, eta } => lam == 1.0 && eta == 1.0,
            Schedule::Power { a, b } => a == 0.0 && b == 0.0,
        }
    }
}

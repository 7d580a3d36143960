use std::fmt::Write as _;

use serde::Serialize;

use super::{GapEval, SimConfig, TrajectoryState};
use crate::problems::{GapRegime, VIProblem};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub xbar: Vec<f64>,
    pub y: Vec<f64>,
    pub s: f64,
    pub lsq: f64,
    /// Gap at `X(t)`; NaN when not evaluated.
    pub gap_x: f64,
    /// Gap at `X̄(t)`; NaN when not evaluated.
    pub gap_xbar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub last_valid_t: f64,
    pub message: String,
}

/// Time-sampled output of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub dim: usize,
    pub dt: f64,
    pub t0: f64,
    pub y0: Vec<f64>,
    pub noisy: bool,
    pub gap_regime: GapRegime,
    pub samples: Vec<Sample>,
    pub failure: Option<Failure>,
    pub config_echo: serde_json::Value,
}

impl TrajectoryRecord {
    pub(super) fn new(p: &VIProblem, cfg: &SimConfig, noisy: bool, y0: Vec<f64>) -> Self {
        let probe = p.geometry().prox_center();
        Self {
            seed: cfg.seed,
            dim: p.dim(),
            dt: cfg.dt,
            t0: cfg.t0,
            y0,
            noisy,
            gap_regime: p.gap_unchecked(probe.as_slice()).regime,
            samples: Vec::new(),
            failure: None,
            config_echo: cfg.config_echo.clone(),
        }
    }

    pub(super) fn push_state(&mut self, p: &VIProblem, st: &TrajectoryState, gaps: GapEval) {
        let xbar = st.xbar().unwrap_or_else(|| st.x.clone());
        let gap_x = match gaps {
            GapEval::Both => p.gap_unchecked(&st.x).value,
            _ => f64::NAN,
        };
        let gap_xbar = match gaps {
            GapEval::None => f64::NAN,
            _ => p.gap_unchecked(&xbar).value,
        };
        self.samples.push(Sample {
            t: st.t,
            x: st.x.clone(),
            gap_xbar,
            xbar,
            y: st.y.clone(),
            s: st.s_accum,
            lsq: st.lsq_accum,
            gap_x,
        });
    }

    /// True when started from `(0, 0)`.
    pub fn from_origin(&self) -> bool {
        self.t0 == 0.0 && self.y0.iter().all(|v| *v == 0.0)
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    fn header(&self, with_seed: bool) -> String {
        let mut h = String::new();
        if with_seed {
            h.push_str("seed,");
        }
        h.push('t');
        for i in 1..=self.dim {
            let _ = write!(h, ",x_{i}");
        }
        for i in 1..=self.dim {
            let _ = write!(h, ",xbar_{i}");
        }
        h.push_str(",gap_x,gap_xbar,S_t,Lsq_t");
        h
    }

    fn write_rows(&self, out: &mut String, with_seed: bool) {
        for s in &self.samples {
            if with_seed {
                let _ = write!(out, "{},", self.seed);
            }
            let _ = write!(out, "{:?}", s.t);
            for v in s.x.iter().chain(&s.xbar) {
                let _ = write!(out, ",{v:?}");
            }
            let _ = writeln!(out, ",{:?},{:?},{:?},{:?}", s.gap_x, s.gap_xbar, s.s, s.lsq);
        }
    }

    /// CSV with a leading `# config:` comment line holding the config echo.
    /// Floats use the shortest representation that round-trips.
    pub fn to_csv(&self) -> String {
        let mut out = config_line(&self.config_echo);
        out.push_str(&self.header(false));
        out.push('\n');
        self.write_rows(&mut out, false);
        out
    }
}

fn config_line(echo: &serde_json::Value) -> String {
    format!("# config: {}\n", serde_json::to_string(echo).unwrap_or_default())
}

/// Long-format CSV of several runs with a leading `seed` column.
pub fn ensemble_csv(records: &[TrajectoryRecord]) -> String {
    let Some(first) = records.first() else {
        return String::new();
    };
    let mut out = config_line(&first.config_echo);
    out.push_str(&first.header(true));
    out.push('\n');
    for r in records {
        r.write_rows(&mut out, true);
    }
    out
}

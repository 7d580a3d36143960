use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point is outside the domain: {0}")]
    DomainMembership(String),

    #[error("non-finite numeric input: {0}")]
    NumericInput(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical divergence after t = {last_valid_t}: {message}")]
    NumericDivergence { last_valid_t: f64, message: String },

    #[error("reference oracle failed: {0}")]
    OracleFailure(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid config:\n{}", format_issues(.0))]
    ConfigInvalid(Vec<ConfigIssue>),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One semantic problem found while validating a run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub field: String,
    pub message: String,
    pub hypothesis: Option<Hypothesis>,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)?;
        if let Some(h) = self.hypothesis {
            write!(f, " [violates {h}]")?;
        }
        Ok(())
    }
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  - {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Standing hypotheses under which the dynamics are well posed and the bounds hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// H1: the operator is Lipschitz continuous and monotone.
    LipschitzMonotone,
    /// H2: the weights are positive, C1-smooth and nonincreasing.
    SmoothNonincreasingWeights,
    /// H3: the volatility is bounded and Lipschitz in the state.
    BoundedLipschitzNoise,
    /// H4: the volatility vanishes at a logarithmic rate.
    LogarithmicNoiseDecay,
}

impl std::fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Hypothesis::LipschitzMonotone => "H1 (Lipschitz continuous monotone operator)",
            Hypothesis::SmoothNonincreasingWeights => {
                "H2 (weights positive, C1-smooth and nonincreasing)"
            }
            Hypothesis::BoundedLipschitzNoise => "H3 (volatility bounded and Lipschitz in x)",
            Hypothesis::LogarithmicNoiseDecay => "H4 (volatility vanishing at a logarithmic rate)",
        };
        f.write_str(s)
    }
}

//! Mirror-descent dynamics, deterministic and stochastic, for monotone
//! variational inequalities on compact convex domains.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod problems;
pub mod dynamics;
pub mod ensemble;
pub mod analysis;
pub mod checks;
pub mod config;
pub mod experiments;

pub use error::{ConfigIssue, Error, Hypothesis, Result};

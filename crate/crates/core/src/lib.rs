//! Robustness analysis for stable matchings in two-sided markets where one
//! side ranks candidates by salience-weighted attribute scores.
//!
//! Side `A` carries static strict preference lists and public attribute
//! vectors; each agent on side `B` holds a salience vector on the probability
//! simplex and ranks `A` by dot-product score. The library answers how far a
//! salience vector can drift (in an `l_p` norm, touching at most `k`
//! coordinates, renormalized) before a stable matching picks up a blocking
//! pair:
//!
//! * [`robustness`] — verification at a given radius, pairwise thresholds,
//!   the exact robustness radius, and the closed-form base inner radius;
//! * [`search`] — anytime best-first search over rotation-poset down-sets
//!   for the most robust stable matching, with certified bounds;
//! * [`tradeoff`] — the robustness–cost frontier via closure/min-cut upper
//!   bounds and LP lower bounds with vulnerability cuts;
//! * [`geometry`] — the polyhedral region of salience profiles preserving
//!   stability, with exact and Monte Carlo volume;
//! * [`experiments`] — random-market generation and the 1-swap robustness
//!   study on ordinal instances.
//!
//! See the crate `examples/` directory for one runnable example per
//! capability; the `salience-match` binary exposes the same operations as
//! subcommands.

pub mod convex;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod market;
pub mod relaxation;
pub mod robustness;
pub mod search;
pub mod stable;
pub mod tradeoff;

pub mod cli;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Absolute tolerance for real comparisons throughout the crate.
pub const TOL: f64 = 1e-9;

/// Looser tolerance for LP witnesses and optimal values.
pub const LP_TOL: f64 = 1e-7;

/// Closed lower bound replacing the open constraint `lambda > 0`.
pub const LAMBDA_MIN: f64 = 1e-9;

/// The `l_p` norms supported for perturbation distances.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Norm {
    #[serde(rename = "1")]
    L1,
    #[serde(rename = "2")]
    L2,
    #[serde(rename = "inf")]
    LInf,
}

impl Norm {
    /// The dual norm `p*` with `1/p + 1/p* = 1`.
    pub fn dual(self) -> Norm {
        match self {
            Norm::L1 => Norm::LInf,
            Norm::L2 => Norm::L2,
            Norm::LInf => Norm::L1,
        }
    }

    /// `||v||_p` of a slice.
    pub fn eval(self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::LInf => v.iter().fold(0.0, |acc, x| acc.max(x.abs())),
        }
    }

    /// `||a - b||_p`.
    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.eval(&diff)
    }

    /// Diameter of the probability simplex under this norm.
    pub fn simplex_diameter(self) -> f64 {
        match self {
            Norm::L1 => 2.0,
            Norm::L2 => std::f64::consts::SQRT_2,
            Norm::LInf => 1.0,
        }
    }
}

impl std::fmt::Display for Norm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Norm::L1 => write!(f, "1"),
            Norm::L2 => write!(f, "2"),
            Norm::LInf => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(Norm::L1),
            "2" => Ok(Norm::L2),
            "inf" | "infinity" | "oo" => Ok(Norm::LInf),
            other => Err(Error::InvalidInput(format!(
                "norm must be one of 1, 2, inf (got {other:?})"
            ))),
        }
    }
}

/// A robustness radius, which may be unbounded when no admissible
/// perturbation can ever create a blocking pair.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum Radius {
    Finite(f64),
    Unbounded,
}

impl Radius {
    pub fn is_finite(self) -> bool {
        matches!(self, Radius::Finite(_))
    }

    /// Finite value, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            Radius::Finite(v) => Some(v),
            Radius::Unbounded => None,
        }
    }

    /// Minimum of two radii; `Unbounded` is the identity.
    pub fn min(self, other: Radius) -> Radius {
        match (self, other) {
            (Radius::Finite(a), Radius::Finite(b)) => Radius::Finite(a.min(b)),
            (Radius::Finite(a), Radius::Unbounded) => Radius::Finite(a),
            (Radius::Unbounded, r) => r,
        }
    }

    /// True when this radius is at least `r` (unbounded dominates everything).
    pub fn at_least(self, r: f64) -> bool {
        match self {
            Radius::Finite(v) => v >= r,
            Radius::Unbounded => true,
        }
    }
}

impl PartialOrd for Radius {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering;
        match (self, other) {
            (Radius::Finite(a), Radius::Finite(b)) => a.partial_cmp(b),
            (Radius::Finite(_), Radius::Unbounded) => Some(Ordering::Less),
            (Radius::Unbounded, Radius::Finite(_)) => Some(Ordering::Greater),
            (Radius::Unbounded, Radius::Unbounded) => Some(Ordering::Equal),
        }
    }
}

// Serialized as a number, or the string "unbounded".
impl Serialize for Radius {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Radius::Finite(v) => ser.serialize_f64(*v),
            Radius::Unbounded => ser.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for Radius {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(de)? {
            Raw::Num(v) => Ok(Radius::Finite(v)),
            Raw::Str(s) if s == "unbounded" => Ok(Radius::Unbounded),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"unbounded\", got {s:?}"
            ))),
        }
    }
}

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate perturbation: total pre-normalization mass {0:e}")]
    DegeneratePerturbation(f64),
    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{op}: size {size} exceeds guard {cap}")]
    GuardExceeded {
        op: &'static str,
        size: usize,
        cap: usize,
    },
    #[error("field {field}: {message}")]
    Parse { field: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Outcome records for inequality checks.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Absolute slack allowed on `lhs ≤ rhs`.
pub const CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// The check failed against the computed right-hand side but holds against
    /// its certified upper bound, so the miss is within discretization error.
    Inconclusive,
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl Status {
    /// `pass` when `lhs ≤ rhs + tol`, `inconclusive` when only `lhs ≤ rhs_upper + tol`.
    pub fn judge(lhs: f64, rhs: f64, rhs_upper: Option<f64>) -> Self {
        if lhs <= rhs + CHECK_TOL {
            Status::Pass
        } else if rhs_upper.is_some_and(|u| lhs <= u + CHECK_TOL) {
            Status::Inconclusive
        } else {
            Status::Fail
        }
    }

    pub fn is_failure(self) -> bool {
        self == Status::Fail
    }

    /// Worst of two statuses: fail over inconclusive over pass over n/a.
    pub fn combine(self, other: Status) -> Status {
        fn rank(s: Status) -> u8 {
            match s {
                Status::NotApplicable => 0,
                Status::Pass => 1,
                Status::Inconclusive => 2,
                Status::Fail => 3,
            }
        }
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
            Status::NotApplicable => "n/a",
        })
    }
}

/// One checked inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    /// Certified upper bound for `lhs` when the left side comes from a grid scan.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lhs_upper: Option<f64>,
    /// Certified upper bound for `rhs` when the right side comes from a grid scan.
    pub rhs_upper: Option<f64>,
    pub ratio: f64,
    pub constant: Option<f64>,
    pub formula: String,
    pub grid: usize,
    pub status: Status,
    pub direction: String,
}

impl InequalityReport {
    pub fn new(lhs: f64, rhs: f64, rhs_upper: Option<f64>, formula: impl Into<String>, grid: usize) -> Self {
        Self {
            lhs,
            rhs,
            lhs_upper: None,
            rhs_upper,
            ratio: ratio(lhs, rhs),
            constant: None,
            formula: formula.into(),
            grid,
            status: Status::judge(lhs, rhs, rhs_upper),
            direction: "lhs <= rhs".into(),
        }
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant = Some(c);
        self
    }
}

/// `lhs / rhs`, with `0/0 = 0`.
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

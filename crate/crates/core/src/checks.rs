//! Named, signed residuals shared by the duality and SQDS reports.
//!
//! An inequality `lhs <= rhs` is stored as `rhs - lhs`, so it holds when the
//! value is `>= -tol`. An identity `lhs == rhs` is stored the same way and
//! holds when `|value| <= tol`. Entries whose preconditions are not met are
//! kept as [`Check::Skipped`] with a reason rather than dropped.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Value(f64),
    Skipped(String),
}

impl Check {
    pub fn skipped(reason: impl Into<String>) -> Self {
        Check::Skipped(reason.into())
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Check::Value(v) => Some(*v),
            Check::Skipped(_) => None,
        }
    }
}

pub type CheckMap = BTreeMap<String, Check>;

/// Names of inequality slacks below `-tol`.
pub fn violated_inequalities(map: &CheckMap, tol: f64) -> Vec<&str> {
    map.iter()
        .filter_map(|(k, c)| match c.value() {
            Some(v) if v < -tol || v.is_nan() => Some(k.as_str()),
            _ => None,
        })
        .collect()
}

/// Names of identity residuals with magnitude above `tol`.
pub fn violated_identities(map: &CheckMap, tol: f64) -> Vec<&str> {
    map.iter()
        .filter_map(|(k, c)| match c.value() {
            Some(v) if v.abs() > tol || v.is_nan() => Some(k.as_str()),
            _ => None,
        })
        .collect()
}

/// Largest `|value|` over the evaluated entries (0 when none were evaluated).
pub fn max_abs(map: &CheckMap) -> f64 {
    map.values().filter_map(Check::value).fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Smallest evaluated value, i.e. the tightest inequality slack.
pub fn min_value(map: &CheckMap) -> Option<f64> {
    map.values().filter_map(Check::value).reduce(f64::min)
}

//! Welfare objectives and competitive ratios.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AllocationMatrix, UtilityProfile, ValueMatrix};

/// `u_i = sum_t v[t][i] * x[t][i]`.
pub fn utilities(values: &ValueMatrix, alloc: &AllocationMatrix) -> Result<UtilityProfile> {
    if values.num_agents() != alloc.num_agents() || values.num_rounds() != alloc.num_rounds() {
        return Err(Error::dim(format!(
            "values are {}x{} but allocation is {}x{}",
            values.num_rounds(),
            values.num_agents(),
            alloc.num_rounds(),
            alloc.num_agents()
        )));
    }
    let mut u = vec![0.0; values.num_agents()];
    for (vrow, xrow) in values.rows().zip(alloc.rows()) {
        for ((acc, v), x) in u.iter_mut().zip(vrow).zip(xrow) {
            *acc += v * x;
        }
    }
    Ok(UtilityProfile::new(u))
}

/// Geometric mean of utilities, accumulated in the log domain.
///
/// A zero entry makes the product zero, which is reported as NSW = 0.
pub fn nsw(u: &UtilityProfile) -> f64 {
    let n = u.len();
    if n == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for &x in u.as_slice() {
        if x <= 0.0 {
            return 0.0;
        }
        log_sum += x.ln();
    }
    (log_sum / n as f64).exp()
}

/// Minimum utility.
pub fn maxmin(u: &UtilityProfile) -> f64 {
    if u.is_empty() {
        return 0.0;
    }
    u.as_slice().iter().copied().fold(f64::INFINITY, f64::min)
}

/// `opt / alg`, with an explicit marker for a zero denominator. Serializes
/// as a number, or as the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Finite(f64),
    Infinite,
}

impl Ratio {
    pub fn value(self) -> f64 {
        match self {
            Ratio::Finite(r) => r,
            Ratio::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Ratio::Infinite)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Finite(r) => write!(f, "{r}"),
            Ratio::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Ratio::Finite(r) => s.serialize_f64(*r),
            Ratio::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(r) => Ok(Ratio::Finite(r)),
            Raw::Text(t) if t == "inf" => Ok(Ratio::Infinite),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}

pub fn competitive_ratio(opt_value: f64, alg_value: f64) -> Ratio {
    if alg_value > 0.0 {
        Ratio::Finite(opt_value / alg_value)
    } else if opt_value > 0.0 {
        Ratio::Infinite
    } else {
        Ratio::Finite(1.0)
    }
}

//! Per-round log-objective solver.
//!
//! Maximizes `sum_i ln(base_i + v_i z_i)` over `sum_i z_i <= budget, z >= 0`.
//! Writing `w_i = base_i / v_i`, the optimum raises the lowest levels `w_i`
//! to a common water level, so every funded agent ends with the same ratio
//! `v_i / (base_i + v_i z_i)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Water-fills `budget` over agents with positive value.
///
/// Agents whose value is zero receive nothing; if every value is zero the
/// zero vector is returned and the budget stays unallocated. Every agent with
/// positive value must have a strictly positive base.
pub fn waterfill(bases: &[f64], values: &[f64], budget: f64) -> Result<Vec<f64>> {
    fill(bases, values, budget, false)
}

/// Variant that also accepts zero bases (level 0), as used by myopic greedy.
pub(crate) fn waterfill_zero_base(bases: &[f64], values: &[f64], budget: f64) -> Result<Vec<f64>> {
    fill(bases, values, budget, true)
}

fn fill(bases: &[f64], values: &[f64], budget: f64, allow_zero_base: bool) -> Result<Vec<f64>> {
    if bases.len() != values.len() {
        return Err(Error::dim(format!("{} bases for {} values", bases.len(), values.len())));
    }
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::param(format!("water-fill budget must be positive, got {budget}")));
    }
    let mut levels: Vec<(usize, f64)> = Vec::with_capacity(values.len());
    for (i, (&b, &v)) in bases.iter().zip(values).enumerate() {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::input(format!("agent {i} has invalid value {v}")));
        }
        if v == 0.0 {
            continue;
        }
        let base_ok = if allow_zero_base { b >= 0.0 } else { b > 0.0 };
        if !base_ok || !b.is_finite() {
            return Err(Error::invariant(format!("agent {i} has value {v} but non-positive base {b}")));
        }
        levels.push((i, b / v));
    }
    let mut z = vec![0.0; values.len()];
    if levels.is_empty() {
        return Ok(z);
    }
    // stable: equal levels keep ascending agent order
    levels.sort_by(|a, b| a.1.total_cmp(&b.1));

    // Work relative to the lowest level so only level differences enter.
    let floor = levels[0].1;
    let mut prefix = 0.0; // sum over the first k of (w_j - floor)
    let mut k = 0;
    let water = loop {
        prefix += levels[k].1 - floor;
        k += 1;
        if k == levels.len() {
            break (budget + prefix) / k as f64;
        }
        let next = levels[k].1 - floor;
        // cost to lift the first k agents to the next level
        let cost = next * k as f64 - prefix;
        if cost >= budget {
            break (budget + prefix) / k as f64;
        }
    };
    for &(i, w) in &levels[..k] {
        z[i] = (water - (w - floor)).max(0.0);
    }
    Ok(z)
}

/// Outcome of checking the equal-ratio optimality condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub ok: bool,
    pub max_ratio: f64,
    /// `(agent, ratio, relative shortfall from max_ratio)` for every funded
    /// agent whose ratio misses the maximum by more than the tolerance.
    pub violations: Vec<(usize, f64, f64)>,
}

/// Every funded agent must attain the maximal ratio `v_i / (base_i + v_i z_i)`.
pub fn kkt_check(bases: &[f64], values: &[f64], z: &[f64], tol: f64) -> KktReport {
    let ratio = |i: usize| {
        if values[i] == 0.0 {
            0.0
        } else {
            values[i] / (bases[i] + values[i] * z[i])
        }
    };
    let n = values.len().min(bases.len()).min(z.len());
    let max_ratio = (0..n).map(ratio).fold(0.0, f64::max);
    let violations: Vec<(usize, f64, f64)> = (0..n)
        .filter(|&i| z[i] > 0.0)
        .filter_map(|i| {
            let r = ratio(i);
            let dev = if max_ratio > 0.0 { (max_ratio - r) / max_ratio } else { 0.0 };
            (dev > tol).then_some((i, r, dev))
        })
        .collect();
    KktReport { ok: violations.is_empty(), max_ratio, violations }
}

/// `sum_i ln(base_i + v_i z_i)`.
pub fn log_objective(bases: &[f64], values: &[f64], z: &[f64]) -> f64 {
    bases.iter().zip(values).zip(z).map(|((b, v), x)| (b + v * x).ln()).sum()
}

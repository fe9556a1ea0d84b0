//! Instance and allocation containers.
//!
//! All matrices are stored row-major with one row per round, so `row(t)`
//! hands an online allocator exactly the values revealed in round `t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on allocation row sums.
pub const ROW_EPS: f64 = 1e-9;

/// Relative tolerance used when comparing welfare values.
pub const WELFARE_RTOL: f64 = 1e-7;

/// Per-round, per-agent nonnegative values of a full instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueMatrix {
    num_agents: usize,
    num_rounds: usize,
    values: Vec<f64>,
}

impl ValueMatrix {
    /// Builds a matrix from round rows, validating shape and entries.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let num_rounds = rows.len();
        if num_rounds == 0 {
            return Err(Error::input("instance needs at least one round"));
        }
        let num_agents = rows[0].len();
        if num_agents == 0 {
            return Err(Error::input("instance needs at least one agent"));
        }
        let mut values = Vec::with_capacity(num_rounds * num_agents);
        for (t, row) in rows.into_iter().enumerate() {
            if row.len() != num_agents {
                return Err(Error::dim(format!("round {t} has {} values, expected {num_agents}", row.len())));
            }
            values.extend(row);
        }
        Self::from_flat(num_agents, num_rounds, values)
    }

    pub fn from_flat(num_agents: usize, num_rounds: usize, values: Vec<f64>) -> Result<Self> {
        if num_agents == 0 || num_rounds == 0 {
            return Err(Error::input("instance needs at least one agent and one round"));
        }
        if values.len() != num_agents * num_rounds {
            return Err(Error::dim(format!("{} values for a {num_rounds}x{num_agents} instance", values.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::input(format!(
                "value at round {}, agent {} is {} (must be finite and nonnegative)",
                k / num_agents,
                k % num_agents,
                values[k]
            )));
        }
        Ok(Self { num_agents, num_rounds, values })
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn num_rounds(&self) -> usize {
        self.num_rounds
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.num_agents..(t + 1) * self.num_agents]
    }

    pub fn get(&self, t: usize, i: usize) -> f64 {
        self.values[t * self.num_agents + i]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.num_agents)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Column sums `V_i`.
    pub fn monopolist_values(&self) -> MonopolistVector {
        let mut totals = vec![0.0; self.num_agents];
        for row in self.rows() {
            for (acc, v) in totals.iter_mut().zip(row) {
                *acc += v;
            }
        }
        MonopolistVector { totals }
    }

    /// Rejects instances where some agent values nothing, naming the agents.
    pub fn require_positive_monopolist(&self) -> Result<MonopolistVector> {
        let v = self.monopolist_values();
        let agents: Vec<usize> = v.totals.iter().enumerate().filter(|(_, x)| **x <= 0.0).map(|(i, _)| i).collect();
        if agents.is_empty() {
            Ok(v)
        } else {
            Err(Error::ZeroMonopolist { agents })
        }
    }
}

/// Total value per agent if every item went to that agent alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonopolistVector {
    pub totals: Vec<f64>,
}

impl MonopolistVector {
    pub fn len(&self) -> usize {
        self.totals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.totals.is_empty()
    }
}

pub fn monopolist_values(values: &ValueMatrix) -> MonopolistVector {
    values.monopolist_values()
}

/// Strictly positive predictions of monopolist utilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionVector {
    predictions: Vec<f64>,
}

impl PredictionVector {
    pub fn new(predictions: Vec<f64>) -> Result<Self> {
        if predictions.is_empty() {
            return Err(Error::input("prediction vector is empty"));
        }
        if let Some(i) = predictions.iter().position(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::input(format!(
                "prediction for agent {i} is {} (must be finite and positive)",
                predictions[i]
            )));
        }
        Ok(Self { predictions })
    }

    /// The uninformative all-ones prediction.
    pub fn ones(n: usize) -> Self {
        Self { predictions: vec![1.0; n] }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.predictions
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }
}

/// Row-major `T x N` matrix of item fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationMatrix {
    num_agents: usize,
    shares: Vec<f64>,
}

impl AllocationMatrix {
    pub fn new(num_agents: usize) -> Self {
        Self { num_agents, shares: Vec::new() }
    }

    pub fn from_rows(num_agents: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut alloc = Self::new(num_agents);
        for row in rows {
            alloc.push_row(row)?;
        }
        Ok(alloc)
    }

    /// Appends a round, checking nonnegativity and the row-sum ceiling.
    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        let t = self.num_rounds();
        check_row(row, self.num_agents, t)?;
        self.shares.extend_from_slice(row);
        Ok(())
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn num_rounds(&self) -> usize {
        if self.num_agents == 0 {
            0
        } else {
            self.shares.len() / self.num_agents
        }
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.shares[t * self.num_agents..(t + 1) * self.num_agents]
    }

    pub fn get(&self, t: usize, i: usize) -> f64 {
        self.shares[t * self.num_agents + i]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.shares.chunks(self.num_agents.max(1))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Re-checks every row against the allocation invariants.
    pub fn validate(&self) -> Result<()> {
        for (t, row) in self.rows().enumerate() {
            check_row(row, self.num_agents, t)?;
        }
        Ok(())
    }

    /// Rounds where some agent has positive value must be (essentially) fully
    /// allocated; worthless rounds may be left partly unallocated.
    pub fn validate_complete(&self, values: &ValueMatrix) -> Result<()> {
        if values.num_rounds() != self.num_rounds() || values.num_agents() != self.num_agents {
            return Err(Error::dim("allocation and instance shapes differ"));
        }
        self.validate()?;
        for (t, row) in self.rows().enumerate() {
            let sum: f64 = row.iter().sum();
            if values.row(t).iter().any(|v| *v > 0.0) && (sum - 1.0).abs() > ROW_EPS {
                return Err(Error::invariant(format!("round {t} allocates {sum}, expected 1")));
            }
        }
        Ok(())
    }
}

fn check_row(row: &[f64], n: usize, t: usize) -> Result<()> {
    if row.len() != n {
        return Err(Error::dim(format!("allocation row {t} has {} entries, expected {n}", row.len())));
    }
    if let Some(i) = row.iter().position(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::invariant(format!("round {t}, agent {i} receives {}", row[i])));
    }
    let sum: f64 = row.iter().sum();
    if sum > 1.0 + ROW_EPS {
        return Err(Error::invariant(format!("round {t} allocates {sum} > 1")));
    }
    Ok(())
}

/// Final utility of every agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityProfile {
    pub utilities: Vec<f64>,
}

impl UtilityProfile {
    pub fn new(utilities: Vec<f64>) -> Self {
        Self { utilities }
    }

    pub fn len(&self) -> usize {
        self.utilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utilities.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.utilities
    }
}

impl From<Vec<f64>> for UtilityProfile {
    fn from(utilities: Vec<f64>) -> Self {
        Self { utilities }
    }
}

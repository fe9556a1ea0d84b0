//! Dual-price certificates.
//!
//! Any prices with `p_t >= v_{i,t} / (c_i u_i)` for every agent and round
//! give `NSW(opt) / NSW(x) <= (prod c_i)^{1/N} (sum_t p_t) / N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AllocationMatrix, ValueMatrix};
use crate::welfare::utilities;

/// Per-round prices feasible for the covering LP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceVector {
    pub prices: Vec<f64>,
}

/// Predicted prices recorded by Set-Aside Greedy, one per round.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PriceTrace {
    pub prices: Vec<f64>,
}

impl PriceTrace {
    pub fn total(&self) -> f64 {
        self.prices.iter().sum()
    }
}

/// `(prod c_i)^{1/N}`, in the log domain.
pub fn over_factor_mean(over: &[f64]) -> f64 {
    if over.is_empty() {
        return 1.0;
    }
    (over.iter().map(|c| c.ln()).sum::<f64>() / over.len() as f64).exp()
}

/// Minimal feasible prices for `alloc` and the ratio bound they certify.
pub fn dual_certificate(values: &ValueMatrix, alloc: &AllocationMatrix, over: &[f64]) -> Result<(PriceVector, f64)> {
    let n = values.num_agents();
    if over.len() != n {
        return Err(Error::dim(format!("{} over factors for {n} agents", over.len())));
    }
    let u = utilities(values, alloc)?;
    let zero: Vec<usize> = u.as_slice().iter().enumerate().filter(|(_, x)| **x <= 0.0).map(|(i, _)| i).collect();
    if !zero.is_empty() {
        return Err(Error::input(format!("certificate undefined: agents {zero:?} have zero utility")));
    }
    let prices: Vec<f64> = values
        .rows()
        .map(|row| row.iter().zip(u.as_slice()).zip(over).map(|((v, ui), c)| v / (c * ui)).fold(0.0, f64::max))
        .collect();
    let bound = over_factor_mean(over) * prices.iter().sum::<f64>() / n as f64;
    Ok((PriceVector { prices }, bound))
}

/// `(prod c_i)^{1/N} (sum_t p̃_t) / N` for a Set-Aside Greedy trace.
pub fn predicted_price_certificate(trace: &PriceTrace, over: &[f64], n: usize) -> f64 {
    over_factor_mean(over) * trace.total() / n as f64
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::offline::predicted_price_certificate;
use crate::online::{kkt_check, AllocatorKind};

use super::{theorem_bound, RunResult};

pub const KKT_TOL: f64 = 1e-9;
pub const LEMMA_SLACK: f64 = 1e-9;

/// Per-round and whole-run checks of a Set-Aside Greedy run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    /// Rounds whose greedy half misses the water-filling optimality conditions.
    pub kkt_violations: Vec<usize>,
    /// `(round, slack)` with `p̃_t > 2 sum ln(after / before) + LEMMA_SLACK`.
    pub price_violations: Vec<(usize, f64)>,
    pub predicted_bound: f64,
    pub theorem_bound: f64,
    pub bound_ok: bool,
}

impl LemmaReport {
    pub fn ok(&self) -> bool {
        self.kkt_violations.is_empty() && self.price_violations.is_empty() && self.bound_ok
    }
}

pub fn verify_lemmas(result: &RunResult, over: &[f64], under: &[f64]) -> Result<LemmaReport> {
    if result.algorithm.kind != AllocatorKind::SetAsideGreedy {
        return Err(Error::param(format!("lemma checks need a set-aside-greedy run, got {}", result.algorithm)));
    }
    let n = result.num_agents();
    if over.len() != n || under.len() != n {
        return Err(Error::dim(format!("declared factors must have {n} entries")));
    }
    let mut kkt_violations = Vec::new();
    for (t, round) in result.rounds.iter().enumerate() {
        let split = round.split.as_ref().ok_or_else(|| Error::invariant("set-aside round without a split"))?;
        let values = result.values.row(t);
        let spent: f64 = split.greedy.iter().sum();
        let full = values.iter().all(|v| *v == 0.0) || (spent - 0.5).abs() <= KKT_TOL;
        if !full || !kkt_check(&split.predicted_before, values, &split.greedy, KKT_TOL).ok {
            kkt_violations.push(t);
        }
    }
    let slack = result.per_round_lemma_slack.as_deref().unwrap_or(&[]);
    let price_violations: Vec<(usize, f64)> =
        slack.iter().enumerate().filter(|(_, s)| **s < -LEMMA_SLACK).map(|(t, s)| (t, *s)).collect();
    let trace = result.price_trace.clone().unwrap_or_default();
    let predicted_bound = predicted_price_certificate(&trace, over, n);
    let theorem_bound = theorem_bound(over, under, result.num_rounds());
    Ok(LemmaReport {
        kkt_violations,
        price_violations,
        predicted_bound,
        theorem_bound,
        bound_ok: predicted_bound <= theorem_bound + LEMMA_SLACK,
    })
}

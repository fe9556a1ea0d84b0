//! Set-Aside Greedy.
//!
//! Half of every item is split uniformly as each agent's promised share. The
//! other half is water-filled against *predicted* utilities: greedy utility
//! accrued so far plus `prediction_i / (2N)`, the utility the promised share
//! is expected to deliver by the end.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PredictionVector;

use super::waterfill::waterfill;
use super::{check_round, AllocatorKind, OnlineAllocator, RoundDecision, SplitDecision};

/// Running state between rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetAsideState {
    pub num_agents: usize,
    /// `prediction_i / (2N)`, strictly positive.
    pub bases: Vec<f64>,
    /// `sum_{t' < t} v_{i,t'} z_{i,t'}`.
    pub greedy_accrued: Vec<f64>,
    pub round_index: usize,
}

impl SetAsideState {
    pub fn new(predictions: &PredictionVector) -> Self {
        let n = predictions.len();
        let bases = predictions.as_slice().iter().map(|p| p / (2.0 * n as f64)).collect();
        Self { num_agents: n, bases, greedy_accrued: vec![0.0; n], round_index: 0 }
    }

    /// Predicted utility before the current round's allocation.
    pub fn predicted(&self) -> Vec<f64> {
        self.bases.iter().zip(&self.greedy_accrued).map(|(b, g)| b + g).collect()
    }
}

/// One round of Set-Aside Greedy; returns the decision and the next state.
pub fn set_aside_greedy_step(state: &SetAsideState, values: &[f64]) -> Result<(RoundDecision, SetAsideState)> {
    let n = state.num_agents;
    check_round(values, n)?;
    if state.bases.iter().any(|b| !(*b > 0.0)) {
        return Err(Error::invariant("set-aside bases must be positive"));
    }
    let before = state.predicted();
    let mut greedy = waterfill(&before, values, 0.5)?;
    if values.iter().all(|v| *v == 0.0) {
        // any split is optimal; spread it so the row is fully allocated
        greedy.fill(0.5 / n as f64);
    }
    let after: Vec<f64> = before.iter().zip(values).zip(&greedy).map(|((u, v), z)| u + v * z).collect();
    let predicted_price = values.iter().zip(&after).filter(|(v, _)| **v > 0.0).map(|(v, u)| v / u).fold(0.0, f64::max);

    let share = 1.0 / (2.0 * n as f64);
    let set_aside = vec![share; n];
    let total = greedy.iter().map(|z| share + z).collect();

    let mut next = state.clone();
    for ((g, v), z) in next.greedy_accrued.iter_mut().zip(values).zip(&greedy) {
        *g += v * z;
    }
    next.round_index += 1;

    let split = SplitDecision { set_aside, greedy, predicted_price, predicted_before: before, predicted_after: after };
    Ok((RoundDecision { total, split: Some(split) }, next))
}

#[derive(Debug, Clone)]
pub struct SetAsideGreedy {
    state: SetAsideState,
}

impl SetAsideGreedy {
    pub fn new(predictions: &PredictionVector) -> Self {
        Self { state: SetAsideState::new(predictions) }
    }

    pub fn state(&self) -> &SetAsideState {
        &self.state
    }
}

impl OnlineAllocator for SetAsideGreedy {
    fn kind(&self) -> AllocatorKind {
        AllocatorKind::SetAsideGreedy
    }

    fn num_agents(&self) -> usize {
        self.state.num_agents
    }

    fn allocate(&mut self, values: &[f64]) -> Result<RoundDecision> {
        let (decision, next) = set_aside_greedy_step(&self.state, values)?;
        self.state = next;
        Ok(decision)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn fresh(p: &[f64]) -> SetAsideState {
        SetAsideState::new(&PredictionVector::new(p.to_vec()).unwrap())
    }

    #[test]
    fn symmetric_first_round() {
        let (d, next) = set_aside_greedy_step(&fresh(&[1.0, 1.0]), &[1.0, 1.0]).unwrap();
        let s = d.split.unwrap();
        assert!(close(&s.greedy, &[0.25, 0.25], 1e-15));
        assert!(close(&d.total, &[0.5, 0.5], 1e-15));
        assert!((s.predicted_price - 2.0).abs() < 1e-15);
        assert_eq!(next.round_index, 1);
        assert!(close(&next.greedy_accrued, &[0.25, 0.25], 1e-15));
    }

    #[test]
    fn single_positive_value_round() {
        let (d, _) = set_aside_greedy_step(&fresh(&[1.0, 1.0]), &[1.0, 0.0]).unwrap();
        let s = d.split.unwrap();
        assert!(close(&s.greedy, &[0.5, 0.0], 1e-15));
        assert!(close(&d.total, &[0.75, 0.25], 1e-15));
        assert!((s.predicted_price - 4.0 / 3.0).abs() < 1e-15);
        // per-round bound 2 * (ln 0.75 - ln 0.25) = 2 ln 3
        let bound: f64 =
            2.0 * s.predicted_after.iter().zip(&s.predicted_before).map(|(a, b)| a.ln() - b.ln()).sum::<f64>();
        assert!((bound - 2.0 * 3f64.ln()).abs() < 1e-12);
        assert!(bound >= s.predicted_price);
    }

    #[test]
    fn worthless_round_splits_greedy_half() {
        let (d, next) = set_aside_greedy_step(&fresh(&[1.0, 2.0]), &[0.0, 0.0]).unwrap();
        let s = d.split.unwrap();
        assert_eq!(s.predicted_price, 0.0);
        assert_eq!(s.greedy, vec![0.25, 0.25]);
        assert_eq!(s.predicted_after, s.predicted_before);
        assert!(close(&d.total, &[0.5, 0.5], 1e-15));
        assert_eq!(next.greedy_accrued, vec![0.0, 0.0]);
    }

    #[test]
    fn state_is_monotone_and_bases_fixed() {
        let mut alg = SetAsideGreedy::new(&PredictionVector::new(vec![2.0, 1.0, 4.0]).unwrap());
        let rounds = [[0.3, 0.0, 1.0], [0.0, 0.7, 0.2], [1.0, 1.0, 1.0]];
        let mut prev = alg.state().greedy_accrued.clone();
        for r in rounds {
            let d = alg.allocate(&r).unwrap();
            assert!((d.total.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let s = d.split.unwrap();
            assert!((s.set_aside.iter().sum::<f64>() - 0.5).abs() < 1e-15);
            for (a, b) in alg.state().greedy_accrued.iter().zip(&prev) {
                assert!(a >= b);
            }
            prev = alg.state().greedy_accrued.clone();
        }
        assert!(close(&alg.state().bases, &[2.0 / 6.0, 1.0 / 6.0, 4.0 / 6.0], 1e-15));
    }
}

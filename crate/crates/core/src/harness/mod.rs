//! Run loops, metrics, lemma checks and parameter sweeps.

mod lemmas;
mod metrics;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::adversary::{AdaptiveAdversary, AdversaryEvent};
use crate::error::{Error, Result};
use crate::model::{AllocationMatrix, PredictionVector, UtilityProfile, ValueMatrix, ROW_EPS};
use crate::offline::PriceTrace;
use crate::online::{AlgorithmSpec, AllocatorKind, RoundDecision};
use crate::welfare::utilities;

pub use lemmas::{verify_lemmas, LemmaReport, KKT_TOL, LEMMA_SLACK};
pub use metrics::{evaluate, evaluate_with, theorem_bound, RunMetrics};
pub use sweep::{
    random_suite, random_suite_cell, run_cell, sweep, sweep_threads, Experiment, SweepCell, SweepConfig, SweepRow,
    THREADS_ENV,
};

/// Where round values come from.
pub enum Source<'a> {
    Static(&'a ValueMatrix),
    Adaptive(&'a mut dyn AdaptiveAdversary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub algorithm: AlgorithmSpec,
    /// The values actually revealed, one row per round.
    pub values: ValueMatrix,
    pub allocation: AllocationMatrix,
    pub utilities: UtilityProfile,
    /// Per-round decisions, including the Set-Aside Greedy split.
    pub rounds: Vec<RoundDecision>,
    pub price_trace: Option<PriceTrace>,
    /// `2 sum_i ln(after_i / before_i) - p̃_t` per round.
    pub per_round_lemma_slack: Option<Vec<f64>>,
    pub events: Vec<AdversaryEvent>,
    pub analytic_mw_opt: Option<f64>,
}

impl RunResult {
    pub fn num_agents(&self) -> usize {
        self.values.num_agents()
    }

    pub fn num_rounds(&self) -> usize {
        self.values.num_rounds()
    }
}

/// Feeds `source` to a fresh allocator round by round.
///
/// With an adaptive source the allocation row is handed back before the
/// next round is revealed. Any row that leaves a valued item partly
/// unallocated, or allocates more than the item, is an invariant error.
pub fn run_online(
    spec: AlgorithmSpec,
    source: Source<'_>,
    predictions: Option<&PredictionVector>,
) -> Result<RunResult> {
    let n = match &source {
        Source::Static(v) => v.num_agents(),
        Source::Adaptive(a) => a.num_agents(),
    };
    let preds = if spec.kind.uses_predictions() { predictions } else { None };
    let mut alloc = spec.build(n, preds)?;
    let mut allocation = AllocationMatrix::new(n);
    let mut rounds = Vec::new();
    let mut record = |values: &[f64]| -> Result<Vec<f64>> {
        let decision = alloc.allocate(values)?;
        let t = rounds.len();
        allocation.push_row(&decision.total)?;
        let sum: f64 = decision.total.iter().sum();
        if values.iter().any(|v| *v > 0.0) && (sum - 1.0).abs() > ROW_EPS {
            return Err(Error::invariant(format!("{} left round {t} at total share {sum}", spec.kind)));
        }
        let total = decision.total.clone();
        rounds.push(decision);
        Ok(total)
    };

    let (values, events, analytic_mw_opt) = match source {
        Source::Static(v) => {
            for row in v.rows() {
                record(row)?;
            }
            (v.clone(), Vec::new(), None)
        }
        Source::Adaptive(adv) => {
            let mut prev: Option<Vec<f64>> = None;
            while let Some(row) = adv.next_values(prev.as_deref())? {
                prev = Some(record(&row)?);
            }
            (adv.realized()?, adv.events().to_vec(), adv.analytic_mw_opt())
        }
    };

    let utilities = utilities(&values, &allocation)?;
    let (price_trace, per_round_lemma_slack) = if spec.kind == AllocatorKind::SetAsideGreedy {
        let mut prices = Vec::with_capacity(rounds.len());
        let mut slack = Vec::with_capacity(rounds.len());
        for r in &rounds {
            let split = r.split.as_ref().ok_or_else(|| Error::invariant("set-aside round without a split"))?;
            let growth: f64 =
                split.predicted_before.iter().zip(&split.predicted_after).map(|(b, a)| ((a - b) / b).ln_1p()).sum();
            prices.push(split.predicted_price);
            slack.push(2.0 * growth - split.predicted_price);
        }
        (Some(PriceTrace { prices }), Some(slack))
    } else {
        (None, None)
    };

    Ok(RunResult {
        algorithm: spec,
        values,
        allocation,
        utilities,
        rounds,
        price_trace,
        per_round_lemma_slack,
        events,
        analytic_mw_opt,
    })
}

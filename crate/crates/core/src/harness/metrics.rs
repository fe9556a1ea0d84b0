use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::offline::{
    dual_certificate, eg_solve, over_factor_mean, predicted_price_certificate, DEFAULT_MAX_ITERS, DEFAULT_TOL,
};
use crate::online::AllocatorKind;
use crate::welfare::{competitive_ratio, maxmin, nsw, Ratio};

use super::RunResult;

/// Competitive-ratio samples and the bounds that should dominate them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub num_agents: usize,
    pub num_rounds: usize,
    pub nsw_alg: f64,
    pub mw_alg: f64,
    pub nsw_opt: f64,
    pub oracle_gap: f64,
    pub oracle_certified: bool,
    pub ratio_nsw: Ratio,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mw_opt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_mw: Option<Ratio>,
    /// Absent when some agent ends with zero utility.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem_bound: Option<f64>,
    pub over_factors: Vec<f64>,
    pub under_factors: Vec<f64>,
}

/// Set-Aside Greedy's guarantee for over-prediction factors `c` and
/// under-prediction factors `d`:
/// `(prod c)^{1/N} min{ln 2N + mean ln d, ln 2T + ln max d}`.
pub fn theorem_bound(over: &[f64], under: &[f64], num_rounds: usize) -> f64 {
    let n = over.len().max(1) as f64;
    let mean_ln_d = under.iter().map(|d| d.ln()).sum::<f64>() / n;
    let max_ln_d = under.iter().map(|d| d.ln()).fold(0.0, f64::max);
    let by_agents = (2.0 * n).ln() + mean_ln_d;
    let by_rounds = (2.0 * num_rounds as f64).ln() + max_ln_d;
    over_factor_mean(over) * by_agents.min(by_rounds)
}

/// [`evaluate_with`] at the default oracle tolerance, using the run's own
/// analytic maxmin optimum if it has one.
pub fn evaluate(result: &RunResult, over: &[f64], under: &[f64]) -> Result<RunMetrics> {
    evaluate_with(result, over, under, result.analytic_mw_opt, DEFAULT_TOL)
}

pub fn evaluate_with(
    result: &RunResult,
    over: &[f64],
    under: &[f64],
    mw_opt: Option<f64>,
    oracle_tol: f64,
) -> Result<RunMetrics> {
    let n = result.num_agents();
    if over.len() != n || under.len() != n {
        return Err(Error::dim(format!("declared factors must have {n} entries")));
    }
    let values = &result.values;
    let oracle = eg_solve(values, oracle_tol, DEFAULT_MAX_ITERS)?;
    let nsw_alg = nsw(&result.utilities);
    let mw_alg = maxmin(&result.utilities);
    let positive = result.utilities.as_slice().iter().all(|u| *u > 0.0);
    let dual_bound = if positive { Some(dual_certificate(values, &result.allocation, over)?.1) } else { None };
    let set_aside = result.algorithm.kind == AllocatorKind::SetAsideGreedy;
    let predicted_bound = result.price_trace.as_ref().map(|trace| predicted_price_certificate(trace, over, n));
    Ok(RunMetrics {
        num_agents: n,
        num_rounds: result.num_rounds(),
        nsw_alg,
        mw_alg,
        nsw_opt: oracle.nsw_value,
        oracle_gap: oracle.duality_gap,
        oracle_certified: oracle.certified,
        ratio_nsw: competitive_ratio(oracle.nsw_value, nsw_alg),
        mw_opt,
        ratio_mw: mw_opt.map(|m| competitive_ratio(m, mw_alg)),
        dual_bound,
        predicted_bound,
        theorem_bound: set_aside.then(|| theorem_bound(over, under, result.num_rounds())),
        over_factors: over.to_vec(),
        under_factors: under.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_online, Source};
    use crate::model::{PredictionVector, ValueMatrix};

    #[test]
    fn theorem_bound_examples() {
        assert!((theorem_bound(&[1.0; 2], &[1.0; 2], 8) - 4f64.ln()).abs() < 1e-15);
        assert!((theorem_bound(&[1.0; 4], &[2.0; 4], 4) - 16f64.ln()).abs() < 1e-14);
        for n in 1..10 {
            let b = theorem_bound(&vec![1.0; n], &vec![1.0; n], n);
            assert!((b - (2.0 * n as f64).ln()).abs() < 1e-15);
        }
        // over-prediction scales the whole bound
        assert!((theorem_bound(&[4.0, 1.0], &[1.0; 2], 8) - 2.0 * 4f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn single_agent_ratios_are_one() {
        let v = ValueMatrix::from_rows(vec![vec![0.3], vec![0.7]]).unwrap();
        let p = PredictionVector::ones(1);
        for kind in AllocatorKind::ALL {
            let r = run_online(kind.into(), Source::Static(&v), Some(&p)).unwrap();
            let m = evaluate(&r, &[1.0], &[1.0]).unwrap();
            assert!((m.ratio_nsw.value() - 1.0).abs() < 1e-12, "{kind}");
            assert!((m.dual_bound.unwrap() - 1.0).abs() < 1e-12, "{kind}");
        }
    }

    #[test]
    fn zero_utility_is_infinite() {
        let v = ValueMatrix::from_rows(vec![vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let mut r = run_online(AllocatorKind::Uniform.into(), Source::Static(&v), None).unwrap();
        r.utilities.utilities[1] = 0.0;
        r.allocation = crate::model::AllocationMatrix::from_rows(2, &[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let m = evaluate(&r, &[1.0; 2], &[1.0; 2]).unwrap();
        assert!(m.ratio_nsw.is_infinite());
        assert!(m.dual_bound.is_none());
    }
}

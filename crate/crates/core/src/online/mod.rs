//! Online allocators.
//!
//! Every allocator sees one round of values at a time and must commit to an
//! allocation row before the next round is revealed. None of them is told
//! the horizon.

mod rules;
mod set_aside;
mod waterfill;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PredictionVector;

pub use rules::{myopic_greedy_step, proportional_step, uniform_step, MyopicGreedy, Proportional, Uniform};
pub use set_aside::{set_aside_greedy_step, SetAsideGreedy, SetAsideState};
pub use waterfill::{kkt_check, log_objective, waterfill, KktReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AllocatorKind {
    Uniform,
    Proportional,
    NormalizedProportional,
    MyopicGreedy,
    SetAsideGreedy,
}

impl AllocatorKind {
    pub const ALL: [AllocatorKind; 5] = [
        AllocatorKind::Uniform,
        AllocatorKind::Proportional,
        AllocatorKind::NormalizedProportional,
        AllocatorKind::MyopicGreedy,
        AllocatorKind::SetAsideGreedy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AllocatorKind::Uniform => "uniform",
            AllocatorKind::Proportional => "proportional",
            AllocatorKind::NormalizedProportional => "normalized-proportional",
            AllocatorKind::MyopicGreedy => "myopic-greedy",
            AllocatorKind::SetAsideGreedy => "set-aside-greedy",
        }
    }

    pub fn uses_predictions(self) -> bool {
        matches!(self, AllocatorKind::NormalizedProportional | AllocatorKind::SetAsideGreedy)
    }
}

impl fmt::Display for AllocatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AllocatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AllocatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param(format!("unknown algorithm '{s}'")))
    }
}

/// Which agents the uniform rule splits among.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UniformOver {
    #[default]
    All,
    /// Only agents with positive value this round (all agents if none).
    Nonzero,
}

impl FromStr for UniformOver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(UniformOver::All),
            "nonzero" => Ok(UniformOver::Nonzero),
            _ => Err(Error::param(format!("uniform-over must be 'all' or 'nonzero', got '{s}'"))),
        }
    }
}

impl fmt::Display for UniformOver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UniformOver::All => "all",
            UniformOver::Nonzero => "nonzero",
        })
    }
}

/// An allocator choice together with its rule variant, written
/// `uniform`, `uniform:nonzero`, `set-aside-greedy`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub kind: AllocatorKind,
    pub uniform_over: UniformOver,
}

impl AlgorithmSpec {
    pub fn new(kind: AllocatorKind) -> Self {
        Self { kind, uniform_over: UniformOver::All }
    }

    pub fn uniform_nonzero() -> Self {
        Self { kind: AllocatorKind::Uniform, uniform_over: UniformOver::Nonzero }
    }

    /// Instantiates a fresh allocator for a run with `n` agents.
    pub fn build(self, n: usize, predictions: Option<&PredictionVector>) -> Result<Box<dyn OnlineAllocator>> {
        if n == 0 {
            return Err(Error::param("allocator needs at least one agent"));
        }
        let preds = || -> Result<&PredictionVector> {
            let p =
                predictions.ok_or_else(|| Error::param(format!("algorithm '{}' requires predictions", self.kind)))?;
            if p.len() != n {
                return Err(Error::dim(format!("{} predictions for {n} agents", p.len())));
            }
            Ok(p)
        };
        Ok(match self.kind {
            AllocatorKind::Uniform => Box::new(Uniform::new(n, self.uniform_over)),
            AllocatorKind::Proportional => Box::new(Proportional::unweighted(n)),
            AllocatorKind::NormalizedProportional => Box::new(Proportional::normalized(preds()?)),
            AllocatorKind::MyopicGreedy => Box::new(MyopicGreedy::new(n)),
            AllocatorKind::SetAsideGreedy => Box::new(SetAsideGreedy::new(preds()?)),
        })
    }
}

impl From<AllocatorKind> for AlgorithmSpec {
    fn from(kind: AllocatorKind) -> Self {
        Self::new(kind)
    }
}

impl fmt::Display for AlgorithmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.uniform_over) {
            (AllocatorKind::Uniform, UniformOver::Nonzero) => f.write_str("uniform:nonzero"),
            (kind, _) => f.write_str(kind.name()),
        }
    }
}

impl FromStr for AlgorithmSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, variant) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let kind: AllocatorKind = name.parse()?;
        let uniform_over = match (kind, variant) {
            (_, None) => UniformOver::All,
            (AllocatorKind::Uniform, Some(v)) => v.parse()?,
            (_, Some(v)) => return Err(Error::param(format!("algorithm '{name}' has no variant '{v}'"))),
        };
        Ok(Self { kind, uniform_over })
    }
}

/// Extra bookkeeping exposed by the set-aside rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDecision {
    /// `y_i`, the uniform promised share (1/(2N) each).
    pub set_aside: Vec<f64>,
    /// `z_i`, the greedy half.
    pub greedy: Vec<f64>,
    /// `max_{i: v_i > 0} v_i / ũ_i(z)`, or 0 in a worthless round.
    pub predicted_price: f64,
    /// Predicted utilities before this round's greedy allocation.
    pub predicted_before: Vec<f64>,
    /// Predicted utilities after it.
    pub predicted_after: Vec<f64>,
}

/// One committed allocation row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundDecision {
    pub total: Vec<f64>,
    pub split: Option<SplitDecision>,
}

impl RoundDecision {
    pub fn plain(total: Vec<f64>) -> Self {
        Self { total, split: None }
    }
}

pub trait OnlineAllocator: Send {
    fn kind(&self) -> AllocatorKind;

    fn num_agents(&self) -> usize;

    /// Commits the allocation for the round whose values are `values`.
    fn allocate(&mut self, values: &[f64]) -> Result<RoundDecision>;
}

pub(crate) fn check_round(values: &[f64], n: usize) -> Result<()> {
    if values.len() != n {
        return Err(Error::dim(format!("round has {} values for {n} agents", values.len())));
    }
    if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::input(format!("agent {i} reported value {}", values[i])));
    }
    Ok(())
}

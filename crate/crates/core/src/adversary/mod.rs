//! Hard-instance families.
//!
//! Static families produce a full [`ValueMatrix`] up front. Adaptive
//! families implement [`AdaptiveAdversary`] and choose each round's values
//! after seeing the allocator's previous row.

mod banishment;
mod families;
mod mw_adaptive;
mod unscaled;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::ValueMatrix;

pub use banishment::{Banishment, BanishmentConfig, DEFAULT_BETA};
pub use families::{gen_mw_hardness, gen_myopic_killer, gen_proportional_killer, gen_random, MwHardness};
pub use mw_adaptive::MwAdaptive;
pub use unscaled::Unscaled;

/// Something the adversary decided after seeing an allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum AdversaryEvent {
    /// Frozen agents have zero value from the next round on.
    Freeze { round: usize, agent: usize, share: f64 },
    /// Banished agents have zero value until the final round.
    Banish { round: usize, agent: usize, share: f64 },
    /// Cleared agents sit out the rest of the year.
    Clear { round: usize, agent: usize },
    /// Agent placed in the contested set after the first round.
    Select { round: usize, agent: usize, share: f64 },
}

/// A value source that reacts to the allocator.
///
/// The driver calls `next_values(None)` for the first round and then
/// `next_values(Some(row))` with the row just allocated, until `Ok(None)`
/// signals the end of the instance. The final call still processes the
/// last allocation.
pub trait AdaptiveAdversary: Send {
    fn family(&self) -> &'static str;

    fn num_agents(&self) -> usize;

    fn next_values(&mut self, previous: Option<&[f64]>) -> Result<Option<Vec<f64>>>;

    /// The values revealed so far.
    fn realized(&self) -> Result<ValueMatrix>;

    fn events(&self) -> &[AdversaryEvent];

    /// Known maxmin optimum of the realized instance, when the family has one.
    fn analytic_mw_opt(&self) -> Option<f64> {
        None
    }
}

/// Index of the smallest entry among `candidates`, lowest index on ties.
pub(crate) fn smallest_share(candidates: &[usize], shares: &[f64]) -> usize {
    let mut best = candidates[0];
    for &i in &candidates[1..] {
        if shares[i] < shares[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_previous(previous: &[f64], n: usize) -> Result<()> {
    if previous.len() != n {
        return Err(crate::Error::dim(format!("allocation row has {} entries for {n} agents", previous.len())));
    }
    Ok(())
}

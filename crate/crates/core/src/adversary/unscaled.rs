use crate::error::{Error, Result};
use crate::model::ValueMatrix;

use super::{check_previous, smallest_share, AdaptiveAdversary, AdversaryEvent};

/// Freezing construction for allocators without monopolist information.
///
/// Round 1 gives everyone value 1. After each round the active agent with
/// the smallest share is frozen and never values anything again. Round `t`
/// (1-based, `t >= 2`) gives every active agent `1/eps^t`. `T = N`.
#[derive(Debug, Clone)]
pub struct Unscaled {
    n: usize,
    epsilon: f64,
    active: Vec<usize>,
    frozen: Vec<usize>,
    rows: Vec<Vec<f64>>,
    events: Vec<AdversaryEvent>,
}

impl Unscaled {
    pub fn new(n: usize, epsilon: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::param(format!("unscaled needs N >= 2, got {n}")));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::param(format!("unscaled needs 0 < eps < 1, got {epsilon}")));
        }
        let top = (1.0 / epsilon).powi(n as i32);
        if !top.is_finite() {
            return Err(Error::param(format!("unscaled values overflow: (1/{epsilon})^{n} is not representable")));
        }
        Ok(Unscaled { n, epsilon, active: (0..n).collect(), frozen: Vec::new(), rows: Vec::new(), events: Vec::new() })
    }

    /// Agents in the order they were frozen.
    pub fn frozen_order(&self) -> &[usize] {
        &self.frozen
    }

    /// The realized matrix with each agent's column scaled to total 1.
    /// NSW ratios are unchanged by this rescaling.
    pub fn normalized_realized(&self) -> Result<ValueMatrix> {
        let v = self.realized()?;
        let totals = v.monopolist_values().totals;
        let rows = v
            .rows()
            .map(|row| row.iter().zip(&totals).map(|(x, s)| if *s > 0.0 { x / s } else { 0.0 }).collect())
            .collect();
        ValueMatrix::from_rows(rows)
    }

    fn round_value(&self, t: usize) -> f64 {
        if t == 1 {
            1.0
        } else {
            (1.0 / self.epsilon).powi(t as i32)
        }
    }
}

impl AdaptiveAdversary for Unscaled {
    fn family(&self) -> &'static str {
        "unscaled"
    }

    fn num_agents(&self) -> usize {
        self.n
    }

    fn next_values(&mut self, previous: Option<&[f64]>) -> Result<Option<Vec<f64>>> {
        match previous {
            Some(prev) => {
                check_previous(prev, self.n)?;
                if self.rows.len() > self.frozen.len() {
                    let agent = smallest_share(&self.active, prev);
                    self.active.retain(|i| *i != agent);
                    self.frozen.push(agent);
                    self.events.push(AdversaryEvent::Freeze { round: self.rows.len() - 1, agent, share: prev[agent] });
                }
            }
            None if !self.rows.is_empty() => {
                return Err(Error::input("unscaled needs the previous allocation row"));
            }
            None => {}
        }
        if self.rows.len() == self.n {
            return Ok(None);
        }
        let value = self.round_value(self.rows.len() + 1);
        let mut row = vec![0.0; self.n];
        for &i in &self.active {
            row[i] = value;
        }
        self.rows.push(row.clone());
        Ok(Some(row))
    }

    fn realized(&self) -> Result<ValueMatrix> {
        ValueMatrix::from_rows(self.rows.clone())
    }

    fn events(&self) -> &[AdversaryEvent] {
        &self.events
    }
}

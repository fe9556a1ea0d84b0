use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ValueMatrix;

use super::{check_previous, smallest_share, AdaptiveAdversary, AdversaryEvent};

pub const DEFAULT_BETA: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BanishmentConfig {
    pub num_agents: usize,
    /// Rounds per month, also the number of agents active at a month's start.
    pub month_length: usize,
    pub num_years: usize,
    pub weight_base: f64,
}

impl BanishmentConfig {
    pub fn new(num_agents: usize, month_length: usize, num_years: usize, weight_base: f64) -> Result<Self> {
        let c = BanishmentConfig { num_agents, month_length, num_years, weight_base };
        c.validate()?;
        Ok(c)
    }

    /// `beta^{-(L - year + 1)(M - m + 1)}` with 1-based `m` and `year`.
    pub fn weight(&self, m: usize, year: usize) -> f64 {
        let e = (self.num_years - year + 1) * (self.month_length - m + 1);
        self.weight_base.powi(-(e as i32))
    }

    /// `M * sum of all weights`; must stay below 1.
    pub fn weight_mass(&self) -> f64 {
        let mut s = 0.0;
        for year in 1..=self.num_years {
            for m in 1..=self.month_length {
                s += self.weight(m, year);
            }
        }
        self.month_length as f64 * s
    }

    pub fn num_rounds(&self) -> usize {
        self.num_agents + 1
    }

    pub fn num_banished(&self) -> usize {
        self.num_agents - (self.num_agents >> self.num_years)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m, l) = (self.num_agents, self.month_length, self.num_years);
        if m == 0 || l == 0 {
            return Err(Error::param("banishment needs M >= 1 and L >= 1"));
        }
        if l >= usize::BITS as usize - 1 {
            return Err(Error::param(format!("banishment: L = {l} is too large")));
        }
        let block = (1usize << l).saturating_mul(m);
        if n == 0 || n % block != 0 {
            return Err(Error::param(format!("banishment: N = {n} is not divisible by 2^L * M = {block}")));
        }
        if !(self.weight_base > 1.0) || !self.weight_base.is_finite() {
            return Err(Error::param(format!("banishment: beta must exceed 1, got {}", self.weight_base)));
        }
        let mass = self.weight_mass();
        if !(mass < 1.0) {
            return Err(Error::param(format!(
                "banishment: weight mass M * sum w = {mass} must be below 1; raise beta"
            )));
        }
        Ok(())
    }

    /// A feasible configuration for `n` agents. `M` is about `(ln n)^{1-eps}`
    /// (at least 1) and `L` is the largest year count the divisibility allows,
    /// capped at 8. `beta` starts at `max(ln n, 2)` and grows until the weight
    /// mass is below 1.
    pub fn suggest(n: usize, eps: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::param(format!("banishment needs N >= 2, got {n}")));
        }
        let ln = (n as f64).ln();
        let mut m = (ln.powf(1.0 - eps.clamp(0.0, 1.0)).floor() as usize).max(1);
        let years = |m: usize| (1..=8).take_while(|l| n.is_multiple_of((1usize << l) * m)).last();
        let l = loop {
            if let Some(l) = years(m) {
                break l;
            }
            if m == 1 {
                return Err(Error::param(format!("banishment needs an even N, got {n}")));
            }
            m -= 1;
        };
        let mut beta = ln.max(2.0);
        loop {
            let c = BanishmentConfig { num_agents: n, month_length: m, num_years: l, weight_base: beta };
            if c.weight_mass() < 1.0 {
                return Ok(c);
            }
            beta *= 1.5;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Era {
    Banishment,
    Plenty,
    Collapse,
    Done,
}

/// Three-era hardness construction.
///
/// Years `1..=L` each cover the agents left unbanished. A month activates
/// `M` untouched agents one per round, starting with all `M` at once, and
/// after every allocation the active agent with the smallest share is
/// banished. At month end the survivors and one more untouched agent are
/// cleared for the rest of the year. After `L` years every survivor gets a
/// solo round with its remainder, and one final round pays every banished
/// agent its remainder. `T = N + 1` and every agent totals exactly 1.
#[derive(Debug, Clone)]
pub struct Banishment {
    config: BanishmentConfig,
    era: Era,
    year: usize,
    /// 1-based round within the current month; 0 between months.
    month_round: usize,
    active: Vec<usize>,
    touched: Vec<bool>,
    banished: Vec<bool>,
    seen: Vec<f64>,
    plenty_queue: Vec<usize>,
    rows: Vec<Vec<f64>>,
    events: Vec<AdversaryEvent>,
    awaiting_allocation: bool,
}

impl Banishment {
    pub fn new(config: BanishmentConfig) -> Result<Self> {
        config.validate()?;
        let n = config.num_agents;
        Ok(Banishment {
            config,
            era: Era::Banishment,
            year: 1,
            month_round: 0,
            active: Vec::new(),
            touched: vec![false; n],
            banished: vec![false; n],
            seen: vec![0.0; n],
            plenty_queue: Vec::new(),
            rows: Vec::new(),
            events: Vec::new(),
            awaiting_allocation: false,
        })
    }

    pub fn config(&self) -> &BanishmentConfig {
        &self.config
    }

    pub fn banished(&self) -> Vec<usize> {
        (0..self.config.num_agents).filter(|i| self.banished[*i]).collect()
    }

    fn next_untouched(&self) -> Option<usize> {
        (0..self.config.num_agents).find(|i| !self.touched[*i])
    }

    fn touch(&mut self, i: usize) {
        self.touched[i] = true;
        self.active.push(i);
    }

    /// Banish, then close the month and year if this was their last round.
    fn absorb(&mut self, shares: &[f64]) -> Result<()> {
        let round = self.rows.len() - 1;
        let agent = smallest_share(&self.active, shares);
        self.active.retain(|i| *i != agent);
        self.banished[agent] = true;
        self.events.push(AdversaryEvent::Banish { round, agent, share: shares[agent] });
        if self.month_round < self.config.month_length {
            return Ok(());
        }
        for agent in std::mem::take(&mut self.active) {
            self.events.push(AdversaryEvent::Clear { round, agent });
        }
        let extra =
            self.next_untouched().ok_or_else(|| Error::invariant("banishment schedule ran out of agents to clear"))?;
        self.touched[extra] = true;
        self.events.push(AdversaryEvent::Clear { round, agent: extra });
        self.month_round = 0;
        if self.next_untouched().is_none() {
            self.year += 1;
            self.touched.copy_from_slice(&self.banished);
            if self.year > self.config.num_years {
                self.era = Era::Plenty;
                self.plenty_queue = (0..self.config.num_agents).rev().filter(|i| !self.banished[*i]).collect();
            }
        }
        Ok(())
    }

    fn emit(&mut self) -> Result<Option<Vec<f64>>> {
        let n = self.config.num_agents;
        let mut row = vec![0.0; n];
        match self.era {
            Era::Banishment => {
                if self.month_round == 0 {
                    for _ in 0..self.config.month_length {
                        let i = self
                            .next_untouched()
                            .ok_or_else(|| Error::invariant("banishment schedule ran out of agents for a month"))?;
                        self.touch(i);
                    }
                } else {
                    let i = self
                        .next_untouched()
                        .ok_or_else(|| Error::invariant("banishment schedule ran out of agents mid-month"))?;
                    self.touch(i);
                }
                self.month_round += 1;
                let w = self.config.weight(self.month_round, self.year);
                for &i in &self.active {
                    row[i] = w;
                }
                self.awaiting_allocation = true;
            }
            Era::Plenty => {
                let i = self.plenty_queue.pop().expect("plenty queue is nonempty in the plenty era");
                row[i] = 1.0 - self.seen[i];
                if self.plenty_queue.is_empty() {
                    self.era = Era::Collapse;
                }
            }
            Era::Collapse => {
                for i in 0..n {
                    if self.banished[i] {
                        row[i] = 1.0 - self.seen[i];
                    }
                }
                self.era = Era::Done;
            }
            Era::Done => return Ok(None),
        }
        for (s, v) in self.seen.iter_mut().zip(&row) {
            *s += v;
        }
        self.rows.push(row.clone());
        Ok(Some(row))
    }
}

impl AdaptiveAdversary for Banishment {
    fn family(&self) -> &'static str {
        "banishment"
    }

    fn num_agents(&self) -> usize {
        self.config.num_agents
    }

    fn next_values(&mut self, previous: Option<&[f64]>) -> Result<Option<Vec<f64>>> {
        if self.awaiting_allocation {
            let prev = previous.ok_or_else(|| Error::input("banishment needs the previous allocation row"))?;
            check_previous(prev, self.config.num_agents)?;
            self.awaiting_allocation = false;
            self.absorb(prev)?;
        }
        self.emit()
    }

    fn realized(&self) -> Result<ValueMatrix> {
        ValueMatrix::from_rows(self.rows.clone())
    }

    fn events(&self) -> &[AdversaryEvent] {
        &self.events
    }
}

use crate::error::{Error, Result};
use crate::model::ValueMatrix;

use super::{check_previous, AdaptiveAdversary, AdversaryEvent};

/// Adaptive maxmin construction.
///
/// Round 1 offers everyone `1 - 1/sqrt(N)`. The `sqrt(N)` agents with the
/// smallest round-1 shares form the contested set A; every other agent then
/// gets a solo round worth `1/sqrt(N)`, and a final round gives all of A
/// `1/sqrt(N)`. `T = N - sqrt(N) + 2`.
#[derive(Debug, Clone)]
pub struct MwAdaptive {
    n: usize,
    k: usize,
    rows: Vec<Vec<f64>>,
    contested: Vec<usize>,
    solo_queue: Vec<usize>,
    finished: bool,
    events: Vec<AdversaryEvent>,
}

impl MwAdaptive {
    pub fn new(n: usize) -> Result<Self> {
        let k = (n as f64).sqrt().round() as usize;
        if n < 2 || !n.is_multiple_of(2) || k * k != n {
            return Err(Error::param(format!("mw-adaptive needs an even perfect-square N, got {n}")));
        }
        Ok(MwAdaptive {
            n,
            k,
            rows: Vec::new(),
            contested: Vec::new(),
            solo_queue: Vec::new(),
            finished: false,
            events: Vec::new(),
        })
    }

    /// The contested set, empty until round 1 has been allocated.
    pub fn contested(&self) -> &[usize] {
        &self.contested
    }

    pub fn num_rounds(&self) -> usize {
        self.n - self.k + 2
    }

    fn select(&mut self, shares: &[f64]) {
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|a, b| shares[*a].total_cmp(&shares[*b]));
        let mut contested = order[..self.k].to_vec();
        contested.sort_unstable();
        for &i in &contested {
            self.events.push(AdversaryEvent::Select { round: 0, agent: i, share: shares[i] });
        }
        self.solo_queue = (0..self.n).rev().filter(|i| !contested.contains(i)).collect();
        self.contested = contested;
    }
}

impl AdaptiveAdversary for MwAdaptive {
    fn family(&self) -> &'static str {
        "mw-adaptive"
    }

    fn num_agents(&self) -> usize {
        self.n
    }

    fn next_values(&mut self, previous: Option<&[f64]>) -> Result<Option<Vec<f64>>> {
        if let Some(prev) = previous {
            check_previous(prev, self.n)?;
        }
        let inv = 1.0 / self.k as f64;
        let row = match (self.rows.len(), previous) {
            (0, _) => vec![1.0 - inv; self.n],
            (_, None) => return Err(Error::input("mw-adaptive needs the previous allocation row")),
            (1, Some(prev)) => {
                self.select(prev);
                self.solo_row(inv)
            }
            _ if self.finished => return Ok(None),
            _ => self.solo_row(inv),
        };
        self.rows.push(row.clone());
        Ok(Some(row))
    }

    fn realized(&self) -> Result<ValueMatrix> {
        ValueMatrix::from_rows(self.rows.clone())
    }

    fn events(&self) -> &[AdversaryEvent] {
        &self.events
    }

    /// Round 1 split evenly inside A balances everyone at `1/sqrt(N)`, and
    /// A's total utility can never exceed 1.
    fn analytic_mw_opt(&self) -> Option<f64> {
        Some(1.0 / self.k as f64)
    }
}

impl MwAdaptive {
    fn solo_row(&mut self, inv: f64) -> Vec<f64> {
        let mut row = vec![0.0; self.n];
        match self.solo_queue.pop() {
            Some(i) => row[i] = inv,
            None => {
                for &i in &self.contested {
                    row[i] = inv;
                }
                self.finished = true;
            }
        }
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drive(adv: &mut MwAdaptive, mut alloc: impl FnMut(&[f64]) -> Vec<f64>) -> Vec<Vec<f64>> {
        let mut shares = Vec::new();
        let mut prev: Option<Vec<f64>> = None;
        while let Some(v) = adv.next_values(prev.as_deref()).unwrap() {
            let x = alloc(&v);
            shares.push(x.clone());
            prev = Some(x);
        }
        shares
    }

    #[test]
    fn uniform_play_n4() {
        let mut adv = MwAdaptive::new(4).unwrap();
        let x = drive(&mut adv, |v| {
            let k = v.iter().filter(|x| **x > 0.0).count();
            v.iter().map(|x| if *x > 0.0 { 1.0 / k as f64 } else { 0.0 }).collect()
        });
        assert_eq!(x.len(), 4);
        assert_eq!(adv.contested(), &[0, 1]);
        let v = adv.realized().unwrap();
        for total in v.monopolist_values().totals {
            assert!((total - 1.0).abs() < 1e-12);
        }
        let u0: f64 = (0..4).map(|t| v.get(t, 0) * x[t][0]).sum();
        assert!((u0 - 0.375).abs() < 1e-12);
        assert_eq!(adv.events().len(), 2);
    }

    #[test]
    fn contested_set_takes_smallest_shares() {
        let mut adv = MwAdaptive::new(16).unwrap();
        adv.next_values(None).unwrap();
        let mut first = vec![0.05; 16];
        first[3] = 0.0;
        first[7] = 0.0;
        first[9] = 0.01;
        first[12] = 0.01;
        first[0] = 1.0 - first[1..].iter().sum::<f64>();
        adv.next_values(Some(&first)).unwrap();
        assert_eq!(adv.contested(), &[3, 7, 9, 12]);
        let mut rounds = 2;
        while adv.next_values(Some(&[1.0 / 16.0; 16])).unwrap().is_some() {
            rounds += 1;
        }
        assert_eq!(rounds, adv.num_rounds());
        assert_eq!(rounds, 14);
    }

    #[test]
    fn rejects_bad_sizes() {
        for n in [1, 8, 9, 10] {
            assert!(MwAdaptive::new(n).is_err(), "{n}");
        }
        let mut adv = MwAdaptive::new(4).unwrap();
        adv.next_values(None).unwrap();
        assert!(adv.next_values(None).is_err());
        assert!(adv.next_values(Some(&[1.0])).is_err());
    }
}

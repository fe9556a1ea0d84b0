//! Offline NSW optimum by proportional-response dynamics.
//!
//! The Eisenberg-Gale program with unit budgets is the equilibrium of a
//! linear Fisher market where rounds are goods. Proportional response
//! iterates bids `b_{i,t} <- v_{i,t} x_{i,t} / u_i` with `x_{i,t}` the bid
//! share of good `t`. The iterate certifies itself: with
//! `p_t = max_i v_{i,t} / u_i` every allocation satisfies
//! `NSW(opt) / NSW(x) <= (1/N) sum_t p_t`, so iteration stops once that
//! average price is within `1 + tol`. That certificate holds for any
//! iterate, which lets the solver take larger multiplicative steps too.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AllocationMatrix, UtilityProfile, ValueMatrix};
use crate::welfare::nsw;

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub allocation: AllocationMatrix,
    pub utilities: UtilityProfile,
    pub nsw_value: f64,
    /// Certified upper bound on `NSW(opt) / nsw_value`, minus 1.
    pub duality_gap: f64,
    pub iterations: usize,
    /// False when the iteration budget ran out before the gap reached `tol`.
    pub certified: bool,
}

/// Shares at or below this are treated as unallocated when checking that
/// the iterate has settled on best-responding entries.
pub const SETTLED_SHARE: f64 = 1e-6;

/// Largest exponent the accelerated update may use.
const MAX_EXPONENT: f64 = 64.0;

/// Solves for the NSW-maximizing allocation to relative tolerance `tol`.
///
/// Each step is the generalized response `x <- x (v/u)^eta` normalized per
/// round; `eta = 1` is plain proportional response. `eta` grows while the
/// certificate keeps improving (or stays within `tol`), and a step that
/// fails both is retaken with `eta = 1`. Stops once the certificate is
/// within `tol` and no dominated entry keeps more than [`SETTLED_SHARE`].
pub fn eg_solve(values: &ValueMatrix, tol: f64, max_iters: usize) -> Result<OracleResult> {
    if !(tol > 0.0) {
        return Err(Error::param(format!("oracle tolerance must be positive, got {tol}")));
    }
    let totals = values.require_positive_monopolist()?.totals;
    let n = values.num_agents();
    let t_len = values.num_rounds();
    let ln_v: Vec<f64> = values.rows().flatten().map(|v| if *v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect();

    // bids v/V_i, as shares
    let mut shares = vec![0.0; n * t_len];
    for (t, row) in values.rows().enumerate() {
        let x = &mut shares[t * n..(t + 1) * n];
        let s: f64 = row.iter().zip(&totals).map(|(v, total)| v / total).sum();
        for ((xi, v), total) in x.iter_mut().zip(row).zip(&totals) {
            *xi = if s > 0.0 { v / total / s } else { 1.0 / n as f64 };
        }
    }
    let mut u = accrue(values, &shares);
    let mut gap = price_average(values, &u) - 1.0;
    let mut trial = shares.clone();
    let mut ln_u = vec![0.0; n];
    let mut eta = 1.0;
    let mut iterations = 0;
    while (gap > tol || !settled(values, &shares, &u, tol)) && iterations < max_iters {
        iterations += 1;
        for (l, x) in ln_u.iter_mut().zip(&u) {
            *l = if *x > 0.0 { x.ln() } else { -f64::MAX.ln() };
        }
        for t in 0..t_len {
            respond(&ln_v[t * n..(t + 1) * n], &ln_u, &shares[t * n..(t + 1) * n], &mut trial[t * n..(t + 1) * n], eta);
        }
        let trial_u = accrue(values, &trial);
        let trial_gap = price_average(values, &trial_u) - 1.0;
        if trial_gap < gap || trial_gap <= tol || eta == 1.0 {
            std::mem::swap(&mut shares, &mut trial);
            u = trial_u;
            gap = trial_gap;
            eta = (eta * 1.2).min(MAX_EXPONENT);
        } else {
            eta = 1.0;
        }
    }
    let allocation = AllocationMatrix::from_rows(n, &shares.chunks(n).map(<[f64]>::to_vec).collect::<Vec<_>>())?;
    let utilities = UtilityProfile::new(u);
    Ok(OracleResult {
        nsw_value: nsw(&utilities),
        allocation,
        utilities,
        duality_gap: gap.max(0.0),
        iterations,
        certified: gap <= tol,
    })
}

/// No share above [`SETTLED_SHARE`] sits on an entry whose `v/u` trails the
/// round's best by more than `10 tol`.
fn settled(values: &ValueMatrix, shares: &[f64], u: &[f64], tol: f64) -> bool {
    let n = values.num_agents();
    values.rows().zip(shares.chunks(n)).all(|(row, x)| {
        let best = row.iter().zip(u).map(|(v, ui)| v / ui).fold(0.0, f64::max);
        row.iter().zip(u).zip(x).all(|((v, ui), xi)| *xi <= SETTLED_SHARE || v / ui >= (1.0 - 10.0 * tol) * best)
    })
}

fn accrue(values: &ValueMatrix, shares: &[f64]) -> Vec<f64> {
    let n = values.num_agents();
    let mut u = vec![0.0; n];
    for (row, x) in values.rows().zip(shares.chunks(n)) {
        for ((ui, v), xi) in u.iter_mut().zip(row).zip(x) {
            *ui += v * xi;
        }
    }
    u
}

/// One round of `x_i (v_i / u_i)^eta`, normalized; worthless rounds split evenly.
fn respond(ln_v: &[f64], ln_u: &[f64], x: &[f64], out: &mut [f64], eta: f64) {
    let even = 1.0 / out.len() as f64;
    let top = ln_v.iter().zip(ln_u).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        out.fill(even);
        return;
    }
    let mut s = 0.0;
    for (((o, a), b), xi) in out.iter_mut().zip(ln_v).zip(ln_u).zip(x) {
        *o = if *a == f64::NEG_INFINITY { 0.0 } else { xi * (eta * (a - b - top)).exp() };
        s += *o;
    }
    if s > 0.0 {
        out.iter_mut().for_each(|o| *o /= s);
    } else {
        out.fill(even);
    }
}

/// `(1/N) sum_t max_i v_{i,t} / u_i`; infinite if a valued agent has no utility.
pub(crate) fn price_average(values: &ValueMatrix, u: &[f64]) -> f64 {
    let mut total = 0.0;
    for row in values.rows() {
        let mut p: f64 = 0.0;
        for (v, ui) in row.iter().zip(u) {
            if *v > 0.0 {
                p = p.max(if *ui > 0.0 { v / ui } else { f64::INFINITY });
            }
        }
        total += p;
    }
    total / u.len() as f64
}

/// Funded entries whose bang-per-buck `v/u` falls below `(1 - slack)` times
/// the round's best. Returns `(round, agent)` pairs.
pub fn eg_kkt_violations(
    values: &ValueMatrix,
    result: &OracleResult,
    share_floor: f64,
    slack: f64,
) -> Vec<(usize, usize)> {
    let u = result.utilities.as_slice();
    let mut out = Vec::new();
    for t in 0..values.num_rounds() {
        let row = values.row(t);
        let best = row.iter().zip(u).map(|(v, ui)| v / ui).fold(0.0, f64::max);
        for i in 0..row.len() {
            if result.allocation.get(t, i) > share_floor && row[i] / u[i] < (1.0 - slack) * best {
                out.push((t, i));
            }
        }
    }
    out
}

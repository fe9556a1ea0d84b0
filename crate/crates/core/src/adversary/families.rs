use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ValueMatrix;

fn exact_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

/// Maxmin hardness instance with its analytic reference values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwHardness {
    pub values: ValueMatrix,
    /// One special agent per group, in group order.
    pub special: Vec<usize>,
    /// `1/2 + 1/(2N)`.
    pub offline_mw: f64,
    /// `1/sqrt(N)`, what uniform-over-nonzero play achieves.
    pub symmetric_online_mw: f64,
}

/// `sqrt(N)` groups of `sqrt(N)` agents; each group's epoch opens with the
/// whole group at 1/2, then every non-special member gets a solo round at
/// 1/2. A final round has all special agents at 1/2.
pub fn gen_mw_hardness(n: usize, seed: u64) -> Result<MwHardness> {
    let k = exact_sqrt(n)
        .filter(|_| n > 0)
        .ok_or_else(|| Error::param(format!("mw-hardness needs a perfect-square number of agents, got {n}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let special: Vec<usize> = (0..k).map(|g| g * k + rng.gen_range(0..k)).collect();
    let mut rows = Vec::with_capacity(n + 1);
    for (g, &s) in special.iter().enumerate() {
        let group = g * k..(g + 1) * k;
        let mut row = vec![0.0; n];
        row[group.clone()].iter_mut().for_each(|v| *v = 0.5);
        rows.push(row);
        for a in group.filter(|a| *a != s) {
            let mut row = vec![0.0; n];
            row[a] = 0.5;
            rows.push(row);
        }
    }
    let mut last = vec![0.0; n];
    for &s in &special {
        last[s] = 0.5;
    }
    rows.push(last);
    Ok(MwHardness {
        values: ValueMatrix::from_rows(rows)?,
        special,
        offline_mw: 0.5 + 0.5 / n as f64,
        symmetric_online_mw: 1.0 / k as f64,
    })
}

/// `T = N`; round `t` gives agent `t` value `1/sqrt(N)` and everyone else
/// `(1 - 1/sqrt(N)) / (N - 1)`.
pub fn gen_proportional_killer(n: usize) -> Result<ValueMatrix> {
    let k = exact_sqrt(n)
        .filter(|_| n >= 2)
        .ok_or_else(|| Error::param(format!("proportional-killer needs a perfect square N >= 4, got {n}")))?;
    let diag = 1.0 / k as f64;
    let off = (1.0 - diag) / (n - 1) as f64;
    let rows = (0..n).map(|t| (0..n).map(|i| if i == t { diag } else { off }).collect()).collect();
    ValueMatrix::from_rows(rows)
}

pub const MYOPIC_MIN_AGENTS: usize = 2;
pub const MYOPIC_MAX_AGENTS: usize = 12;

/// `T = N^2`; agent `i` is active in rounds `iN..(i+1)N`. Agents that are
/// not yet active carry background values `N^{-(N^2 - t)}` (0-based `t`),
/// finished agents value nothing, and the active agent splits the rest of a
/// unit total evenly over its rounds.
pub fn gen_myopic_killer(n: usize) -> Result<ValueMatrix> {
    if !(MYOPIC_MIN_AGENTS..=MYOPIC_MAX_AGENTS).contains(&n) {
        return Err(Error::param(format!(
            "myopic-killer supports {MYOPIC_MIN_AGENTS} <= N <= {MYOPIC_MAX_AGENTS}, got {n}: the smallest \
             background value N^-(N^2) underflows double precision beyond that"
        )));
    }
    let t_len = n * n;
    let nf = n as f64;
    let background = |t: usize| nf.powi(-((t_len - t) as i32));
    let mut seen = vec![0.0; n];
    let mut rows = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let active = t / n;
        let mut row = vec![0.0; n];
        for (j, v) in row.iter_mut().enumerate() {
            if j == active {
                *v = (1.0 - seen[j]) / nf;
            } else if j > active {
                *v = background(t);
                seen[j] += *v;
            }
        }
        rows.push(row);
    }
    ValueMatrix::from_rows(rows)
}

/// I.i.d. uniform values with a fraction `sparsity` zeroed out. An agent
/// left with no value at all gets one fresh positive entry.
pub fn gen_random(n: usize, t_len: usize, sparsity: f64, seed: u64) -> Result<ValueMatrix> {
    if n == 0 || t_len == 0 {
        return Err(Error::param("random instance needs N >= 1 and T >= 1"));
    }
    if !(0.0..1.0).contains(&sparsity) {
        return Err(Error::param(format!("sparsity must be in [0, 1), got {sparsity}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<f64> = (0..n * t_len)
        .map(|_| {
            let v: f64 = rng.gen();
            if rng.gen::<f64>() < sparsity {
                0.0
            } else {
                v
            }
        })
        .collect();
    for i in 0..n {
        if (0..t_len).all(|t| values[t * n + i] == 0.0) {
            let rounds: Vec<usize> = (0..t_len).collect();
            let t = *rounds.choose(&mut rng).expect("t_len > 0");
            values[t * n + i] = 1.0 - rng.gen::<f64>();
        }
    }
    ValueMatrix::from_flat(n, t_len, values)
}

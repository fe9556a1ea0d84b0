//! Exhaustive grid oracle for tiny instances.

use crate::error::{Error, Result};
use crate::model::{AllocationMatrix, UtilityProfile, ValueMatrix};
use crate::welfare::nsw;

use super::eg::{price_average, OracleResult};

pub const MAX_AGENTS: usize = 3;
pub const MAX_ROUNDS: usize = 4;
/// Upper limit on evaluated grid points.
pub const MAX_GRID_POINTS: u128 = 50_000_000;

/// Best NSW over allocations whose every share is a multiple of `resolution`.
pub fn brute_force_nsw(values: &ValueMatrix, grid_resolution: f64) -> Result<OracleResult> {
    let n = values.num_agents();
    let t_len = values.num_rounds();
    if n > MAX_AGENTS || t_len > MAX_ROUNDS {
        return Err(Error::param(format!(
            "grid oracle supports at most {MAX_AGENTS} agents and {MAX_ROUNDS} rounds, got {n}x{t_len}"
        )));
    }
    if !(grid_resolution > 0.0 && grid_resolution <= 1.0) {
        return Err(Error::param(format!("grid resolution must be in (0, 1], got {grid_resolution}")));
    }
    let steps = (1.0 / grid_resolution).round() as usize;
    if ((steps as f64) * grid_resolution - 1.0).abs() > 1e-9 {
        return Err(Error::param(format!("grid resolution {grid_resolution} does not divide 1")));
    }
    let simplex = simplex_points(n, steps);
    let total = (simplex.len() as u128).checked_pow(t_len as u32).unwrap_or(u128::MAX);
    if total > MAX_GRID_POINTS {
        return Err(Error::param(format!("grid has {total} points (limit {MAX_GRID_POINTS})")));
    }
    let h = 1.0 / steps as f64;

    let mut best = Search { log_nsw: f64::NEG_INFINITY, choice: vec![0; t_len] };
    let mut choice = vec![0usize; t_len];
    let mut u = vec![0.0; n];
    recurse(values, &simplex, h, 0, &mut u, &mut choice, &mut best);

    let rows: Vec<Vec<f64>> = best.choice.iter().map(|&k| simplex[k].iter().map(|&s| s as f64 * h).collect()).collect();
    let allocation = AllocationMatrix::from_rows(n, &rows)?;
    let utilities = crate::welfare::utilities(values, &allocation)?;
    let gap = if utilities.as_slice().iter().all(|x| *x > 0.0) {
        (price_average(values, utilities.as_slice()) - 1.0).max(0.0)
    } else {
        f64::INFINITY
    };
    Ok(OracleResult {
        nsw_value: nsw(&utilities),
        allocation,
        utilities: UtilityProfile::new(utilities.utilities),
        duality_gap: gap,
        iterations: total as usize,
        certified: false,
    })
}

struct Search {
    log_nsw: f64,
    choice: Vec<usize>,
}

fn recurse(
    values: &ValueMatrix,
    simplex: &[Vec<usize>],
    h: f64,
    t: usize,
    u: &mut Vec<f64>,
    choice: &mut Vec<usize>,
    best: &mut Search,
) {
    if t == values.num_rounds() {
        let score: f64 = u.iter().map(|x| x.ln()).sum();
        if score > best.log_nsw {
            best.log_nsw = score;
            best.choice.copy_from_slice(choice);
        }
        return;
    }
    let row = values.row(t);
    for (k, point) in simplex.iter().enumerate() {
        for ((ui, v), s) in u.iter_mut().zip(row).zip(point) {
            *ui += v * (*s as f64 * h);
        }
        choice[t] = k;
        recurse(values, simplex, h, t + 1, u, choice, best);
        for ((ui, v), s) in u.iter_mut().zip(row).zip(point) {
            *ui -= v * (*s as f64 * h);
        }
    }
}

/// All `n`-part compositions of `steps`.
fn simplex_points(n: usize, steps: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() + 1 == n {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            go(n, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, steps, &mut Vec::with_capacity(n), &mut out);
    out
}

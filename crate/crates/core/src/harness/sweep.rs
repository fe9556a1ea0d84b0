use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::adversary::{
    gen_mw_hardness, gen_myopic_killer, gen_proportional_killer, gen_random, AdaptiveAdversary, Banishment,
    BanishmentConfig, MwAdaptive, Unscaled, DEFAULT_BETA,
};
use crate::error::{Error, Result};
use crate::model::{MonopolistVector, ValueMatrix};
use crate::online::AlgorithmSpec;
use crate::predictions::{make_predictions, ErrorModeSpec};

use super::{evaluate_with, run_online, RunMetrics, Source};
use crate::offline::DEFAULT_TOL;

pub const THREADS_ENV: &str = "NSWSIM_THREADS";

pub const FAMILIES: [&str; 7] =
    ["random", "mw-hardness", "proportional-killer", "myopic-killer", "unscaled", "banishment", "mw-adaptive"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub experiments: Vec<Experiment>,
}

/// One family crossed with every listed size, seed, algorithm and error mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub family: String,
    pub n: Vec<usize>,
    #[serde(default)]
    pub algorithms: Vec<String>,
    #[serde(default = "default_modes")]
    pub error_modes: Vec<String>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Family parameters: `t`, `t_max`, `sparsity` (random), `eps`
    /// (unscaled), `m`, `l`, `beta` (banishment).
    #[serde(default)]
    pub params: Map<String, Value>,
}

fn default_modes() -> Vec<String> {
    vec!["exact".into()]
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub family: String,
    pub n: usize,
    pub seed: u64,
    pub algorithm: AlgorithmSpec,
    pub error_mode: ErrorModeSpec,
    pub params: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub family: String,
    pub n: usize,
    pub t: Option<usize>,
    pub algorithm: String,
    pub error_mode: String,
    pub seed: u64,
    pub metrics: Option<RunMetrics>,
    pub error: Option<String>,
}

impl SweepConfig {
    /// Expands the config into cells in output order: experiment, size,
    /// seed, algorithm, error mode.
    pub fn cells(&self) -> Result<Vec<SweepCell>> {
        let mut out = Vec::new();
        for (k, e) in self.experiments.iter().enumerate() {
            if !FAMILIES.contains(&e.family.as_str()) {
                return Err(Error::param(format!("experiment {k}: unknown family '{}'", e.family)));
            }
            let algorithms: Vec<AlgorithmSpec> =
                e.algorithms.iter().map(|a| a.parse()).collect::<Result<_>>().map_err(|err| prefix(k, err))?;
            let modes: Vec<ErrorModeSpec> =
                e.error_modes.iter().map(|m| m.parse()).collect::<Result<_>>().map_err(|err| prefix(k, err))?;
            for &n in &e.n {
                for &seed in &e.seeds {
                    for &algorithm in &algorithms {
                        for &error_mode in &modes {
                            out.push(SweepCell {
                                family: e.family.clone(),
                                n,
                                seed,
                                algorithm,
                                error_mode,
                                params: e.params.clone(),
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

fn prefix(k: usize, err: Error) -> Error {
    Error::param(format!("experiment {k}: {err}"))
}

/// Parallelism cap from `NSWSIM_THREADS`, or `None` for the machine default.
pub fn sweep_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) if s.trim().is_empty() => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(Error::param(format!("{THREADS_ENV} must be a positive integer, got '{s}'"))),
            Ok(k) => Ok(Some(k)),
        },
    }
}

/// Runs every cell. Rows come back in config order regardless of which
/// cell finishes first; a failing cell yields a row with `error` set.
pub fn sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    let cells = config.cells()?;
    let threads = sweep_threads()?;
    Ok(run_cells(&cells, threads))
}

#[cfg(feature = "parallel")]
fn run_cells(cells: &[SweepCell], threads: Option<usize>) -> Vec<SweepRow> {
    use rayon::prelude::*;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        builder = builder.num_threads(k);
    }
    match builder.build() {
        Ok(pool) => pool.install(|| cells.par_iter().map(run_cell).collect()),
        Err(_) => cells.iter().map(run_cell).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_cells(cells: &[SweepCell], _threads: Option<usize>) -> Vec<SweepRow> {
    cells.iter().map(run_cell).collect()
}

pub fn run_cell(cell: &SweepCell) -> SweepRow {
    let mut row = SweepRow {
        family: cell.family.clone(),
        n: cell.n,
        t: None,
        algorithm: cell.algorithm.to_string(),
        error_mode: cell.error_mode.to_string(),
        seed: cell.seed,
        metrics: None,
        error: None,
    };
    match try_cell(cell) {
        Ok(m) => {
            row.t = Some(m.num_rounds);
            row.metrics = Some(m);
        }
        Err((t, e)) => {
            row.t = t;
            row.error = Some(e.to_string());
        }
    }
    row
}

type CellError = (Option<usize>, Error);

fn try_cell(cell: &SweepCell) -> std::result::Result<RunMetrics, CellError> {
    let n = cell.n;
    let spec = cell.error_mode.to_spec(n);
    let (over, under) = spec.declared();
    let static_run = |values: ValueMatrix, mw_opt: Option<f64>| -> std::result::Result<RunMetrics, CellError> {
        let t = Some(values.num_rounds());
        let preds = if cell.algorithm.kind.uses_predictions() {
            Some(make_predictions(&values.monopolist_values(), &spec).map_err(|e| (t, e))?)
        } else {
            None
        };
        let r = run_online(cell.algorithm, Source::Static(&values), preds.as_ref()).map_err(|e| (t, e))?;
        evaluate_with(&r, &over, &under, mw_opt, DEFAULT_TOL).map_err(|e| (t, e))
    };
    let adaptive_run = |adv: &mut dyn AdaptiveAdversary| -> std::result::Result<RunMetrics, CellError> {
        // these families pay every agent a total of 1, except unscaled,
        // whose totals depend on the run; it is fed unit predictions too
        let ones = MonopolistVector { totals: vec![1.0; n] };
        let preds = make_predictions(&ones, &spec).map_err(|e| (None, e))?;
        let r = run_online(cell.algorithm, Source::Adaptive(adv), Some(&preds)).map_err(|e| (None, e))?;
        let t = Some(r.num_rounds());
        evaluate_with(&r, &over, &under, r.analytic_mw_opt, DEFAULT_TOL).map_err(|e| (t, e))
    };
    let p = |key: &str| cell.params.get(key);
    let num = |key: &str, default: f64| -> std::result::Result<f64, CellError> {
        match p(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| (None, Error::param(format!("param '{key}' must be a number")))),
        }
    };
    let int = |key: &str| -> std::result::Result<Option<usize>, CellError> {
        match p(key) {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .map(|x| Some(x as usize))
                .ok_or_else(|| (None, Error::param(format!("param '{key}' must be a nonnegative integer")))),
        }
    };
    match cell.family.as_str() {
        "random" => {
            let t = match int("t")? {
                Some(t) => t,
                None => {
                    let t_max = int("t_max")?.unwrap_or(100).max(n);
                    ChaCha8Rng::seed_from_u64(cell.seed ^ 0x7f4a_7c15).gen_range(n..=t_max)
                }
            };
            let values = gen_random(n, t, num("sparsity", 0.3)?, cell.seed).map_err(|e| (None, e))?;
            static_run(values, None)
        }
        "mw-hardness" => {
            let h = gen_mw_hardness(n, cell.seed).map_err(|e| (None, e))?;
            static_run(h.values, Some(h.offline_mw))
        }
        "proportional-killer" => static_run(gen_proportional_killer(n).map_err(|e| (None, e))?, None),
        "myopic-killer" => static_run(gen_myopic_killer(n).map_err(|e| (None, e))?, None),
        "unscaled" => {
            let mut adv = Unscaled::new(n, num("eps", 1e-3)?).map_err(|e| (None, e))?;
            adaptive_run(&mut adv)
        }
        "banishment" => {
            let config = match (int("m")?, int("l")?) {
                (Some(m), Some(l)) => BanishmentConfig::new(n, m, l, num("beta", DEFAULT_BETA)?),
                (None, None) => BanishmentConfig::suggest(n, num("eps", 0.1)?),
                _ => Err(Error::param("banishment needs both 'm' and 'l', or neither")),
            }
            .map_err(|e| (None, e))?;
            let mut adv = Banishment::new(config).map_err(|e| (None, e))?;
            adaptive_run(&mut adv)
        }
        "mw-adaptive" => {
            let mut adv = MwAdaptive::new(n).map_err(|e| (None, e))?;
            adaptive_run(&mut adv)
        }
        other => Err((None, Error::param(format!("unknown family '{other}'")))),
    }
}

/// `(N, T, seed)` for the seeded random suite: `N` uniform in `2..=20`,
/// `T` uniform in `N..=100`, instance seed `k`.
pub fn random_suite(count: usize) -> Vec<(usize, usize, u64)> {
    (0..count as u64)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(k.wrapping_add(0x5eed));
            let n = rng.gen_range(2..=20);
            let t = rng.gen_range(n..=100);
            (n, t, k)
        })
        .collect()
}

/// The suite's `k`-th instance as a one-cell experiment.
pub fn random_suite_cell(n: usize, t: usize, seed: u64, algorithms: &[&str], error_modes: &[&str]) -> Experiment {
    let mut params = Map::new();
    params.insert("t".into(), Value::from(t));
    params.insert("sparsity".into(), Value::from(0.3));
    Experiment {
        family: "random".into(),
        n: vec![n],
        algorithms: algorithms.iter().map(|s| s.to_string()).collect(),
        error_modes: error_modes.iter().map(|s| s.to_string()).collect(),
        seeds: vec![seed],
        params,
    }
}

//! Browser bindings for the demo page in `www/`.
//!
//! Each export takes plain numbers or JSON text and returns a JSON string,
//! so the page needs no generated TypeScript glue beyond `wasm-bindgen`'s.
//! The `*_json` functions hold the logic and are what the native tests call.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use nswsim_core::adversary::{
    gen_mw_hardness, gen_myopic_killer, gen_proportional_killer, gen_random, Banishment, BanishmentConfig,
};
use nswsim_core::harness::{evaluate, run_online, RunResult, Source};
use nswsim_core::online::{kkt_check, log_objective, waterfill};
use nswsim_core::{make_predictions, AlgorithmSpec, ErrorModeSpec, PredictionVector, ValueMatrix};

type Out = Result<String, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn numbers(text: &str, what: &str) -> Result<Vec<f64>, String> {
    serde_json::from_str(text).map_err(|e| format!("{what}: {e}"))
}

/// Water level `1/lambda`: the common `b_i/v_i + z_i` of funded agents.
fn water_level(bases: &[f64], values: &[f64], z: &[f64]) -> Option<f64> {
    (0..z.len()).find(|&i| z[i] > 0.0 && values[i] > 0.0).map(|i| bases[i] / values[i] + z[i])
}

pub fn waterfill_json(bases: &str, values: &str, budget: f64) -> Out {
    let bases = numbers(bases, "bases")?;
    let values = numbers(values, "values")?;
    let z = waterfill(&bases, &values, budget).map_err(err)?;
    let kkt = kkt_check(&bases, &values, &z, 1e-9);
    let doc = json!({
        "z": z,
        "floors": bases.iter().zip(&values).map(|(b, v)| if *v > 0.0 { Value::from(b / v) } else { Value::Null }).collect::<Vec<_>>(),
        "level": water_level(&bases, &values, &z),
        "objective": log_objective(&bases, &values, &z),
        "kkt_ok": kkt.ok,
    });
    Ok(doc.to_string())
}

fn family_values(family: &str, n: usize, seed: u64) -> Result<ValueMatrix, String> {
    match family {
        "random" => gen_random(n, 2 * n, 0.3, seed),
        "mw-hardness" => gen_mw_hardness(n, seed).map(|h| h.values),
        "proportional-killer" => gen_proportional_killer(n),
        "myopic-killer" => gen_myopic_killer(n),
        other => return Err(format!("unknown family '{other}'")),
    }
    .map_err(err)
}

fn summary(r: &RunResult, over: &[f64], under: &[f64]) -> Result<Value, String> {
    let m = evaluate(r, over, under).map_err(err)?;
    Ok(json!({
        "algorithm": r.algorithm.to_string(),
        "values": r.values.to_rows(),
        "allocation": r.allocation.to_rows(),
        "utilities": r.utilities.as_slice(),
        "price_trace": r.price_trace.as_ref().map(|p| p.prices.clone()),
        "metrics": m,
    }))
}

pub fn run_family_json(family: &str, n: usize, seed: u64, algorithm: &str, predictions: &str) -> Out {
    let spec: AlgorithmSpec = algorithm.parse().map_err(err)?;
    let mode: ErrorModeSpec = predictions.parse().map_err(err)?;
    let values = family_values(family, n, seed)?;
    let errs = mode.to_spec(n);
    let (over, under) = errs.declared();
    let preds = make_predictions(&values.monopolist_values(), &errs).map_err(err)?;
    let r = run_online(spec, Source::Static(&values), Some(&preds)).map_err(err)?;
    Ok(summary(&r, &over, &under)?.to_string())
}

pub fn banishment_json(n: usize, m: usize, l: usize, beta: f64, algorithm: &str) -> Out {
    let spec: AlgorithmSpec = algorithm.parse().map_err(err)?;
    let config = BanishmentConfig::new(n, m, l, beta).map_err(err)?;
    let mut adv = Banishment::new(config).map_err(err)?;
    let r = run_online(spec, Source::Adaptive(&mut adv), Some(&PredictionVector::ones(n))).map_err(err)?;
    let mut doc = summary(&r, &vec![1.0; n], &vec![1.0; n])?;
    doc["events"] = serde_json::to_value(&r.events).map_err(err)?;
    doc["banished"] = json!(adv.banished());
    Ok(doc.to_string())
}

fn js(out: Out) -> Result<String, JsError> {
    out.map_err(|e| JsError::new(&e))
}

/// Greedy water-filling of `budget` over agents with `bases` and `values`
/// (both JSON arrays).
#[wasm_bindgen(js_name = waterfill)]
pub fn waterfill_js(bases: &str, values: &str, budget: f64) -> Result<String, JsError> {
    js(waterfill_json(bases, values, budget))
}

/// Runs one allocator on a generated instance and evaluates it.
#[wasm_bindgen(js_name = runFamily)]
pub fn run_family_js(family: &str, n: usize, seed: u32, algorithm: &str, predictions: &str) -> Result<String, JsError> {
    js(run_family_json(family, n, seed.into(), algorithm, predictions))
}

#[wasm_bindgen(js_name = banishment)]
pub fn banishment_js(n: usize, m: usize, l: usize, beta: f64, algorithm: &str) -> Result<String, JsError> {
    js(banishment_json(n, m, l, beta, algorithm))
}

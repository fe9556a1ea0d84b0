//! File formats: canonical JSON instance and result documents, and CSV tables.
//!
//! Canonical JSON is compact, with object keys sorted and every non-integer
//! number written with 17 significant digits (`%.17g`), so a document that
//! is parsed and written again comes back byte for byte. One item per round:
//! rounds with several items must be flattened into consecutive rounds before
//! they are written.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::adversary::AdversaryEvent;
use crate::error::{Error, Result};
use crate::harness::{RunMetrics, RunResult, SweepRow};
use crate::model::{PredictionVector, ValueMatrix};
use crate::welfare::{maxmin, nsw, Ratio};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `%.17g`: shortest of fixed and exponent notation, trailing zeros removed.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    if !(-4..17).contains(&exp) {
        let m = trim_fraction(mantissa);
        let e_sign = if exp < 0 { '-' } else { '+' };
        return format!("{sign}{m}e{e_sign}{:02}", exp.abs());
    }
    let body = if exp >= 0 {
        let (int, frac) = digits.split_at(exp as usize + 1);
        trim_fraction(&format!("{int}.{frac}")).to_string()
    } else {
        let zeros = "0".repeat((-exp - 1) as usize);
        trim_fraction(&format!("0.{zeros}{digits}")).to_string()
    };
    format!("{sign}{body}")
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes `value` in canonical form. Fails on non-finite numbers.
pub fn write_canonical(value: &Value, out: &mut String) -> Result<()> {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                let x = n.as_f64().ok_or_else(|| Error::input("unrepresentable number"))?;
                out.push_str(&format_number(x));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write_canonical(item, out)?;
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (k, key) in keys.into_iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("strings serialize"));
                out.push(':');
                write_canonical(&map[key], out)?;
            }
            out.push('}');
        }
    }
    Ok(())
}

/// Canonical JSON text of any serializable value, newline-terminated.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::input(format!("cannot serialize: {e}")))?;
    let mut out = String::new();
    write_canonical(&v, &mut out)?;
    out.push('\n');
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub num_agents: usize,
    pub num_rounds: usize,
    pub values: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictions: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Map<String, Value>>,
}

impl InstanceFile {
    pub fn from_matrix(values: &ValueMatrix) -> Self {
        InstanceFile {
            num_agents: values.num_agents(),
            num_rounds: values.num_rounds(),
            values: values.to_rows(),
            predictions: None,
            metadata: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let f: InstanceFile = serde_json::from_str(text).map_err(|e| Error::input(format!("instance file: {e}")))?;
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.num_rounds {
            return Err(Error::dim(format!(
                "num_rounds is {} but values has {} rows",
                self.num_rounds,
                self.values.len()
            )));
        }
        if let Some(t) = self.values.iter().position(|r| r.len() != self.num_agents) {
            return Err(Error::dim(format!(
                "num_agents is {} but values row {t} has {} entries",
                self.num_agents,
                self.values[t].len()
            )));
        }
        self.matrix()?;
        if let Some(p) = &self.predictions {
            if p.len() != self.num_agents {
                return Err(Error::dim(format!("{} predictions for {} agents", p.len(), self.num_agents)));
            }
            PredictionVector::new(p.clone())?;
        }
        Ok(())
    }

    pub fn matrix(&self) -> Result<ValueMatrix> {
        if self.num_rounds == 0 {
            return ValueMatrix::from_flat(self.num_agents, 0, Vec::new());
        }
        ValueMatrix::from_rows(self.values.clone())
    }

    pub fn prediction_vector(&self) -> Result<Option<PredictionVector>> {
        self.predictions.clone().map(PredictionVector::new).transpose()
    }

    pub fn to_json(&self) -> Result<String> {
        to_canonical_json(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub command: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub versions: Map<String, Value>,
}

impl Provenance {
    pub fn new(command: Vec<String>, seed: Option<u64>) -> Self {
        let mut versions = Map::new();
        versions.insert("nswsim".into(), Value::from(VERSION));
        Provenance { command, seed, versions }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub algorithm: String,
    pub allocation: Vec<Vec<f64>>,
    pub utilities: Vec<f64>,
    pub nsw: f64,
    pub mw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_trace: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<RunMetrics>,
    pub provenance: Provenance,
    /// The values revealed by an adaptive source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realized_instance: Option<InstanceFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<AdversaryEvent>>,
}

impl ResultFile {
    pub fn from_run(result: &RunResult, metrics: Option<RunMetrics>, provenance: Provenance) -> Self {
        ResultFile {
            algorithm: result.algorithm.to_string(),
            allocation: result.allocation.to_rows(),
            utilities: result.utilities.utilities.clone(),
            nsw: nsw(&result.utilities),
            mw: maxmin(&result.utilities),
            price_trace: result.price_trace.as_ref().map(|p| p.prices.clone()),
            metrics,
            provenance,
            realized_instance: None,
            events: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_canonical_json(self)
    }
}

pub const SWEEP_COLUMNS: [&str; 17] = [
    "family",
    "N",
    "T",
    "algorithm",
    "error_mode",
    "seed",
    "nsw_alg",
    "nsw_opt",
    "ratio_nsw",
    "mw_alg",
    "mw_opt",
    "ratio_mw",
    "dual_bound",
    "predicted_bound",
    "theorem_bound",
    "oracle_gap",
    "error",
];

pub const RUN_COLUMNS: [&str; 7] = ["round", "agent", "value", "x", "y", "z", "predicted_price"];

fn opt(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

fn ratio(r: Option<Ratio>) -> String {
    match r {
        Some(Ratio::Finite(x)) => format_number(x),
        Some(Ratio::Infinite) => "inf".into(),
        None => String::new(),
    }
}

fn csv_text(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| Error::input(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::input(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::input(format!("csv: {e}")))
}

/// One line per sweep cell, in [`SWEEP_COLUMNS`] order.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    csv_text(
        &SWEEP_COLUMNS,
        rows.iter().map(|r| {
            let m = r.metrics.as_ref();
            vec![
                r.family.clone(),
                r.n.to_string(),
                r.t.map(|t| t.to_string()).unwrap_or_default(),
                r.algorithm.clone(),
                r.error_mode.clone(),
                r.seed.to_string(),
                opt(m.map(|m| m.nsw_alg)),
                opt(m.map(|m| m.nsw_opt)),
                ratio(m.map(|m| m.ratio_nsw)),
                opt(m.map(|m| m.mw_alg)),
                opt(m.and_then(|m| m.mw_opt)),
                ratio(m.and_then(|m| m.ratio_mw)),
                opt(m.and_then(|m| m.dual_bound)),
                opt(m.and_then(|m| m.predicted_bound)),
                opt(m.and_then(|m| m.theorem_bound)),
                opt(m.map(|m| m.oracle_gap)),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )
}

/// One line per (round, agent). `y`, `z` and `predicted_price` are filled
/// only for Set-Aside Greedy.
pub fn run_csv(result: &RunResult) -> Result<String> {
    let n = result.num_agents();
    let mut lines = Vec::with_capacity(result.num_rounds() * n);
    for (t, round) in result.rounds.iter().enumerate() {
        for i in 0..n {
            let split = round.split.as_ref();
            lines.push(vec![
                t.to_string(),
                i.to_string(),
                format_number(result.values.get(t, i)),
                format_number(round.total[i]),
                opt(split.map(|s| s.set_aside[i])),
                opt(split.map(|s| s.greedy[i])),
                opt(split.map(|s| s.predicted_price)),
            ]);
        }
    }
    csv_text(&RUN_COLUMNS, lines.into_iter())
}

//! Synthetic prediction errors around the true monopolist utilities.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MonopolistVector, PredictionVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorMode {
    Exact,
    Over,
    Under,
    RandomLogUniform,
}

/// Multiplicative error envelope `V_i / d_i <= prediction_i <= c_i V_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionErrorSpec {
    pub over_factors: Vec<f64>,
    pub under_factors: Vec<f64>,
    pub mode: ErrorMode,
    pub seed: u64,
}

impl PredictionErrorSpec {
    pub fn exact(n: usize) -> Self {
        Self::uniform(n, ErrorMode::Exact, 1.0, 1.0, 0)
    }

    /// Same factors for every agent.
    pub fn uniform(n: usize, mode: ErrorMode, over: f64, under: f64, seed: u64) -> Self {
        Self { over_factors: vec![over; n], under_factors: vec![under; n], mode, seed }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.over_factors.len() != n || self.under_factors.len() != n {
            return Err(Error::dim(format!("error factors must have one entry per agent ({n})")));
        }
        for (i, (&c, &d)) in self.over_factors.iter().zip(&self.under_factors).enumerate() {
            if !(c >= 1.0 && c.is_finite()) || !(d >= 1.0 && d.is_finite()) {
                return Err(Error::param(format!(
                    "agent {i}: over factor {c} and under factor {d} must both be finite and >= 1"
                )));
            }
        }
        Ok(())
    }

    /// The factors a run should declare to the bound computations. A mode
    /// that can only err in one direction declares 1 for the other.
    pub fn declared(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.over_factors.len();
        match self.mode {
            ErrorMode::Exact => (vec![1.0; n], vec![1.0; n]),
            ErrorMode::Over => (self.over_factors.clone(), vec![1.0; n]),
            ErrorMode::Under => (vec![1.0; n], self.under_factors.clone()),
            ErrorMode::RandomLogUniform => (self.over_factors.clone(), self.under_factors.clone()),
        }
    }
}

/// Applies the error model to true monopolist utilities.
pub fn make_predictions(v: &MonopolistVector, spec: &PredictionErrorSpec) -> Result<PredictionVector> {
    spec.validate(v.len())?;
    let zero: Vec<usize> = v.totals.iter().enumerate().filter(|(_, x)| **x <= 0.0).map(|(i, _)| i).collect();
    if !zero.is_empty() {
        return Err(Error::ZeroMonopolist { agents: zero });
    }
    let preds = match spec.mode {
        ErrorMode::Exact => v.totals.clone(),
        ErrorMode::Over => v.totals.iter().zip(&spec.over_factors).map(|(x, c)| x * c).collect(),
        ErrorMode::Under => v.totals.iter().zip(&spec.under_factors).map(|(x, d)| x / d).collect(),
        ErrorMode::RandomLogUniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            v.totals
                .iter()
                .zip(spec.over_factors.iter().zip(&spec.under_factors))
                .map(|(&x, (&c, &d))| {
                    let lo = (x / d).ln();
                    let hi = (x * c).ln();
                    let p = if hi > lo { rng.gen_range(lo..=hi).exp() } else { x };
                    // exp(ln(.)) can drift an ulp outside the envelope
                    p.clamp(x / d, x * c)
                })
                .collect()
        }
    };
    PredictionVector::new(preds)
}

/// Textual error model used by the command line and sweep configs:
/// `exact`, `over:F`, `under:F`, `random:C,D,SEED`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ErrorModeSpec {
    Exact,
    Over(f64),
    Under(f64),
    Random { over: f64, under: f64, seed: u64 },
}

impl ErrorModeSpec {
    pub fn to_spec(self, n: usize) -> PredictionErrorSpec {
        match self {
            ErrorModeSpec::Exact => PredictionErrorSpec::exact(n),
            ErrorModeSpec::Over(c) => PredictionErrorSpec::uniform(n, ErrorMode::Over, c, 1.0, 0),
            ErrorModeSpec::Under(d) => PredictionErrorSpec::uniform(n, ErrorMode::Under, 1.0, d, 0),
            ErrorModeSpec::Random { over, under, seed } => {
                PredictionErrorSpec::uniform(n, ErrorMode::RandomLogUniform, over, under, seed)
            }
        }
    }
}

impl FromStr for ErrorModeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param(format!("unrecognized prediction mode '{s}'"));
        let factor = |x: &str| -> Result<f64> {
            let f: f64 = x.trim().parse().map_err(|_| bad())?;
            if f >= 1.0 && f.is_finite() {
                Ok(f)
            } else {
                Err(Error::param(format!("error factor {f} in '{s}' must be >= 1")))
            }
        };
        match s.split_once(':') {
            None if s == "exact" => Ok(ErrorModeSpec::Exact),
            Some(("over", f)) => Ok(ErrorModeSpec::Over(factor(f)?)),
            Some(("under", f)) => Ok(ErrorModeSpec::Under(factor(f)?)),
            Some(("random", rest)) => {
                let parts: Vec<&str> = rest.split(',').collect();
                if parts.len() != 3 {
                    return Err(bad());
                }
                let seed = parts[2].trim().parse().map_err(|_| bad())?;
                Ok(ErrorModeSpec::Random { over: factor(parts[0])?, under: factor(parts[1])?, seed })
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ErrorModeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorModeSpec::Exact => f.write_str("exact"),
            ErrorModeSpec::Over(c) => write!(f, "over:{c}"),
            ErrorModeSpec::Under(d) => write!(f, "under:{d}"),
            ErrorModeSpec::Random { over, under, seed } => write!(f, "random:{over},{under},{seed}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mv(x: &[f64]) -> MonopolistVector {
        MonopolistVector { totals: x.to_vec() }
    }

    #[test]
    fn exact_and_under() {
        let v = mv(&[1.0, 2.0]);
        assert_eq!(make_predictions(&v, &PredictionErrorSpec::exact(2)).unwrap().as_slice(), &[1.0, 2.0]);
        let spec = PredictionErrorSpec::uniform(2, ErrorMode::Under, 1.0, 2.0, 0);
        assert_eq!(make_predictions(&v, &spec).unwrap().as_slice(), &[0.5, 1.0]);
        let spec = PredictionErrorSpec::uniform(2, ErrorMode::Over, 3.0, 1.0, 0);
        assert_eq!(make_predictions(&v, &spec).unwrap().as_slice(), &[3.0, 6.0]);
    }

    #[test]
    fn zero_monopolist_rejected() {
        let err = make_predictions(&mv(&[1.0, 0.0]), &PredictionErrorSpec::exact(2)).unwrap_err();
        assert_eq!(err, Error::ZeroMonopolist { agents: vec![1] });
    }

    #[test]
    fn factors_below_one_rejected() {
        let spec = PredictionErrorSpec::uniform(1, ErrorMode::Over, 0.5, 1.0, 0);
        assert!(matches!(make_predictions(&mv(&[1.0]), &spec), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn random_draws_stay_in_envelope() {
        let v = mv(&[1.0, 1.0]);
        for seed in 0..10_000u64 {
            let spec = PredictionErrorSpec::uniform(2, ErrorMode::RandomLogUniform, 4.0, 4.0, seed);
            for p in make_predictions(&v, &spec).unwrap().as_slice() {
                assert!((0.25..=4.0).contains(p), "seed {seed}: {p}");
            }
        }
    }

    #[test]
    fn random_is_seed_deterministic() {
        let v = mv(&[1.0, 3.0, 0.2]);
        let spec = PredictionErrorSpec::uniform(3, ErrorMode::RandomLogUniform, 2.0, 5.0, 42);
        assert_eq!(make_predictions(&v, &spec).unwrap(), make_predictions(&v, &spec).unwrap());
    }

    #[test]
    fn mode_strings() {
        for s in ["exact", "over:2", "under:1.5", "random:2,3,7"] {
            let m: ErrorModeSpec = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert!("under:0.5".parse::<ErrorModeSpec>().is_err());
        assert!("sideways".parse::<ErrorModeSpec>().is_err());
        assert!("random:2,3".parse::<ErrorModeSpec>().is_err());
    }

    proptest! {
        #[test]
        fn every_mode_respects_envelope(
            totals in proptest::collection::vec(1e-3f64..1e3, 1..8),
            c in 1.0f64..10.0, d in 1.0f64..10.0, seed in any::<u64>(), mode in 0usize..4,
        ) {
            let mode = [ErrorMode::Exact, ErrorMode::Over, ErrorMode::Under, ErrorMode::RandomLogUniform][mode];
            let spec = PredictionErrorSpec::uniform(totals.len(), mode, c, d, seed);
            let p = make_predictions(&mv(&totals), &spec).unwrap();
            for (x, y) in totals.iter().zip(p.as_slice()) {
                prop_assert!(*y >= x / d * (1.0 - 1e-12) && *y <= x * c * (1.0 + 1e-12));
            }
        }
    }
}

//! Offline optima and certificates.

mod brute;
mod certificate;
mod eg;

pub use brute::{brute_force_nsw, MAX_AGENTS, MAX_GRID_POINTS, MAX_ROUNDS};
pub use certificate::{dual_certificate, over_factor_mean, predicted_price_certificate, PriceTrace, PriceVector};
pub use eg::{eg_kkt_violations, eg_solve, OracleResult, DEFAULT_MAX_ITERS, DEFAULT_TOL};

//! Online fair allocation of divisible items under Nash social welfare.
//!
//! The crate is organized around a stream of rounds: each round reveals one
//! divisible item and every agent's value for it, and an online allocator
//! splits it before the next round arrives.
//!
//! - [`model`] and [`welfare`]: instances, allocations and objectives.
//! - [`predictions`]: monopolist-utility predictions with controlled error.
//! - [`online`]: uniform, proportional, myopic greedy and Set-Aside Greedy.
//! - [`offline`]: the Eisenberg-Gale oracle, a grid oracle and dual-price
//!   certificates.
//! - [`adversary`]: static and adaptive hard-instance families.
//! - [`harness`]: run loops, metrics, lemma checks and sweeps.
//! - [`format`]: the JSON instance/result files and CSV emitters.

pub mod adversary;
pub mod error;
pub mod format;
pub mod harness;
pub mod model;
pub mod offline;
pub mod online;
pub mod predictions;
pub mod welfare;

pub use error::{Error, Result};
pub use model::{
    monopolist_values, AllocationMatrix, MonopolistVector, PredictionVector, UtilityProfile, ValueMatrix, ROW_EPS,
    WELFARE_RTOL,
};
pub use online::{AlgorithmSpec, AllocatorKind, OnlineAllocator, UniformOver};
pub use predictions::{make_predictions, ErrorMode, ErrorModeSpec, PredictionErrorSpec};
pub use welfare::{competitive_ratio, maxmin, nsw, utilities, Ratio};

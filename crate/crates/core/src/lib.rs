//! Bounded intuition/deliberation networks for the 64-item syllogistic
//! response-distribution benchmark, with the statistics and
//! interpretability tooling used to evaluate them.

pub mod dataset;
pub mod interpret;
pub mod models;
pub mod nnkit;
pub mod report;
pub mod stats;
pub mod syllogism;
pub mod synthetic;

/// A 9-way response distribution in [`syllogism::ResponseType`] column order.
pub type Distribution = [f64; syllogism::N_RESPONSES];

//! Tempered fractional gradient descent (TFGD).
//!
//! TFGD blends fractional-calculus memory with exponential forgetting: the
//! parameter update is a weighted sum of current and historical gradients,
//!
//! ```text
//! theta_{k+1} = theta_k - eta_k * sum_{j=0..k} w_j e^{-lambda j} grad L(theta_{k-j})
//! ```
//!
//! where the fractional order `alpha` controls how strongly old gradients
//! contribute through the coefficients `w_j`, and the tempering rate `lambda`
//! discounts them exponentially with age.
//!
//! The crate is organised around that update:
//!
//! - [`weights`] — the tempered coefficient sequence, its closed-form sum
//!   (the alignment coefficient), tail bounds, and variance bounds.
//! - [`optimizer`] — the update itself in exact, windowed, and recursive
//!   (single-accumulator) fidelity modes, plus a plain gradient-descent
//!   baseline and the power-decay step-size schedule.
//! - [`problems`] — differentiable objectives with known structure: quadratic
//!   bowls, binary logistic regression, and a seeded Gaussian noise oracle.
//! - [`data`] — Breast Cancer Wisconsin (Diagnostic) ingestion, stratified
//!   splitting, and train-fitted standardization.
//! - [`harness`] — seeded training experiments, per-epoch metrics,
//!   convergence-rate fits, and time/memory scaling benchmarks.
//! - [`config`] — the flat `key = value` run-configuration format consumed by
//!   the command-line frontend.

pub mod config;
pub mod data;
pub mod harness;
pub mod optimizer;
pub mod problems;
pub mod rng;
pub mod special;
pub mod weights;

pub use config::RunConfig;
pub use data::{Dataset, SplitIndices};
pub use optimizer::{Mode, OptimizerConfig, OptimizerState, Schedule};
pub use problems::{Logistic, NoisyOracle, Problem, Quadratic};
pub use weights::{Convention, WeightParams, WeightSequence};

//! Shared oracles for integration tests.
#![allow(dead_code)] // each test binary uses its own subset

use ndarray::Array1;
use tfgd::problems::Problem;

pub const WDBC_PATH: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/wdbc.csv");

/// Central-difference gradient, independent of any analytic gradient path.
pub fn finite_diff_gradient<P: Problem>(problem: &P, params: &Array1<f64>, h: f64) -> Array1<f64> {
    let mut grad = Array1::zeros(params.len());
    for i in 0..params.len() {
        let mut plus = params.clone();
        let mut minus = params.clone();
        plus[i] += h;
        minus[i] -= h;
        grad[i] = (problem.loss(&plus) - problem.loss(&minus)) / (2.0 * h);
    }
    grad
}

/// Max relative error between an analytic gradient and the central-difference
/// oracle, with an absolute floor for near-zero components.
pub fn max_gradient_error<P: Problem>(problem: &P, params: &Array1<f64>, h: f64) -> f64 {
    let analytic = problem.gradient(params);
    let numeric = finite_diff_gradient(problem, params, h);
    analytic
        .iter()
        .zip(numeric.iter())
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

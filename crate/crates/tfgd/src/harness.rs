//! Seeded training experiments, per-epoch metrics, empirical convergence-rate
//! fits, and time/memory scaling benchmarks.
//!
//! A single run is sequential and fully deterministic: a config plus seed
//! reproduces every report row bit-identically on the same platform.
//! Independent runs own all their state and may execute concurrently.

use crate::data::{load_wdbc, split, standardize, DataError};
use crate::optimizer::{
    memory_overhead, step, Mode, OptimizerConfig, OptimizerError, OptimizerState,
};
use crate::problems::{
    logistic_metrics, Logistic, NoisyOracle, Problem, ProblemError, Quadratic,
};
use crate::rng::SplitMix64;
use ndarray::{Array1, Axis};
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error("optimizer {optimizer}: non-finite loss at epoch {epoch} (parameter norm {param_norm})")]
    Diverged {
        optimizer: String,
        epoch: usize,
        param_norm: f64,
    },
    #[error("epochs must be >= 1")]
    InvalidEpochs,
    #[error("mini-batch size {size} must lie in [1, {train_rows}]")]
    InvalidBatchSize { size: usize, train_rows: usize },
    #[error("mini-batch mode requires a sample-based problem")]
    BatchModeUnsupported,
    #[error("dimension list must be nonempty and strictly ascending")]
    BadDims,
    #[error("rate fit range [{k_min}, {k_max}] is invalid for {len} values")]
    BadFitRange {
        k_min: usize,
        k_max: usize,
        len: usize,
    },
    #[error("rate fit needs at least 10 points, got {0}")]
    FitRangeTooSmall(usize),
    #[error("non-positive value {value} at k = {k} in rate-fit range")]
    NonPositiveValue { k: usize, value: f64 },
    #[error("checkpoint {0} exceeds step budget {1}")]
    BadCheckpoint(usize, usize),
}

/// Gradient granularity per epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMode {
    /// One full-gradient step per epoch.
    FullBatch,
    /// Seeded shuffle of the training rows each epoch, one step per batch.
    MiniBatch(usize),
}

/// What to train on.
#[derive(Debug, Clone)]
pub enum ExperimentProblem {
    /// Quadratic bowl centered at the origin; parameters start at
    /// `init * ones(dim)`.
    Quadratic { dim: usize, scale: f64, init: f64 },
    /// Breast Cancer Wisconsin logistic regression; parameters start at
    /// zero. The dataset goes through a seeded stratified split and
    /// train-fitted standardization before training.
    Wdbc {
        path: PathBuf,
        split_seed: u64,
        test_fraction: f64,
        l2: f64,
    },
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: ExperimentProblem,
    pub optimizers: Vec<(String, OptimizerConfig)>,
    pub epochs: usize,
    pub batch: BatchMode,
    /// Seed for run-level randomness (mini-batch shuffles).
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: Option<f64>,
    pub train_acc: Option<f64>,
    pub test_acc: Option<f64>,
    pub eta: f64,
    pub cumulative_ms: f64,
}

/// First epoch whose training loss is within a relative band of the final
/// loss (see [`convergence_epoch`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvergenceEpoch {
    /// 1-based epoch index.
    pub epoch: usize,
    /// False when only the final epoch satisfied the band.
    pub converged_before_final: bool,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub optimizer: String,
    pub config: OptimizerConfig,
    pub rows: Vec<EpochRow>,
    pub convergence: ConvergenceEpoch,
    pub memory_overhead_units: f64,
}

impl TrainReport {
    pub fn final_train_loss(&self) -> f64 {
        self.rows.last().expect("reports have >= 1 row").train_loss
    }

    pub fn final_test_accuracy(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.test_acc)
    }

    pub fn total_ms(&self) -> f64 {
        self.rows.last().map(|r| r.cumulative_ms).unwrap_or(0.0)
    }

    pub fn train_losses(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.train_loss).collect()
    }
}

/// Default tolerance for the convergence-epoch band.
pub const CONVERGENCE_TOL: f64 = 1e-2;

/// First (1-based) epoch `e` with
/// `loss[e] - final <= tol * max(1, final)`. A constant sequence converges
/// at epoch 1; a sequence that only enters the band at the end returns the
/// final epoch with `converged_before_final = false`.
pub fn convergence_epoch(train_losses: &[f64], tol: f64) -> ConvergenceEpoch {
    let len = train_losses.len();
    let final_loss = train_losses[len - 1];
    let band = tol * final_loss.max(1.0);
    for (i, &loss) in train_losses.iter().enumerate() {
        if loss - final_loss <= band {
            return ConvergenceEpoch {
                epoch: i + 1,
                converged_before_final: i + 1 < len,
            };
        }
    }
    ConvergenceEpoch {
        epoch: len,
        converged_before_final: false,
    }
}

/// Run the configured experiment once per optimizer.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<TrainReport>, HarnessError> {
    if config.epochs == 0 {
        return Err(HarnessError::InvalidEpochs);
    }
    match &config.problem {
        ExperimentProblem::Quadratic { dim, scale, init } => {
            if !matches!(config.batch, BatchMode::FullBatch) {
                return Err(HarnessError::BatchModeUnsupported);
            }
            run_quadratic(config, *dim, *scale, *init)
        }
        ExperimentProblem::Wdbc {
            path,
            split_seed,
            test_fraction,
            l2,
        } => run_wdbc(config, path, *split_seed, *test_fraction, *l2),
    }
}

fn run_quadratic(
    config: &ExperimentConfig,
    dim: usize,
    scale: f64,
    init: f64,
) -> Result<Vec<TrainReport>, HarnessError> {
    let problem = Quadratic::origin(dim, scale)?;
    let mut reports = Vec::new();
    for (name, opt) in &config.optimizers {
        let start = Instant::now();
        let mut state = OptimizerState::new(Array1::from_elem(dim, init), opt);
        let mut rows = Vec::with_capacity(config.epochs);
        for epoch in 1..=config.epochs {
            let gradient = problem.gradient(state.params());
            step(&mut state, &gradient, opt)?;
            let train_loss = problem.loss(state.params());
            if !train_loss.is_finite() {
                return Err(diverged(name, epoch, state.params()));
            }
            rows.push(EpochRow {
                epoch,
                train_loss,
                test_loss: None,
                train_acc: None,
                test_acc: None,
                eta: state.last_eta(),
                cumulative_ms: start.elapsed().as_secs_f64() * 1e3,
            });
        }
        reports.push(finish_report(name, opt, rows, dim, config.epochs));
    }
    Ok(reports)
}

fn run_wdbc(
    config: &ExperimentConfig,
    path: &std::path::Path,
    split_seed: u64,
    test_fraction: f64,
    l2: f64,
) -> Result<Vec<TrainReport>, HarnessError> {
    let raw = load_wdbc(path)?;
    let indices = split(&raw, split_seed, test_fraction)?;
    let data = standardize(&raw, &indices)?;

    let train_x = data.features().select(Axis(0), &indices.train);
    let test_x = data.features().select(Axis(0), &indices.test);
    let train_y: Vec<u8> = indices.train.iter().map(|&i| data.labels()[i]).collect();
    let test_y: Vec<u8> = indices.test.iter().map(|&i| data.labels()[i]).collect();

    let problem = Logistic::new(train_x.view(), &train_y, l2)?;
    let dim = problem.dimension();
    let n_train = train_x.nrows();

    if let BatchMode::MiniBatch(size) = config.batch {
        if size == 0 || size > n_train {
            return Err(HarnessError::InvalidBatchSize {
                size,
                train_rows: n_train,
            });
        }
    }

    let mut reports = Vec::new();
    for (name, opt) in &config.optimizers {
        let start = Instant::now();
        let mut state = OptimizerState::new(Array1::zeros(dim), opt);
        let mut shuffle_rng = SplitMix64::new(config.seed);
        let mut order: Vec<usize> = (0..n_train).collect();
        let mut steps_taken = 0usize;
        let mut rows = Vec::with_capacity(config.epochs);

        for epoch in 1..=config.epochs {
            match config.batch {
                BatchMode::FullBatch => {
                    let gradient = problem.gradient(state.params());
                    step(&mut state, &gradient, opt)?;
                    steps_taken += 1;
                }
                BatchMode::MiniBatch(size) => {
                    shuffle_rng.shuffle(&mut order);
                    for batch in order.chunks(size) {
                        let gradient = problem.gradient_on_rows(state.params(), batch)?;
                        step(&mut state, &gradient, opt)?;
                        steps_taken += 1;
                    }
                }
            }

            let (train_loss, train_acc) =
                logistic_metrics(state.params(), train_x.view(), &train_y)?;
            if !train_loss.is_finite() {
                return Err(diverged(name, epoch, state.params()));
            }
            let (test_loss, test_acc) = logistic_metrics(state.params(), test_x.view(), &test_y)?;
            rows.push(EpochRow {
                epoch,
                train_loss,
                test_loss: Some(test_loss),
                train_acc: Some(train_acc),
                test_acc: Some(test_acc),
                eta: state.last_eta(),
                cumulative_ms: start.elapsed().as_secs_f64() * 1e3,
            });
        }
        reports.push(finish_report(name, opt, rows, dim, steps_taken));
    }
    Ok(reports)
}

fn diverged(name: &str, epoch: usize, params: &Array1<f64>) -> HarnessError {
    HarnessError::Diverged {
        optimizer: name.to_string(),
        epoch,
        param_norm: params.dot(params).sqrt(),
    }
}

fn finish_report(
    name: &str,
    opt: &OptimizerConfig,
    rows: Vec<EpochRow>,
    dim: usize,
    steps: usize,
) -> TrainReport {
    let losses: Vec<f64> = rows.iter().map(|r| r.train_loss).collect();
    let memory_overhead_units = match opt.mode() {
        Mode::SgdBaseline => 0.0,
        _ => memory_overhead(dim, opt.weight_params().lambda(), steps.max(1))
            .expect("validated dimensions"),
    };
    TrainReport {
        optimizer: name.to_string(),
        config: opt.clone(),
        rows,
        convergence: convergence_epoch(&losses, CONVERGENCE_TOL),
        memory_overhead_units,
    }
}

/// Suboptimality `L(theta_k) - L*` at each checkpoint of a noisy quadratic
/// run (parameters start at `ones(dim)`).
pub fn run_stochastic_quadratic(
    dim: usize,
    scale: f64,
    sigma: f64,
    opt: &OptimizerConfig,
    steps: usize,
    noise_seed: u64,
    checkpoints: &[usize],
) -> Result<Vec<f64>, HarnessError> {
    if steps == 0 {
        return Err(HarnessError::InvalidEpochs);
    }
    for &c in checkpoints {
        if c == 0 || c > steps {
            return Err(HarnessError::BadCheckpoint(c, steps));
        }
    }
    let problem = Quadratic::origin(dim, scale)?;
    let optimum_value = problem.optimum().expect("quadratic optimum is known").1;
    let mut oracle = NoisyOracle::new(problem, sigma, noise_seed)?;
    let mut state = OptimizerState::new(Array1::ones(dim), opt);
    let mut out = vec![0.0; checkpoints.len()];
    for k in 1..=steps {
        let gradient = oracle.noisy_gradient(state.params());
        step(&mut state, &gradient, opt)?;
        for (slot, &c) in out.iter_mut().zip(checkpoints.iter()) {
            if c == k {
                *slot = oracle.base().loss(state.params()) - optimum_value;
            }
        }
    }
    Ok(out)
}

/// Least-squares fit of `log(values[k])` against `log(k)` over a 1-based
/// index range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub k_min: usize,
    pub k_max: usize,
}

/// Running averages `(1/K) sum_{k<=K} values[k]`, the quantity whose decay
/// the convex-rate analysis bounds.
pub fn running_average(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, &v) in values.iter().enumerate() {
        sum += v;
        out.push(sum / (i + 1) as f64);
    }
    out
}

/// Fit `log(values[k]) ~ slope * log(k) + intercept` for `k` in
/// `[k_min, k_max]` (1-based). Rejects non-positive values in the range and
/// ranges of fewer than 10 points.
pub fn fit_rate(values: &[f64], k_min: usize, k_max: usize) -> Result<RateFit, HarnessError> {
    if k_min == 0 || k_min > k_max || k_max > values.len() {
        return Err(HarnessError::BadFitRange {
            k_min,
            k_max,
            len: values.len(),
        });
    }
    let n = k_max - k_min + 1;
    if n < 10 {
        return Err(HarnessError::FitRangeTooSmall(n));
    }
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for k in k_min..=k_max {
        let value = values[k - 1];
        if value <= 0.0 {
            return Err(HarnessError::NonPositiveValue { k, value });
        }
        xs.push((k as f64).ln());
        ys.push(value.ln());
    }
    let nf = n as f64;
    let mean_x = xs.iter().sum::<f64>() / nf;
    let mean_y = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res = syy - slope * sxy;
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        k_min,
        k_max,
    })
}

/// One row of the time/memory scaling table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub dim: usize,
    pub tfgd_step_us: f64,
    pub sgd_step_us: f64,
    /// `memory_overhead(dim, lambda, steps)`.
    pub memory_units: f64,
}

/// Median per-step wall time of recursive-mode tempered descent and the
/// plain baseline on origin-centered quadratic bowls of each dimension,
/// after 10 warmup steps. Dimensions must be strictly ascending.
pub fn bench_scaling(
    dims: &[usize],
    steps: usize,
    weight_params: &crate::weights::WeightParams,
) -> Result<Vec<ScalingRow>, HarnessError> {
    if dims.is_empty() || dims.windows(2).any(|w| w[0] >= w[1]) || dims[0] == 0 {
        return Err(HarnessError::BadDims);
    }
    if steps == 0 {
        return Err(HarnessError::InvalidEpochs);
    }
    let mut rows = Vec::with_capacity(dims.len());
    for &dim in dims {
        let problem = Quadratic::origin(dim, 1.0)?;
        // step size small enough that parameters stay O(1) over the run,
        // keeping every timed step on the same arithmetic path
        let tfgd = OptimizerConfig::new(
            Mode::Recursive,
            *weight_params,
            1e-4,
            crate::optimizer::Schedule::Constant,
        )?;
        let sgd = OptimizerConfig::sgd(1e-4)?;
        let tfgd_step_us = median_step_micros(&problem, &tfgd, dim, steps)?;
        let sgd_step_us = median_step_micros(&problem, &sgd, dim, steps)?;
        rows.push(ScalingRow {
            dim,
            tfgd_step_us,
            sgd_step_us,
            memory_units: memory_overhead(dim, weight_params.lambda(), steps)?,
        });
    }
    Ok(rows)
}

fn median_step_micros(
    problem: &Quadratic,
    opt: &OptimizerConfig,
    dim: usize,
    steps: usize,
) -> Result<f64, HarnessError> {
    let mut state = OptimizerState::new(Array1::ones(dim), opt);
    let mut gradient = Array1::zeros(dim);
    for _ in 0..10 {
        problem.gradient_into(state.params(), &mut gradient);
        step(&mut state, &gradient, opt)?;
    }
    let mut samples = Vec::with_capacity(steps);
    for _ in 0..steps {
        let t0 = Instant::now();
        problem.gradient_into(state.params(), &mut gradient);
        step(&mut state, &gradient, opt)?;
        samples.push(t0.elapsed().as_secs_f64() * 1e6);
    }
    samples.sort_by(|a, b| a.partial_cmp(b).expect("timings are finite"));
    let mid = samples.len() / 2;
    Ok(if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        0.5 * (samples[mid - 1] + samples[mid])
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-epoch metrics CSV. Header:
/// `epoch,train_loss,test_loss,train_acc,test_acc,eta,cumulative_ms`.
pub fn write_metrics_csv<W: Write>(mut out: W, report: &TrainReport) -> std::io::Result<()> {
    writeln!(
        out,
        "epoch,train_loss,test_loss,train_acc,test_acc,eta,cumulative_ms"
    )?;
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.epoch,
            r.train_loss,
            fmt_opt(r.test_loss),
            fmt_opt(r.train_acc),
            fmt_opt(r.test_acc),
            r.eta,
            r.cumulative_ms
        )?;
    }
    Ok(())
}

/// Comparison summary CSV. Header:
/// `optimizer,test_accuracy,final_loss,convergence_epoch,total_ms,memory_units`.
pub fn write_summary_csv<W: Write>(mut out: W, reports: &[TrainReport]) -> std::io::Result<()> {
    writeln!(
        out,
        "optimizer,test_accuracy,final_loss,convergence_epoch,total_ms,memory_units"
    )?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.optimizer,
            fmt_opt(r.final_test_accuracy()),
            r.final_train_loss(),
            r.convergence.epoch,
            r.total_ms(),
            r.memory_overhead_units
        )?;
    }
    Ok(())
}

/// Rate-fit CSV. Header: `K_min,K_max,slope,intercept,r_squared`.
pub fn write_rate_fit_csv<W: Write>(mut out: W, fit: &RateFit) -> std::io::Result<()> {
    writeln!(out, "K_min,K_max,slope,intercept,r_squared")?;
    writeln!(
        out,
        "{},{},{},{},{}",
        fit.k_min, fit.k_max, fit.slope, fit.intercept, fit.r_squared
    )
}

/// Scaling-table CSV. Header: `d,tfgd_step_us,sgd_step_us,memory_units`.
pub fn write_scaling_csv<W: Write>(mut out: W, rows: &[ScalingRow]) -> std::io::Result<()> {
    writeln!(out, "d,tfgd_step_us,sgd_step_us,memory_units")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.dim, r.tfgd_step_us, r.sgd_step_us, r.memory_units
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::Schedule;
    use crate::weights::{Convention, WeightParams};
    use approx::assert_relative_eq;

    fn rf(alpha: f64, lambda: f64) -> WeightParams {
        WeightParams::new(alpha, lambda, Convention::RisingFactorial).unwrap()
    }

    #[test]
    fn sgd_on_quadratic_matches_closed_form() {
        let config = ExperimentConfig {
            problem: ExperimentProblem::Quadratic {
                dim: 10,
                scale: 1.0,
                init: 1.0,
            },
            optimizers: vec![("sgd".into(), OptimizerConfig::sgd(0.5).unwrap())],
            epochs: 50,
            batch: BatchMode::FullBatch,
            seed: 0,
        };
        let reports = run_experiment(&config).unwrap();
        let rows = &reports[0].rows;
        let loss0 = 5.0; // 0.5 * ||ones(10)||^2
        for row in rows {
            let expected = 0.5f64.powi(2 * row.epoch as i32) * loss0;
            assert!(
                (row.train_loss - expected).abs() <= 1e-10,
                "epoch {}: {} vs {}",
                row.epoch,
                row.train_loss,
                expected
            );
        }
        // cumulative time is nondecreasing
        for pair in rows.windows(2) {
            assert!(pair[1].cumulative_ms >= pair[0].cumulative_ms);
        }
    }

    #[test]
    fn convergence_epoch_examples() {
        // strictly decreasing sequence entering the band at epoch 35
        let final_loss = 0.1;
        let band = CONVERGENCE_TOL * 1.0;
        let losses: Vec<f64> = (1..=50)
            .map(|e| {
                if e < 35 {
                    final_loss + band * (1.0 + (50 - e) as f64)
                } else {
                    final_loss + band * 0.9 * ((50 - e) as f64 / 15.0)
                }
            })
            .collect();
        let c = convergence_epoch(&losses, CONVERGENCE_TOL);
        assert_eq!(c.epoch, 35);
        assert!(c.converged_before_final);

        // constant sequence converges immediately
        let c = convergence_epoch(&[0.3; 20], CONVERGENCE_TOL);
        assert_eq!(c.epoch, 1);

        // band reached only at the end
        let c = convergence_epoch(&[10.0, 5.0, 1.0], CONVERGENCE_TOL);
        assert_eq!(c.epoch, 3);
        assert!(!c.converged_before_final);
    }

    #[test]
    fn fit_rate_recovers_synthetic_exponents() {
        let inv_k: Vec<f64> = (1..=500).map(|k| 3.0 / k as f64).collect();
        let fit = fit_rate(&inv_k, 10, 500).unwrap();
        assert_relative_eq!(fit.slope, -1.0, epsilon = 1e-6);
        assert_relative_eq!(fit.intercept, 3.0f64.ln(), epsilon = 1e-9);
        assert!(fit.r_squared > 0.999999);

        let pow: Vec<f64> = (1..=500).map(|k| 2.0 / (k as f64).powf(0.6)).collect();
        let fit = fit_rate(&pow, 10, 500).unwrap();
        assert_relative_eq!(fit.slope, -0.6, epsilon = 1e-6);
    }

    #[test]
    fn fit_rate_validation() {
        let values = vec![1.0; 100];
        assert!(matches!(
            fit_rate(&values, 0, 50),
            Err(HarnessError::BadFitRange { .. })
        ));
        assert!(matches!(
            fit_rate(&values, 50, 20),
            Err(HarnessError::BadFitRange { .. })
        ));
        assert!(matches!(
            fit_rate(&values, 1, 5),
            Err(HarnessError::FitRangeTooSmall(5))
        ));
        let mut with_zero = values.clone();
        with_zero[24] = 0.0;
        assert!(matches!(
            fit_rate(&with_zero, 1, 100),
            Err(HarnessError::NonPositiveValue { k: 25, .. })
        ));
    }

    #[test]
    fn running_average_prefix_means() {
        let avg = running_average(&[1.0, 3.0, 5.0]);
        assert_eq!(avg, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn stochastic_run_hits_checkpoints() {
        let opt = OptimizerConfig::new(
            Mode::Recursive,
            rf(0.6, 0.5),
            0.1,
            Schedule::PowerDecay,
        )
        .unwrap();
        let subopt = run_stochastic_quadratic(10, 1.0, 0.1, &opt, 200, 7, &[50, 200]).unwrap();
        assert_eq!(subopt.len(), 2);
        assert!(subopt.iter().all(|v| v.is_finite() && *v >= 0.0));
        // reproducible
        let again = run_stochastic_quadratic(10, 1.0, 0.1, &opt, 200, 7, &[50, 200]).unwrap();
        assert_eq!(subopt, again);
        assert!(matches!(
            run_stochastic_quadratic(10, 1.0, 0.1, &opt, 100, 7, &[150]),
            Err(HarnessError::BadCheckpoint(150, 100))
        ));
    }

    #[test]
    fn bench_scaling_validation_and_shape() {
        let params = rf(0.6, 0.5);
        assert!(matches!(
            bench_scaling(&[], 10, &params),
            Err(HarnessError::BadDims)
        ));
        assert!(matches!(
            bench_scaling(&[100, 100], 10, &params),
            Err(HarnessError::BadDims)
        ));
        let rows = bench_scaling(&[30], 100, &params).unwrap();
        assert_eq!(rows.len(), 1);
        assert_relative_eq!(rows[0].memory_units, 60.0, max_relative = 1e-10);
        assert!(rows[0].tfgd_step_us > 0.0);
        assert!(rows[0].sgd_step_us > 0.0);
    }

    #[test]
    fn csv_formats() {
        let report = TrainReport {
            optimizer: "tfgd".into(),
            config: OptimizerConfig::sgd(0.1).unwrap(),
            rows: vec![EpochRow {
                epoch: 1,
                train_loss: 0.5,
                test_loss: None,
                train_acc: None,
                test_acc: None,
                eta: 0.1,
                cumulative_ms: 1.25,
            }],
            convergence: ConvergenceEpoch {
                epoch: 1,
                converged_before_final: false,
            },
            memory_overhead_units: 0.0,
        };
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &report).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("epoch,train_loss,test_loss,train_acc,test_acc,eta,cumulative_ms\n"));
        assert!(text.contains("1,0.5,,,,0.1,1.25"));

        let mut buf = Vec::new();
        write_summary_csv(&mut buf, std::slice::from_ref(&report)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text
            .starts_with("optimizer,test_accuracy,final_loss,convergence_epoch,total_ms,memory_units\n"));
        assert!(text.contains("tfgd,,0.5,1,"));

        let fit = RateFit {
            slope: -1.0,
            intercept: 0.5,
            r_squared: 0.99,
            k_min: 10,
            k_max: 100,
        };
        let mut buf = Vec::new();
        write_rate_fit_csv(&mut buf, &fit).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "K_min,K_max,slope,intercept,r_squared\n10,100,-1,0.5,0.99\n"
        );
    }
}

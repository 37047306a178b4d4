//! The tempered fractional parameter update in three fidelity modes, plus a
//! plain gradient-descent baseline.
//!
//! All modes implement
//! `theta_{k+1} = theta_k - eta_k * sum_{j=0..k} w_j e^{-lambda j} g_{k-j}`
//! with `g_i` the gradient observed at step `i` and `j` the age of a gradient:
//!
//! - [`Mode::Exact`] keeps the full gradient history and evaluates the sum
//!   directly. Memory O(k d); exists as a correctness oracle.
//! - [`Mode::Windowed`] truncates the sum to the newest `W` gradients, with
//!   `W` either given or chosen so the tempered tail mass falls below a
//!   tolerance.
//! - [`Mode::Recursive`] keeps one accumulator `S = g + e^{-lambda} S_prev`
//!   (leading weight `w_0 = 1`). This drops the `j`-dependence of `w_j`; the
//!   resulting deviation from the exact sum is measurable via
//!   [`recursion_gap`], not hidden. O(d) time and memory per step.
//! - [`Mode::SgdBaseline`] is plain `theta -= eta_k g`.
//!
//! States are single-owner mutable; independent runs can proceed in parallel
//! with no shared state. Identical inputs produce bit-identical parameters.

use crate::weights::{tail_bound, WeightIter, WeightParams};
use ndarray::{Array1, Zip};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OptimizerError {
    #[error("gradient dimension {found} does not match parameter dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite gradient entry {value} at index {index}")]
    NonFiniteGradient { index: usize, value: f64 },
    #[error("base learning rate must be > 0, got {0}")]
    InvalidEta(f64),
    #[error("window must be >= 1")]
    InvalidWindow,
    #[error("tail tolerance must be > 0, got {0}")]
    InvalidTailTolerance(f64),
    #[error("power-decay schedule is undefined at step 0 (indexing starts at 1)")]
    PowerDecayAtZero,
    #[error("parameter dimension must be >= 1")]
    InvalidDimension,
    #[error("tempering rate lambda must be > 0, got {0}")]
    InvalidLambda(f64),
    #[error("step count must be >= 1")]
    InvalidStepCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Windowed,
    Recursive,
    SgdBaseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// `eta_k = eta0` for every step.
    Constant,
    /// `eta_k = eta0 / k^{alpha/2}`, 1-indexed.
    PowerDecay,
}

/// Validated optimizer configuration.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    mode: Mode,
    weight_params: WeightParams,
    eta0: f64,
    schedule: Schedule,
    window: Option<usize>,
    tail_tolerance: f64,
}

impl OptimizerConfig {
    pub fn new(
        mode: Mode,
        weight_params: WeightParams,
        eta0: f64,
        schedule: Schedule,
    ) -> Result<Self, OptimizerError> {
        if !eta0.is_finite() || eta0 <= 0.0 {
            return Err(OptimizerError::InvalidEta(eta0));
        }
        Ok(Self {
            mode,
            weight_params,
            eta0,
            schedule,
            window: None,
            tail_tolerance: 1e-8,
        })
    }

    /// Plain gradient-descent baseline with a constant step. The weight
    /// parameters are irrelevant to the baseline and set to `(1, 1)`.
    pub fn sgd(eta0: f64) -> Result<Self, OptimizerError> {
        let params = WeightParams::new(1.0, 1.0, crate::weights::Convention::RisingFactorial)
            .expect("placeholder weight params are valid");
        Self::new(Mode::SgdBaseline, params, eta0, Schedule::Constant)
    }

    /// Explicit window for [`Mode::Windowed`]; must be at least 1.
    pub fn with_window(mut self, window: usize) -> Result<Self, OptimizerError> {
        if window == 0 {
            return Err(OptimizerError::InvalidWindow);
        }
        self.window = Some(window);
        Ok(self)
    }

    /// Tail-mass tolerance driving automatic window selection (default 1e-8).
    pub fn with_tail_tolerance(mut self, tol: f64) -> Result<Self, OptimizerError> {
        if !tol.is_finite() || tol <= 0.0 {
            return Err(OptimizerError::InvalidTailTolerance(tol));
        }
        self.tail_tolerance = tol;
        Ok(self)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn weight_params(&self) -> &WeightParams {
        &self.weight_params
    }

    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule
    }

    pub fn window(&self) -> Option<usize> {
        self.window
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }

    /// Window used by [`Mode::Windowed`]: the explicit window when given,
    /// otherwise the smallest `W >= 1` whose tail bound falls below the tail
    /// tolerance.
    pub fn resolved_window(&self) -> usize {
        if let Some(w) = self.window {
            return w;
        }
        let mut w = 1usize;
        while tail_bound(&self.weight_params, w)
            .expect("w >= 1")
            .value
            >= self.tail_tolerance
            && w < 10_000_000
        {
            w += 1;
        }
        w
    }
}

/// Step size at (1-indexed) step `k` under the configured schedule.
pub fn step_size(k: usize, config: &OptimizerConfig) -> Result<f64, OptimizerError> {
    match config.schedule {
        Schedule::Constant => Ok(config.eta0),
        Schedule::PowerDecay => {
            if k == 0 {
                return Err(OptimizerError::PowerDecayAtZero);
            }
            Ok(config.eta0 / (k as f64).powf(config.weight_params.alpha() / 2.0))
        }
    }
}

/// Parameter vector plus the per-mode memory the update needs.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    params: Array1<f64>,
    step_count: usize,
    /// Past gradients, newest first; index equals gradient age. Used by
    /// Exact (unbounded) and Windowed (capacity = window) modes.
    history: VecDeque<Array1<f64>>,
    /// Recursive-mode accumulator S, same dimension as `params`.
    accumulator: Array1<f64>,
    last_eta: f64,
    resolved_window: Option<usize>,
    tempered: Vec<f64>,
    weight_iter: WeightIter,
}

impl OptimizerState {
    pub fn new(initial: Array1<f64>, config: &OptimizerConfig) -> Self {
        let dim = initial.len();
        let resolved_window = match config.mode {
            Mode::Windowed => Some(config.resolved_window()),
            _ => None,
        };
        Self {
            params: initial,
            step_count: 0,
            history: VecDeque::new(),
            accumulator: Array1::zeros(dim),
            last_eta: 0.0,
            resolved_window,
            tempered: Vec::new(),
            weight_iter: WeightIter::new(config.weight_params()),
        }
    }

    pub fn params(&self) -> &Array1<f64> {
        &self.params
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn last_eta(&self) -> f64 {
        self.last_eta
    }

    pub fn accumulator(&self) -> &Array1<f64> {
        &self.accumulator
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    fn ensure_tempered(&mut self, n: usize) {
        while self.tempered.len() < n {
            let (_, t) = self.weight_iter.next().expect("weight iterator is infinite");
            self.tempered.push(t);
        }
    }
}

fn validate_gradient(state: &OptimizerState, gradient: &Array1<f64>) -> Result<(), OptimizerError> {
    if gradient.len() != state.params.len() {
        return Err(OptimizerError::DimensionMismatch {
            expected: state.params.len(),
            found: gradient.len(),
        });
    }
    for (index, &value) in gradient.iter().enumerate() {
        if !value.is_finite() {
            return Err(OptimizerError::NonFiniteGradient { index, value });
        }
    }
    Ok(())
}

/// Advance the state by one step with the observed gradient.
///
/// Rejects dimension mismatches and non-finite gradient entries (naming the
/// offending index) before touching any state.
pub fn step(
    state: &mut OptimizerState,
    gradient: &Array1<f64>,
    config: &OptimizerConfig,
) -> Result<(), OptimizerError> {
    validate_gradient(state, gradient)?;
    let eta = step_size(state.step_count + 1, config)?;

    match config.mode {
        Mode::SgdBaseline => {
            Zip::from(&mut state.params)
                .and(gradient)
                .for_each(|p, &g| *p -= eta * g);
        }
        Mode::Recursive => {
            let OptimizerState {
                params,
                accumulator,
                ..
            } = state;
            let decay = config.weight_params().decay();
            Zip::from(params)
                .and(accumulator)
                .and(gradient)
                .for_each(|p, s, &g| {
                    *s = g + decay * *s;
                    *p -= eta * *s;
                });
        }
        Mode::Exact | Mode::Windowed => {
            state.history.push_front(gradient.clone());
            if let Some(window) = state.resolved_window {
                if state.history.len() > window {
                    state.history.pop_back();
                }
            }
            state.ensure_tempered(state.history.len());
            let mut sum = Array1::<f64>::zeros(state.params.len());
            for (age, past) in state.history.iter().enumerate() {
                let w = state.tempered[age];
                Zip::from(&mut sum).and(past).for_each(|s, &g| *s += w * g);
            }
            Zip::from(&mut state.params)
                .and(&sum)
                .for_each(|p, &s| *p -= eta * s);
        }
    }

    state.step_count += 1;
    state.last_eta = eta;
    Ok(())
}

/// Per-step deviation of the recursive accumulator from the exact tempered
/// sum, on a shared gradient stream.
///
/// Returns `|| S_k - sum_j w_j e^{-lambda j} g_{k-j} ||_2` for each `k`.
/// At `k = 0` both sides equal `g_0`, so the gap is exactly zero.
pub fn recursion_gap(
    gradients: &[Array1<f64>],
    params: &WeightParams,
) -> Result<Vec<f64>, OptimizerError> {
    let Some(first) = gradients.first() else {
        return Ok(Vec::new());
    };
    let dim = first.len();
    for g in gradients {
        if g.len() != dim {
            return Err(OptimizerError::DimensionMismatch {
                expected: dim,
                found: g.len(),
            });
        }
    }

    let tempered: Vec<f64> = WeightIter::new(params)
        .take(gradients.len())
        .map(|(_, t)| t)
        .collect();
    let decay = params.decay();

    let mut recursive = Array1::<f64>::zeros(dim);
    let mut gaps = Vec::with_capacity(gradients.len());
    for (k, g) in gradients.iter().enumerate() {
        Zip::from(&mut recursive)
            .and(g)
            .for_each(|s, &gv| *s = gv + decay * *s);
        let mut exact = Array1::<f64>::zeros(dim);
        for age in 0..=k {
            let w = tempered[age];
            Zip::from(&mut exact)
                .and(&gradients[k - age])
                .for_each(|s, &gv| *s += w * gv);
        }
        let gap = (&recursive - &exact).mapv(|x| x * x).sum().sqrt();
        gaps.push(gap);
    }
    Ok(gaps)
}

/// Memory overhead of the tempered history in stored scalars:
/// `d * (1 - e^{-lambda K}) / lambda`.
pub fn memory_overhead(d: usize, lambda: f64, steps: usize) -> Result<f64, OptimizerError> {
    if d == 0 {
        return Err(OptimizerError::InvalidDimension);
    }
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(OptimizerError::InvalidLambda(lambda));
    }
    if steps == 0 {
        return Err(OptimizerError::InvalidStepCount);
    }
    Ok(d as f64 * (1.0 - (-lambda * steps as f64).exp()) / lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::Convention;
    use approx::assert_relative_eq;
    use ndarray::array;

    fn rf(alpha: f64, lambda: f64) -> WeightParams {
        WeightParams::new(alpha, lambda, Convention::RisingFactorial).unwrap()
    }

    fn config(mode: Mode, alpha: f64, lambda: f64, eta0: f64) -> OptimizerConfig {
        OptimizerConfig::new(mode, rf(alpha, lambda), eta0, Schedule::Constant).unwrap()
    }

    /// quadratic bowl gradient at scale 1 centered at the origin
    fn bowl_gradient(params: &Array1<f64>) -> Array1<f64> {
        params.clone()
    }

    #[test]
    fn config_validation() {
        assert_eq!(
            OptimizerConfig::new(Mode::Recursive, rf(0.6, 0.5), 0.0, Schedule::Constant)
                .unwrap_err(),
            OptimizerError::InvalidEta(0.0)
        );
        assert_eq!(
            config(Mode::Windowed, 0.6, 0.5, 0.1).with_window(0).unwrap_err(),
            OptimizerError::InvalidWindow
        );
        assert!(config(Mode::Windowed, 0.6, 0.5, 0.1)
            .with_tail_tolerance(-1.0)
            .is_err());
    }

    #[test]
    fn step_size_examples() {
        let cfg = OptimizerConfig::new(Mode::Recursive, rf(0.6, 0.5), 0.1, Schedule::PowerDecay)
            .unwrap();
        assert_eq!(step_size(1, &cfg).unwrap(), 0.1);
        // 0.1 / 4^{0.3}
        assert_relative_eq!(
            step_size(4, &cfg).unwrap(),
            0.06597539553864471,
            max_relative = 1e-12
        );
        assert_eq!(step_size(0, &cfg), Err(OptimizerError::PowerDecayAtZero));
        let constant = config(Mode::SgdBaseline, 0.6, 0.5, 0.1);
        assert_eq!(step_size(0, &constant).unwrap(), 0.1);
        assert_eq!(step_size(17, &constant).unwrap(), 0.1);
    }

    #[test]
    fn first_step_is_plain_gradient_step() {
        let g = array![1.0, -2.0, 0.5];
        for mode in [Mode::Exact, Mode::Windowed, Mode::Recursive, Mode::SgdBaseline] {
            let cfg = config(mode, 0.6, 0.5, 0.1);
            let mut state = OptimizerState::new(array![1.0, 1.0, 1.0], &cfg);
            step(&mut state, &g, &cfg).unwrap();
            let expected = array![1.0, 1.0, 1.0] - &g * 0.1;
            assert_eq!(state.params(), &expected, "mode {mode:?}");
            assert_eq!(state.step_count(), 1);
            assert_eq!(state.last_eta(), 0.1);
        }
    }

    #[test]
    fn rejects_bad_gradients() {
        let cfg = config(Mode::Recursive, 0.6, 0.5, 0.1);
        let mut state = OptimizerState::new(array![0.0, 0.0], &cfg);
        assert_eq!(
            step(&mut state, &array![1.0], &cfg),
            Err(OptimizerError::DimensionMismatch {
                expected: 2,
                found: 1
            })
        );
        let err = step(&mut state, &array![1.0, f64::NAN], &cfg).unwrap_err();
        assert!(matches!(
            err,
            OptimizerError::NonFiniteGradient { index: 1, .. }
        ));
        // rejected steps leave the state untouched
        assert_eq!(state.step_count(), 0);
        assert_eq!(state.params(), &array![0.0, 0.0]);
    }

    #[test]
    fn recursive_with_huge_lambda_matches_baseline() {
        // e^{-50} ~ 2e-22: the memory term vanishes
        let cfg_t = config(Mode::Recursive, 0.6, 50.0, 0.1);
        let cfg_s = config(Mode::SgdBaseline, 0.6, 50.0, 0.1);
        let mut st = OptimizerState::new(array![1.0, -1.0, 2.0], &cfg_t);
        let mut ss = OptimizerState::new(array![1.0, -1.0, 2.0], &cfg_s);
        for _ in 0..25 {
            let gt = bowl_gradient(st.params());
            let gs = bowl_gradient(ss.params());
            step(&mut st, &gt, &cfg_t).unwrap();
            step(&mut ss, &gs, &cfg_s).unwrap();
            for (a, b) in st.params().iter().zip(ss.params().iter()) {
                assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn exact_alpha_one_matches_recursive() {
        // all w_j = 1 under rising factorial, so both modes compute the same
        // sum in different orders
        let cfg_e = config(Mode::Exact, 1.0, 0.5, 0.05);
        let cfg_r = config(Mode::Recursive, 1.0, 0.5, 0.05);
        let init = array![1.0, -2.0, 3.0, -4.0];
        let mut se = OptimizerState::new(init.clone(), &cfg_e);
        let mut sr = OptimizerState::new(init, &cfg_r);
        for _ in 0..100 {
            let ge = bowl_gradient(se.params());
            let gr = bowl_gradient(sr.params());
            step(&mut se, &ge, &cfg_e).unwrap();
            step(&mut sr, &gr, &cfg_r).unwrap();
            for (a, b) in se.params().iter().zip(sr.params().iter()) {
                assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn windowed_covering_all_steps_equals_exact() {
        let cfg_e = config(Mode::Exact, 0.6, 0.5, 0.1);
        let cfg_w = config(Mode::Windowed, 0.6, 0.5, 0.1).with_window(200).unwrap();
        let init = array![2.0, -1.0];
        let mut se = OptimizerState::new(init.clone(), &cfg_e);
        let mut sw = OptimizerState::new(init, &cfg_w);
        for _ in 0..60 {
            let ge = bowl_gradient(se.params());
            let gw = bowl_gradient(sw.params());
            step(&mut se, &ge, &cfg_e).unwrap();
            step(&mut sw, &gw, &cfg_w).unwrap();
            assert_eq!(se.params(), sw.params());
        }
        assert_eq!(sw.history_len(), 60);
    }

    #[test]
    fn windowed_caps_history() {
        let cfg = config(Mode::Windowed, 0.6, 0.5, 0.1).with_window(5).unwrap();
        let mut state = OptimizerState::new(array![1.0], &cfg);
        for _ in 0..20 {
            let g = bowl_gradient(state.params());
            step(&mut state, &g, &cfg).unwrap();
        }
        assert_eq!(state.history_len(), 5);
    }

    #[test]
    fn automatic_window_from_tail_tolerance() {
        let cfg = config(Mode::Windowed, 0.6, 0.5, 0.1);
        let w = cfg.resolved_window();
        assert!(w >= 1);
        assert!(tail_bound(cfg.weight_params(), w).unwrap().value < 1e-8);
        if w > 1 {
            assert!(tail_bound(cfg.weight_params(), w - 1).unwrap().value >= 1e-8);
        }
    }

    #[test]
    fn sgd_baseline_is_textbook_descent() {
        // on L = ||theta||^2 / 2, theta_k = (1 - eta)^k theta_0
        let cfg = config(Mode::SgdBaseline, 0.6, 0.5, 0.3);
        let init = array![1.0, -2.0, 0.25];
        let mut state = OptimizerState::new(init.clone(), &cfg);
        for k in 1..=40 {
            let g = bowl_gradient(state.params());
            step(&mut state, &g, &cfg).unwrap();
            let factor = 0.7f64.powi(k);
            for (p, p0) in state.params().iter().zip(init.iter()) {
                assert!((p - factor * p0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn zero_gradients_leave_params_unchanged() {
        let zero = Array1::zeros(3);
        let init = array![0.5, -0.5, 1.5];
        for mode in [Mode::Exact, Mode::Windowed, Mode::Recursive, Mode::SgdBaseline] {
            let cfg = config(mode, 0.6, 0.5, 0.1);
            let mut state = OptimizerState::new(init.clone(), &cfg);
            for _ in 0..10 {
                step(&mut state, &zero, &cfg).unwrap();
            }
            assert_eq!(state.params(), &init, "mode {mode:?}");
        }
    }

    #[test]
    fn determinism_bit_identical() {
        let run = || {
            let cfg = config(Mode::Recursive, 0.6, 0.5, 0.1);
            let mut state = OptimizerState::new(array![1.0, 2.0, -0.5], &cfg);
            for _ in 0..50 {
                let g = bowl_gradient(state.params());
                step(&mut state, &g, &cfg).unwrap();
            }
            state.params().to_vec()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
    }

    #[test]
    fn recursive_accumulator_unrolls_exactly() {
        // S_k must equal sum_j e^{-lambda j} g_{k-j} with w_0 = 1
        let cfg = config(Mode::Recursive, 0.6, 0.5, 0.1);
        let mut state = OptimizerState::new(array![1.0, -1.0], &cfg);
        let mut stream: Vec<Array1<f64>> = Vec::new();
        let decay = cfg.weight_params().decay();
        for _ in 0..30 {
            let g = bowl_gradient(state.params());
            stream.push(g.clone());
            step(&mut state, &g, &cfg).unwrap();
            let k = stream.len() - 1;
            let mut direct = Array1::<f64>::zeros(2);
            for age in 0..=k {
                direct = direct + &stream[k - age] * decay.powi(age as i32);
            }
            for (s, d) in state.accumulator().iter().zip(direct.iter()) {
                assert!((s - d).abs() <= 1e-12, "{s} vs {d}");
            }
        }
    }

    #[test]
    fn recursion_gap_examples() {
        // k = 0: both sides are w_0 g_0
        let stream = vec![array![1.0, 2.0], array![0.5, -0.5], array![0.25, 0.0]];
        let gaps = recursion_gap(&stream, &rf(0.6, 0.5)).unwrap();
        assert_eq!(gaps[0], 0.0);
        assert!(gaps.iter().all(|g| g.is_finite()));

        // alpha = 1: coefficients coincide, gap stays at rounding level
        let long: Vec<Array1<f64>> = (0..60).map(|i| array![(i as f64 * 0.7).sin()]).collect();
        for gap in recursion_gap(&long, &rf(1.0, 0.5)).unwrap() {
            assert!(gap <= 1e-12);
        }

        // constant stream: gap_K = ||g|| * (geometric sum - tempered sum)
        let g = array![3.0, 4.0];
        let constant: Vec<Array1<f64>> = (0..20).map(|_| g.clone()).collect();
        let params = rf(0.6, 0.5);
        let gaps = recursion_gap(&constant, &params).unwrap();
        let decay = params.decay();
        let k = 19usize;
        let geometric: f64 = (0..=k).map(|j| decay.powi(j as i32)).sum();
        let tempered = crate::weights::tempered_partial_sum(&params, k);
        let expected = 5.0 * (geometric - tempered).abs();
        assert_relative_eq!(gaps[k], expected, max_relative = 1e-10);
    }

    #[test]
    fn recursion_gap_rejects_mismatched_stream() {
        let stream = vec![array![1.0, 2.0], array![0.5]];
        assert_eq!(
            recursion_gap(&stream, &rf(0.6, 0.5)).unwrap_err(),
            OptimizerError::DimensionMismatch {
                expected: 2,
                found: 1
            }
        );
    }

    #[test]
    fn memory_overhead_examples() {
        // d = 30, lambda = 0.5, K = 100 -> ~60 stored scalars
        let units = memory_overhead(30, 0.5, 100).unwrap();
        assert_relative_eq!(units, 60.0, max_relative = 1e-12);
        // doubling lambda at large K halves the overhead
        let halved = memory_overhead(30, 1.0, 100).unwrap();
        assert_relative_eq!(halved, units / 2.0, max_relative = 1e-10);
        // K = 1 boundary
        assert_relative_eq!(
            memory_overhead(8, 0.5, 1).unwrap(),
            8.0 * (1.0 - (-0.5f64).exp()) / 0.5,
            max_relative = 1e-15
        );
        assert_eq!(memory_overhead(0, 0.5, 1), Err(OptimizerError::InvalidDimension));
        assert_eq!(memory_overhead(3, 0.0, 1), Err(OptimizerError::InvalidLambda(0.0)));
        assert_eq!(memory_overhead(3, 0.5, 0), Err(OptimizerError::InvalidStepCount));
    }
}

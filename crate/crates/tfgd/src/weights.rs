//! Tempered fractional coefficient sequences.
//!
//! A tempered weight is `w_j * exp(-lambda * j)`: a fractional-order
//! coefficient `w_j` discounted exponentially by its age `j`. Two coefficient
//! conventions are supported, differing in which identities they satisfy:
//!
//! - [`Convention::RisingFactorial`]: `w_j = Gamma(alpha + j) / (Gamma(alpha) j!)`,
//!   the series coefficients of `(1 - z)^{-alpha}`. Under this convention the
//!   infinite tempered sum has the exact closed form
//!   `(1 - e^{-lambda})^{-alpha}` (the alignment coefficient).
//! - [`Convention::GlAbsolute`]: `w_j = |binom(alpha, j)|`, the absolute
//!   Grünwald–Letnikov coefficients. These decay like
//!   `j^{-(1+alpha)} / Gamma(1-alpha)`, which is the regime where the
//!   exponential-times-power tail bound applies. Their tempered sum has no
//!   closed form here and is reported as an empirically converged series.
//!
//! The two conventions agree at `j = 0` and `j = 1` and diverge afterwards;
//! both are computed by multiplicative recurrences (never by gamma-function
//! quotients, which overflow for large `j`).

use crate::special::gamma;
use thiserror::Error;

/// Cap on precomputed window length.
const MAX_WINDOW: usize = 10_000_000;

/// Relative increment below which series summation is considered converged.
const SERIES_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum WeightError {
    #[error("fractional order alpha must satisfy 0 < alpha <= 1, got {0}")]
    InvalidAlpha(f64),
    #[error("tempering rate lambda must be > 0, got {0}")]
    InvalidLambda(f64),
    #[error("step count k must be >= 1 for tail bounds, got {0}")]
    InvalidTailStep(usize),
}

/// Coefficient convention for the fractional weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// `w_j = Gamma(alpha + j) / (Gamma(alpha) j!)`; tempered sum equals the
    /// alignment coefficient exactly.
    RisingFactorial,
    /// `w_j = |binom(alpha, j)|`; matches the `j^{-(1+alpha)}` tail
    /// asymptotics but has no closed-form tempered sum.
    GlAbsolute,
}

/// Validated `(alpha, lambda, convention)` triple. Immutable after construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    alpha: f64,
    lambda: f64,
    convention: Convention,
}

impl WeightParams {
    /// Rejects `alpha` outside `(0, 1]` and `lambda <= 0` (the closed-form sum
    /// diverges as `lambda -> 0`). Non-finite values are rejected too.
    pub fn new(alpha: f64, lambda: f64, convention: Convention) -> Result<Self, WeightError> {
        if !alpha.is_finite() || alpha <= 0.0 || alpha > 1.0 {
            return Err(WeightError::InvalidAlpha(alpha));
        }
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(WeightError::InvalidLambda(lambda));
        }
        Ok(Self {
            alpha,
            lambda,
            convention,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    /// `e^{-lambda}`, the per-step age discount.
    pub fn decay(&self) -> f64 {
        (-self.lambda).exp()
    }
}

/// Lazy iterator over `(w_j, w_j e^{-lambda j})` pairs, starting at `j = 0`.
///
/// Both factors advance by one multiply per step, so a term costs O(1) and
/// the whole sequence is streamable without storing it.
#[derive(Debug, Clone)]
pub struct WeightIter {
    alpha: f64,
    decay: f64,
    convention: Convention,
    j: usize,
    raw: f64,
    damp: f64,
}

impl WeightIter {
    pub fn new(params: &WeightParams) -> Self {
        Self {
            alpha: params.alpha,
            decay: params.decay(),
            convention: params.convention,
            j: 0,
            raw: 1.0,
            damp: 1.0,
        }
    }
}

impl Iterator for WeightIter {
    type Item = (f64, f64);

    fn next(&mut self) -> Option<(f64, f64)> {
        let item = (self.raw, self.raw * self.damp);
        let j = self.j + 1;
        self.raw *= match self.convention {
            Convention::RisingFactorial => (self.alpha + j as f64 - 1.0) / j as f64,
            Convention::GlAbsolute => (self.alpha - j as f64 + 1.0).abs() / j as f64,
        };
        self.damp *= self.decay;
        self.j = j;
        Some(item)
    }
}

/// Raw coefficient `w_j` under the given convention.
///
/// `w_0 = 1` for both conventions (empty product); negative step indices are
/// unrepresentable by the argument type.
pub fn weight(j: usize, params: &WeightParams) -> f64 {
    WeightIter::new(params)
        .nth(j)
        .map(|(raw, _)| raw)
        .expect("weight iterator is infinite")
}

/// Infinite tempered weight sum, with a flag for whether the value is the
/// exact closed form or an empirically converged series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentCoefficient {
    pub value: f64,
    /// True for the rising-factorial convention, where the sum is exactly
    /// `(1 - e^{-lambda})^{-alpha}`.
    pub closed_form: bool,
}

/// Sum of all tempered weights.
///
/// Rising factorial: the closed form `(1 - e^{-lambda})^{-alpha}` in 64-bit
/// arithmetic. Grünwald–Letnikov absolute: the series summed until the
/// relative increment drops below 1e-12, flagged as non-closed-form.
pub fn alignment_coefficient(params: &WeightParams) -> AlignmentCoefficient {
    match params.convention {
        Convention::RisingFactorial => AlignmentCoefficient {
            value: (1.0 - params.decay()).powf(-params.alpha),
            closed_form: true,
        },
        Convention::GlAbsolute => {
            let mut sum = 0.0;
            for (_, tempered) in WeightIter::new(params).take(MAX_WINDOW) {
                sum += tempered;
                if tempered < SERIES_EPS * sum {
                    break;
                }
            }
            AlignmentCoefficient {
                value: sum,
                closed_form: false,
            }
        }
    }
}

/// Partial sum of tempered weights up to and including index `k`.
/// Monotone nondecreasing in `k` (every term is nonnegative).
pub fn tempered_partial_sum(params: &WeightParams, k: usize) -> f64 {
    WeightIter::new(params)
        .take(k + 1)
        .map(|(_, tempered)| tempered)
        .sum()
}

/// Bound on the tempered tail mass beyond index `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBound {
    /// `C * e^{-lambda k} / k^{1 + alpha}`.
    pub value: f64,
    /// The constant `C = Gamma(1 + alpha) / (Gamma(1 - alpha) lambda)`,
    /// exposed so callers can fit a tighter one.
    pub constant: f64,
    /// The convention whose tail asymptotics the bound tracks. The
    /// `j^{-(1+alpha)}` decay behind the bound holds for the absolute
    /// Grünwald–Letnikov coefficients, not the rising-factorial ones.
    pub applies_to: Convention,
}

/// Upper bound `C e^{-lambda k} / k^{1+alpha}` on the omitted tail
/// `sum_{j>k} w_j e^{-lambda j}` of the Grünwald–Letnikov absolute series.
///
/// At `alpha = 1` the absolute coefficients vanish beyond `j = 1`, and the
/// constant degenerates to zero (`Gamma(1 - alpha)` has a pole).
pub fn tail_bound(params: &WeightParams, k: usize) -> Result<TailBound, WeightError> {
    if k == 0 {
        return Err(WeightError::InvalidTailStep(k));
    }
    let alpha = params.alpha;
    let constant = if alpha >= 1.0 {
        0.0
    } else {
        gamma(1.0 + alpha) / (gamma(1.0 - alpha) * params.lambda)
    };
    let value = constant * (-params.lambda * k as f64).exp() / (k as f64).powf(1.0 + alpha);
    Ok(TailBound {
        value,
        constant,
        applies_to: Convention::GlAbsolute,
    })
}

/// Closed-form bound and empirical value for the squared tempered sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceBound {
    /// `Gamma(1 + 2 alpha) / ((2 lambda)^{2 alpha} Gamma(1 + alpha)^2)`.
    pub closed_form: f64,
    /// `sum_j w_j^2 e^{-2 lambda j}` summed to convergence with the
    /// convention's own weights.
    pub empirical: f64,
}

/// Bound on the squared tempered weight sum, which controls how much
/// gradient-noise variance the memory term can accumulate.
pub fn variance_bound(params: &WeightParams) -> VarianceBound {
    let alpha = params.alpha;
    let closed_form = gamma(1.0 + 2.0 * alpha)
        / ((2.0 * params.lambda).powf(2.0 * alpha) * gamma(1.0 + alpha).powi(2));
    let mut empirical = 0.0;
    for (_, tempered) in WeightIter::new(params).take(MAX_WINDOW) {
        let term = tempered * tempered;
        empirical += term;
        if term < SERIES_EPS * empirical {
            break;
        }
    }
    VarianceBound {
        closed_form,
        empirical,
    }
}

/// Precomputed tempered weights `w_j e^{-lambda j}` for `j = 0..=window`.
///
/// The window is the smallest `W` whose tempered term falls below 1e-12 of
/// the running partial sum, capped at 1e7 terms. Immutable after
/// construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct WeightSequence {
    params: WeightParams,
    raw: Vec<f64>,
    tempered: Vec<f64>,
    tail_estimate: f64,
}

impl WeightSequence {
    pub fn build(params: WeightParams) -> Self {
        let mut raw = Vec::new();
        let mut tempered = Vec::new();
        let mut partial = 0.0;
        for (r, t) in WeightIter::new(&params).take(MAX_WINDOW) {
            raw.push(r);
            tempered.push(t);
            partial += t;
            if t < 1e-12 * partial {
                break;
            }
        }
        let window = tempered.len() - 1;
        let tail_estimate = match params.convention {
            // exact remainder against the closed form (clamped: the partial
            // sum can exceed the closed form by rounding)
            Convention::RisingFactorial => {
                (alignment_coefficient(&params).value - partial).max(0.0)
            }
            Convention::GlAbsolute => tail_bound(&params, window.max(1))
                .expect("window >= 1")
                .value,
        };
        Self {
            params,
            raw,
            tempered,
            tail_estimate,
        }
    }

    pub fn params(&self) -> &WeightParams {
        &self.params
    }

    /// Raw coefficients `w_0..w_W`; `raw()[0]` is exactly 1.
    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    /// Tempered coefficients `w_j e^{-lambda j}`, all strictly positive
    /// (except trailing exact zeros for the degenerate GL `alpha = 1` case).
    pub fn tempered(&self) -> &[f64] {
        &self.tempered
    }

    /// Number of the last precomputed index `W`.
    pub fn window(&self) -> usize {
        self.tempered.len() - 1
    }

    /// Upper bound on the tempered mass omitted beyond the window.
    pub fn tail_estimate(&self) -> f64 {
        self.tail_estimate
    }
}

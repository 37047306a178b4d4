//! Differentiable objectives with known structure for convergence
//! experiments: quadratic bowls, binary logistic regression, and a seeded
//! Gaussian gradient-noise oracle.
//!
//! Problems are immutable once built and safe to share across threads; the
//! noise oracle owns its generator and is single-owner mutable.

use ndarray::{Array1, Array2, ArrayView2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("label at row {index} is {value}, expected 0 or 1")]
    LabelOutOfRange { index: usize, value: u8 },
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("non-finite feature at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("scale must be > 0, got {0}")]
    InvalidScale(f64),
    #[error("l2 regularization weight must be >= 0, got {0}")]
    InvalidL2(f64),
    #[error("noise standard deviation must be >= 0, got {0}")]
    InvalidSigma(f64),
    #[error("parameter vector has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// A differentiable objective.
pub trait Problem {
    fn dimension(&self) -> usize;

    fn loss(&self, params: &Array1<f64>) -> f64;

    fn gradient(&self, params: &Array1<f64>) -> Array1<f64>;

    /// Gradient written into a caller-provided buffer; the default delegates
    /// to [`Problem::gradient`]. Lets per-step benchmarks avoid allocating.
    fn gradient_into(&self, params: &Array1<f64>, out: &mut Array1<f64>) {
        out.assign(&self.gradient(params));
    }

    /// Known minimizer and minimum value, when available.
    fn optimum(&self) -> Option<(Array1<f64>, f64)> {
        None
    }

    /// Gradient-Lipschitz constant, when known or estimated.
    fn lipschitz(&self) -> Option<f64> {
        None
    }
}

/// `L(theta) = (scale / 2) ||theta - center||^2`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    center: Array1<f64>,
    scale: f64,
}

impl Quadratic {
    pub fn new(center: Array1<f64>, scale: f64) -> Result<Self, ProblemError> {
        if !scale.is_finite() || scale <= 0.0 {
            return Err(ProblemError::InvalidScale(scale));
        }
        Ok(Self { center, scale })
    }

    /// Bowl of the given dimension centered at the origin.
    pub fn origin(dim: usize, scale: f64) -> Result<Self, ProblemError> {
        Self::new(Array1::zeros(dim), scale)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl Problem for Quadratic {
    fn dimension(&self) -> usize {
        self.center.len()
    }

    fn loss(&self, params: &Array1<f64>) -> f64 {
        let mut sq = 0.0;
        for (p, c) in params.iter().zip(self.center.iter()) {
            let d = p - c;
            sq += d * d;
        }
        0.5 * self.scale * sq
    }

    fn gradient(&self, params: &Array1<f64>) -> Array1<f64> {
        let mut out = Array1::zeros(self.center.len());
        self.gradient_into(params, &mut out);
        out
    }

    fn gradient_into(&self, params: &Array1<f64>, out: &mut Array1<f64>) {
        let scale = self.scale;
        Zip::from(out)
            .and(params)
            .and(&self.center)
            .for_each(|o, &p, &c| *o = scale * (p - c));
    }

    fn optimum(&self) -> Option<(Array1<f64>, f64)> {
        Some((self.center.clone(), 0.0))
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(self.scale)
    }
}

/// Numerically stable logistic function.
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-sample cross-entropy `log(1 + e^z) - y z`, computed without overflow.
fn cross_entropy(z: f64, y: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z
}

/// Binary logistic regression with a bias term.
///
/// `L(theta) = mean_i [ -y_i log s(x_i . theta) - (1 - y_i) log(1 - s(..)) ]
/// + (l2 / 2) ||theta||^2`, where a column of ones is appended to the
/// features internally, so the effective dimension is `d + 1` and the bias is
/// the last coordinate.
#[derive(Debug, Clone)]
pub struct Logistic {
    /// N x (d + 1) design matrix, bias column last.
    design: Array2<f64>,
    labels: Array1<f64>,
    l2: f64,
    lipschitz: f64,
}

impl Logistic {
    pub fn new(
        features: ArrayView2<f64>,
        labels: &[u8],
        l2: f64,
    ) -> Result<Self, ProblemError> {
        let n = features.nrows();
        if n == 0 {
            return Err(ProblemError::EmptyDataset);
        }
        if labels.len() != n {
            return Err(ProblemError::LengthMismatch {
                rows: n,
                labels: labels.len(),
            });
        }
        if !l2.is_finite() || l2 < 0.0 {
            return Err(ProblemError::InvalidL2(l2));
        }
        for (index, &value) in labels.iter().enumerate() {
            if value > 1 {
                return Err(ProblemError::LabelOutOfRange { index, value });
            }
        }
        for ((row, col), &v) in features.indexed_iter() {
            if !v.is_finite() {
                return Err(ProblemError::NonFiniteFeature { row, col });
            }
        }

        let d = features.ncols();
        let mut design = Array2::ones((n, d + 1));
        design.slice_mut(ndarray::s![.., ..d]).assign(&features);
        let labels = Array1::from_iter(labels.iter().map(|&y| y as f64));

        // Gradient-Lipschitz upper bound ||X||_op^2 / (4 N) + l2, with the
        // operator norm from 100 rounds of power iteration on X^T X.
        let lipschitz = operator_norm_squared(&design, 100) / (4.0 * n as f64) + l2;

        Ok(Self {
            design,
            labels,
            l2,
            lipschitz,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.design.nrows()
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    /// Mean cross-entropy gradient over a subset of rows (plus the l2 term),
    /// for mini-batch training.
    pub fn gradient_on_rows(
        &self,
        params: &Array1<f64>,
        rows: &[usize],
    ) -> Result<Array1<f64>, ProblemError> {
        self.check_dim(params)?;
        let mut grad = &*params * self.l2;
        let scale = 1.0 / rows.len() as f64;
        for &i in rows {
            let x = self.design.row(i);
            let z = x.dot(params);
            let r = scale * (sigmoid(z) - self.labels[i]);
            Zip::from(&mut grad).and(&x).for_each(|g, &xv| *g += r * xv);
        }
        Ok(grad)
    }

    fn check_dim(&self, params: &Array1<f64>) -> Result<(), ProblemError> {
        if params.len() != self.design.ncols() {
            return Err(ProblemError::DimensionMismatch {
                expected: self.design.ncols(),
                found: params.len(),
            });
        }
        Ok(())
    }
}

impl Problem for Logistic {
    fn dimension(&self) -> usize {
        self.design.ncols()
    }

    fn loss(&self, params: &Array1<f64>) -> f64 {
        let z = self.design.dot(params);
        let n = self.design.nrows() as f64;
        let ce: f64 = z
            .iter()
            .zip(self.labels.iter())
            .map(|(&zi, &yi)| cross_entropy(zi, yi))
            .sum();
        ce / n + 0.5 * self.l2 * params.dot(params)
    }

    fn gradient(&self, params: &Array1<f64>) -> Array1<f64> {
        let n = self.design.nrows() as f64;
        let mut residual = self.design.dot(params);
        Zip::from(&mut residual)
            .and(&self.labels)
            .for_each(|r, &y| *r = (sigmoid(*r) - y) / n);
        self.design.t().dot(&residual) + &*params * self.l2
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(self.lipschitz)
    }
}

/// Largest eigenvalue of `X^T X` by power iteration from a fixed start
/// vector (deterministic).
fn operator_norm_squared(design: &Array2<f64>, iterations: usize) -> f64 {
    let d = design.ncols();
    let mut v = Array1::from_elem(d, 1.0 / (d as f64).sqrt());
    for _ in 0..iterations {
        let w = design.t().dot(&design.dot(&v));
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
    }
    let xv = design.dot(&v);
    xv.dot(&xv)
}

/// Classification metrics for a fitted logistic parameter vector on raw
/// features (bias appended internally, threshold 0.5).
pub fn logistic_metrics(
    params: &Array1<f64>,
    features: ArrayView2<f64>,
    labels: &[u8],
) -> Result<(f64, f64), ProblemError> {
    let n = features.nrows();
    if n == 0 {
        return Err(ProblemError::EmptyDataset);
    }
    if labels.len() != n {
        return Err(ProblemError::LengthMismatch {
            rows: n,
            labels: labels.len(),
        });
    }
    if params.len() != features.ncols() + 1 {
        return Err(ProblemError::DimensionMismatch {
            expected: features.ncols() + 1,
            found: params.len(),
        });
    }
    let bias = params[params.len() - 1];
    let weights = params.slice(ndarray::s![..params.len() - 1]);
    let mut ce = 0.0;
    let mut correct = 0usize;
    for (row, &y) in features.outer_iter().zip(labels.iter()) {
        let z = row.dot(&weights) + bias;
        ce += cross_entropy(z, y as f64);
        let predicted = sigmoid(z) > 0.5;
        if predicted == (y == 1) {
            correct += 1;
        }
    }
    Ok((ce / n as f64, correct as f64 / n as f64))
}

/// Stochastic gradient oracle: the base problem's gradient plus isotropic
/// Gaussian noise with per-coordinate standard deviation `sigma`, drawn from
/// a seeded, reproducible generator.
#[derive(Debug, Clone)]
pub struct NoisyOracle<P: Problem> {
    base: P,
    sigma: f64,
    rng: ChaCha8Rng,
}

impl<P: Problem> NoisyOracle<P> {
    pub fn new(base: P, sigma: f64, seed: u64) -> Result<Self, ProblemError> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(ProblemError::InvalidSigma(sigma));
        }
        Ok(Self {
            base,
            sigma,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn base(&self) -> &P {
        &self.base
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `gradient(params) + sigma * xi` with `xi ~ N(0, I)`. With `sigma = 0`
    /// this is exactly the deterministic gradient (no draws consumed).
    pub fn noisy_gradient(&mut self, params: &Array1<f64>) -> Array1<f64> {
        let mut g = self.base.gradient(params);
        if self.sigma > 0.0 {
            for v in g.iter_mut() {
                let xi: f64 = self.rng.sample(StandardNormal);
                *v += self.sigma * xi;
            }
        }
        g
    }
}

//! Finite-difference checks of every analytic gradient, at randomized points.

mod common;

use common::{max_gradient_error, WDBC_PATH};
use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tfgd::data::{load_wdbc, split, standardize};
use tfgd::problems::{Logistic, Problem, Quadratic};

const POINTS: usize = 20;
const STEP: f64 = 1e-6;
const TOL: f64 = 1e-5;

fn random_point(rng: &mut ChaCha8Rng, dim: usize) -> Array1<f64> {
    Array1::from_iter((0..dim).map(|_| rng.random_range(-2.0..2.0)))
}

#[test]
fn quadratic_gradient_matches_central_differences() {
    let problem = Quadratic::new(Array1::from_vec(vec![0.3, -1.2, 0.0, 2.0]), 1.7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..POINTS {
        let theta = random_point(&mut rng, 4);
        assert!(max_gradient_error(&problem, &theta, STEP) <= 1e-6);
    }
}

#[test]
fn synthetic_logistic_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let features =
        ndarray::Array2::from_shape_fn((40, 5), |_| rng.random_range(-1.5..1.5));
    let labels: Vec<u8> = (0..40).map(|_| rng.random_range(0..2u8)).collect();
    for l2 in [0.0, 0.05] {
        let problem = Logistic::new(features.view(), &labels, l2).unwrap();
        for _ in 0..POINTS {
            let theta = random_point(&mut rng, problem.dimension());
            assert!(max_gradient_error(&problem, &theta, STEP) <= TOL);
        }
    }
}

#[test]
fn wdbc_logistic_gradient_matches_central_differences() {
    let raw = load_wdbc(WDBC_PATH.as_ref()).unwrap();
    let indices = split(&raw, 42, 0.2).unwrap();
    let data = standardize(&raw, &indices).unwrap();
    let train = data.features().select(ndarray::Axis(0), &indices.train);
    let labels: Vec<u8> = indices.train.iter().map(|&i| data.labels()[i]).collect();
    let problem = Logistic::new(train.view(), &labels, 0.0).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    for _ in 0..POINTS {
        let theta = random_point(&mut rng, problem.dimension());
        worst = worst.max(max_gradient_error(&problem, &theta, STEP));
    }
    assert!(worst <= TOL, "max relative error {worst}");
}

//! Fixtures shared by the criterion benches.

use inertial_admm::data::{gen_synthetic, preprocess};
use inertial_admm::Problem;

/// Preprocessed Gaussian LASSO instance of shape `n × d`.
pub fn lasso_fixture(n: usize, d: usize, seed: u64) -> Problem {
    let (raw, _) = gen_synthetic(n, d, 0.1, 0.1, seed).expect("valid shape");
    let (ds, nu) = preprocess(&raw).expect("nonzero design");
    Problem::lasso(ds.a, ds.b, nu).expect("consistent dimensions")
}

//! Dense linear algebra, the quasi-Newton minimizer, seeded random streams and
//! a finite-difference gradient used as a test oracle.

mod gradient;
mod lbfgs;
mod matrix;
mod rng;

pub use gradient::finite_difference_gradient;
pub use lbfgs::{lbfgs_minimize, LbfgsOutcome, OptimizerConfig};
pub use matrix::{solve_spd, DenseMatrix};
pub use rng::{derive_seed, seeded_stream, Stream};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

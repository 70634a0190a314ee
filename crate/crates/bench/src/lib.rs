//! Seeded inputs shared by the criterion benches.

use careercast::features::FeatureMatrix;
use careercast::numerics::{seeded_stream, DenseMatrix};
use rand::Rng;

/// `m` rows of `p` uniform features in [0, 1) with a noisy linear target,
/// the shape the models see after scaling.
pub fn regression_problem(seed: u64, m: usize, p: usize) -> (FeatureMatrix, Vec<f64>) {
    let mut rng = seeded_stream(seed, "bench-problem");
    let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..p).map(|_| rng.random::<f64>()).collect()).collect();
    let y = rows
        .iter()
        .map(|r| r.iter().enumerate().map(|(j, v)| (j % 3) as f64 * v).sum::<f64>() + 0.1 * rng.random::<f64>())
        .collect();
    (FeatureMatrix::unnamed(rows).expect("rows share a width"), y)
}

/// `A'A + n I` for a random `n x n` matrix `A`.
pub fn spd_matrix(seed: u64, n: usize) -> DenseMatrix {
    let mut rng = seeded_stream(seed, "bench-spd");
    let a = DenseMatrix::from_row_major(n, n, (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .expect("n * n values");
    let mut g = a.transpose().matmul(&a).expect("square");
    for i in 0..n {
        g.set(i, i, g.get(i, i) + n as f64);
    }
    g
}

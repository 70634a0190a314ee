//! Independent oracles shared by the model tests and the acceptance suite.
//! Nothing here calls into the solvers it is used to check.
#![allow(dead_code)]

use careercast::features::FeatureMatrix;
use careercast::models::{FittedModel, ModelParams, TreeNode};
use careercast::numerics::seeded_stream;
use rand_distr::{Distribution, StandardNormal};

pub fn random_problem(seed: u64, m: usize, p: usize) -> (FeatureMatrix, Vec<f64>) {
    let mut rng = seeded_stream(seed, "test-problem");
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..p).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let y = rows
        .iter()
        .map(|r| {
            let noise: f64 = StandardNormal.sample(&mut rng);
            1.5 + r.iter().enumerate().map(|(j, v)| (j as f64 - 2.0) * v).sum::<f64>() + 0.3 * noise
        })
        .collect();
    (FeatureMatrix::unnamed(rows).unwrap(), y)
}

pub fn ridge_parts(m: &FittedModel) -> Vec<f64> {
    match &m.params {
        ModelParams::Ridge {
            intercept,
            coefficients,
        } => std::iter::once(*intercept)
            .chain(coefficients.iter().copied())
            .collect(),
        _ => panic!("not ridge"),
    }
}

/// Gradient of `1/(2m)[sum err^2 + lambda sum theta_j^2]` with intercept at 0.
pub fn ridge_cost_gradient(x: &FeatureMatrix, y: &[f64], lambda: f64, w: &[f64]) -> Vec<f64> {
    let m = y.len() as f64;
    let mut g = vec![0.0; w.len()];
    for (row, &t) in x.rows.iter().zip(y) {
        let pred = w[0] + row.iter().zip(&w[1..]).map(|(a, b)| a * b).sum::<f64>();
        let err = pred - t;
        g[0] += err / m;
        for j in 0..row.len() {
            g[j + 1] += err * row[j] / m;
        }
    }
    for j in 1..w.len() {
        g[j] += lambda * w[j] / m;
    }
    g
}

/// Plain gradient descent on the ridge cost until the gradient vanishes.
pub fn ridge_by_gradient_descent(x: &FeatureMatrix, y: &[f64], lambda: f64) -> Vec<f64> {
    let mut w = vec![0.0; x.n_features() + 1];
    // 1 / (trace of the Hessian) bounds the step below 1 / Lipschitz
    let m = y.len() as f64;
    let trace = 1.0 + x.rows.iter().flatten().map(|v| v * v).sum::<f64>() / m + lambda * x.n_features() as f64 / m;
    let step = 1.0 / trace;
    for _ in 0..1_000_000 {
        let g = ridge_cost_gradient(x, y, lambda, &w);
        if g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-13 {
            break;
        }
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= step * gi;
        }
    }
    w
}

pub fn walk(nodes: &[TreeNode], x: &[f64]) -> f64 {
    let mut i = 0;
    loop {
        match &nodes[i] {
            TreeNode::Leaf { value } => return *value,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                i = if x[*feature] <= *threshold { *left } else { *right };
            }
        }
    }
}

pub fn svr_parts(m: &FittedModel) -> (Vec<f64>, Vec<Vec<f64>>, f64, f64) {
    match &m.params {
        ModelParams::Svr {
            gamma,
            dual_coefficients,
            support,
            bias,
        } => (dual_coefficients.clone(), support.clone(), *bias, *gamma),
        _ => panic!("not svr"),
    }
}

pub fn gram(rows: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|a| {
            rows.iter()
                .map(|b| (-gamma * a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>()).exp())
                .collect()
        })
        .collect()
}

/// `1/2 b'Kb + eps sum(a + a*) - y'b` over the `2l` dual variables.
pub fn dual_objective(k: &[Vec<f64>], y: &[f64], eps: f64, a: &[f64]) -> f64 {
    let l = y.len();
    let b: Vec<f64> = (0..l).map(|i| a[i] - a[i + l]).collect();
    let mut q = 0.0;
    for i in 0..l {
        for j in 0..l {
            q += b[i] * k[i][j] * b[j];
        }
    }
    0.5 * q + eps * a.iter().sum::<f64>() - y.iter().zip(&b).map(|(t, v)| t * v).sum::<f64>()
}

/// Euclidean projection onto `{0 <= a <= C, sum(a[..l]) = sum(a[l..])}` by
/// bisection on the multiplier of the equality constraint.
pub fn project(v: &[f64], l: usize, c: f64) -> Vec<f64> {
    let s = |t: usize| if t < l { 1.0 } else { -1.0 };
    let at = |mu: f64| -> Vec<f64> { (0..v.len()).map(|t| (v[t] - mu * s(t)).clamp(0.0, c)).collect() };
    let balance = |a: &[f64]| (0..a.len()).map(|t| s(t) * a[t]).sum::<f64>();
    let (mut lo, mut hi) = (-1e6, 1e6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if balance(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

pub fn projected_gradient_dual(k: &[Vec<f64>], y: &[f64], eps: f64, c: f64) -> Vec<f64> {
    let l = y.len();
    let mut a = vec![0.0; 2 * l];
    let step = 1.0 / (2.0 * l as f64);
    for _ in 0..200_000 {
        let b: Vec<f64> = (0..l).map(|i| a[i] - a[i + l]).collect();
        let kb: Vec<f64> = (0..l).map(|i| (0..l).map(|j| k[i][j] * b[j]).sum()).collect();
        let grad: Vec<f64> = (0..2 * l)
            .map(|t| {
                if t < l {
                    kb[t] + eps - y[t]
                } else {
                    -kb[t - l] + eps + y[t - l]
                }
            })
            .collect();
        let next: Vec<f64> = a.iter().zip(&grad).map(|(v, g)| v - step * g).collect();
        a = project(&next, l, c);
    }
    a
}

pub fn six_points() -> (FeatureMatrix, Vec<f64>) {
    let rows = vec![
        vec![0.0, 0.1],
        vec![0.5, -0.3],
        vec![1.0, 0.8],
        vec![1.5, 0.2],
        vec![2.0, -0.6],
        vec![2.5, 0.4],
    ];
    let y = vec![0.2, 0.9, 1.1, 0.4, -0.5, 0.3];
    (FeatureMatrix::unnamed(rows).unwrap(), y)
}

/// The `2l` dual vector `(a, a*)` rebuilt from the stored differences
/// `b = a - a*`, matching support vectors back to training rows.
pub fn svr_dual_vector(m: &FittedModel, rows: &[Vec<f64>]) -> Vec<f64> {
    let (coef, support, _, _) = svr_parts(m);
    let l = rows.len();
    let mut a = vec![0.0; 2 * l];
    for (b, sv) in coef.iter().zip(&support) {
        let i = rows
            .iter()
            .position(|r| r == sv)
            .expect("support vector is a training row");
        if *b > 0.0 {
            a[i] = *b
        } else {
            a[i + l] = -b
        }
    }
    a
}

/// Largest violation of the epsilon-SVR optimality conditions, measured on
/// residuals `y - f(x)`: free points sit on the tube edge, zero-coefficient
/// points inside it, bounded points on or outside it.
pub fn svr_kkt_violation(m: &FittedModel, rows: &[Vec<f64>], y: &[f64], eps: f64, c: f64) -> f64 {
    let (coef, support, _, _) = svr_parts(m);
    let mut worst: f64 = 0.0;
    for (row, &t) in rows.iter().zip(y) {
        let r = t - m.predict_row(row);
        let b = support.iter().position(|s| s == row).map_or(0.0, |p| coef[p]);
        let at_bound = (b.abs() - c).abs() <= 1e-9 * c;
        let v = if b == 0.0 {
            (r.abs() - eps).max(0.0)
        } else if at_bound {
            (eps - r * b.signum()).max(0.0)
        } else {
            (r - eps * b.signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

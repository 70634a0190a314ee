use rayon::prelude::*;

use super::{check_training, FittedModel, Hyperparams, ModelKind, ModelParams, SvrHyperparams};
use crate::error::Result;
use crate::features::FeatureMatrix;

/// Stop once the maximal KKT violation pair differs by at most this much.
pub const SVR_KKT_TOLERANCE: f64 = 1e-3;
/// Iteration cap, in passes; one pass is one pair update per training row.
pub const SVR_MAX_PASSES: usize = 10_000;

const TAU: f64 = 1e-12;

pub fn rbf_kernel(gamma: f64, u: &[f64], v: &[f64]) -> f64 {
    let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

/// Epsilon-SVR dual over `2l` variables `[alpha; alpha*]` with signs
/// `s = [+1; -1]`:
///
/// `min 1/2 a'Qa + p'a`, `Q_ij = s_i s_j k(x_i, x_j)`,
/// `p = [eps - y; eps + y]`, `0 <= a <= C`, `s'a = 0`,
///
/// solved two variables at a time with second-order working-set selection.
/// Prediction is `sum (alpha_i - alpha_i*) k(x_i, x) + b`.
pub fn fit_svr(x: &FeatureMatrix, y: &[f64], hp: &SvrHyperparams, seed: u64) -> Result<FittedModel> {
    let hyperparams = Hyperparams::Svr(*hp);
    check_training(x, y, &hyperparams)?;
    let l = x.n_rows();
    let kernel: Vec<Vec<f64>> = (0..l)
        .into_par_iter()
        .map(|i| (0..l).map(|j| rbf_kernel(hp.gamma, &x.rows[i], &x.rows[j])).collect())
        .collect();
    let solution = solve_dual(&kernel, y, hp.epsilon, hp.c, SVR_MAX_PASSES.saturating_mul(l));

    let mut dual_coefficients = Vec::new();
    let mut support = Vec::new();
    for i in 0..l {
        let beta = solution.alpha[i] - solution.alpha[i + l];
        if beta != 0.0 {
            dual_coefficients.push(beta);
            support.push(x.rows[i].clone());
        }
    }
    Ok(FittedModel {
        kind: ModelKind::Svr,
        feature_names: x.feature_names.clone(),
        seed,
        hyperparams,
        params: ModelParams::Svr {
            gamma: hp.gamma,
            dual_coefficients,
            support,
            bias: -solution.rho,
        },
        converged: solution.converged,
        iterations: solution.iterations,
    })
}

pub(crate) struct DualSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub converged: bool,
    pub iterations: usize,
}

pub(crate) fn solve_dual(kernel: &[Vec<f64>], y: &[f64], eps: f64, c: f64, max_iterations: usize) -> DualSolution {
    let l = y.len();
    let n = 2 * l;
    let sign = |t: usize| if t < l { 1.0 } else { -1.0 };
    let q = |a: usize, b: usize| sign(a) * sign(b) * kernel[a % l][b % l];
    let mut alpha = vec![0.0; n];
    let mut grad: Vec<f64> = (0..n)
        .map(|t| if t < l { eps - y[t] } else { eps + y[t - l] })
        .collect();
    let up = |a: f64| a < c;
    let down = |a: f64| a > 0.0;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        // i: steepest feasible ascent of -s*grad
        let mut g_max = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            let movable = if sign(t) > 0.0 { up(alpha[t]) } else { down(alpha[t]) };
            if movable && -sign(t) * grad[t] >= g_max {
                g_max = -sign(t) * grad[t];
                i = t;
            }
        }
        let mut g_max2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best_obj = f64::INFINITY;
        for t in 0..n {
            let movable = if sign(t) > 0.0 { down(alpha[t]) } else { up(alpha[t]) };
            if !movable {
                continue;
            }
            let v = sign(t) * grad[t];
            g_max2 = g_max2.max(v);
            if i == usize::MAX {
                continue;
            }
            let diff = g_max + v;
            if diff > 0.0 {
                let mut quad = kernel[i % l][i % l] + kernel[t % l][t % l] - 2.0 * kernel[i % l][t % l];
                if quad <= 0.0 {
                    quad = TAU;
                }
                let obj = -(diff * diff) / quad;
                if obj <= best_obj {
                    best_obj = obj;
                    j = t;
                }
            }
        }
        if g_max + g_max2 < SVR_KKT_TOLERANCE || i == usize::MAX || j == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let q_ij = q(i, j);
        let (qd_i, qd_j) = (kernel[i % l][i % l], kernel[j % l][j % l]);
        if sign(i) != sign(j) {
            let mut quad = qd_i + qd_j + 2.0 * q_ij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = qd_i + qd_j - 2.0 * q_ij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (d_i, d_j) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(i, t) * d_i + q(j, t) * d_j;
        }
    }

    // offset from free variables, else the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..n {
        let yg = sign(t) * grad[t];
        if alpha[t] >= c {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    };
    DualSolution {
        alpha,
        rho,
        converged,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_identity_and_symmetry() {
        for g in [1e-5, 0.3, 100.0] {
            assert_eq!(rbf_kernel(g, &[1.0, -2.0], &[1.0, -2.0]), 1.0);
            assert_eq!(
                rbf_kernel(g, &[0.0, 1.0], &[3.0, 5.0]),
                rbf_kernel(g, &[3.0, 5.0], &[0.0, 1.0])
            );
        }
        assert!((rbf_kernel(0.5, &[0.0], &[2.0]) - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn flat_target_needs_no_support_vectors() {
        let x = FeatureMatrix::unnamed((0..8).map(|i| vec![i as f64 * 0.3]).collect()).unwrap();
        let y = [2.5; 8];
        let hp = SvrHyperparams {
            epsilon: 0.1,
            c: 10.0,
            gamma: 1.0,
        };
        let m = fit_svr(&x, &y, &hp, 0).unwrap();
        let ModelParams::Svr {
            dual_coefficients,
            bias,
            ..
        } = &m.params
        else {
            unreachable!()
        };
        assert!(dual_coefficients.is_empty());
        assert!((bias - 2.5).abs() < 1e-12);
        assert!((m.predict_row(&[17.0]) - 2.5).abs() < 1e-12);
    }
}

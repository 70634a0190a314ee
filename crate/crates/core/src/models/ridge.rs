use rayon::prelude::*;

use super::{check_training, FittedModel, Hyperparams, ModelKind, ModelParams, RidgeHyperparams};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::numerics::{solve_spd, DenseMatrix};

const CHUNK_ROWS: usize = 256;

/// Minimizes `1/(2m) [sum (y - b - x.theta)^2 + lambda * sum theta^2]` by
/// solving the normal equations `(Z'Z + lambda I') w = Z'y`, where `Z` has a
/// leading column of ones and `I'` is zero at the intercept.
pub fn fit_ridge(x: &FeatureMatrix, y: &[f64], hp: &RidgeHyperparams) -> Result<FittedModel> {
    let hyperparams = Hyperparams::Ridge(*hp);
    check_training(x, y, &hyperparams)?;
    let gram = Gram::new(&x.rows, y, x.n_features());
    let active: Vec<usize> = (0..x.n_features()).collect();
    let w = gram.solve(&active, hp.lambda)?;
    Ok(FittedModel {
        kind: ModelKind::Ridge,
        feature_names: x.feature_names.clone(),
        seed: 0,
        hyperparams,
        params: ModelParams::Ridge {
            intercept: w[0],
            coefficients: w[1..].to_vec(),
        },
        converged: true,
        iterations: 0,
    })
}

/// `Z'Z` and `Z'y` for `Z = [1 | X]`, so ridge fits on any column subset
/// only need a small solve.
#[derive(Clone, Debug)]
pub(crate) struct Gram {
    d: usize,
    zz: Vec<f64>,
    zy: Vec<f64>,
}

impl Gram {
    pub(crate) fn new(rows: &[Vec<f64>], y: &[f64], p: usize) -> Gram {
        let d = p + 1;
        // chunked partial sums, added in chunk order
        let partials: Vec<(Vec<f64>, Vec<f64>)> = rows
            .par_chunks(CHUNK_ROWS)
            .zip(y.par_chunks(CHUNK_ROWS))
            .map(|(rows, ys)| {
                let mut a = vec![0.0; d * d];
                let mut b = vec![0.0; d];
                let mut z = vec![1.0; d];
                for (row, &t) in rows.iter().zip(ys) {
                    z[1..].copy_from_slice(row);
                    for i in 0..d {
                        b[i] += z[i] * t;
                        let zi = z[i];
                        let a_row = &mut a[i * d..(i + 1) * d];
                        for j in i..d {
                            a_row[j] += zi * z[j];
                        }
                    }
                }
                (a, b)
            })
            .collect();
        let mut zz = vec![0.0; d * d];
        let mut zy = vec![0.0; d];
        for (pa, pb) in partials {
            zz.iter_mut().zip(pa).for_each(|(s, v)| *s += v);
            zy.iter_mut().zip(pb).for_each(|(s, v)| *s += v);
        }
        for i in 0..d {
            for j in 0..i {
                zz[i * d + j] = zz[j * d + i];
            }
        }
        Gram { d, zz, zy }
    }

    /// Ridge weights `[intercept, coef per active feature]` using only the
    /// listed feature columns.
    pub(crate) fn solve(&self, active: &[usize], lambda: f64) -> Result<Vec<f64>> {
        let idx: Vec<usize> = std::iter::once(0).chain(active.iter().map(|&j| j + 1)).collect();
        let k = idx.len();
        let mut a = vec![0.0; k * k];
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                a[r * k + c] = self.zz[i * self.d + j];
            }
            if r > 0 {
                a[r * k + r] += lambda;
            }
        }
        let b: Vec<f64> = idx.iter().map(|&i| self.zy[i]).collect();
        let a = DenseMatrix::from_row_major(k, k, a)?;
        let w = solve_spd(&a, &b).map_err(|e| match e {
            Error::NotPositiveDefinite { .. } => Error::Singular,
            other => other,
        })?;
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular);
        }
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fm(rows: Vec<Vec<f64>>) -> FeatureMatrix {
        FeatureMatrix::unnamed(rows).unwrap()
    }

    fn params(m: &FittedModel) -> (f64, Vec<f64>) {
        match &m.params {
            ModelParams::Ridge {
                intercept,
                coefficients,
            } => (*intercept, coefficients.clone()),
            _ => unreachable!(),
        }
    }

    #[test]
    fn exact_line_without_penalty() {
        let x = fm((0..6).map(|i| vec![i as f64]).collect());
        let y: Vec<f64> = (0..6).map(|i| 2.0 * i as f64).collect();
        let (b, w) = params(&fit_ridge(&x, &y, &RidgeHyperparams { lambda: 0.0 }).unwrap());
        assert!((w[0] - 2.0).abs() < 1e-10 && b.abs() < 1e-10);
    }

    #[test]
    fn huge_penalty_leaves_mean() {
        let x = fm(vec![vec![-1.0, 2.0], vec![0.0, -1.0], vec![1.0, -1.0]]);
        let y = [3.0, 5.0, 10.0];
        let (b, w) = params(&fit_ridge(&x, &y, &RidgeHyperparams { lambda: 1e9 }).unwrap());
        assert!(w.iter().all(|v| v.abs() < 1e-6));
        assert!((b - 6.0).abs() < 1e-6);
    }

    #[test]
    fn collinear_columns_without_penalty_are_singular() {
        let x = fm((0..5).map(|i| vec![i as f64, 2.0 * i as f64]).collect());
        let y = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!(matches!(
            fit_ridge(&x, &y, &RidgeHyperparams { lambda: 0.0 }),
            Err(Error::Singular)
        ));
        assert!(fit_ridge(&x, &y, &RidgeHyperparams { lambda: 0.1 }).is_ok());
    }

    #[test]
    fn affine_prediction() {
        let m = FittedModel {
            kind: ModelKind::Ridge,
            feature_names: vec!["x0".into()],
            seed: 0,
            hyperparams: Hyperparams::Ridge(RidgeHyperparams { lambda: 0.0 }),
            params: ModelParams::Ridge {
                intercept: 1.0,
                coefficients: vec![2.0],
            },
            converged: true,
            iterations: 0,
        };
        assert_eq!(m.predict_row(&[3.0]), 7.0);
    }
}

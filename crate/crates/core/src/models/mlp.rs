use rand::Rng;
use rayon::prelude::*;

use super::{check_training, FittedModel, Hyperparams, MlpHyperparams, ModelKind, ModelParams};
use crate::error::Result;
use crate::features::FeatureMatrix;
use crate::numerics::{lbfgs_minimize, seeded_stream, OptimizerConfig};

const CHUNK_ROWS: usize = 128;

/// Fully connected ReLU network with a single linear output. Parameters are
/// stored layer by layer: the weight matrix (rows = outputs) then the biases.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpNet {
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

/// `[inputs, layer1, layer2 (if nonzero), 1]`.
pub fn mlp_layer_sizes(inputs: usize, hp: &MlpHyperparams) -> Vec<usize> {
    let mut sizes = vec![inputs, hp.layer1];
    if hp.layer2 > 0 {
        sizes.push(hp.layer2);
    }
    sizes.push(1);
    sizes
}

pub fn mlp_parameter_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
}

fn layer_offsets(sizes: &[usize]) -> Vec<(usize, usize)> {
    let mut at = 0;
    sizes
        .windows(2)
        .map(|w| {
            let weights = at;
            at += w[0] * w[1];
            let biases = at;
            at += w[1];
            (weights, biases)
        })
        .collect()
}

fn forward_layers(sizes: &[usize], offsets: &[(usize, usize)], params: &[f64], x: &[f64], acts: &mut Vec<Vec<f64>>) {
    acts.clear();
    acts.push(x.to_vec());
    let last = sizes.len() - 2;
    for (l, &(w_at, b_at)) in offsets.iter().enumerate() {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let input = &acts[l];
        let mut out = Vec::with_capacity(n_out);
        for o in 0..n_out {
            let w = &params[w_at + o * n_in..w_at + (o + 1) * n_in];
            let z = params[b_at + o] + crate::numerics::dot(w, input);
            out.push(if l == last { z } else { z.max(0.0) });
        }
        acts.push(out);
    }
}

impl MlpNet {
    pub fn forward(&self, x: &[f64]) -> f64 {
        let mut acts = Vec::new();
        forward_layers(&self.sizes, &layer_offsets(&self.sizes), &self.params, x, &mut acts);
        acts.last().map_or(0.0, |a| a[0])
    }

    pub fn hidden_layers(&self) -> usize {
        self.sizes.len() - 2
    }
}

/// `1/(2m) [sum (f(x) - y)^2 + alpha * sum W^2]`, biases unpenalized. Writes
/// the analytic gradient into `grad` when given.
pub fn mlp_loss(
    sizes: &[usize],
    params: &[f64],
    rows: &[Vec<f64>],
    y: &[f64],
    alpha: f64,
    grad: Option<&mut [f64]>,
) -> f64 {
    let m = rows.len() as f64;
    let offsets = layer_offsets(sizes);
    let want_grad = grad.is_some();
    let n_params = params.len();
    let partials: Vec<(f64, Vec<f64>)> = rows
        .par_chunks(CHUNK_ROWS)
        .zip(y.par_chunks(CHUNK_ROWS))
        .map(|(rows, ys)| {
            let mut g = if want_grad { vec![0.0; n_params] } else { Vec::new() };
            let mut sse = 0.0;
            let mut acts = Vec::new();
            for (x, &t) in rows.iter().zip(ys) {
                forward_layers(sizes, &offsets, params, x, &mut acts);
                let err = acts[acts.len() - 1][0] - t;
                sse += err * err;
                if !want_grad {
                    continue;
                }
                let mut delta = vec![err / m];
                for l in (0..offsets.len()).rev() {
                    let (w_at, b_at) = offsets[l];
                    let (n_in, n_out) = (sizes[l], sizes[l + 1]);
                    let input = &acts[l];
                    for o in 0..n_out {
                        let d = delta[o];
                        if d == 0.0 {
                            continue;
                        }
                        g[b_at + o] += d;
                        let gw = &mut g[w_at + o * n_in..w_at + (o + 1) * n_in];
                        for (gi, &a) in gw.iter_mut().zip(input) {
                            *gi += d * a;
                        }
                    }
                    if l == 0 {
                        break;
                    }
                    let mut prev = vec![0.0; n_in];
                    for (o, &d) in delta.iter().enumerate() {
                        if d == 0.0 {
                            continue;
                        }
                        let w = &params[w_at + o * n_in..w_at + (o + 1) * n_in];
                        for (p, &wi) in prev.iter_mut().zip(w) {
                            *p += d * wi;
                        }
                    }
                    // relu'(z) is 1 exactly where the stored activation is positive
                    for (p, &a) in prev.iter_mut().zip(input) {
                        if a <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
            (sse, g)
        })
        .collect();

    let mut sse = 0.0;
    let mut penalty = 0.0;
    for &(w_at, b_at) in &offsets {
        penalty += params[w_at..b_at].iter().map(|w| w * w).sum::<f64>();
    }
    if let Some(grad) = grad {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (s, g) in &partials {
            for (gi, v) in grad.iter_mut().zip(g) {
                *gi += v;
            }
            sse += s;
        }
        for &(w_at, b_at) in &offsets {
            for i in w_at..b_at {
                grad[i] += alpha * params[i] / m;
            }
        }
    } else {
        sse = partials.iter().map(|(s, _)| s).sum();
    }
    (sse + alpha * penalty) / (2.0 * m)
}

/// Fits with the default optimizer settings.
pub fn fit_mlp(x: &FeatureMatrix, y: &[f64], hp: &MlpHyperparams, seed: u64) -> Result<FittedModel> {
    fit_mlp_with(x, y, hp, seed, &OptimizerConfig::default())
}

/// Scaled-uniform initial weights from the seed, zero biases, then L-BFGS.
/// Hitting the iteration cap returns the model with `converged = false`; a
/// non-finite loss is an error.
pub fn fit_mlp_with(
    x: &FeatureMatrix,
    y: &[f64],
    hp: &MlpHyperparams,
    seed: u64,
    config: &OptimizerConfig,
) -> Result<FittedModel> {
    let hyperparams = Hyperparams::Mlp(*hp);
    check_training(x, y, &hyperparams)?;
    let sizes = mlp_layer_sizes(x.n_features(), hp);
    let mut init = vec![0.0; mlp_parameter_count(&sizes)];
    let mut rng = seeded_stream(seed, "mlp-init");
    for (l, (w_at, b_at)) in layer_offsets(&sizes).into_iter().enumerate() {
        let r = (6.0 / (sizes[l] + sizes[l + 1]) as f64).sqrt();
        for w in &mut init[w_at..b_at] {
            *w = rng.random_range(-r..r);
        }
    }
    let outcome = lbfgs_minimize(|w, g| mlp_loss(&sizes, w, &x.rows, y, hp.alpha, Some(g)), &init, config)?;
    Ok(FittedModel {
        kind: ModelKind::Mlp,
        feature_names: x.feature_names.clone(),
        seed,
        hyperparams,
        params: ModelParams::Mlp(MlpNet {
            sizes,
            params: outcome.x,
        }),
        converged: outcome.converged,
        iterations: outcome.iterations,
    })
}

use rand::Rng;
use rayon::prelude::*;

use super::{check_training, FittedModel, ForestHyperparams, Hyperparams, ModelKind, ModelParams};
use crate::error::Result;
use crate::features::FeatureMatrix;
use crate::numerics::seeded_stream;

#[derive(Clone, Debug, PartialEq)]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Regression tree stored in preorder; node 0 is the root.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Greedy least-squares tree over every feature, grown from the sample
    /// positions in `sample` (duplicates allowed).
    pub fn grow(rows: &[Vec<f64>], y: &[f64], sample: Vec<usize>, max_depth: usize, min_split: usize) -> Tree {
        let mut tree = Tree { nodes: Vec::new() };
        tree.grow_node(rows, y, sample, 0, max_depth, min_split.max(2));
        tree
    }

    fn grow_node(
        &mut self,
        rows: &[Vec<f64>],
        y: &[f64],
        sample: Vec<usize>,
        depth: usize,
        max_depth: usize,
        min_split: usize,
    ) -> usize {
        let at = self.nodes.len();
        let mean = sample.iter().map(|&i| y[i]).sum::<f64>() / sample.len() as f64;
        self.nodes.push(TreeNode::Leaf { value: mean });
        if depth >= max_depth || sample.len() < min_split {
            return at;
        }
        let Some((feature, threshold)) = best_split(rows, y, &sample) else {
            return at;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = sample.into_iter().partition(|&i| rows[i][feature] <= threshold);
        let left = self.grow_node(rows, y, l, depth + 1, max_depth, min_split);
        let right = self.grow_node(rows, y, r, depth + 1, max_depth, min_split);
        self.nodes[at] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let t = a / 2.0 + b / 2.0;
    if t >= b {
        a
    } else {
        t
    }
}

/// Split maximizing the drop in squared error, scanning midpoints between
/// consecutive distinct values. Earlier features and lower thresholds win
/// exact ties. `None` when the node is pure or nothing separates it.
// `j` indexes columns across many rows, not `rows` itself
#[allow(clippy::needless_range_loop)]
fn best_split(rows: &[Vec<f64>], y: &[f64], sample: &[usize]) -> Option<(usize, f64)> {
    let first = y[sample[0]];
    if sample.iter().all(|&i| y[i] == first) {
        return None;
    }
    let n = sample.len() as f64;
    let total: f64 = sample.iter().map(|&i| y[i]).sum();
    let parent = total * total / n;
    let mut best: Option<(f64, usize, f64)> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(sample.len());
    for j in 0..rows[sample[0]].len() {
        pairs.clear();
        pairs.extend(sample.iter().map(|&i| (rows[i][j], y[i])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = 0.0;
        for k in 0..pairs.len() - 1 {
            left += pairs[k].1;
            if pairs[k].0 == pairs[k + 1].0 {
                continue;
            }
            let nl = (k + 1) as f64;
            let right = total - left;
            let score = left * left / nl + right * right / (n - nl);
            if best.is_none_or(|(s, _, _)| score > s) {
                best = Some((score, j, midpoint(pairs[k].0, pairs[k + 1].0)));
            }
        }
    }
    best.filter(|&(s, _, _)| s > parent).map(|(_, j, t)| (j, t))
}

/// Bagged ensemble: each tree sees its own seeded bootstrap resample (or the
/// full data with bootstrap off); predictions average over trees.
pub fn fit_bagging(x: &FeatureMatrix, y: &[f64], hp: &ForestHyperparams, seed: u64) -> Result<FittedModel> {
    let hyperparams = Hyperparams::Forest(*hp);
    check_training(x, y, &hyperparams)?;
    let n = x.n_rows();
    let trees: Vec<Tree> = (0..hp.n_trees)
        .into_par_iter()
        .map(|t| {
            let sample = if hp.bootstrap {
                let mut rng = seeded_stream(seed, &format!("bootstrap-{t}"));
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            Tree::grow(&x.rows, y, sample, hp.max_depth, hp.min_split)
        })
        .collect();
    Ok(FittedModel {
        kind: ModelKind::Forest,
        feature_names: x.feature_names.clone(),
        seed,
        hyperparams,
        params: ModelParams::Forest(trees),
        converged: true,
        iterations: 0,
    })
}

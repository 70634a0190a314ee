//! Player-level train/test split, k-fold indices, recursive feature
//! elimination with a ridge ranker, and cross-validated grid search.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluation::r_squared;
use crate::features::FeatureMatrix;
use crate::models::ridge::Gram;
use crate::models::{
    fit, predict, ForestHyperparams, Hyperparams, MlpHyperparams, ModelKind, RidgeHyperparams, SvrHyperparams,
};
use crate::numerics::{derive_seed, seeded_stream};

/// Fewest players a cohort needs before it can be split.
pub const MIN_SPLIT_PLAYERS: usize = 5;
pub const DEFAULT_FOLDS: usize = 3;
/// Ridge penalty used to rank features during elimination.
pub const RFE_LAMBDA: f64 = 2.0;
pub const DEFAULT_RETAINED: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlayerSplit {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Shuffles the (sorted) player ids with the `split` stream and sends the
/// first `floor(fraction * n)` to training. Both sides come back sorted.
pub fn split_players(ids: &[String], spec: &SplitSpec) -> Result<PlayerSplit> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie strictly between 0 and 1 (got {})",
            spec.train_fraction
        )));
    }
    let mut ids = ids.to_vec();
    ids.sort();
    ids.dedup();
    if ids.len() < MIN_SPLIT_PLAYERS {
        return Err(Error::CohortTooSmall(ids.len()));
    }
    ids.shuffle(&mut seeded_stream(spec.seed, "split"));
    let n_train = (spec.train_fraction * ids.len() as f64).floor() as usize;
    let mut test = ids.split_off(n_train);
    ids.sort();
    test.sort();
    Ok(PlayerSplit { train: ids, test })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// `k` folds over a seeded permutation of `0..n`; the first `n % k` folds get
/// one extra index. Index lists are sorted.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 || n < k {
        return Err(Error::InvalidArgument(format!("cannot make {k} folds from {n} rows")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_stream(seed, "kfold"));
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    let mut folds = Vec::with_capacity(k);
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut validation = order[start..start + size].to_vec();
        validation.sort_unstable();
        let mut train: Vec<usize> = order[..start].iter().chain(&order[start + size..]).copied().collect();
        train.sort_unstable();
        folds.push(Fold { train, validation });
        start += size;
    }
    Ok(folds)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EliminationTrace {
    /// Every feature, in the order given to the ranker.
    pub feature_names: Vec<String>,
    /// First-removed first.
    pub elimination_order: Vec<String>,
    /// Mean CV R² after each removal, aligned with `elimination_order`.
    pub scores: Vec<f64>,
    /// Mean CV R² with every feature.
    pub full_score: f64,
}

impl EliminationTrace {
    /// Features still present once only `count` remain, in original order.
    pub fn survivors(&self, count: usize) -> Vec<String> {
        let removed = self
            .feature_names
            .len()
            .saturating_sub(count)
            .min(self.elimination_order.len());
        let gone: std::collections::HashSet<&str> =
            self.elimination_order[..removed].iter().map(String::as_str).collect();
        self.feature_names
            .iter()
            .filter(|n| !gone.contains(n.as_str()))
            .cloned()
            .collect()
    }

    /// `(retained count, mean CV R²)` from all features down to the last step.
    pub fn curve(&self) -> Vec<(usize, f64)> {
        let n = self.feature_names.len();
        std::iter::once((n, self.full_score))
            .chain(self.scores.iter().enumerate().map(|(i, &s)| (n - i - 1, s)))
            .collect()
    }

    /// The last surviving features, best first (reverse elimination order,
    /// then whatever was never eliminated).
    pub fn ranking(&self) -> Vec<String> {
        let mut out = self.survivors(self.feature_names.len() - self.elimination_order.len());
        out.extend(self.elimination_order.iter().rev().cloned());
        out
    }
}

/// Training Gram, validation rows and validation targets of one fold.
type FoldData<'a> = (Gram, Vec<&'a Vec<f64>>, Vec<f64>);

#[derive(Clone, Debug, PartialEq)]
pub struct RfeResult {
    pub trace: EliminationTrace,
    pub retained: Vec<String>,
}

/// Refits ridge (`lambda = 2`) on the surviving columns and drops the one with
/// the smallest absolute coefficient (lexicographically first name on ties)
/// until `target_count` remain. Each step is scored by mean 3-fold CV R² of
/// the same ridge on the survivors.
pub fn rfe_rank(x: &FeatureMatrix, y: &[f64], target_count: usize, seed: u64) -> Result<RfeResult> {
    if target_count == 0 {
        return Err(Error::InvalidArgument("RFE needs a target count of at least 1".into()));
    }
    if x.n_rows() != y.len() {
        return Err(Error::Dimension(format!("{} rows but {} targets", x.n_rows(), y.len())));
    }
    let p = x.n_features();
    let full = Gram::new(&x.rows, y, p);
    let folds = kfold_indices(x.n_rows(), DEFAULT_FOLDS, derive_seed(seed, "rfe"))?;
    let fold_data: Vec<FoldData> = folds
        .iter()
        .map(|f| {
            let rows: Vec<Vec<f64>> = f.train.iter().map(|&i| x.rows[i].clone()).collect();
            let ys: Vec<f64> = f.train.iter().map(|&i| y[i]).collect();
            (
                Gram::new(&rows, &ys, p),
                f.validation.iter().map(|&i| &x.rows[i]).collect(),
                f.validation.iter().map(|&i| y[i]).collect(),
            )
        })
        .collect();
    let score = |active: &[usize]| -> Result<f64> {
        let per_fold = fold_data
            .par_iter()
            .map(|(gram, rows, ys)| {
                let w = gram.solve(active, RFE_LAMBDA)?;
                let pred: Vec<f64> = rows
                    .iter()
                    .map(|r| w[0] + active.iter().zip(&w[1..]).map(|(&j, c)| c * r[j]).sum::<f64>())
                    .collect();
                r_squared(ys, &pred)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(per_fold.iter().sum::<f64>() / per_fold.len() as f64)
    };

    let mut active: Vec<usize> = (0..p).collect();
    let full_score = score(&active)?;
    let mut elimination_order = Vec::new();
    let mut scores = Vec::new();
    while active.len() > target_count {
        let w = full.solve(&active, RFE_LAMBDA)?;
        let (pos, _) = active
            .iter()
            .enumerate()
            .min_by(|&(a, &ja), &(b, &jb)| {
                w[a + 1]
                    .abs()
                    .total_cmp(&w[b + 1].abs())
                    .then_with(|| x.feature_names[ja].cmp(&x.feature_names[jb]))
            })
            .expect("active set is non-empty");
        let removed = active.remove(pos);
        elimination_order.push(x.feature_names[removed].clone());
        scores.push(score(&active)?);
    }
    let trace = EliminationTrace {
        feature_names: x.feature_names.clone(),
        elimination_order,
        scores,
        full_score,
    };
    Ok(RfeResult {
        retained: trace.survivors(target_count),
        trace,
    })
}

/// Hyperparameter lists per model; the grid is their Cartesian product with
/// the first-listed parameter varying slowest.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelGrid {
    Ridge {
        lambda: Vec<f64>,
    },
    Mlp {
        alpha: Vec<f64>,
        layer1: Vec<usize>,
        layer2: Vec<usize>,
    },
    Forest {
        max_depth: Vec<usize>,
        min_split: Vec<usize>,
        n_trees: usize,
        bootstrap: bool,
    },
    Svr {
        epsilon: Vec<f64>,
        c: Vec<f64>,
        gamma: Vec<f64>,
    },
}

/// `n` log-spaced values from `lo` to `hi`, endpoints exact.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|i| match i {
                    0 => lo,
                    _ if i == n - 1 => hi,
                    _ => 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64),
                })
                .collect()
        }
    }
}

struct Range {
    name: &'static str,
    lo: f64,
    hi: f64,
}

const RIDGE_LAMBDA: Range = Range {
    name: "ridge lambda",
    lo: 0.01,
    hi: 100.0,
};
const MLP_ALPHA: Range = Range {
    name: "mlp alpha",
    lo: 0.01,
    hi: 100.0,
};
const MLP_LAYER1: Range = Range {
    name: "mlp layer1",
    lo: 4.0,
    hi: 16.0,
};
const MLP_LAYER2: Range = Range {
    name: "mlp layer2",
    lo: 0.0,
    hi: 5.0,
};
const FOREST_DEPTH: Range = Range {
    name: "forest max_depth",
    lo: 2.0,
    hi: 7.0,
};
const FOREST_SPLIT: Range = Range {
    name: "forest min_split",
    lo: 1.0,
    hi: 4.0,
};
const SVR_EPSILON: Range = Range {
    name: "svr epsilon",
    lo: 1e-4,
    hi: 1e2,
};
const SVR_C: Range = Range {
    name: "svr c",
    lo: 1e-2,
    hi: 1e6,
};
const SVR_GAMMA: Range = Range {
    name: "svr gamma",
    lo: 1e-5,
    hi: 1e2,
};

fn check_range(r: &Range, values: impl IntoIterator<Item = f64>) -> Result<()> {
    let mut any = false;
    for v in values {
        any = true;
        // relative slack absorbs log-spacing round-off at the endpoints
        if !(v >= r.lo * (1.0 - 1e-12) && v <= r.hi * (1.0 + 1e-12)) {
            return Err(Error::InvalidArgument(format!(
                "{} value {v} is outside [{}, {}]",
                r.name, r.lo, r.hi
            )));
        }
    }
    if !any {
        return Err(Error::InvalidArgument(format!("{} grid is empty", r.name)));
    }
    Ok(())
}

fn as_f64(v: &[usize]) -> impl Iterator<Item = f64> + '_ {
    v.iter().map(|&x| x as f64)
}

impl ModelGrid {
    pub fn default_for(kind: ModelKind) -> ModelGrid {
        match kind {
            ModelKind::Ridge => ModelGrid::Ridge {
                lambda: log_space(RIDGE_LAMBDA.lo, RIDGE_LAMBDA.hi, 5),
            },
            ModelKind::Mlp => ModelGrid::Mlp {
                alpha: log_space(MLP_ALPHA.lo, MLP_ALPHA.hi, 5),
                layer1: (4..=16).collect(),
                layer2: (0..=5).collect(),
            },
            ModelKind::Forest => ModelGrid::Forest {
                max_depth: (2..=7).collect(),
                min_split: (1..=4).collect(),
                n_trees: 100,
                bootstrap: true,
            },
            ModelKind::Svr => ModelGrid::Svr {
                epsilon: log_space(SVR_EPSILON.lo, SVR_EPSILON.hi, 7),
                c: log_space(SVR_C.lo, SVR_C.hi, 5),
                gamma: log_space(SVR_GAMMA.lo, SVR_GAMMA.hi, 5),
            },
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelGrid::Ridge { .. } => ModelKind::Ridge,
            ModelGrid::Mlp { .. } => ModelKind::Mlp,
            ModelGrid::Forest { .. } => ModelKind::Forest,
            ModelGrid::Svr { .. } => ModelKind::Svr,
        }
    }

    /// Every value must sit inside the documented search range.
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelGrid::Ridge { lambda } => check_range(&RIDGE_LAMBDA, lambda.iter().copied()),
            ModelGrid::Mlp { alpha, layer1, layer2 } => {
                check_range(&MLP_ALPHA, alpha.iter().copied())?;
                check_range(&MLP_LAYER1, as_f64(layer1))?;
                check_range(&MLP_LAYER2, as_f64(layer2))
            }
            ModelGrid::Forest {
                max_depth,
                min_split,
                n_trees,
                ..
            } => {
                check_range(&FOREST_DEPTH, as_f64(max_depth))?;
                check_range(&FOREST_SPLIT, as_f64(min_split))?;
                if *n_trees == 0 {
                    return Err(Error::InvalidArgument("forest n_trees must be >= 1".into()));
                }
                Ok(())
            }
            ModelGrid::Svr { epsilon, c, gamma } => {
                check_range(&SVR_EPSILON, epsilon.iter().copied())?;
                check_range(&SVR_C, c.iter().copied())?;
                check_range(&SVR_GAMMA, gamma.iter().copied())
            }
        }
    }

    pub fn points(&self) -> Vec<Hyperparams> {
        let mut out = Vec::new();
        match self {
            ModelGrid::Ridge { lambda } => {
                out.extend(
                    lambda
                        .iter()
                        .map(|&l| Hyperparams::Ridge(RidgeHyperparams { lambda: l })),
                );
            }
            ModelGrid::Mlp { alpha, layer1, layer2 } => {
                for &a in alpha {
                    for &h1 in layer1 {
                        for &h2 in layer2 {
                            out.push(Hyperparams::Mlp(MlpHyperparams {
                                alpha: a,
                                layer1: h1,
                                layer2: h2,
                            }));
                        }
                    }
                }
            }
            ModelGrid::Forest {
                max_depth,
                min_split,
                n_trees,
                bootstrap,
            } => {
                for &d in max_depth {
                    for &s in min_split {
                        out.push(Hyperparams::Forest(ForestHyperparams {
                            n_trees: *n_trees,
                            max_depth: d,
                            min_split: s,
                            bootstrap: *bootstrap,
                        }));
                    }
                }
            }
            ModelGrid::Svr { epsilon, c, gamma } => {
                for &e in epsilon {
                    for &cv in c {
                        for &g in gamma {
                            out.push(Hyperparams::Svr(SvrHyperparams {
                                epsilon: e,
                                c: cv,
                                gamma: g,
                            }));
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuneResult {
    pub best: Hyperparams,
    pub best_score: f64,
    /// Every grid point with its mean validation R², in grid order. Failed
    /// points score negative infinity.
    pub scores: Vec<(Hyperparams, f64)>,
    pub folds: usize,
}

impl TuneResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("point,hyperparams,mean_cv_r2,best\n");
        for (i, (hp, score)) in self.scores.iter().enumerate() {
            let _ = writeln!(s, "{i},{hp},{score},{}", u8::from(*hp == self.best));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::write(path, e))
    }
}

/// Mean `k`-fold validation R² for each grid point, computed from training
/// rows only. The first point with the highest score wins. A point whose fit
/// or scoring fails on any fold scores negative infinity.
pub fn grid_search(grid: &[Hyperparams], x: &FeatureMatrix, y: &[f64], k: usize, seed: u64) -> Result<TuneResult> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument(
            "grid search needs at least one grid point".into(),
        ));
    }
    let folds = kfold_indices(x.n_rows(), k, derive_seed(seed, "cv"))?;
    let fold_sets: Vec<_> = folds
        .iter()
        .map(|f| {
            let train_y: Vec<f64> = f.train.iter().map(|&i| y[i]).collect();
            let val_y: Vec<f64> = f.validation.iter().map(|&i| y[i]).collect();
            (x.select_rows(&f.train), train_y, x.select_rows(&f.validation), val_y)
        })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|g| (0..k).map(move |f| (g, f))).collect();
    let results: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(g, f)| {
            let (tx, ty, vx, vy) = &fold_sets[f];
            let model = fit(tx, ty, &grid[g], derive_seed(seed, &format!("cv-fold-{f}")))?;
            r_squared(vy, &predict(&model, vx)?)
        })
        .collect();

    let mut scores = Vec::with_capacity(grid.len());
    for (g, hp) in grid.iter().enumerate() {
        let mut total = 0.0;
        let mut failed = None;
        for r in &results[g * k..(g + 1) * k] {
            match r {
                Ok(v) => total += v,
                Err(e) => failed = Some(e.to_string()),
            }
        }
        let score = match failed {
            Some(reason) => {
                log::warn!("grid point {hp} failed: {reason}");
                f64::NEG_INFINITY
            }
            None => total / k as f64,
        };
        scores.push((*hp, score));
    }
    let (best, best_score) = scores
        .iter()
        .fold(None::<(Hyperparams, f64)>, |acc, &(hp, s)| match acc {
            Some((_, bs)) if s <= bs => acc,
            _ => Some((hp, s)),
        })
        .expect("grid is non-empty");
    if best_score == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument("every grid point failed to fit".into()));
    }
    Ok(TuneResult {
        best,
        best_score,
        scores,
        folds: k,
    })
}

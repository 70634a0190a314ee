//! The four regressors: ridge, multilayer perceptron, bagged trees and
//! epsilon-SVR with an RBF kernel, behind one fit/predict contract.

mod forest;
mod format;
mod mlp;
pub(crate) mod ridge;
mod svr;

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub use forest::{fit_bagging, Tree, TreeNode};
pub use format::FORMAT_HEADER;
pub use mlp::{fit_mlp, fit_mlp_with, mlp_layer_sizes, mlp_loss, mlp_parameter_count, MlpNet};
pub use ridge::fit_ridge;
pub use svr::{fit_svr, rbf_kernel, SVR_KKT_TOLERANCE, SVR_MAX_PASSES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Ridge,
    Mlp,
    Forest,
    Svr,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Ridge, ModelKind::Mlp, ModelKind::Forest, ModelKind::Svr];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Ridge => "ridge",
            ModelKind::Mlp => "mlp",
            ModelKind::Forest => "forest",
            ModelKind::Svr => "svr",
        }
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        ModelKind::ALL.into_iter().find(|k| k.as_str() == s.trim())
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RidgeHyperparams {
    /// Penalty weight on the non-intercept coefficients.
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlpHyperparams {
    /// L2 weight penalty; biases are not penalized.
    pub alpha: f64,
    pub layer1: usize,
    /// Second hidden layer width; 0 leaves it out.
    pub layer2: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForestHyperparams {
    pub n_trees: usize,
    /// Root is depth 0; a node at `max_depth` is always a leaf.
    pub max_depth: usize,
    /// Fewest samples (bootstrap duplicates included) a node needs to split.
    pub min_split: usize,
    pub bootstrap: bool,
}

impl Default for ForestHyperparams {
    fn default() -> Self {
        ForestHyperparams {
            n_trees: 100,
            max_depth: 5,
            min_split: 2,
            bootstrap: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvrHyperparams {
    pub epsilon: f64,
    pub c: f64,
    pub gamma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Hyperparams {
    Ridge(RidgeHyperparams),
    Mlp(MlpHyperparams),
    Forest(ForestHyperparams),
    Svr(SvrHyperparams),
}

fn positive_finite(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be positive and finite (got {v})"
        )))
    }
}

impl Hyperparams {
    pub fn kind(&self) -> ModelKind {
        match self {
            Hyperparams::Ridge(_) => ModelKind::Ridge,
            Hyperparams::Mlp(_) => ModelKind::Mlp,
            Hyperparams::Forest(_) => ModelKind::Forest,
            Hyperparams::Svr(_) => ModelKind::Svr,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Hyperparams::Ridge(h) => {
                if !(h.lambda >= 0.0 && h.lambda.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "lambda must be finite and >= 0 (got {})",
                        h.lambda
                    )));
                }
            }
            Hyperparams::Mlp(h) => {
                if !(h.alpha >= 0.0 && h.alpha.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "alpha must be finite and >= 0 (got {})",
                        h.alpha
                    )));
                }
                if h.layer1 == 0 {
                    return Err(Error::InvalidArgument("layer1 must be >= 1".into()));
                }
            }
            Hyperparams::Forest(h) => {
                if h.n_trees == 0 || h.max_depth == 0 {
                    return Err(Error::InvalidArgument("n_trees and max_depth must be >= 1".into()));
                }
            }
            Hyperparams::Svr(h) => {
                positive_finite("epsilon", h.epsilon)?;
                positive_finite("C", h.c)?;
                positive_finite("gamma", h.gamma)?;
            }
        }
        Ok(())
    }

    /// Space-separated `key=value` pairs, parsed back by [`Hyperparams::parse`].
    pub fn describe(&self) -> String {
        match self {
            Hyperparams::Ridge(h) => format!("lambda={}", h.lambda),
            Hyperparams::Mlp(h) => format!("alpha={} layer1={} layer2={}", h.alpha, h.layer1, h.layer2),
            Hyperparams::Forest(h) => format!(
                "n_trees={} max_depth={} min_split={} bootstrap={}",
                h.n_trees, h.max_depth, h.min_split, h.bootstrap
            ),
            Hyperparams::Svr(h) => format!("epsilon={} c={} gamma={}", h.epsilon, h.c, h.gamma),
        }
    }

    pub fn parse(kind: ModelKind, text: &str) -> Result<Hyperparams> {
        let mut pairs = std::collections::BTreeMap::new();
        for tok in text.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::ModelFormat(format!("bad hyperparameter token `{tok}`")))?;
            pairs.insert(k, v);
        }
        let mut take = |k: &str| {
            pairs
                .remove(k)
                .ok_or_else(|| Error::ModelFormat(format!("missing hyperparameter `{k}` for {kind}")))
        };
        fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::ModelFormat(format!("bad value `{v}` for `{k}`")))
        }
        let hp = match kind {
            ModelKind::Ridge => Hyperparams::Ridge(RidgeHyperparams {
                lambda: num("lambda", take("lambda")?)?,
            }),
            ModelKind::Mlp => Hyperparams::Mlp(MlpHyperparams {
                alpha: num("alpha", take("alpha")?)?,
                layer1: num("layer1", take("layer1")?)?,
                layer2: num("layer2", take("layer2")?)?,
            }),
            ModelKind::Forest => Hyperparams::Forest(ForestHyperparams {
                n_trees: num("n_trees", take("n_trees")?)?,
                max_depth: num("max_depth", take("max_depth")?)?,
                min_split: num("min_split", take("min_split")?)?,
                bootstrap: num("bootstrap", take("bootstrap")?)?,
            }),
            ModelKind::Svr => Hyperparams::Svr(SvrHyperparams {
                epsilon: num("epsilon", take("epsilon")?)?,
                c: num("c", take("c")?)?,
                gamma: num("gamma", take("gamma")?)?,
            }),
        };
        if let Some(k) = pairs.keys().next() {
            return Err(Error::ModelFormat(format!("unknown hyperparameter `{k}` for {kind}")));
        }
        hp.validate()?;
        Ok(hp)
    }
}

impl fmt::Display for Hyperparams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelParams {
    Ridge {
        intercept: f64,
        coefficients: Vec<f64>,
    },
    Mlp(MlpNet),
    Forest(Vec<Tree>),
    Svr {
        gamma: f64,
        /// `alpha_i - alpha_i*` for every stored support point.
        dual_coefficients: Vec<f64>,
        support: Vec<Vec<f64>>,
        bias: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FittedModel {
    pub kind: ModelKind,
    pub feature_names: Vec<String>,
    pub seed: u64,
    pub hyperparams: Hyperparams,
    pub params: ModelParams,
    /// False when an iterative fit stopped at its iteration cap.
    pub converged: bool,
    pub iterations: usize,
}

impl FittedModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        match &self.params {
            ModelParams::Ridge {
                intercept,
                coefficients,
            } => intercept + crate::numerics::dot(coefficients, x),
            ModelParams::Mlp(net) => net.forward(x),
            ModelParams::Forest(trees) => trees.iter().map(|t| t.predict(x)).sum::<f64>() / trees.len() as f64,
            ModelParams::Svr {
                gamma,
                dual_coefficients,
                support,
                bias,
            } => {
                dual_coefficients
                    .iter()
                    .zip(support)
                    .map(|(a, s)| a * rbf_kernel(*gamma, s, x))
                    .sum::<f64>()
                    + bias
            }
        }
    }

    pub fn to_text(&self) -> String {
        format::write(self)
    }

    pub fn from_text(text: &str) -> Result<FittedModel> {
        format::read(text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::write(path, e))
    }

    pub fn load(path: &Path) -> Result<FittedModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        FittedModel::from_text(&text)
    }
}

/// One prediction per row. Fails unless the columns are exactly the ones the
/// model was trained on.
pub fn predict(model: &FittedModel, x: &FeatureMatrix) -> Result<Vec<f64>> {
    if x.feature_names != model.feature_names {
        return Err(Error::NameMismatch(format!(
            "{} model expects {} features, matrix has {} (or a different order)",
            model.kind,
            model.feature_names.len(),
            x.feature_names.len()
        )));
    }
    Ok(x.rows.iter().map(|r| model.predict_row(r)).collect())
}

/// Dispatches to the fitter for the hyperparameters' kind.
pub fn fit(x: &FeatureMatrix, y: &[f64], hp: &Hyperparams, seed: u64) -> Result<FittedModel> {
    match hp {
        Hyperparams::Ridge(h) => fit_ridge(x, y, h),
        Hyperparams::Mlp(h) => fit_mlp(x, y, h, seed),
        Hyperparams::Forest(h) => fit_bagging(x, y, h, seed),
        Hyperparams::Svr(h) => fit_svr(x, y, h, seed),
    }
}

fn check_training(x: &FeatureMatrix, y: &[f64], hp: &Hyperparams) -> Result<()> {
    hp.validate()?;
    if x.n_rows() == 0 {
        return Err(Error::InvalidArgument("cannot fit on zero rows".into()));
    }
    if x.n_rows() != y.len() {
        return Err(Error::Dimension(format!("{} rows but {} targets", x.n_rows(), y.len())));
    }
    if let Some(r) = x.rows.iter().position(|r| r.len() != x.n_features()) {
        return Err(Error::Dimension(format!("row {r} does not match the feature count")));
    }
    if x.rows.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training data contains NaN or infinity".into()));
    }
    Ok(())
}

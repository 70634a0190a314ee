//! Plain-text model files. Line-oriented, one keyword per line:
//!
//! ```text
//! careercast-model v1
//! kind <ridge|mlp|forest|svr>
//! seed <u64>
//! hyperparams <key=value ...>
//! converged <true|false>
//! iterations <n>
//! features <n>
//! feature <name>            (n lines)
//! ...kind-specific block...
//! end
//! ```
//!
//! Kind-specific blocks:
//!
//! * ridge: `intercept <v>`, `coefficients <v ...>`
//! * mlp: `layers <sizes ...>`, `params <v ...>` (per layer: weights with one
//!   row per output unit, then biases)
//! * forest: `trees <n>`, then per tree `tree <nodes>` followed by that many
//!   `split <feature> <threshold> <left> <right>` or `leaf <value>` lines in
//!   preorder
//! * svr: `gamma <v>`, `bias <v>`, `support <n>`, then `sv <coef> <x ...>` lines
//!
//! Reals are written in shortest round-trip exponent form, so a saved model
//! predicts bit-identically after loading.

use std::fmt::Write;

use super::{FittedModel, Hyperparams, MlpNet, ModelKind, ModelParams, Tree, TreeNode};
use crate::error::{Error, Result};

pub const FORMAT_HEADER: &str = "careercast-model v1";

fn reals(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ")
}

pub(super) fn write(m: &FittedModel) -> String {
    let mut s = String::new();
    // writing into a String cannot fail
    let _ = writeln!(s, "{FORMAT_HEADER}");
    let _ = writeln!(s, "kind {}", m.kind);
    let _ = writeln!(s, "seed {}", m.seed);
    let _ = writeln!(s, "hyperparams {}", m.hyperparams.describe());
    let _ = writeln!(s, "converged {}", m.converged);
    let _ = writeln!(s, "iterations {}", m.iterations);
    let _ = writeln!(s, "features {}", m.feature_names.len());
    for n in &m.feature_names {
        let _ = writeln!(s, "feature {n}");
    }
    match &m.params {
        ModelParams::Ridge {
            intercept,
            coefficients,
        } => {
            let _ = writeln!(s, "intercept {intercept:e}");
            let _ = writeln!(s, "coefficients {}", reals(coefficients));
        }
        ModelParams::Mlp(net) => {
            let sizes: Vec<String> = net.sizes.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "layers {}", sizes.join(" "));
            let _ = writeln!(s, "params {}", reals(&net.params));
        }
        ModelParams::Forest(trees) => {
            let _ = writeln!(s, "trees {}", trees.len());
            for t in trees {
                let _ = writeln!(s, "tree {}", t.nodes.len());
                for node in &t.nodes {
                    match node {
                        TreeNode::Leaf { value } => {
                            let _ = writeln!(s, "leaf {value:e}");
                        }
                        TreeNode::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => {
                            let _ = writeln!(s, "split {feature} {threshold:e} {left} {right}");
                        }
                    }
                }
            }
        }
        ModelParams::Svr {
            gamma,
            dual_coefficients,
            support,
            bias,
        } => {
            let _ = writeln!(s, "gamma {gamma:e}");
            let _ = writeln!(s, "bias {bias:e}");
            let _ = writeln!(s, "support {}", support.len());
            for (a, x) in dual_coefficients.iter().zip(support) {
                let _ = writeln!(s, "sv {a:e} {}", reals(x));
            }
        }
    }
    s.push_str("end\n");
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next line, which must start with `key`; returns the rest.
    fn expect(&mut self, key: &str) -> Result<&'a str> {
        let (no, line) = self
            .inner
            .next()
            .ok_or_else(|| Error::ModelFormat(format!("unexpected end of file, wanted `{key}`")))?;
        let (k, rest) = line.split_once(' ').unwrap_or((line, ""));
        if k != key {
            return Err(Error::ModelFormat(format!(
                "line {}: wanted `{key}`, found `{k}`",
                no + 1
            )));
        }
        Ok(rest)
    }

    fn value<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let rest = self.expect(key)?;
        parse(key, rest)
    }
}

fn parse<T: std::str::FromStr>(key: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::ModelFormat(format!("bad value `{s}` for `{key}`")))
}

fn parse_all<T: std::str::FromStr>(key: &str, s: &str) -> Result<Vec<T>> {
    s.split_whitespace().map(|t| parse(key, t)).collect()
}

pub(super) fn read(text: &str) -> Result<FittedModel> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let header = lines.inner.next().map(|(_, l)| l.trim_end());
    if header != Some(FORMAT_HEADER) {
        return Err(Error::ModelFormat(format!("missing `{FORMAT_HEADER}` header")));
    }
    let kind_text = lines.expect("kind")?;
    let kind =
        ModelKind::parse(kind_text).ok_or_else(|| Error::ModelFormat(format!("unknown model kind `{kind_text}`")))?;
    let seed = lines.value("seed")?;
    let hyperparams = Hyperparams::parse(kind, lines.expect("hyperparams")?)?;
    let converged = lines.value("converged")?;
    let iterations = lines.value("iterations")?;
    let n_features: usize = lines.value("features")?;
    let feature_names = (0..n_features)
        .map(|_| lines.expect("feature").map(str::to_string))
        .collect::<Result<Vec<_>>>()?;

    let params = match kind {
        ModelKind::Ridge => {
            let intercept = lines.value("intercept")?;
            let coefficients: Vec<f64> = parse_all("coefficients", lines.expect("coefficients")?)?;
            if coefficients.len() != n_features {
                return Err(Error::ModelFormat(
                    "coefficient count differs from feature count".into(),
                ));
            }
            ModelParams::Ridge {
                intercept,
                coefficients,
            }
        }
        ModelKind::Mlp => {
            let sizes: Vec<usize> = parse_all("layers", lines.expect("layers")?)?;
            let params: Vec<f64> = parse_all("params", lines.expect("params")?)?;
            if sizes.len() < 3 || sizes[0] != n_features || sizes.last() != Some(&1) {
                return Err(Error::ModelFormat("layer sizes do not fit the features".into()));
            }
            if params.len() != super::mlp_parameter_count(&sizes) {
                return Err(Error::ModelFormat("parameter count differs from layer sizes".into()));
            }
            ModelParams::Mlp(MlpNet { sizes, params })
        }
        ModelKind::Forest => {
            let n_trees: usize = lines.value("trees")?;
            let mut trees = Vec::with_capacity(n_trees);
            for _ in 0..n_trees {
                let n_nodes: usize = lines.value("tree")?;
                let mut nodes = Vec::with_capacity(n_nodes);
                for _ in 0..n_nodes {
                    let (_, line) = lines
                        .inner
                        .next()
                        .ok_or_else(|| Error::ModelFormat("unexpected end of tree".into()))?;
                    let (k, rest) = line.split_once(' ').unwrap_or((line, ""));
                    nodes.push(match k {
                        "leaf" => TreeNode::Leaf {
                            value: parse("leaf", rest)?,
                        },
                        "split" => {
                            let f: Vec<&str> = rest.split_whitespace().collect();
                            if f.len() != 4 {
                                return Err(Error::ModelFormat(format!("bad split line `{line}`")));
                            }
                            TreeNode::Split {
                                feature: parse("split", f[0])?,
                                threshold: parse("split", f[1])?,
                                left: parse("split", f[2])?,
                                right: parse("split", f[3])?,
                            }
                        }
                        _ => return Err(Error::ModelFormat(format!("bad tree line `{line}`"))),
                    });
                }
                let bad = nodes.iter().any(|n| match *n {
                    TreeNode::Split {
                        feature, left, right, ..
                    } => feature >= n_features || left >= n_nodes || right >= n_nodes,
                    TreeNode::Leaf { .. } => false,
                });
                if nodes.is_empty() || bad {
                    return Err(Error::ModelFormat("tree references a missing node or feature".into()));
                }
                trees.push(Tree { nodes });
            }
            ModelParams::Forest(trees)
        }
        ModelKind::Svr => {
            let gamma = lines.value("gamma")?;
            let bias = lines.value("bias")?;
            let n_support: usize = lines.value("support")?;
            let mut dual_coefficients = Vec::with_capacity(n_support);
            let mut support = Vec::with_capacity(n_support);
            for _ in 0..n_support {
                let mut v: Vec<f64> = parse_all("sv", lines.expect("sv")?)?;
                if v.len() != n_features + 1 {
                    return Err(Error::ModelFormat(
                        "support vector length differs from feature count".into(),
                    ));
                }
                dual_coefficients.push(v.remove(0));
                support.push(v);
            }
            ModelParams::Svr {
                gamma,
                dual_coefficients,
                support,
                bias,
            }
        }
    };
    lines.expect("end")?;
    Ok(FittedModel {
        kind,
        feature_names,
        seed,
        hyperparams,
        params,
        converged,
        iterations,
    })
}

//! Run configuration in the flat `key = value` format.
//!
//! Every key is optional and falls back to the default shown by
//! [`RunConfig::to_text`] on a default config. Lists are comma-separated.
//! Numeric grid entries accept plain numbers, inclusive integer ranges
//! (`4..16`) and log-spaced runs (`log(0.01, 100, 5)`), mixed freely.
//! Relative paths resolve against the directory holding the config file.
//!
//! | key | meaning |
//! |---|---|
//! | `seed` | run seed; every random draw derives from it |
//! | `out` | output directory |
//! | `data.dir` | directory with `Batting.csv`, `Pitching.csv`, `People.csv`, `Fielding.csv`, `war_batting.csv`, `war_pitching.csv`; individual `data.*` keys override |
//! | `data.batting`, `data.pitching`, `data.people` | table paths |
//! | `data.fielding`, `data.war` | comma-separated path lists |
//! | `data.columns` | optional column-map file |
//! | `cohort.cutoff_year`, `cohort.min_span` | inclusion rules |
//! | `run.cohorts` | `batters`, `pitchers` or both |
//! | `run.years` | target seasons within 7..11 |
//! | `run.models` | subset of `ridge,mlp,forest,svr` |
//! | `features.missing_war` | `zero`, `-0.5` or `-1` |
//! | `selection.retained` | features kept by elimination |
//! | `selection.train_fraction`, `selection.folds` | split and CV |
//! | `grid.ridge.lambda` | |
//! | `grid.mlp.alpha`, `grid.mlp.layer1`, `grid.mlp.layer2` | |
//! | `grid.forest.max_depth`, `grid.forest.min_split`, `grid.forest.n_trees`, `grid.forest.bootstrap` | |
//! | `grid.svr.epsilon`, `grid.svr.c`, `grid.svr.gamma` | |
//! | `synth.dir` | where `synth` writes its league (default `<out>/synth`) |
//! | `synth.n_players`, `synth.noise_sd`, `synth.retirement_hazard`, `synth.peak_age`, `synth.curvature`, `synth.pitcher_fraction`, `synth.debut_age` (range) | generator settings |

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::cohort::{CohortKind, CohortOptions};
use crate::error::{Error, Result};
use crate::features::{MissingWarPolicy, FIRST_TARGET_SEASON, LAST_TARGET_SEASON};
use crate::fixtures::SynthConfig;
use crate::ingest::DataPaths;
use crate::kv;
use crate::models::ModelKind;
use crate::selection::{log_space, ModelGrid, DEFAULT_FOLDS, DEFAULT_RETAINED};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub data: DataPaths,
    pub columns: Option<PathBuf>,
    pub cohort: CohortOptions,
    pub cohorts: Vec<CohortKind>,
    pub years: Vec<u32>,
    pub models: Vec<ModelKind>,
    pub policy: MissingWarPolicy,
    pub retained: usize,
    pub train_fraction: f64,
    pub folds: usize,
    /// One grid per model kind, in [`ModelKind::ALL`] order.
    pub grids: Vec<ModelGrid>,
    pub synth_dir: Option<PathBuf>,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            out: PathBuf::from("reports"),
            data: DataPaths::default(),
            columns: None,
            cohort: CohortOptions::default(),
            cohorts: CohortKind::ALL.to_vec(),
            years: (FIRST_TARGET_SEASON..=LAST_TARGET_SEASON).collect(),
            models: ModelKind::ALL.to_vec(),
            policy: MissingWarPolicy::Zero,
            retained: DEFAULT_RETAINED,
            train_fraction: 0.8,
            folds: DEFAULT_FOLDS,
            grids: ModelKind::ALL.into_iter().map(ModelGrid::default_for).collect(),
            synth_dir: None,
            synth: SynthConfig::default(),
        }
    }
}

/// File names `data.dir` and `synth` agree on.
pub const DATA_FILES: [(&str, &str); 6] = [
    ("batting", "Batting.csv"),
    ("pitching", "Pitching.csv"),
    ("people", "People.csv"),
    ("fielding", "Fielding.csv"),
    ("war", "war_batting.csv"),
    ("war", "war_pitching.csv"),
];

/// Loader paths for a directory laid out like `synth` output.
pub fn data_paths_in(dir: &Path) -> DataPaths {
    let mut p = DataPaths::default();
    for (key, file) in DATA_FILES {
        let path = dir.join(file);
        match key {
            "batting" => p.batting = path,
            "pitching" => p.pitching = path,
            "people" => p.people = path,
            "fielding" => p.fielding.push(path),
            _ => p.war.push(path),
        }
    }
    p
}

fn list(v: &str) -> Vec<&str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

/// `log(lo, hi, n)`, ranges and plain numbers; see the module docs.
fn parse_reals(v: &str) -> std::result::Result<Vec<f64>, String> {
    let mut out = Vec::new();
    let mut rest = v.trim();
    while !rest.is_empty() {
        if let Some(body) = rest.strip_prefix("log(") {
            let end = body.find(')').ok_or("unclosed log(")?;
            let args: Vec<&str> = body[..end].split(',').map(str::trim).collect();
            let [lo, hi, n] = args[..] else {
                return Err("log() takes lo, hi, n".into());
            };
            let lo: f64 = lo.parse().map_err(|_| format!("bad number `{lo}`"))?;
            let hi: f64 = hi.parse().map_err(|_| format!("bad number `{hi}`"))?;
            let n: usize = n.parse().map_err(|_| format!("bad count `{n}`"))?;
            if !(lo > 0.0 && hi >= lo) {
                return Err("log() needs 0 < lo <= hi".into());
            }
            out.extend(log_space(lo, hi, n));
            rest = body[end + 1..].trim_start().trim_start_matches(',').trim_start();
            continue;
        }
        let (item, tail) = rest.split_once(',').unwrap_or((rest, ""));
        let item = item.trim();
        if let Some((a, b)) = item.split_once("..") {
            let a: i64 = a.trim().parse().map_err(|_| format!("bad range `{item}`"))?;
            let b: i64 = b.trim().parse().map_err(|_| format!("bad range `{item}`"))?;
            out.extend((a..=b).map(|x| x as f64));
        } else {
            out.push(item.parse().map_err(|_| format!("bad number `{item}`"))?);
        }
        rest = tail.trim_start();
    }
    Ok(out)
}

fn parse_counts(v: &str) -> std::result::Result<Vec<usize>, String> {
    parse_reals(v)?
        .into_iter()
        .map(|x| {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(format!("`{x}` is not a non-negative integer"))
            }
        })
        .collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn join_paths(v: &[PathBuf]) -> String {
    v.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::from_text(&text, base)
    }

    /// Parses `text` on top of the defaults. Every bad key or value is
    /// reported, not just the first.
    pub fn from_text(text: &str, base: &Path) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut errors: Vec<String> = Vec::new();
        let resolve = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        cfg.out = resolve("reports");
        let entries = kv::parse(text)?;
        // data.dir first so explicit table keys win regardless of order
        for e in entries.iter().filter(|e| e.key == "data.dir") {
            cfg.data = data_paths_in(&resolve(&e.value));
        }
        for e in &entries {
            let v = e.value.as_str();
            let mut fail = |msg: String| errors.push(format!("{} (line {}): {msg}", e.key, e.line));
            macro_rules! num {
                ($t:ty) => {
                    match v.parse::<$t>() {
                        Ok(x) => Some(x),
                        Err(_) => {
                            fail(format!("bad value `{v}`"));
                            None
                        }
                    }
                };
            }
            macro_rules! grid {
                ($kind:ident, $field:ident, $parse:ident) => {
                    match $parse(v) {
                        Ok(vals) => {
                            if let Some(ModelGrid::$kind { $field, .. }) =
                                cfg.grids.iter_mut().find(|g| g.kind() == ModelKind::$kind)
                            {
                                *$field = vals;
                            }
                        }
                        Err(m) => fail(m),
                    }
                };
            }
            match e.key.as_str() {
                "seed" => cfg.seed = num!(u64).unwrap_or(cfg.seed),
                "out" => cfg.out = resolve(v),
                "data.dir" => {}
                "data.batting" => cfg.data.batting = resolve(v),
                "data.pitching" => cfg.data.pitching = resolve(v),
                "data.people" => cfg.data.people = resolve(v),
                "data.fielding" => cfg.data.fielding = list(v).into_iter().map(resolve).collect(),
                "data.war" => cfg.data.war = list(v).into_iter().map(resolve).collect(),
                "data.columns" => cfg.columns = (!v.is_empty()).then(|| resolve(v)),
                "cohort.cutoff_year" => cfg.cohort.cutoff_year = num!(i32).unwrap_or(cfg.cohort.cutoff_year),
                "cohort.min_span" => cfg.cohort.min_span = num!(u32).unwrap_or(cfg.cohort.min_span),
                "run.cohorts" => match parse_cohorts(v) {
                    Ok(c) => cfg.cohorts = c,
                    Err(m) => fail(m),
                },
                "run.years" => match parse_years(v) {
                    Ok(y) => cfg.years = y,
                    Err(m) => fail(m),
                },
                "run.models" => {
                    let parsed: Vec<Option<ModelKind>> = list(v).into_iter().map(ModelKind::parse).collect();
                    if parsed.iter().any(Option::is_none) {
                        fail(format!("unknown model in `{v}`"));
                    } else {
                        cfg.models = parsed.into_iter().flatten().collect();
                    }
                }
                "features.missing_war" => match MissingWarPolicy::parse(v) {
                    Some(p) => cfg.policy = p,
                    None => fail(format!("`{v}` is not one of zero, -0.5, -1")),
                },
                "selection.retained" => cfg.retained = num!(usize).unwrap_or(cfg.retained),
                "selection.train_fraction" => cfg.train_fraction = num!(f64).unwrap_or(cfg.train_fraction),
                "selection.folds" => cfg.folds = num!(usize).unwrap_or(cfg.folds),
                "grid.ridge.lambda" => grid!(Ridge, lambda, parse_reals),
                "grid.mlp.alpha" => grid!(Mlp, alpha, parse_reals),
                "grid.mlp.layer1" => grid!(Mlp, layer1, parse_counts),
                "grid.mlp.layer2" => grid!(Mlp, layer2, parse_counts),
                "grid.forest.max_depth" => grid!(Forest, max_depth, parse_counts),
                "grid.forest.min_split" => grid!(Forest, min_split, parse_counts),
                "grid.forest.n_trees" => {
                    if let (Some(n), Some(ModelGrid::Forest { n_trees, .. })) = (
                        num!(usize),
                        cfg.grids.iter_mut().find(|g| g.kind() == ModelKind::Forest),
                    ) {
                        *n_trees = n;
                    }
                }
                "grid.forest.bootstrap" => {
                    if let (Some(b), Some(ModelGrid::Forest { bootstrap, .. })) =
                        (num!(bool), cfg.grids.iter_mut().find(|g| g.kind() == ModelKind::Forest))
                    {
                        *bootstrap = b;
                    }
                }
                "grid.svr.epsilon" => grid!(Svr, epsilon, parse_reals),
                "grid.svr.c" => grid!(Svr, c, parse_reals),
                "grid.svr.gamma" => grid!(Svr, gamma, parse_reals),
                "synth.dir" => cfg.synth_dir = (!v.is_empty()).then(|| resolve(v)),
                "synth.n_players" => cfg.synth.n_players = num!(usize).unwrap_or(cfg.synth.n_players),
                "synth.noise_sd" => cfg.synth.noise_sd = num!(f64).unwrap_or(cfg.synth.noise_sd),
                "synth.retirement_hazard" => {
                    cfg.synth.retirement_hazard = num!(f64).unwrap_or(cfg.synth.retirement_hazard)
                }
                "synth.peak_age" => cfg.synth.peak_age = num!(f64).unwrap_or(cfg.synth.peak_age),
                "synth.curvature" => cfg.synth.curvature = num!(f64).unwrap_or(cfg.synth.curvature),
                "synth.debut_age" => match parse_counts(v) {
                    Ok(a) if !a.is_empty() => {
                        cfg.synth.debut_age = (a[0] as i32, a[a.len() - 1] as i32);
                    }
                    Ok(_) => fail("empty age range".into()),
                    Err(m) => fail(m),
                },
                "synth.pitcher_fraction" => {
                    cfg.synth.pitcher_fraction = num!(f64).unwrap_or(cfg.synth.pitcher_fraction)
                }
                other => fail(format!("unknown key `{other}`")),
            }
        }
        if !errors.is_empty() {
            return Err(Error::Config(errors.join("; ")));
        }
        Ok(cfg)
    }

    pub fn grid(&self, kind: ModelKind) -> &ModelGrid {
        self.grids
            .iter()
            .find(|g| g.kind() == kind)
            .expect("a grid for every model kind")
    }

    /// Where `synth` writes and where `data.dir`-style loading looks for it.
    pub fn synth_dir(&self) -> PathBuf {
        self.synth_dir.clone().unwrap_or_else(|| self.out.join("synth"))
    }

    /// Field-level checks. `needs_data` adds the data-path requirements of
    /// every command except `synth`.
    pub fn validate(&self, needs_data: bool) -> Result<()> {
        let mut bad: Vec<String> = Vec::new();
        if needs_data {
            for (name, p) in [
                ("data.batting", &self.data.batting),
                ("data.pitching", &self.data.pitching),
                ("data.people", &self.data.people),
            ] {
                if p.as_os_str().is_empty() {
                    bad.push(format!("{name}: required"));
                }
            }
            if self.data.war.is_empty() {
                bad.push("data.war: at least one WAR file is required".into());
            }
        }
        if self.out.as_os_str().is_empty() {
            bad.push("out: required".into());
        }
        if self.cohort.min_span == 0 {
            bad.push("cohort.min_span: must be >= 1".into());
        }
        if self.cohorts.is_empty() {
            bad.push("run.cohorts: empty".into());
        }
        if self.years.is_empty() {
            bad.push("run.years: empty".into());
        }
        if self.models.is_empty() {
            bad.push("run.models: empty".into());
        }
        if self.retained == 0 {
            bad.push("selection.retained: must be >= 1".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            bad.push(format!(
                "selection.train_fraction: {} is not in (0, 1)",
                self.train_fraction
            ));
        }
        if self.folds < 2 {
            bad.push("selection.folds: must be >= 2".into());
        }
        for g in &self.grids {
            if let Err(e) = g.validate() {
                bad.push(format!("grid.{}: {e}", g.kind()));
            }
        }
        if let Err(e) = self.synth.validate() {
            bad.push(format!("synth: {e}"));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }

    /// Canonical rendering with every value resolved; parses back to an equal
    /// config and feeds the digest.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("seed", self.seed.to_string());
        put("out", self.out.display().to_string());
        put("data.batting", self.data.batting.display().to_string());
        put("data.pitching", self.data.pitching.display().to_string());
        put("data.people", self.data.people.display().to_string());
        put("data.fielding", join_paths(&self.data.fielding));
        put("data.war", join_paths(&self.data.war));
        put(
            "data.columns",
            self.columns
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        put("cohort.cutoff_year", self.cohort.cutoff_year.to_string());
        put("cohort.min_span", self.cohort.min_span.to_string());
        put(
            "run.cohorts",
            join(&self.cohorts.iter().map(|c| c.as_str()).collect::<Vec<_>>()),
        );
        put("run.years", join(&self.years));
        put(
            "run.models",
            join(&self.models.iter().map(|m| m.as_str()).collect::<Vec<_>>()),
        );
        put("features.missing_war", self.policy.as_str().to_string());
        put("selection.retained", self.retained.to_string());
        put("selection.train_fraction", self.train_fraction.to_string());
        put("selection.folds", self.folds.to_string());
        for g in &self.grids {
            match g {
                ModelGrid::Ridge { lambda } => put("grid.ridge.lambda", join(lambda)),
                ModelGrid::Mlp { alpha, layer1, layer2 } => {
                    put("grid.mlp.alpha", join(alpha));
                    put("grid.mlp.layer1", join(layer1));
                    put("grid.mlp.layer2", join(layer2));
                }
                ModelGrid::Forest {
                    max_depth,
                    min_split,
                    n_trees,
                    bootstrap,
                } => {
                    put("grid.forest.max_depth", join(max_depth));
                    put("grid.forest.min_split", join(min_split));
                    put("grid.forest.n_trees", n_trees.to_string());
                    put("grid.forest.bootstrap", bootstrap.to_string());
                }
                ModelGrid::Svr { epsilon, c, gamma } => {
                    put("grid.svr.epsilon", join(epsilon));
                    put("grid.svr.c", join(c));
                    put("grid.svr.gamma", join(gamma));
                }
            }
        }
        put("synth.dir", self.synth_dir().display().to_string());
        put("synth.n_players", self.synth.n_players.to_string());
        put("synth.noise_sd", self.synth.noise_sd.to_string());
        put("synth.retirement_hazard", self.synth.retirement_hazard.to_string());
        put("synth.peak_age", self.synth.peak_age.to_string());
        put("synth.curvature", self.synth.curvature.to_string());
        put("synth.pitcher_fraction", self.synth.pitcher_fraction.to_string());
        put(
            "synth.debut_age",
            format!("{}..{}", self.synth.debut_age.0, self.synth.debut_age.1),
        );
        s
    }

    /// Hex SHA-256 of [`RunConfig::to_text`].
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

pub fn parse_cohorts(v: &str) -> std::result::Result<Vec<CohortKind>, String> {
    let v = v.trim();
    if v == "both" {
        return Ok(CohortKind::ALL.to_vec());
    }
    let mut out = Vec::new();
    for c in list(v) {
        let k = CohortKind::parse(c).ok_or_else(|| format!("unknown cohort `{c}`"))?;
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out.sort();
    Ok(out)
}

/// `7..11`, `7,9` or a mix; every year must lie in 7..=11.
pub fn parse_years(v: &str) -> std::result::Result<Vec<u32>, String> {
    let mut years: Vec<u32> = parse_counts(v)?.into_iter().map(|y| y as u32).collect();
    if let Some(y) = years
        .iter()
        .find(|y| !(FIRST_TARGET_SEASON..=LAST_TARGET_SEASON).contains(*y))
    {
        return Err(format!(
            "target year {y} is outside {FIRST_TARGET_SEASON}..{LAST_TARGET_SEASON}"
        ));
    }
    years.sort_unstable();
    years.dedup();
    Ok(years)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_grammar() {
        assert_eq!(parse_reals("1, 2.5,3").unwrap(), vec![1.0, 2.5, 3.0]);
        assert_eq!(parse_reals("4..6").unwrap(), vec![4.0, 5.0, 6.0]);
        let l = parse_reals("log(0.01, 100, 5), 7").unwrap();
        assert_eq!(l.len(), 6);
        assert_eq!(l[0], 0.01);
        assert!((l[2] - 1.0).abs() < 1e-12);
        assert_eq!(l[5], 7.0);
        assert!(parse_reals("log(1,2").is_err());
        assert!(parse_counts("1.5").is_err());
    }

    #[test]
    fn years_and_cohorts() {
        assert_eq!(parse_years("7..11").unwrap(), vec![7, 8, 9, 10, 11]);
        assert_eq!(parse_years("9,7").unwrap(), vec![7, 9]);
        assert!(parse_years("6..8").is_err());
        assert_eq!(parse_cohorts("both").unwrap(), CohortKind::ALL.to_vec());
        assert!(parse_cohorts("catchers").is_err());
    }

    #[test]
    fn canonical_text_round_trips() {
        let text =
            "seed = 7\nrun.years = 8..9\ngrid.svr.c = log(1, 100, 3)\ndata.dir = d\nfeatures.missing_war = -0.5\n";
        let cfg = RunConfig::from_text(text, Path::new("/base")).unwrap();
        assert_eq!(cfg.data.batting, PathBuf::from("/base/d/Batting.csv"));
        let again = RunConfig::from_text(&cfg.to_text(), Path::new("/elsewhere")).unwrap();
        assert_eq!(cfg.digest(), again.digest());
        assert_ne!(cfg.digest(), RunConfig::default().digest());
    }

    #[test]
    fn errors_name_every_field() {
        let err = RunConfig::from_text("seed = x\nbogus = 1\nrun.models = ridge,tree\n", Path::new("."))
            .unwrap_err()
            .to_string();
        for field in ["seed", "bogus", "run.models"] {
            assert!(err.contains(field), "{err}");
        }
        let cfg = RunConfig {
            train_fraction: 1.5,
            ..Default::default()
        };
        let err = cfg.validate(true).unwrap_err().to_string();
        assert!(
            err.contains("selection.train_fraction") && err.contains("data.batting"),
            "{err}"
        );
        assert!(RunConfig::default().validate(false).is_ok());
    }
}

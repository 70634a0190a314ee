//! Feature vectors from seasons 1-6, WAR targets for seasons 7-11, and
//! min-max scaling.
//!
//! Feature names are stable strings:
//!
//! * `y{k}_{stat}` for season index `k` in 1..=6: every counting stat, the
//!   rates recomputed from that season's counts, `y{k}_war` and the
//!   `y{k}_active` indicator. An absent season is all zeros with
//!   `y{k}_active = 0`.
//! * `agg_{stat}`: sums over seasons 1-6, rates recomputed from the sums,
//!   `agg_war` (cumulative WAR, absent = 0) and `agg_active_seasons`.
//!   Pitchers also get `agg_starter_share` (games started / games).
//! * `age_at_debut`, `height`, `weight`.
//! * One-hot groups: `decade_1970` .. `decade_2020` (debut decade, clamped),
//!   `pos_{P,C,1B,2B,3B,SS,LF,CF,RF,DH,unknown}` and `bats_{R,L,S,unknown}`
//!   for batters, `throws_{R,L,unknown}` for pitchers.

use std::io::Write;
use std::path::Path;

use crate::cohort::{Career, Cohort, CohortKind, SeasonStats, BOUNDARY_SEASON};
use crate::error::{Error, Result};
use crate::ingest::{Bats, BattingCounts, PitchingCounts, Position, Throws};

pub const FIRST_TARGET_SEASON: u32 = 7;
pub const LAST_TARGET_SEASON: u32 = 11;

const DECADES: [i32; 6] = [1970, 1980, 1990, 2000, 2010, 2020];
const ONE_HOT_PREFIXES: [&str; 4] = ["decade_", "pos_", "bats_", "throws_"];
const BATTING_RATES: [&str; 3] = ["avg", "obp", "slg"];
const PITCHING_RATES: [&str; 4] = ["era", "whip", "so9", "bb9"];

/// True for columns belonging to a one-hot group.
pub fn is_one_hot(name: &str) -> bool {
    ONE_HOT_PREFIXES.iter().any(|p| name.starts_with(p))
}

/// One-hot group prefixes present in a feature list.
pub fn one_hot_groups(names: &[String]) -> Vec<&'static str> {
    ONE_HOT_PREFIXES
        .iter()
        .copied()
        .filter(|p| names.iter().any(|n| n.starts_with(p)))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub feature_names: Vec<String>,
    pub player_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    /// Matrix with row ids `r0, r1, ..`; rows must all match the name count.
    pub fn new(feature_names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<FeatureMatrix> {
        if let Some(bad) = rows.iter().position(|r| r.len() != feature_names.len()) {
            return Err(Error::Dimension(format!(
                "row {bad} has {} values for {} features",
                rows[bad].len(),
                feature_names.len()
            )));
        }
        Ok(FeatureMatrix {
            player_ids: (0..rows.len()).map(|i| format!("r{i}")).collect(),
            feature_names,
            rows,
        })
    }

    /// Like [`FeatureMatrix::new`] with features named `x0, x1, ..`.
    pub fn unnamed(rows: Vec<Vec<f64>>) -> Result<FeatureMatrix> {
        let p = rows.first().map_or(0, Vec::len);
        FeatureMatrix::new((0..p).map(|j| format!("x{j}")).collect(), rows)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Keeps the named columns, in the order given.
    pub fn select_columns(&self, names: &[String]) -> Result<FeatureMatrix> {
        let idx = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::NameMismatch(format!("no feature named `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureMatrix {
            feature_names: names.to_vec(),
            player_ids: self.player_ids.clone(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&j| r[j]).collect()).collect(),
        })
    }

    /// Keeps the rows at the given positions, in the order given.
    pub fn select_rows(&self, positions: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            feature_names: self.feature_names.clone(),
            player_ids: positions.iter().map(|&i| self.player_ids[i].clone()).collect(),
            rows: positions.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Keeps the rows of the named players, in the order given.
    pub fn select_players(&self, ids: &[String]) -> Result<FeatureMatrix> {
        let lookup: std::collections::HashMap<&str, usize> = self
            .player_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let positions = ids
            .iter()
            .map(|id| {
                lookup
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::NameMismatch(format!("no row for player `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_rows(&positions))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("player_id");
        for n in &self.feature_names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (id, row) in self.player_ids.iter().zip(&self.rows) {
            out.push_str(id);
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::write(path, e))
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn batting_rates(c: &BattingCounts) -> [f64; 3] {
    let ab = f64::from(c.at_bats);
    let h = f64::from(c.hits);
    let on_base = h + f64::from(c.walks) + f64::from(c.hbp);
    let pa = ab + f64::from(c.walks) + f64::from(c.hbp) + f64::from(c.sac_flies);
    let bases = h + f64::from(c.doubles) + 2.0 * f64::from(c.triples) + 3.0 * f64::from(c.home_runs);
    [ratio(h, ab), ratio(on_base, pa), ratio(bases, ab)]
}

fn pitching_rates(c: &PitchingCounts) -> [f64; 4] {
    let outs = f64::from(c.ipouts);
    [
        ratio(27.0 * f64::from(c.earned_runs), outs),
        ratio(3.0 * f64::from(c.walks + c.hits), outs),
        ratio(27.0 * f64::from(c.strikeouts), outs),
        ratio(27.0 * f64::from(c.walks), outs),
    ]
}

/// Ordered feature names for a cohort kind.
pub fn feature_names(kind: CohortKind) -> Vec<String> {
    let (stats, rates): (&[&str], &[&str]) = match kind {
        CohortKind::Batters => (BattingCounts::FIELDS, &BATTING_RATES),
        CohortKind::Pitchers => (PitchingCounts::FIELDS, &PITCHING_RATES),
    };
    let mut names = Vec::new();
    for k in 1..=BOUNDARY_SEASON {
        for s in stats.iter().chain(rates) {
            names.push(format!("y{k}_{s}"));
        }
        names.push(format!("y{k}_war"));
        names.push(format!("y{k}_active"));
    }
    for s in stats.iter().chain(rates) {
        names.push(format!("agg_{s}"));
    }
    names.push("agg_war".into());
    names.push("agg_active_seasons".into());
    if kind == CohortKind::Pitchers {
        names.push("agg_starter_share".into());
    }
    names.extend(["age_at_debut", "height", "weight"].map(String::from));
    names.extend(DECADES.iter().map(|d| format!("decade_{d}")));
    match kind {
        CohortKind::Batters => {
            names.extend(Position::ALL.iter().map(|p| format!("pos_{}", p.code())));
            names.extend(Bats::ALL.iter().map(|b| format!("bats_{}", b.code())));
        }
        CohortKind::Pitchers => {
            names.extend(Throws::ALL.iter().map(|t| format!("throws_{}", t.code())));
        }
    }
    names
}

fn counts_and_rates(stats: Option<&SeasonStats>, kind: CohortKind) -> Vec<f64> {
    match (kind, stats) {
        (CohortKind::Batters, Some(SeasonStats::Batting(c))) => {
            c.to_vec().into_iter().map(f64::from).chain(batting_rates(c)).collect()
        }
        (CohortKind::Pitchers, Some(SeasonStats::Pitching(c))) => {
            c.to_vec().into_iter().map(f64::from).chain(pitching_rates(c)).collect()
        }
        (CohortKind::Batters, _) => vec![0.0; BattingCounts::FIELDS.len() + BATTING_RATES.len()],
        (CohortKind::Pitchers, _) => vec![0.0; PitchingCounts::FIELDS.len() + PITCHING_RATES.len()],
    }
}

fn one_hot<T: PartialEq>(all: &[T], value: &T) -> impl Iterator<Item = f64> {
    let hit = all.iter().position(|v| v == value).unwrap_or(all.len() - 1);
    (0..all.len()).map(move |i| if i == hit { 1.0 } else { 0.0 })
}

/// Feature vector for one career, aligned with [`feature_names`].
pub fn career_features(career: &Career) -> Vec<f64> {
    let kind = career.kind;
    let mut v = Vec::new();
    let mut bat_total = BattingCounts::default();
    let mut pit_total = PitchingCounts::default();
    let mut agg_war = 0.0;
    let mut active = 0.0;
    for k in 1..=BOUNDARY_SEASON {
        let season = career.season(k);
        v.extend(counts_and_rates(season.map(|s| &s.stats), kind));
        let war = season.and_then(|s| s.war).unwrap_or(0.0);
        v.push(war);
        v.push(if season.is_some() { 1.0 } else { 0.0 });
        if let Some(s) = season {
            agg_war += war;
            active += 1.0;
            match &s.stats {
                SeasonStats::Batting(c) => bat_total += c,
                SeasonStats::Pitching(c) => pit_total += c,
            }
        }
    }
    match kind {
        CohortKind::Batters => v.extend(counts_and_rates(Some(&SeasonStats::Batting(bat_total)), kind)),
        CohortKind::Pitchers => v.extend(counts_and_rates(Some(&SeasonStats::Pitching(pit_total)), kind)),
    }
    v.push(agg_war);
    v.push(active);
    if kind == CohortKind::Pitchers {
        v.push(ratio(f64::from(pit_total.games_started), f64::from(pit_total.games)));
    }
    v.push(career.age_at_debut.map_or(0.0, f64::from));
    v.push(career.bio.height.unwrap_or(0.0));
    v.push(career.bio.weight.unwrap_or(0.0));
    let decade = (career.debut_year.div_euclid(10) * 10).clamp(DECADES[0], DECADES[DECADES.len() - 1]);
    v.extend(one_hot(&DECADES, &decade));
    match kind {
        CohortKind::Batters => {
            v.extend(one_hot(&Position::ALL, &career.bio.primary_position));
            v.extend(one_hot(&Bats::ALL, &career.bio.bats));
        }
        CohortKind::Pitchers => v.extend(one_hot(&Throws::ALL, &career.bio.throws)),
    }
    v
}

/// One row per career, in cohort order.
pub fn build_features(cohort: &Cohort) -> FeatureMatrix {
    FeatureMatrix {
        feature_names: feature_names(cohort.kind),
        player_ids: cohort.ids(),
        rows: cohort.careers.iter().map(career_features).collect(),
    }
}

/// What a target season without a recorded WAR is worth.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum MissingWarPolicy {
    #[default]
    Zero,
    PenaltyHalf,
    PenaltyOne,
}

impl MissingWarPolicy {
    pub fn value(self) -> f64 {
        match self {
            MissingWarPolicy::Zero => 0.0,
            MissingWarPolicy::PenaltyHalf => -0.5,
            MissingWarPolicy::PenaltyOne => -1.0,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "zero" | "0" => Some(MissingWarPolicy::Zero),
            "-0.5" => Some(MissingWarPolicy::PenaltyHalf),
            "-1" | "-1.0" => Some(MissingWarPolicy::PenaltyOne),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MissingWarPolicy::Zero => "zero",
            MissingWarPolicy::PenaltyHalf => "-0.5",
            MissingWarPolicy::PenaltyOne => "-1",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetVector {
    pub target_year: u32,
    pub policy: MissingWarPolicy,
    pub player_ids: Vec<String>,
    pub values: Vec<f64>,
}

impl TargetVector {
    pub fn select_players(&self, ids: &[String]) -> Result<TargetVector> {
        let lookup: std::collections::HashMap<&str, f64> = self
            .player_ids
            .iter()
            .map(String::as_str)
            .zip(self.values.iter().copied())
            .collect();
        let values = ids
            .iter()
            .map(|id| {
                lookup
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::NameMismatch(format!("no target for player `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TargetVector {
            target_year: self.target_year,
            policy: self.policy,
            player_ids: ids.to_vec(),
            values,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::write(path, e))?);
        let mut go = || -> std::io::Result<()> {
            writeln!(f, "player_id,war")?;
            for (id, v) in self.player_ids.iter().zip(&self.values) {
                writeln!(f, "{id},{v}")?;
            }
            f.flush()
        };
        go().map_err(|e| Error::write(path, e))
    }
}

fn check_target_year(target_year: u32) -> Result<()> {
    if !(FIRST_TARGET_SEASON..=LAST_TARGET_SEASON).contains(&target_year) {
        return Err(Error::InvalidArgument(format!(
            "target year {target_year} is outside {FIRST_TARGET_SEASON}..={LAST_TARGET_SEASON}"
        )));
    }
    Ok(())
}

/// WAR at season index `target_year` for every career, substituting the
/// policy value when no WAR is recorded.
pub fn build_targets(cohort: &Cohort, target_year: u32, policy: MissingWarPolicy) -> Result<TargetVector> {
    check_target_year(target_year)?;
    Ok(TargetVector {
        target_year,
        policy,
        player_ids: cohort.ids(),
        values: cohort
            .careers
            .iter()
            .map(|c| c.war(target_year).unwrap_or(policy.value()))
            .collect(),
    })
}

/// Per-feature training minimum and maximum. One-hot columns are recorded but
/// left untouched by [`apply_scaler`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalerParams {
    pub feature_names: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_scaler(train: &FeatureMatrix) -> Result<ScalerParams> {
    let Some(first) = train.rows.first() else {
        return Err(Error::InvalidArgument(
            "cannot fit a scaler on zero training rows".into(),
        ));
    };
    let mut min = first.clone();
    let mut max = first.clone();
    for row in &train.rows[1..] {
        for (j, &v) in row.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    Ok(ScalerParams {
        feature_names: train.feature_names.clone(),
        min,
        max,
    })
}

impl ScalerParams {
    fn check(&self, m: &FeatureMatrix) -> Result<()> {
        if m.feature_names != self.feature_names {
            return Err(Error::NameMismatch(
                "feature columns differ from the ones the scaler was fitted on".into(),
            ));
        }
        Ok(())
    }

    fn map(&self, m: &FeatureMatrix, f: impl Fn(f64, f64, f64) -> f64) -> Result<FeatureMatrix> {
        self.check(m)?;
        let skip: Vec<bool> = self.feature_names.iter().map(|n| is_one_hot(n)).collect();
        let rows = m
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, &x)| if skip[j] { x } else { f(x, self.min[j], self.max[j]) })
                    .collect()
            })
            .collect();
        Ok(FeatureMatrix {
            feature_names: m.feature_names.clone(),
            player_ids: m.player_ids.clone(),
            rows,
        })
    }

    /// Maps scaled values back to the original units. Constant columns come
    /// back as their single training value.
    pub fn invert(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        self.map(m, |z, lo, hi| if hi > lo { lo + z * (hi - lo) } else { lo })
    }
}

/// `(x - min) / (max - min)`, unclipped; constant columns become 0.
pub fn apply_scaler(params: &ScalerParams, m: &FeatureMatrix) -> Result<FeatureMatrix> {
    params.map(m, |x, lo, hi| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 })
}

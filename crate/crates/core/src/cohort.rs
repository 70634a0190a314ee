//! Inclusion rules that turn the merged dataset into batter and pitcher
//! cohorts of season-indexed careers.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use crate::ingest::{BattingCounts, Dataset, PitchingCounts, PlayerBio};

/// Last season index that counts as source data; later indices are outcomes.
pub const BOUNDARY_SEASON: u32 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CohortKind {
    Batters,
    Pitchers,
}

impl CohortKind {
    pub const ALL: [CohortKind; 2] = [CohortKind::Batters, CohortKind::Pitchers];

    pub fn as_str(self) -> &'static str {
        match self {
            CohortKind::Batters => "batters",
            CohortKind::Pitchers => "pitchers",
        }
    }

    pub fn parse(s: &str) -> Option<CohortKind> {
        match s {
            "batters" => Some(CohortKind::Batters),
            "pitchers" => Some(CohortKind::Pitchers),
            _ => None,
        }
    }
}

impl fmt::Display for CohortKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SeasonStats {
    Batting(BattingCounts),
    Pitching(PitchingCounts),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeasonRecord {
    pub year: i32,
    pub stats: SeasonStats,
    pub war: Option<f64>,
}

impl SeasonRecord {
    /// At least one at-bat for a batting season, one game for a pitching one.
    pub fn is_active(&self) -> bool {
        match &self.stats {
            SeasonStats::Batting(c) => c.at_bats > 0,
            SeasonStats::Pitching(c) => c.games > 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Career {
    pub player_id: String,
    pub kind: CohortKind,
    pub debut_year: i32,
    /// `None` flags an unknown birth year; such careers never enter a cohort.
    pub age_at_debut: Option<i32>,
    pub bio: PlayerBio,
    /// Keyed by season index: `year - debut_year + 1`. Gap years are absent.
    pub seasons: BTreeMap<u32, SeasonRecord>,
}

impl Career {
    pub fn season(&self, index: u32) -> Option<&SeasonRecord> {
        self.seasons.get(&index)
    }

    /// Recorded WAR at a season index, if any.
    pub fn war(&self, index: u32) -> Option<f64> {
        self.seasons.get(&index).and_then(|s| s.war)
    }

    pub fn birth_year(&self) -> Option<i32> {
        self.bio.birth_year
    }

    /// Age (by birth year) during a season index.
    pub fn age_at(&self, index: u32) -> Option<i32> {
        self.age_at_debut.map(|a| a + index as i32 - 1)
    }

    pub fn year_of(&self, index: u32) -> i32 {
        self.debut_year + index as i32 - 1
    }
}

/// Builds a career from one player's season rows. Rows are keyed by calendar
/// offset from debut; the debut year is the earlier of the bio's debut and the
/// first row.
pub fn index_seasons(rows: Vec<SeasonRecord>, bio: &PlayerBio, kind: CohortKind) -> Career {
    let debut_year = rows
        .iter()
        .map(|r| r.year)
        .min()
        .map_or(bio.debut_year, |y| y.min(bio.debut_year));
    let seasons = rows
        .into_iter()
        .map(|r| ((r.year - debut_year + 1) as u32, r))
        .collect();
    Career {
        player_id: bio.player_id.clone(),
        kind,
        debut_year,
        age_at_debut: bio.birth_year.map(|b| debut_year - b),
        bio: bio.clone(),
        seasons,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CohortOptions {
    pub cutoff_year: i32,
    pub min_span: u32,
}

impl Default for CohortOptions {
    fn default() -> Self {
        CohortOptions {
            cutoff_year: 1970,
            min_span: 7,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExclusionRule {
    ShortSpan,
    NoEarlyActivity,
    NoLateActivity,
    QualifiesAsPitcher,
    UnknownBirthYear,
}

impl ExclusionRule {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionRule::ShortSpan => "short_span",
            ExclusionRule::NoEarlyActivity => "no_activity_in_seasons_1_6",
            ExclusionRule::NoLateActivity => "no_activity_after_season_6",
            ExclusionRule::QualifiesAsPitcher => "qualifies_as_pitcher",
            ExclusionRule::UnknownBirthYear => "unknown_birth_year",
        }
    }
}

/// Per-rule exclusion counts over contemporary players (debut at or after the
/// cutoff). Each excluded player is charged to the first rule it fails.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CohortDiagnostics {
    pub pre_cutoff: usize,
    pub contemporary: usize,
    pub included: usize,
    pub excluded: BTreeMap<ExclusionRule, usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cohort {
    pub kind: CohortKind,
    /// Sorted by player id.
    pub careers: Vec<Career>,
    pub diagnostics: CohortDiagnostics,
}

impl Cohort {
    pub fn ids(&self) -> Vec<String> {
        self.careers.iter().map(|c| c.player_id.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.careers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.careers.is_empty()
    }
}

struct PlayerRows {
    seasons: Vec<SeasonRecord>,
    last_year: i32,
}

fn batting_rows(ds: &Dataset) -> BTreeMap<&str, Vec<SeasonRecord>> {
    let mut out: BTreeMap<&str, Vec<SeasonRecord>> = BTreeMap::new();
    for r in &ds.batting {
        out.entry(r.player_id.as_str()).or_default().push(SeasonRecord {
            year: r.year,
            stats: SeasonStats::Batting(r.counts),
            war: r.war,
        });
    }
    out
}

fn pitching_rows(ds: &Dataset) -> BTreeMap<&str, Vec<SeasonRecord>> {
    let mut out: BTreeMap<&str, Vec<SeasonRecord>> = BTreeMap::new();
    for r in &ds.pitching {
        out.entry(r.player_id.as_str()).or_default().push(SeasonRecord {
            year: r.year,
            stats: SeasonStats::Pitching(r.counts),
            war: r.war,
        });
    }
    out
}

/// Last active year across batting and pitching tables, for career span.
fn last_years(ds: &Dataset) -> HashMap<&str, i32> {
    let mut out: HashMap<&str, i32> = HashMap::new();
    let rows = ds
        .batting
        .iter()
        .map(|r| (r.player_id.as_str(), r.year))
        .chain(ds.pitching.iter().map(|r| (r.player_id.as_str(), r.year)));
    for (id, y) in rows {
        let e = out.entry(id).or_insert(y);
        *e = (*e).max(y);
    }
    out
}

fn evaluate(
    ds: &Dataset,
    kind: CohortKind,
    rows: BTreeMap<&str, Vec<SeasonRecord>>,
    opts: &CohortOptions,
    exclude: &HashSet<String>,
) -> Cohort {
    let last = last_years(ds);
    let mut diagnostics = CohortDiagnostics::default();
    let mut careers = Vec::new();
    for (id, seasons) in rows {
        let Some(bio) = ds.bio(id) else { continue };
        if bio.debut_year < opts.cutoff_year {
            diagnostics.pre_cutoff += 1;
            continue;
        }
        diagnostics.contemporary += 1;
        let player = PlayerRows {
            last_year: last.get(id).copied().unwrap_or(bio.debut_year),
            seasons,
        };
        match qualify(player, bio, kind, opts, exclude) {
            Ok(career) => careers.push(career),
            Err(rule) => *diagnostics.excluded.entry(rule).or_default() += 1,
        }
    }
    diagnostics.included = careers.len();
    Cohort {
        kind,
        careers,
        diagnostics,
    }
}

fn qualify(
    player: PlayerRows,
    bio: &PlayerBio,
    kind: CohortKind,
    opts: &CohortOptions,
    exclude: &HashSet<String>,
) -> Result<Career, ExclusionRule> {
    let active: Vec<SeasonRecord> = player.seasons.into_iter().filter(SeasonRecord::is_active).collect();
    let career = index_seasons(active, bio, kind);
    let span = player.last_year - career.debut_year + 1;
    if span < opts.min_span as i32 {
        return Err(ExclusionRule::ShortSpan);
    }
    if !career.seasons.keys().any(|&i| i <= BOUNDARY_SEASON) {
        return Err(ExclusionRule::NoEarlyActivity);
    }
    if !career.seasons.keys().any(|&i| i > BOUNDARY_SEASON) {
        return Err(ExclusionRule::NoLateActivity);
    }
    if exclude.contains(&career.player_id) {
        return Err(ExclusionRule::QualifiesAsPitcher);
    }
    if career.age_at_debut.is_none() {
        return Err(ExclusionRule::UnknownBirthYear);
    }
    Ok(career)
}

/// Pitchers who debuted at or after the cutoff, spanned at least `min_span`
/// years, and appeared in a game both in seasons 1-6 and after season 6.
pub fn build_pitching_cohort(ds: &Dataset, opts: &CohortOptions) -> Cohort {
    evaluate(ds, CohortKind::Pitchers, pitching_rows(ds), opts, &HashSet::new())
}

/// Batters under the same cutoff and span rules, counting only seasons with
/// at least one at-bat, and excluding anyone who qualifies as a pitcher.
pub fn build_batting_cohort(ds: &Dataset, opts: &CohortOptions) -> Cohort {
    let pitchers: HashSet<String> = build_pitching_cohort(ds, opts)
        .careers
        .into_iter()
        .map(|c| c.player_id)
        .collect();
    evaluate(ds, CohortKind::Batters, batting_rows(ds), opts, &pitchers)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CohortReport {
    pub kind: CohortKind,
    pub contemporary_players: usize,
    pub included_players: usize,
    pub percent_included: f64,
    /// At-bats for batters, outs recorded for pitchers; in thousands.
    pub volume_contemporary: f64,
    pub volume_included: f64,
    pub volume_percent: f64,
}

fn percent(part: f64, whole: f64) -> f64 {
    if whole > 0.0 {
        100.0 * part / whole
    } else {
        0.0
    }
}

/// Players and playing-time volume, contemporary versus included.
pub fn cohort_report(cohort: &Cohort, ds: &Dataset, opts: &CohortOptions) -> CohortReport {
    let included: HashSet<&str> = cohort.careers.iter().map(|c| c.player_id.as_str()).collect();
    let contemporary = |id: &str| ds.bio(id).is_some_and(|b| b.debut_year >= opts.cutoff_year);
    let rows: Vec<(&str, u32)> = match cohort.kind {
        CohortKind::Batters => ds
            .batting
            .iter()
            .map(|r| (r.player_id.as_str(), r.counts.at_bats))
            .collect(),
        CohortKind::Pitchers => ds
            .pitching
            .iter()
            .map(|r| (r.player_id.as_str(), r.counts.ipouts))
            .collect(),
    };
    let mut players: HashSet<&str> = HashSet::new();
    let (mut vol_all, mut vol_in) = (0u64, 0u64);
    for (id, volume) in rows {
        if !contemporary(id) {
            continue;
        }
        players.insert(id);
        vol_all += u64::from(volume);
        if included.contains(id) {
            vol_in += u64::from(volume);
        }
    }
    let n_all = players.len();
    let n_in = cohort.careers.len();
    CohortReport {
        kind: cohort.kind,
        contemporary_players: n_all,
        included_players: n_in,
        percent_included: percent(n_in as f64, n_all as f64),
        volume_contemporary: vol_all as f64 / 1000.0,
        volume_included: vol_in as f64 / 1000.0,
        volume_percent: percent(vol_in as f64, vol_all as f64),
    }
}

impl CohortReport {
    fn volume_label(&self) -> &'static str {
        match self.kind {
            CohortKind::Batters => "Total ABs (K)",
            CohortKind::Pitchers => "Total IPOUTs (K)",
        }
    }

    pub fn csv_header() -> &'static str {
        "cohort,row,contemporary,included,percent_included"
    }

    /// Two CSV rows (players, volume) without the header.
    pub fn csv_rows(&self) -> String {
        format!(
            "{},Unique Players,{},{},{:.1}\n{},{},{:.0},{:.0},{:.1}\n",
            self.kind,
            self.contemporary_players,
            self.included_players,
            self.percent_included,
            self.kind,
            self.volume_label(),
            self.volume_contemporary,
            self.volume_included,
            self.volume_percent
        )
    }

    pub fn pretty(&self) -> String {
        let title = match self.kind {
            CohortKind::Batters => "Batter cohort",
            CohortKind::Pitchers => "Pitcher cohort",
        };
        format!(
            "{title}\n{:<18}{:>14}{:>10}{:>18}\n{:<18}{:>14}{:>10}{:>18.1}\n{:<18}{:>14.0}{:>10.0}{:>18.1}\n",
            "",
            "Contemporary",
            "Included",
            "Percent Included",
            "Unique Players",
            self.contemporary_players,
            self.included_players,
            self.percent_included,
            self.volume_label(),
            self.volume_contemporary,
            self.volume_included,
            self.volume_percent
        )
    }
}

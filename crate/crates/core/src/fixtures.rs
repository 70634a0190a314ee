//! Seeded synthetic league in Lahman layout, with the true aging curve kept
//! alongside so end-to-end runs have something exact to compare against.
//!
//! Every player has a personal level, drawn uniformly, and follows
//! `true_war(age) = level - curvature * (age - peak_age)^2`. Reported WAR adds
//! Gaussian noise; counting stats are drawn from the noise-free value so they
//! carry the level without the noise.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::cohort::{CohortKind, BOUNDARY_SEASON};
use crate::error::{Error, Result};
use crate::ingest::{BattingCounts, DataPaths, PitchingCounts};
use crate::numerics::{seeded_stream, Stream};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_players: usize,
    pub peak_age: f64,
    pub curvature: f64,
    /// Standard deviation of the noise on reported WAR.
    pub noise_sd: f64,
    /// Chance of retiring before each season after season 6.
    pub retirement_hazard: f64,
    /// Share of players generated as pitchers.
    pub pitcher_fraction: f64,
    /// Player levels are uniform with this mean and standard deviation.
    pub level_mean: f64,
    pub level_sd: f64,
    /// Inclusive range of ages at debut.
    pub debut_age: (i32, i32),
    /// Inclusive range of debut years.
    pub debut_year: (i32, i32),
    /// Longest career, in seasons.
    pub max_seasons: u32,
    /// Chance a season is split across two teams.
    pub trade_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 1,
            n_players: 500,
            peak_age: 28.0,
            curvature: 0.03,
            noise_sd: 0.3,
            retirement_hazard: 0.0,
            pitcher_fraction: 0.4,
            level_mean: 2.5,
            level_sd: 1.5,
            debut_age: (21, 25),
            debut_year: (1975, 2000),
            max_seasons: 12,
            trade_rate: 0.05,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.n_players < 10 {
            return bad(format!("n_players must be >= 10 (got {})", self.n_players));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad(format!("noise_sd must be finite and >= 0 (got {})", self.noise_sd));
        }
        for (name, p) in [
            ("retirement_hazard", self.retirement_hazard),
            ("pitcher_fraction", self.pitcher_fraction),
            ("trade_rate", self.trade_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1] (got {p})"));
            }
        }
        if !(self.level_sd >= 0.0 && self.level_sd.is_finite()) || !self.level_mean.is_finite() {
            return bad("level_mean and level_sd must be finite, level_sd >= 0".into());
        }
        if !self.peak_age.is_finite() || !self.curvature.is_finite() {
            return bad("peak_age and curvature must be finite".into());
        }
        if self.debut_age.0 > self.debut_age.1 || self.debut_age.0 < 15 {
            return bad(format!(
                "debut_age range {:?} must be ordered and start at 15 or later",
                self.debut_age
            ));
        }
        if self.debut_year.0 > self.debut_year.1 {
            return bad(format!("debut_year range {:?} is empty", self.debut_year));
        }
        if self.max_seasons <= BOUNDARY_SEASON {
            return bad(format!("max_seasons must exceed {BOUNDARY_SEASON}"));
        }
        Ok(())
    }

    pub fn true_war(&self, level: f64, age: i32) -> f64 {
        level - self.curvature * (f64::from(age) - self.peak_age).powi(2)
    }

    /// Expected `WAR(age + 1) - WAR(age)`, the same for every player.
    pub fn true_delta(&self, age: i32) -> f64 {
        -self.curvature * (2.0 * (f64::from(age) - self.peak_age) + 1.0)
    }
}

/// One player-season of ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthRow {
    pub player_id: String,
    pub kind: CohortKind,
    pub season: u32,
    pub year: i32,
    pub age: i32,
    pub level: f64,
    pub true_war: f64,
    pub observed_war: f64,
}

/// Generated tables as CSV text, plus ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticLeague {
    pub batting: String,
    pub pitching: String,
    pub people: String,
    pub fielding: String,
    pub war_batting: String,
    pub war_pitching: String,
    pub truth: Vec<TruthRow>,
}

const TEAMS: [&str; 8] = ["BOS", "NYA", "CHN", "LAN", "SFN", "SLN", "ATL", "HOU"];
const FIELD_POSITIONS: [&str; 8] = ["C", "1B", "2B", "3B", "SS", "LF", "CF", "RF"];

fn count(v: f64) -> u32 {
    v.round().max(0.0) as u32
}

/// Batting line for a season at `war`, scaled by the share of the season
/// played. Better players bat more and hit better.
fn batting_counts(war: f64, share: f64) -> BattingCounts {
    let ab = count(share * (420.0 + 30.0 * war).clamp(150.0, 650.0)).max(1);
    let abf = f64::from(ab);
    let hits = count(abf * (0.235 + 0.009 * war).clamp(0.15, 0.34));
    let doubles = count(f64::from(hits) * 0.19);
    let triples = count(abf * 0.004).min(hits - doubles);
    let home_runs = count(abf * (0.018 + 0.005 * war).clamp(0.0, 0.07)).min(hits - doubles - triples);
    let walks = count(abf * (0.075 + 0.006 * war).clamp(0.02, 0.2));
    let stolen_bases = count(abf * 0.015);
    BattingCounts {
        games: count(abf / 4.0).clamp(1, 162),
        at_bats: ab,
        runs: count(f64::from(hits) * 0.45 + f64::from(home_runs) * 0.5 + f64::from(walks) * 0.25),
        hits,
        doubles,
        triples,
        home_runs,
        rbi: count(f64::from(hits) * 0.4 + f64::from(home_runs) * 0.9),
        stolen_bases,
        caught_stealing: count(f64::from(stolen_bases) * 0.35),
        walks,
        strikeouts: count(abf * (0.20 - 0.006 * war).clamp(0.08, 0.35)),
        hbp: count(abf * 0.01),
        sac_flies: count(abf * 0.008),
        gidp: count(abf * 0.018),
    }
}

/// Pitching line for a starter at `war`.
fn pitching_counts(war: f64, share: f64) -> PitchingCounts {
    let games_started = count(32.0 * share).max(1);
    let ipouts = count(share * (560.0 + 25.0 * war).clamp(250.0, 750.0)).max(1);
    let innings = f64::from(ipouts) / 3.0;
    let walks = count(innings * (0.38 - 0.02 * war).clamp(0.15, 0.6));
    let whip = (1.42 - 0.05 * war).clamp(0.85, 2.0);
    let hits = count(whip * innings - f64::from(walks));
    let complete_games = count(f64::from(games_started) * (0.02 + 0.02 * war).clamp(0.0, 0.3)).min(games_started);
    let gs = f64::from(games_started);
    PitchingCounts {
        wins: count(gs * (0.36 + 0.035 * war).clamp(0.1, 0.7)),
        losses: count(gs * (0.36 - 0.025 * war).clamp(0.1, 0.7)),
        games: games_started,
        games_started,
        complete_games,
        shutouts: count(f64::from(complete_games) * 0.3),
        saves: 0,
        ipouts,
        hits,
        earned_runs: count((4.9 - 0.33 * war).clamp(1.5, 8.0) * innings / 9.0),
        home_runs: count(innings * (0.12 - 0.006 * war).clamp(0.04, 0.2)),
        walks,
        strikeouts: count(innings * (0.72 + 0.05 * war).clamp(0.3, 1.4)),
        batters_faced: ipouts + hits + walks,
    }
}

fn join(values: Vec<u32>) -> String {
    values.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

/// Builds the league. Pitchers get pitching lines only; batters get batting
/// lines and a fielding row per season at one position.
pub fn generate_synthetic_league(cfg: &SynthConfig) -> Result<SyntheticLeague> {
    cfg.validate()?;
    let mut rng: Stream = seeded_stream(cfg.seed, "synth");
    let noise = Normal::new(0.0, cfg.noise_sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    // bounded levels: uniform with the configured mean and standard deviation
    let half_width = cfg.level_sd * 3f64.sqrt();

    let mut batting = String::from("playerID,yearID,stint,teamID,G,AB,R,H,2B,3B,HR,RBI,SB,CS,BB,SO,HBP,SF,GIDP\n");
    let mut pitching = String::from("playerID,yearID,stint,teamID,W,L,G,GS,CG,SHO,SV,IPouts,H,ER,HR,BB,SO,BFP\n");
    let mut people = String::from("playerID,birthYear,debut,bats,throws,height,weight\n");
    let mut fielding = String::from("playerID,yearID,POS,G\n");
    let mut war_batting = String::from("player_id,year,kind,war\n");
    let mut war_pitching = war_batting.clone();
    let mut truth = Vec::new();

    let n_pitchers = (cfg.n_players as f64 * cfg.pitcher_fraction).round() as usize;
    for i in 0..cfg.n_players {
        let kind = if i < n_pitchers {
            CohortKind::Pitchers
        } else {
            CohortKind::Batters
        };
        let id = match kind {
            CohortKind::Pitchers => format!("synp{i:05}"),
            CohortKind::Batters => format!("synb{i:05}"),
        };
        let debut_year = rng.random_range(cfg.debut_year.0..=cfg.debut_year.1);
        let debut_age = rng.random_range(cfg.debut_age.0..=cfg.debut_age.1);
        let level = cfg.level_mean + half_width * rng.random_range(-1.0..=1.0);
        let throws = if rng.random_bool(0.3) { "L" } else { "R" };
        let bats = ["R", "L", "B"][rng.random_range(0..3)];
        let height = rng.random_range(68..=78);
        let weight = rng.random_range(170..=240);
        let position = FIELD_POSITIONS[rng.random_range(0..FIELD_POSITIONS.len())];
        let mut team = TEAMS[rng.random_range(0..TEAMS.len())];
        let _ = writeln!(
            people,
            "{id},{},{debut_year}-04-0{},{bats},{throws},{height},{weight}",
            debut_year - debut_age,
            rng.random_range(1..=9)
        );

        for season in 1..=cfg.max_seasons {
            if season > BOUNDARY_SEASON && rng.random_bool(cfg.retirement_hazard) {
                break;
            }
            let year = debut_year + season as i32 - 1;
            let age = debut_age + season as i32 - 1;
            let true_war = cfg.true_war(level, age);
            let observed_war = true_war + noise.sample(&mut rng);
            let stints: Vec<(&str, f64)> = if rng.random_bool(cfg.trade_rate) {
                let share = rng.random_range(0.3..0.7);
                let next = TEAMS[rng.random_range(0..TEAMS.len())];
                let pair = vec![(team, share), (next, 1.0 - share)];
                team = next;
                pair
            } else {
                vec![(team, 1.0)]
            };
            for (s, (t, share)) in stints.iter().enumerate() {
                match kind {
                    CohortKind::Batters => {
                        let c = batting_counts(true_war, *share);
                        let _ = writeln!(batting, "{id},{year},{},{t},{}", s + 1, join(c.to_vec()));
                        let _ = writeln!(fielding, "{id},{year},{position},{}", c.games);
                    }
                    CohortKind::Pitchers => {
                        let c = pitching_counts(true_war, *share);
                        let _ = writeln!(pitching, "{id},{year},{},{t},{}", s + 1, join(c.to_vec()));
                        let _ = writeln!(fielding, "{id},{year},P,{}", c.games);
                    }
                }
            }
            match kind {
                CohortKind::Batters => {
                    let _ = writeln!(war_batting, "{id},{year},batting,{observed_war}");
                }
                CohortKind::Pitchers => {
                    let _ = writeln!(war_pitching, "{id},{year},pitching,{observed_war}");
                }
            }
            truth.push(TruthRow {
                player_id: id.clone(),
                kind,
                season,
                year,
                age,
                level,
                true_war,
                observed_war,
            });
        }
    }

    Ok(SyntheticLeague {
        batting,
        pitching,
        people,
        fielding,
        war_batting,
        war_pitching,
        truth,
    })
}

impl SyntheticLeague {
    pub fn truth_csv(&self) -> String {
        let mut s = String::from("player_id,kind,season,year,age,level,true_war,observed_war\n");
        for t in &self.truth {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                t.player_id, t.kind, t.season, t.year, t.age, t.level, t.true_war, t.observed_war
            );
        }
        s
    }

    /// Writes every table plus `truth.csv` into `dir` (created if needed) and
    /// returns the paths the loader expects.
    pub fn write_to(&self, dir: &Path) -> Result<DataPaths> {
        std::fs::create_dir_all(dir).map_err(|e| Error::write(dir, e))?;
        let put = |name: &str, body: &str| -> Result<std::path::PathBuf> {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::write(&p, e))?;
            Ok(p)
        };
        put("truth.csv", &self.truth_csv())?;
        Ok(DataPaths {
            batting: put("Batting.csv", &self.batting)?,
            pitching: put("Pitching.csv", &self.pitching)?,
            people: put("People.csv", &self.people)?,
            fielding: vec![put("Fielding.csv", &self.fielding)?],
            war: vec![
                put("war_batting.csv", &self.war_batting)?,
                put("war_pitching.csv", &self.war_pitching)?,
            ],
        })
    }
}

use std::collections::{BTreeMap, HashMap};

use super::types::*;

/// Sums same-(player, year) stints into one season row. The merged row keeps
/// the team of its highest-numbered stint; rate statistics are never stored
/// here, so nothing needs re-weighting. Already merged data passes through
/// unchanged.
pub fn merge_stints(mut dataset: Dataset) -> Dataset {
    dataset.batting = merge_rows(std::mem::take(&mut dataset.batting));
    dataset.pitching = merge_rows(std::mem::take(&mut dataset.pitching));
    dataset
}

trait StintLine: Clone {
    fn player_year(&self) -> (&str, i32);
    fn stint_no(&self) -> Option<u32>;
    fn add_counts(&mut self, other: &Self);
    fn parts(&mut self) -> (&mut String, &mut Option<f64>, &mut Option<u32>);
}

macro_rules! stint_line {
    ($t:ty) => {
        impl StintLine for $t {
            fn player_year(&self) -> (&str, i32) {
                (&self.player_id, self.year)
            }
            fn stint_no(&self) -> Option<u32> {
                self.stint
            }
            fn add_counts(&mut self, other: &Self) {
                self.counts += &other.counts;
            }
            fn parts(&mut self) -> (&mut String, &mut Option<f64>, &mut Option<u32>) {
                (&mut self.team, &mut self.war, &mut self.stint)
            }
        }
    };
}

stint_line!(BattingRow);
stint_line!(PitchingRow);

fn merge_rows<R: StintLine>(rows: Vec<R>) -> Vec<R> {
    let mut groups: BTreeMap<(String, i32), Vec<R>> = BTreeMap::new();
    for r in rows {
        let (id, year) = r.player_year();
        groups.entry((id.to_string(), year)).or_default().push(r);
    }
    groups
        .into_values()
        .map(|mut group| {
            group.sort_by_key(|r| r.stint_no());
            let first_war = group.iter_mut().find_map(|r| *r.parts().1);
            let last_team = group.last_mut().map(|r| r.parts().0.clone()).unwrap_or_default();
            let mut merged = group[0].clone();
            for r in &group[1..] {
                merged.add_counts(r);
            }
            let (team, war, stint) = merged.parts();
            *team = last_team;
            *war = first_war;
            *stint = None;
            merged
        })
        .collect()
}

/// Attaches each season's WAR from the record of the matching kind. Seasons
/// without a record keep `war = None`; WAR records for players missing from
/// the people table are moved to the rejects report.
pub fn attach_war(mut dataset: Dataset) -> Dataset {
    let mut table: HashMap<(&str, i32, WarKind), f64> = HashMap::with_capacity(dataset.wars.len());
    for w in &dataset.wars {
        if dataset.bio(&w.player_id).is_none() {
            dataset.rejects.push(Reject {
                file: w.origin.file.clone(),
                line: w.origin.line,
                reason: format!("WAR record for unknown player_id {}", w.player_id),
            });
            continue;
        }
        table.insert((w.player_id.as_str(), w.year, w.kind), w.war);
    }
    let bat: Vec<Option<f64>> = dataset
        .batting
        .iter()
        .map(|r| table.get(&(r.player_id.as_str(), r.year, WarKind::Batting)).copied())
        .collect();
    let pit: Vec<Option<f64>> = dataset
        .pitching
        .iter()
        .map(|r| table.get(&(r.player_id.as_str(), r.year, WarKind::Pitching)).copied())
        .collect();
    for (r, w) in dataset.batting.iter_mut().zip(bat) {
        r.war = w;
    }
    for (r, w) in dataset.pitching.iter_mut().zip(pit) {
        r.war = w;
    }
    dataset
}

/// Position with the most career games for `player_id`, with ties going to
/// the harder position on the defensive spectrum.
pub fn derive_primary_position(rows: &[FieldingRow], player_id: &str) -> Position {
    primary_position_of(rows.iter().filter(|r| r.player_id == player_id))
}

/// Generic `OF` rows only count when the player has no LF/CF/RF detail; they
/// are then credited to CF.
pub(crate) fn primary_position_of<'a>(rows: impl Iterator<Item = &'a FieldingRow>) -> Position {
    let mut games: BTreeMap<Position, u64> = BTreeMap::new();
    let mut generic_of = 0u64;
    for r in rows {
        match Position::parse(&r.position) {
            Some(p) => *games.entry(p).or_default() += u64::from(r.games),
            None if r.position.trim() == "OF" => generic_of += u64::from(r.games),
            None => {}
        }
    }
    let has_of_split = [Position::LF, Position::CF, Position::RF]
        .iter()
        .any(|p| games.contains_key(p));
    if generic_of > 0 && !has_of_split {
        *games.entry(Position::CF).or_default() += generic_of;
    }
    games
        .into_iter()
        .max_by(|(pa, ga), (pb, gb)| ga.cmp(gb).then_with(|| pb.spectrum_rank().cmp(&pa.spectrum_rank())))
        .map_or(Position::Unknown, |(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(pos: &str, games: u32) -> FieldingRow {
        FieldingRow {
            player_id: "p1".into(),
            year: 2000,
            position: pos.into(),
            games,
        }
    }

    fn bat(id: &str, year: i32, stint: u32, team: &str, ab: u32) -> BattingRow {
        BattingRow {
            player_id: id.into(),
            year,
            stint: Some(stint),
            team: team.into(),
            counts: BattingCounts {
                games: 10,
                at_bats: ab,
                hits: ab / 4,
                home_runs: 1,
                ..Default::default()
            },
            war: None,
        }
    }

    #[test]
    fn majority_position_wins() {
        let rows = [field("SS", 400), field("2B", 100)];
        assert_eq!(derive_primary_position(&rows, "p1"), Position::SS);
    }

    #[test]
    fn tie_goes_to_harder_position() {
        let rows = [field("LF", 200), field("RF", 200)];
        assert_eq!(derive_primary_position(&rows, "p1"), Position::RF);
        let rows = [field("1B", 50), field("C", 50)];
        assert_eq!(derive_primary_position(&rows, "p1"), Position::C);
    }

    #[test]
    fn no_rows_is_unknown() {
        assert_eq!(derive_primary_position(&[], "p1"), Position::Unknown);
        assert_eq!(derive_primary_position(&[field("SS", 3)], "p2"), Position::Unknown);
    }

    #[test]
    fn generic_outfield_yields_to_split_rows() {
        assert_eq!(
            derive_primary_position(&[field("OF", 300), field("1B", 20)], "p1"),
            Position::CF
        );
        let rows = [field("OF", 300), field("LF", 150), field("1B", 200)];
        assert_eq!(derive_primary_position(&rows, "p1"), Position::FirstBase);
    }

    #[test]
    fn three_stint_example() {
        let ds = Dataset {
            batting: vec![
                bat("p1", 2015, 1, "AAA", 100),
                bat("p1", 2015, 2, "BBB", 50),
                bat("p1", 2016, 1, "BBB", 300),
            ],
            ..Default::default()
        };
        let merged = merge_stints(ds);
        assert_eq!(merged.batting.len(), 2);
        let y15 = &merged.batting[0];
        assert_eq!((y15.year, y15.stint, y15.team.as_str()), (2015, None, "BBB"));
        assert_eq!(y15.counts.at_bats, 150);
        assert_eq!(y15.counts.games, 20);
        assert_eq!(y15.counts.home_runs, 2);
        assert_eq!(merged.batting[1].counts.at_bats, 300);
    }

    #[test]
    fn single_stint_is_identity_apart_from_stint_marker() {
        let row = bat("p9", 1999, 1, "XYZ", 77);
        let merged = merge_stints(Dataset {
            batting: vec![row.clone()],
            ..Default::default()
        });
        let mut expected = row;
        expected.stint = None;
        assert_eq!(merged.batting, vec![expected]);
    }
}

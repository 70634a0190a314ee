use std::collections::BTreeMap;
use std::path::Path;

use super::types::{BattingCounts, PitchingCounts};
use crate::error::{Error, Result};
use crate::kv;

/// Maps internal field keys (`batting.at_bats`) to source column headers
/// (`AB`). Defaults follow the Lahman database; a column-map file overrides
/// individual entries so other exports can be read without code changes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnMap {
    entries: BTreeMap<String, String>,
}

const BATTING_COUNT_COLUMNS: [&str; 15] = [
    "G", "AB", "R", "H", "2B", "3B", "HR", "RBI", "SB", "CS", "BB", "SO", "HBP", "SF", "GIDP",
];

const PITCHING_COUNT_COLUMNS: [&str; 14] = [
    "W", "L", "G", "GS", "CG", "SHO", "SV", "IPouts", "H", "ER", "HR", "BB", "SO", "BFP",
];

/// Keys whose column may be absent from the file entirely.
const OPTIONAL: [&str; 7] = [
    "batting.team",
    "pitching.team",
    "people.debut",
    "people.bats",
    "people.throws",
    "people.height",
    "people.weight",
];

impl ColumnMap {
    pub fn lahman() -> Self {
        let mut e = BTreeMap::new();
        let mut put = |k: &str, v: &str| {
            e.insert(k.to_string(), v.to_string());
        };
        for table in ["batting", "pitching"] {
            put(&format!("{table}.player_id"), "playerID");
            put(&format!("{table}.year"), "yearID");
            put(&format!("{table}.stint"), "stint");
            put(&format!("{table}.team"), "teamID");
        }
        for (f, c) in BattingCounts::FIELDS.iter().zip(BATTING_COUNT_COLUMNS) {
            put(&format!("batting.{f}"), c);
        }
        for (f, c) in PitchingCounts::FIELDS.iter().zip(PITCHING_COUNT_COLUMNS) {
            put(&format!("pitching.{f}"), c);
        }
        put("people.player_id", "playerID");
        put("people.birth_year", "birthYear");
        put("people.debut", "debut");
        put("people.bats", "bats");
        put("people.throws", "throws");
        put("people.height", "height");
        put("people.weight", "weight");
        put("fielding.player_id", "playerID");
        put("fielding.year", "yearID");
        put("fielding.position", "POS");
        put("fielding.games", "G");
        put("war.player_id", "player_id");
        put("war.year", "year");
        put("war.kind", "kind");
        put("war.war", "war");
        ColumnMap { entries: e }
    }

    /// Lahman defaults overridden by the entries in `path`.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::lahman().with_overrides(&text)
    }

    pub fn with_overrides(mut self, text: &str) -> Result<Self> {
        for entry in kv::parse(text)? {
            match self.entries.get_mut(&entry.key) {
                Some(slot) => *slot = entry.value,
                None => {
                    return Err(Error::Config(format!(
                        "line {}: unknown column key `{}`",
                        entry.line, entry.key
                    )))
                }
            }
        }
        Ok(self)
    }

    pub fn column(&self, key: &str) -> &str {
        self.entries
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("no column key `{key}`"))
    }

    pub fn is_optional(key: &str) -> bool {
        OPTIONAL.contains(&key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Renders the map in the key-value file format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self::lahman()
    }
}

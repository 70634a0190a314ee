use std::fmt;
use std::ops::AddAssign;

macro_rules! counting_stats {
    ($(#[$meta:meta])* $name:ident { $($field:ident),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
        pub struct $name {
            $(pub $field: u32,)+
        }

        impl $name {
            /// Field names in declaration order; also the column-map keys.
            pub const FIELDS: &'static [&'static str] = &[$(stringify!($field)),+];

            pub fn to_vec(&self) -> Vec<u32> {
                vec![$(self.$field),+]
            }

            pub fn from_slice(values: &[u32]) -> Self {
                let mut it = values.iter().copied();
                $name { $($field: it.next().unwrap_or(0),)+ }
            }
        }

        impl AddAssign<&$name> for $name {
            fn add_assign(&mut self, rhs: &$name) {
                $(self.$field += rhs.$field;)+
            }
        }
    };
}

counting_stats! {
    /// Batting counting statistics for one stint or merged season.
    BattingCounts {
        games, at_bats, runs, hits, doubles, triples, home_runs, rbi,
        stolen_bases, caught_stealing, walks, strikeouts, hbp, sac_flies, gidp,
    }
}

counting_stats! {
    /// Pitching counting statistics for one stint or merged season.
    PitchingCounts {
        wins, losses, games, games_started, complete_games, shutouts, saves,
        ipouts, hits, earned_runs, home_runs, walks, strikeouts, batters_faced,
    }
}

impl BattingCounts {
    pub(crate) fn violation(&self) -> Option<&'static str> {
        if self.hits > self.at_bats {
            Some("hits exceed at_bats")
        } else if self.doubles + self.triples + self.home_runs > self.hits {
            Some("extra-base hits exceed hits")
        } else {
            None
        }
    }
}

impl PitchingCounts {
    pub(crate) fn violation(&self) -> Option<&'static str> {
        if self.complete_games > self.games_started {
            Some("complete_games exceed games_started")
        } else if self.games_started > self.games {
            Some("games_started exceed games")
        } else {
            None
        }
    }
}

/// One batting line. Straight from the loader this is a stint
/// (`stint = Some(n)`); after [`merge_stints`](super::merge_stints) it is a
/// full season with `stint = None`.
#[derive(Clone, Debug, PartialEq)]
pub struct BattingRow {
    pub player_id: String,
    pub year: i32,
    pub stint: Option<u32>,
    pub team: String,
    pub counts: BattingCounts,
    /// `None` until WAR is attached, and for seasons without a WAR record.
    pub war: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PitchingRow {
    pub player_id: String,
    pub year: i32,
    pub stint: Option<u32>,
    pub team: String,
    pub counts: PitchingCounts,
    pub war: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bats {
    Right,
    Left,
    Switch,
    Unknown,
}

impl Bats {
    pub const ALL: [Bats; 4] = [Bats::Right, Bats::Left, Bats::Switch, Bats::Unknown];

    pub fn parse(code: &str) -> Bats {
        match code.trim() {
            "R" => Bats::Right,
            "L" => Bats::Left,
            "B" | "S" => Bats::Switch,
            _ => Bats::Unknown,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Bats::Right => "R",
            Bats::Left => "L",
            Bats::Switch => "S",
            Bats::Unknown => "unknown",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Throws {
    Right,
    Left,
    Unknown,
}

impl Throws {
    pub const ALL: [Throws; 3] = [Throws::Right, Throws::Left, Throws::Unknown];

    pub fn parse(code: &str) -> Throws {
        match code.trim() {
            "R" => Throws::Right,
            "L" => Throws::Left,
            _ => Throws::Unknown,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Throws::Right => "R",
            Throws::Left => "L",
            Throws::Unknown => "unknown",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Position {
    P,
    C,
    FirstBase,
    SecondBase,
    ThirdBase,
    SS,
    LF,
    CF,
    RF,
    DH,
    Unknown,
}

impl Position {
    pub const ALL: [Position; 11] = [
        Position::P,
        Position::C,
        Position::FirstBase,
        Position::SecondBase,
        Position::ThirdBase,
        Position::SS,
        Position::LF,
        Position::CF,
        Position::RF,
        Position::DH,
        Position::Unknown,
    ];

    /// Defensive spectrum, hardest first. Breaks ties in games played.
    pub const SPECTRUM: [Position; 10] = [
        Position::P,
        Position::C,
        Position::SS,
        Position::SecondBase,
        Position::CF,
        Position::ThirdBase,
        Position::RF,
        Position::LF,
        Position::FirstBase,
        Position::DH,
    ];

    pub fn parse(code: &str) -> Option<Position> {
        Some(match code.trim() {
            "P" => Position::P,
            "C" => Position::C,
            "1B" => Position::FirstBase,
            "2B" => Position::SecondBase,
            "3B" => Position::ThirdBase,
            "SS" => Position::SS,
            "LF" => Position::LF,
            "CF" => Position::CF,
            "RF" => Position::RF,
            "DH" => Position::DH,
            _ => return None,
        })
    }

    pub fn code(self) -> &'static str {
        match self {
            Position::P => "P",
            Position::C => "C",
            Position::FirstBase => "1B",
            Position::SecondBase => "2B",
            Position::ThirdBase => "3B",
            Position::SS => "SS",
            Position::LF => "LF",
            Position::CF => "CF",
            Position::RF => "RF",
            Position::DH => "DH",
            Position::Unknown => "unknown",
        }
    }

    pub(crate) fn spectrum_rank(self) -> usize {
        Self::SPECTRUM
            .iter()
            .position(|p| *p == self)
            .unwrap_or(Self::SPECTRUM.len())
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlayerBio {
    pub player_id: String,
    /// `None` when the source is blank or inconsistent with the debut year.
    pub birth_year: Option<i32>,
    pub debut_year: i32,
    pub bats: Bats,
    pub throws: Throws,
    pub height: Option<f64>,
    pub weight: Option<f64>,
    pub primary_position: Position,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WarKind {
    Batting,
    Pitching,
}

impl WarKind {
    pub fn parse(s: &str) -> Option<WarKind> {
        match s.trim().to_ascii_lowercase().as_str() {
            "batting" => Some(WarKind::Batting),
            "pitching" => Some(WarKind::Pitching),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WarKind::Batting => "batting",
            WarKind::Pitching => "pitching",
        }
    }
}

/// Where a parsed record came from, for reject diagnostics.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Origin {
    pub file: String,
    pub line: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WarRecord {
    pub player_id: String,
    pub year: i32,
    pub kind: WarKind,
    pub war: f64,
    pub origin: Origin,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldingRow {
    pub player_id: String,
    pub year: i32,
    /// Raw position code; `OF` is kept as-is and resolved during derivation.
    pub position: String,
    pub games: u32,
}

/// A row that could not be used, reported as `(file, line, reason)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Reject {
    pub file: String,
    pub line: u64,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub batting: Vec<BattingRow>,
    pub pitching: Vec<PitchingRow>,
    /// Sorted by `player_id`.
    pub bios: Vec<PlayerBio>,
    pub wars: Vec<WarRecord>,
    pub rejects: Vec<Reject>,
}

impl Dataset {
    pub fn bio(&self, player_id: &str) -> Option<&PlayerBio> {
        self.bios
            .binary_search_by(|b| b.player_id.as_str().cmp(player_id))
            .ok()
            .map(|i| &self.bios[i])
    }
}

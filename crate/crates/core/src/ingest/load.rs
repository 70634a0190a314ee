use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use super::columns::ColumnMap;
use super::merge::primary_position_of;
use super::types::*;
use crate::error::{Error, Result};

/// Locations of the raw tables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DataPaths {
    pub batting: PathBuf,
    pub pitching: PathBuf,
    pub people: PathBuf,
    /// Fielding tables; a Lahman `FieldingOFsplit` file may be listed next to
    /// `Fielding` so outfielders resolve to LF/CF/RF.
    pub fielding: Vec<PathBuf>,
    pub war: Vec<PathBuf>,
}

struct Table {
    file: String,
    reader: csv::Reader<File>,
    index: HashMap<String, Option<usize>>,
    width: usize,
}

struct Row<'a> {
    rec: &'a csv::StringRecord,
    index: &'a HashMap<String, Option<usize>>,
}

impl Row<'_> {
    fn raw(&self, key: &str) -> &str {
        match self.index.get(key).copied().flatten() {
            Some(i) => self.rec.get(i).unwrap_or(""),
            None => "",
        }
    }

    fn text(&self, key: &str) -> std::result::Result<String, String> {
        let v = self.raw(key);
        if v.is_empty() {
            Err(format!("{key} is blank"))
        } else {
            Ok(v.to_string())
        }
    }

    fn int(&self, key: &str) -> std::result::Result<i32, String> {
        let v = self.raw(key);
        v.parse::<i32>()
            .map_err(|_| format!("{key}: cannot parse {v:?} as an integer"))
    }

    fn opt_int(&self, key: &str) -> std::result::Result<Option<i32>, String> {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.int(key).map(Some)
        }
    }

    // blank counts are zero
    fn count(&self, key: &str) -> std::result::Result<u32, String> {
        let v = self.raw(key);
        if v.is_empty() {
            return Ok(0);
        }
        v.parse::<u32>()
            .map_err(|_| format!("{key}: cannot parse {v:?} as a non-negative count"))
    }

    fn opt_real(&self, key: &str) -> std::result::Result<Option<f64>, String> {
        let v = self.raw(key);
        if v.is_empty() {
            return Ok(None);
        }
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Some(x)),
            _ => Err(format!("{key}: cannot parse {v:?} as a number")),
        }
    }
}

impl Table {
    fn open(path: &Path, table: &str, columns: &ColumnMap) -> Result<Table> {
        let file = path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let handle = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(handle);
        let headers = reader
            .headers()
            .map_err(|source| Error::Csv {
                file: file.clone(),
                source,
            })?
            .clone();
        let prefix = format!("{table}.");
        let mut index = HashMap::new();
        for (key, col) in columns.iter().filter(|(k, _)| k.starts_with(&prefix)) {
            let pos = headers.iter().position(|h| h == col);
            if pos.is_none() && !ColumnMap::is_optional(key) {
                return Err(Error::MissingColumn {
                    file,
                    column: col.to_string(),
                });
            }
            index.insert(key.to_string(), pos);
        }
        Ok(Table {
            file,
            reader,
            width: headers.len(),
            index,
        })
    }

    fn parse<T>(
        mut self,
        mut f: impl FnMut(&Row<'_>) -> std::result::Result<T, String>,
    ) -> (Vec<(T, u64)>, Vec<Reject>) {
        let mut out = Vec::new();
        let mut rejects = Vec::new();
        let mut rec = csv::StringRecord::new();
        loop {
            let line = self.reader.position().line();
            match self.reader.read_record(&mut rec) {
                Ok(false) => break,
                Ok(true) => {
                    let line = rec.position().map_or(line, |p| p.line());
                    if rec.len() != self.width {
                        rejects.push(Reject {
                            file: self.file.clone(),
                            line,
                            reason: format!("expected {} fields, found {}", self.width, rec.len()),
                        });
                        continue;
                    }
                    let row = Row {
                        rec: &rec,
                        index: &self.index,
                    };
                    match f(&row) {
                        Ok(v) => out.push((v, line)),
                        Err(reason) => rejects.push(Reject {
                            file: self.file.clone(),
                            line,
                            reason,
                        }),
                    }
                }
                Err(e) => {
                    let line = e.position().map_or(line, |p| p.line());
                    rejects.push(Reject {
                        file: self.file.clone(),
                        line,
                        reason: e.to_string(),
                    });
                    if !matches!(e.kind(), csv::ErrorKind::Utf8 { .. }) {
                        break;
                    }
                }
            }
        }
        (out, rejects)
    }
}

struct RawBio {
    player_id: String,
    birth_year: Option<i32>,
    debut_year: Option<i32>,
    bats: Bats,
    throws: Throws,
    height: Option<f64>,
    weight: Option<f64>,
}

fn parse_batting(t: Table) -> (Vec<(BattingRow, u64)>, Vec<Reject>) {
    t.parse(|r| {
        let mut values = Vec::with_capacity(BattingCounts::FIELDS.len());
        for f in BattingCounts::FIELDS {
            values.push(r.count(&format!("batting.{f}"))?);
        }
        let counts = BattingCounts::from_slice(&values);
        if let Some(v) = counts.violation() {
            return Err(v.to_string());
        }
        Ok(BattingRow {
            player_id: r.text("batting.player_id")?,
            year: r.int("batting.year")?,
            stint: Some(stint(r, "batting.stint")?),
            team: r.raw("batting.team").to_string(),
            counts,
            war: None,
        })
    })
}

fn parse_pitching(t: Table) -> (Vec<(PitchingRow, u64)>, Vec<Reject>) {
    t.parse(|r| {
        let mut values = Vec::with_capacity(PitchingCounts::FIELDS.len());
        for f in PitchingCounts::FIELDS {
            values.push(r.count(&format!("pitching.{f}"))?);
        }
        let counts = PitchingCounts::from_slice(&values);
        if let Some(v) = counts.violation() {
            return Err(v.to_string());
        }
        Ok(PitchingRow {
            player_id: r.text("pitching.player_id")?,
            year: r.int("pitching.year")?,
            stint: Some(stint(r, "pitching.stint")?),
            team: r.raw("pitching.team").to_string(),
            counts,
            war: None,
        })
    })
}

fn stint(r: &Row<'_>, key: &str) -> std::result::Result<u32, String> {
    match r.count(key)? {
        0 => Err(format!("{key} must be >= 1")),
        n => Ok(n),
    }
}

fn parse_fielding(t: Table) -> (Vec<(FieldingRow, u64)>, Vec<Reject>) {
    t.parse(|r| {
        Ok(FieldingRow {
            player_id: r.text("fielding.player_id")?,
            year: r.int("fielding.year")?,
            position: r.text("fielding.position")?,
            games: r.count("fielding.games")?,
        })
    })
}

fn parse_war(t: Table) -> (Vec<(WarRecord, u64)>, Vec<Reject>) {
    let file = t.file.clone();
    t.parse(|r| {
        let kind_raw = r.raw("war.kind");
        let kind = WarKind::parse(kind_raw)
            .ok_or_else(|| format!("war.kind: expected batting or pitching, found {kind_raw:?}"))?;
        let war = r.opt_real("war.war")?.ok_or_else(|| "war.war is blank".to_string())?;
        Ok(WarRecord {
            player_id: r.text("war.player_id")?,
            year: r.int("war.year")?,
            kind,
            war,
            origin: Origin {
                file: file.clone(),
                line: 0,
            },
        })
    })
}

fn parse_people(t: Table) -> (Vec<(RawBio, u64)>, Vec<Reject>) {
    t.parse(|r| {
        let debut = r.raw("people.debut");
        let debut_year = if debut.is_empty() {
            None
        } else {
            let head = debut.get(..4).unwrap_or(debut);
            Some(
                head.parse::<i32>()
                    .map_err(|_| format!("people.debut: cannot read a year from {debut:?}"))?,
            )
        };
        Ok(RawBio {
            player_id: r.text("people.player_id")?,
            birth_year: r.opt_int("people.birth_year")?,
            debut_year,
            bats: Bats::parse(r.raw("people.bats")),
            throws: Throws::parse(r.raw("people.throws")),
            height: r.opt_real("people.height")?,
            weight: r.opt_real("people.weight")?,
        })
    })
}

fn dedup<T, K: std::hash::Hash + Eq>(
    rows: Vec<(T, u64)>,
    file: &str,
    key: impl Fn(&T) -> K,
    known: impl Fn(&T) -> bool,
    rejects: &mut Vec<Reject>,
) -> Vec<(T, u64)> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (row, line) in rows {
        if !known(&row) {
            rejects.push(Reject {
                file: file.to_string(),
                line,
                reason: "player_id not present in the people table".into(),
            });
        } else if !seen.insert(key(&row)) {
            rejects.push(Reject {
                file: file.to_string(),
                line,
                reason: "duplicate key".into(),
            });
        } else {
            out.push((row, line));
        }
    }
    out
}

fn file_label(p: &Path) -> String {
    p.file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

/// Parses every raw table into a [`Dataset`] of unmerged stints.
///
/// Malformed rows are skipped and listed in `Dataset::rejects`; a missing
/// file or required column aborts the load.
pub fn load_dataset(paths: &DataPaths, columns: &ColumnMap) -> Result<Dataset> {
    let people = Table::open(&paths.people, "people", columns)?;
    let batting = Table::open(&paths.batting, "batting", columns)?;
    let pitching = Table::open(&paths.pitching, "pitching", columns)?;
    let fielding = paths
        .fielding
        .iter()
        .map(|p| Table::open(p, "fielding", columns))
        .collect::<Result<Vec<_>>>()?;
    let war = paths
        .war
        .iter()
        .map(|p| Table::open(p, "war", columns))
        .collect::<Result<Vec<_>>>()?;

    let ((people, batting), (pitching, (fielding, war))) = rayon::join(
        || rayon::join(|| parse_people(people), || parse_batting(batting)),
        || {
            rayon::join(
                || parse_pitching(pitching),
                || {
                    rayon::join(
                        || fielding.into_iter().map(parse_fielding).collect::<Vec<_>>(),
                        || war.into_iter().map(parse_war).collect::<Vec<_>>(),
                    )
                },
            )
        },
    );

    let mut rejects = Vec::new();
    let people_file = file_label(&paths.people);
    let (raw_bios, r) = people;
    rejects.extend(r);
    let raw_bios = dedup(raw_bios, &people_file, |b| b.player_id.clone(), |_| true, &mut rejects);
    let ids: HashSet<String> = raw_bios.iter().map(|(b, _)| b.player_id.clone()).collect();
    let known = |id: &str| ids.contains(id);

    let (bat, r) = batting;
    rejects.extend(r);
    let bat = dedup(
        bat,
        &file_label(&paths.batting),
        |b| (b.player_id.clone(), b.year, b.stint),
        |b| known(&b.player_id),
        &mut rejects,
    );
    let (pit, r) = pitching;
    rejects.extend(r);
    let pit = dedup(
        pit,
        &file_label(&paths.pitching),
        |p| (p.player_id.clone(), p.year, p.stint),
        |p| known(&p.player_id),
        &mut rejects,
    );
    let mut field_rows = Vec::new();
    for ((rows, r), path) in fielding.into_iter().zip(&paths.fielding) {
        rejects.extend(r);
        let file = file_label(path);
        for (row, line) in rows {
            if known(&row.player_id) {
                field_rows.push(row);
            } else {
                rejects.push(Reject {
                    file: file.clone(),
                    line,
                    reason: "player_id not present in the people table".into(),
                });
            }
        }
    }
    let mut wars = Vec::new();
    for (rows, r) in war {
        rejects.extend(r);
        wars.extend(rows.into_iter().map(|(mut w, line)| {
            w.origin.line = line;
            w
        }));
    }
    let mut seen = HashSet::new();
    wars.retain(|w| {
        let fresh = seen.insert((w.player_id.clone(), w.year, w.kind));
        if !fresh {
            rejects.push(Reject {
                file: w.origin.file.clone(),
                line: w.origin.line,
                reason: "duplicate WAR record for (player_id, year, kind)".into(),
            });
        }
        fresh
    });

    // earliest activity year, for people rows without a debut date
    let mut first_year: HashMap<&str, i32> = HashMap::new();
    let activity = bat
        .iter()
        .map(|(b, _)| (b.player_id.as_str(), b.year))
        .chain(pit.iter().map(|(p, _)| (p.player_id.as_str(), p.year)))
        .chain(field_rows.iter().map(|f| (f.player_id.as_str(), f.year)));
    for (id, y) in activity {
        let e = first_year.entry(id).or_insert(y);
        *e = (*e).min(y);
    }

    let mut by_player: HashMap<&str, Vec<&FieldingRow>> = HashMap::new();
    for f in &field_rows {
        by_player.entry(f.player_id.as_str()).or_default().push(f);
    }

    let mut bios = Vec::with_capacity(raw_bios.len());
    for (raw, line) in raw_bios {
        let Some(debut_year) = raw
            .debut_year
            .or_else(|| first_year.get(raw.player_id.as_str()).copied())
        else {
            continue;
        };
        let mut birth_year = raw.birth_year;
        if let Some(b) = birth_year {
            if debut_year < b + 15 {
                rejects.push(Reject {
                    file: people_file.clone(),
                    line,
                    reason: format!("debut year {debut_year} is before birth year {b} + 15; birth year dropped"),
                });
                birth_year = None;
            }
        }
        let primary_position = by_player
            .get(raw.player_id.as_str())
            .map_or(Position::Unknown, |rows| primary_position_of(rows.iter().copied()));
        bios.push(PlayerBio {
            player_id: raw.player_id,
            birth_year,
            debut_year,
            bats: raw.bats,
            throws: raw.throws,
            height: raw.height,
            weight: raw.weight,
            primary_position,
        });
    }
    bios.sort_by(|a, b| a.player_id.cmp(&b.player_id));

    Ok(Dataset {
        batting: bat.into_iter().map(|(b, _)| b).collect(),
        pitching: pit.into_iter().map(|(p, _)| p).collect(),
        bios,
        wars,
        rejects,
    })
}

/// Writes the rejects report as CSV with columns `file,line,reason`.
pub fn write_rejects(path: &Path, rejects: &[Reject]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|source| Error::Csv {
        file: path.display().to_string(),
        source,
    })?;
    let csv_err = |source| Error::Csv {
        file: path.display().to_string(),
        source,
    };
    w.write_record(["file", "line", "reason"]).map_err(csv_err)?;
    let mut sorted: Vec<&Reject> = rejects.iter().collect();
    sorted.sort();
    for r in sorted {
        w.write_record([r.file.as_str(), &r.line.to_string(), r.reason.as_str()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::write(path, e))?;
    Ok(())
}

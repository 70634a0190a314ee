//! Flat `key = value` text format shared by the run config and the column map.
//!
//! One entry per line, `#` starts a comment, blank lines are ignored. Keys are
//! dotted lowercase identifiers; values run to end of line and are trimmed.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected `key = value`", i + 1)));
        };
        let key = k.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '_') {
            return Err(Error::Config(format!("line {}: bad key `{key}`", i + 1)));
        }
        out.push(Entry {
            key: key.to_string(),
            value: v.trim().to_string(),
            line: i + 1,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blanks_skipped() {
        let e = parse("# header\n\nseed = 42  # run seed\nout=reports\n").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].key, "seed");
        assert_eq!(e[0].value, "42");
        assert_eq!(e[0].line, 3);
        assert_eq!(e[1].value, "reports");
    }

    #[test]
    fn missing_equals_is_error() {
        assert!(parse("seed 42").is_err());
        assert!(parse("bad key = 1").is_err());
    }
}

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::data::{Interaction, InteractionLog};
use crate::error::{Error, Result};

/// Column layout of a delimited ratings file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schema {
    pub delimiter: String,
    pub has_header: bool,
    pub user_col: usize,
    pub item_col: usize,
    pub rating_col: usize,
    pub timestamp_col: usize,
}

impl Schema {
    /// MovieLens `ratings.dat`: `user::item::rating::timestamp`.
    pub fn movielens() -> Self {
        Schema {
            delimiter: "::".into(),
            has_header: false,
            user_col: 0,
            item_col: 1,
            rating_col: 2,
            timestamp_col: 3,
        }
    }

    /// Amazon ratings-only CSV: `user,item,rating,timestamp`.
    pub fn amazon() -> Self {
        Schema {
            delimiter: ",".into(),
            ..Self::movielens()
        }
    }

    fn max_col(&self) -> usize {
        self.user_col
            .max(self.item_col)
            .max(self.rating_col)
            .max(self.timestamp_col)
    }

    fn parse_row(&self, fields: &[&str]) -> Option<Interaction> {
        if fields.len() <= self.max_col() {
            return None;
        }
        let user = fields[self.user_col].trim();
        let item = fields[self.item_col].trim();
        if user.is_empty() || item.is_empty() {
            return None;
        }
        let rating: f64 = fields[self.rating_col].trim().parse().ok()?;
        let ts_raw = fields[self.timestamp_col].trim();
        let timestamp = match ts_raw.parse::<i64>() {
            Ok(t) => t,
            Err(_) => {
                let t: f64 = ts_raw.parse().ok()?;
                if !t.is_finite() {
                    return None;
                }
                t.floor() as i64
            }
        };
        if !rating.is_finite() || timestamp < 0 {
            return None;
        }
        Some(Interaction {
            user: user.to_owned(),
            item: item.to_owned(),
            rating,
            timestamp,
        })
    }
}

/// Parses `movielens`, `amazon`, or a comma-separated `key=value` list with
/// keys `delim`, `header`, `user`, `item`, `rating`, `timestamp`. Delimiters
/// may be written literally or as `comma`, `tab`, `semicolon`, `pipe`,
/// `space`.
impl FromStr for Schema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "movielens" | "ml" => return Ok(Schema::movielens()),
            "amazon" | "csv" => return Ok(Schema::amazon()),
            _ => {}
        }
        let mut schema = Schema::amazon();
        for part in s.split(',').filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("schema entry {part:?} is not key=value")))?;
            let col = || {
                value
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("schema column {key}={value:?} is not an index")))
            };
            match key.trim() {
                "delim" | "delimiter" => {
                    schema.delimiter = match value {
                        "comma" => ",".into(),
                        "tab" => "\t".into(),
                        "semicolon" => ";".into(),
                        "pipe" => "|".into(),
                        "space" => " ".into(),
                        "" => return Err(Error::Config("empty delimiter".into())),
                        other => other.into(),
                    }
                }
                "header" => {
                    schema.has_header = match value {
                        "1" | "true" | "yes" => true,
                        "0" | "false" | "no" => false,
                        _ => return Err(Error::Config(format!("header={value:?} is not a boolean"))),
                    }
                }
                "user" => schema.user_col = col()?,
                "item" => schema.item_col = col()?,
                "rating" => schema.rating_col = col()?,
                "timestamp" | "ts" => schema.timestamp_col = col()?,
                other => return Err(Error::Config(format!("unknown schema key {other:?}"))),
            }
        }
        Ok(schema)
    }
}

/// Parsed log plus the number of rows that could not be parsed.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedLog {
    pub log: InteractionLog,
    pub skipped: usize,
}

/// Reads a delimited ratings file. Malformed rows are skipped and counted.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<LoadedLog> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut skipped = 0usize;

    if schema.delimiter.len() == 1 {
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(schema.delimiter.as_bytes()[0])
            .has_headers(schema.has_header)
            .flexible(true)
            .from_reader(BufReader::new(file));
        for row in reader.records() {
            let row = match row {
                Ok(row) => row,
                Err(e) if e.is_io_error() => return Err(Error::Data(format!("{}: {e}", path.display()))),
                Err(_) => {
                    skipped += 1;
                    continue;
                }
            };
            let fields: Vec<&str> = row.iter().collect();
            match schema.parse_row(&fields) {
                Some(r) => records.push(r),
                None => skipped += 1,
            }
        }
    } else {
        let mut lines = BufReader::new(file).lines();
        if schema.has_header {
            lines.next();
        }
        for line in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(schema.delimiter.as_str()).collect();
            match schema.parse_row(&fields) {
                Some(r) => records.push(r),
                None => skipped += 1,
            }
        }
    }

    if skipped > 0 {
        log::warn!("{}: skipped {skipped} malformed rows", path.display());
    }
    if records.is_empty() {
        return Err(Error::Data(format!("{}: no valid rows", path.display())));
    }
    Ok(LoadedLog {
        log: InteractionLog::new(records),
        skipped,
    })
}

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One observation of a monitored series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    /// Time step, strictly increasing along the series.
    pub index: u64,
    pub value: f64,
}

/// Input layouts understood by [`load_series_csv`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schema {
    /// Weekly rates: `year,week,rate`.
    Ili,
    /// One measurement per row: `value`.
    Bll,
}

impl Schema {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Schema::Ili => &["year", "week", "rate"],
            Schema::Bll => &["value"],
        }
    }
}

impl FromStr for Schema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ili" => Ok(Schema::Ili),
            "bll" => Ok(Schema::Bll),
            other => Err(Error::config(format!("unknown series schema {other:?}"))),
        }
    }
}

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Reads a series under `schema`. A missing file yields
/// [`Error::MissingInput`] so callers can fall back to a synthetic series.
pub fn load_series_csv(path: &Path, schema: Schema) -> Result<Vec<SeriesRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingInput(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })?;
    parse_series(&text, schema).map_err(|e| match e {
        Error::Parse { line, msg, .. } => parse_err(path, line, msg),
        other => other,
    })
}

/// Parses series text; see [`load_series_csv`].
pub fn parse_series(text: &str, schema: Schema) -> Result<Vec<SeriesRecord>> {
    let here = Path::new("<series>");
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| parse_err(here, 1, e.to_string()))?
        .clone();
    let header_line = header.position().map_or(1, |p| p.line());
    let cols: Vec<usize> = schema
        .columns()
        .iter()
        .map(|want| {
            header
                .iter()
                .position(|h| h.eq_ignore_ascii_case(want))
                .ok_or_else(|| parse_err(here, header_line, format!("missing column {want:?}")))
        })
        .collect::<Result<_>>()?;

    let mut out: Vec<SeriesRecord> = Vec::new();
    let mut last_key: Option<(i64, i64)> = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(here, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(cols[i]).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            field(i).parse::<f64>().map_err(|_| {
                parse_err(here, line, format!("bad {} value {:?}", schema.columns()[i], field(i)))
            })
        };
        let value = match schema {
            Schema::Ili => {
                let int = |i: usize| -> Result<i64> {
                    field(i).parse::<i64>().map_err(|_| {
                        parse_err(here, line, format!("bad {} value {:?}", schema.columns()[i], field(i)))
                    })
                };
                let key = (int(0)?, int(1)?);
                if !(1..=53).contains(&key.1) {
                    return Err(parse_err(here, line, format!("week {} out of range", key.1)));
                }
                if last_key.is_some_and(|k| key <= k) {
                    return Err(parse_err(here, line, "year/week not strictly increasing"));
                }
                last_key = Some(key);
                num(2)?
            }
            Schema::Bll => num(0)?,
        };
        if !(value.is_finite() && value >= 0.0) {
            return Err(parse_err(here, line, format!("value must be finite and nonnegative, got {value}")));
        }
        out.push(SeriesRecord {
            index: out.len() as u64 + 1,
            value,
        });
    }
    Ok(out)
}

/// Writes a series in the layout `load_series_csv` reads for `Schema::Bll`,
/// with the index as an extra leading column.
pub fn render_series(series: &[SeriesRecord]) -> String {
    let mut out = String::from("index,value\n");
    for r in series {
        out.push_str(&format!("{},{}\n", r.index, r.value));
    }
    out
}

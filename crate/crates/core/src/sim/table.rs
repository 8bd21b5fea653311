//! CSV and JSON rendering of summary tables.
//!
//! Both formats carry `key=value` metadata. In CSV it precedes the header as
//! `# key=value` comment lines; in JSON it is the `metadata` object next to
//! `rows`. Percentages, means and SDs use one decimal, medians are integers,
//! defect values use three significant digits and missing values are `NA`
//! (CSV) or `null` (JSON).

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::summary::SummaryRow;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 15] = [
    "study",
    "scenario",
    "rule",
    "reps",
    "pct_stop",
    "mean_tau",
    "sd_tau",
    "median_tau",
    "fdr_pct",
    "pct_mle_zero",
    "pct_sep",
    "r_100",
    "r_500",
    "r_2000",
    "max_step_r",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Json,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            other => Err(Error::config(format!("unknown table format {other:?}"))),
        }
    }
}

/// Ordered `key=value` metadata.
pub type Metadata = Vec<(String, String)>;

fn fmt1(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| format!("{x:.1}"))
}

fn fmt_sig(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| format!("{x:.2e}"))
}

fn csv_fields(r: &SummaryRow) -> [String; 15] {
    [
        r.study.to_string(),
        r.scenario.clone(),
        r.rule.clone(),
        r.reps.to_string(),
        format!("{:.1}", r.pct_stop),
        fmt1(r.mean_tau),
        fmt1(r.sd_tau),
        r.median_tau.map_or_else(|| "NA".into(), |m| m.to_string()),
        fmt1(r.fdr_pct),
        fmt1(r.pct_mle_zero),
        fmt1(r.pct_sep),
        fmt_sig(r.r_100),
        fmt_sig(r.r_500),
        fmt_sig(r.r_2000),
        fmt_sig(r.max_step_r),
    ]
}

fn check_meta(meta: &Metadata) -> Result<()> {
    for (k, v) in meta {
        if k.contains(['=', '\n']) || v.contains('\n') {
            return Err(Error::argument(format!("metadata entry {k:?} is not single-line key=value")));
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct JsonTable {
    metadata: serde_json::Map<String, serde_json::Value>,
    rows: Vec<SummaryRow>,
}

pub fn render_table(rows: &[SummaryRow], meta: &Metadata, format: TableFormat) -> Result<String> {
    check_meta(meta)?;
    match format {
        TableFormat::Csv => {
            let mut out = String::new();
            for (k, v) in meta {
                let _ = writeln!(out, "# {k}={v}");
            }
            let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
            let csv_err = |e: csv::Error| Error::numeric(format!("csv encoding failed: {e}"));
            w.write_record(CSV_HEADER).map_err(csv_err)?;
            for r in rows {
                w.write_record(csv_fields(r)).map_err(csv_err)?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| Error::numeric(format!("csv encoding failed: {e}")))?;
            out.push_str(std::str::from_utf8(&bytes).expect("csv output is utf-8"));
            Ok(out)
        }
        TableFormat::Json => {
            let table = JsonTable {
                metadata: meta
                    .iter()
                    .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                    .collect(),
                rows: rows.iter().map(SummaryRow::quantized).collect(),
            };
            let mut s = serde_json::to_string_pretty(&table)
                .map_err(|e| Error::numeric(format!("json encoding failed: {e}")))?;
            s.push('\n');
            Ok(s)
        }
    }
}

pub fn emit_table(rows: &[SummaryRow], meta: &Metadata, format: TableFormat, path: &Path) -> Result<()> {
    let text = render_table(rows, meta, format)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_opt<T: FromStr>(s: &str, line: u64, col: &str) -> Result<Option<T>> {
    if s == "NA" {
        return Ok(None);
    }
    s.parse::<T>().map(Some).map_err(|_| Error::Parse {
        path: "<table>".into(),
        line,
        msg: format!("bad value {s:?} in column {col}"),
    })
}

fn parse_req<T: FromStr>(s: &str, line: u64, col: &str) -> Result<T> {
    parse_opt(s, line, col)?.ok_or_else(|| Error::Parse {
        path: "<table>".into(),
        line,
        msg: format!("missing value in column {col}"),
    })
}

/// Parses a rendered table back into metadata and (quantized) rows.
pub fn parse_table(text: &str, format: TableFormat) -> Result<(Metadata, Vec<SummaryRow>)> {
    match format {
        TableFormat::Json => {
            let t: JsonTable = serde_json::from_str(text).map_err(|e| Error::Parse {
                path: "<table>".into(),
                line: e.line() as u64,
                msg: e.to_string(),
            })?;
            let meta = t
                .metadata
                .into_iter()
                .map(|(k, v)| (k, v.as_str().map_or_else(|| v.to_string(), str::to_string)))
                .collect();
            Ok((meta, t.rows))
        }
        TableFormat::Csv => {
            let meta = text
                .lines()
                .take_while(|l| l.starts_with('#'))
                .filter_map(|l| {
                    let (k, v) = l.trim_start_matches('#').trim_start().split_once('=')?;
                    Some((k.to_string(), v.to_string()))
                })
                .collect();
            let mut rdr = csv::ReaderBuilder::new()
                .comment(Some(b'#'))
                .from_reader(text.as_bytes());
            let header = rdr.headers().map_err(|e| Error::Parse {
                path: "<table>".into(),
                line: 1,
                msg: e.to_string(),
            })?;
            if header.iter().ne(CSV_HEADER) {
                return Err(Error::Parse {
                    path: "<table>".into(),
                    line: header.position().map_or(1, |p| p.line()),
                    msg: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
                });
            }
            let mut rows = Vec::new();
            for rec in rdr.records() {
                let rec = rec.map_err(|e| Error::Parse {
                    path: "<table>".into(),
                    line: e.position().map_or(0, |p| p.line()),
                    msg: e.to_string(),
                })?;
                let line = rec.position().map_or(0, |p| p.line());
                let f = |i: usize| &rec[i];
                rows.push(SummaryRow {
                    study: parse_req(f(0), line, "study")?,
                    scenario: f(1).to_string(),
                    rule: f(2).to_string(),
                    reps: parse_req(f(3), line, "reps")?,
                    pct_stop: parse_req(f(4), line, "pct_stop")?,
                    mean_tau: parse_opt(f(5), line, "mean_tau")?,
                    sd_tau: parse_opt(f(6), line, "sd_tau")?,
                    median_tau: parse_opt(f(7), line, "median_tau")?,
                    fdr_pct: parse_opt(f(8), line, "fdr_pct")?,
                    pct_mle_zero: parse_opt(f(9), line, "pct_mle_zero")?,
                    pct_sep: parse_opt(f(10), line, "pct_sep")?,
                    r_100: parse_opt(f(11), line, "r_100")?,
                    r_500: parse_opt(f(12), line, "r_500")?,
                    r_2000: parse_opt(f(13), line, "r_2000")?,
                    max_step_r: parse_opt(f(14), line, "max_step_r")?,
                });
            }
            Ok((meta, rows))
        }
    }
}

pub fn load_table(path: &Path) -> Result<(Metadata, Vec<SummaryRow>)> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingInput(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })?;
    let format = if path.extension().is_some_and(|e| e == "json") {
        TableFormat::Json
    } else {
        TableFormat::Csv
    };
    parse_table(&text, format).map_err(|e| match e {
        Error::Parse { line, msg, .. } => Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        },
        other => other,
    })
}

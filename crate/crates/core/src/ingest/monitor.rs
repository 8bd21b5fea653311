//! Sequential monitoring of a single observed series.
//!
//! Trace files are CSV with `# key=value` metadata lines followed by the
//! columns `n,m,b,width,r,fired_bdy,fired_2cond,fired_rm`. Floats are written
//! in shortest round-trip form (`inf` for an unavailable width or defect), and
//! the flags are `0`/`1` and record whether each rule's conditions hold at
//! that step. A rule's stopping time is the first step with its flag set.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::series::{Schema, SeriesRecord};
use crate::error::{Error, Result};
use crate::scorecard::{Censoring, Rule, RuleReports, RuleTracker, ScorecardConfig, StopReport};
use crate::sim::table::Metadata;
use crate::uncertainty::{beta_interval, gamma_interval, z_upper};

pub const TRACE_HEADER: [&str; 8] = ["n", "m", "b", "width", "r", "fired_bdy", "fired_2cond", "fired_rm"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorModel {
    /// Nonnegative rates with a Jeffreys `Gamma(1/2)` prior; `B_n = M_n`.
    PoissonRate,
    /// Positive measurements, Gaussian on the log scale; `M_n` and the band
    /// are back-transformed to the raw scale and `B_n = M_n`.
    GaussianMean,
    /// Values in `[0, 1]` with a Jeffreys `Beta(1/2, 1/2)` prior; `B_n = min(M_n, 1 - M_n)`.
    BoundedMean,
}

impl MonitorModel {
    pub fn as_str(self) -> &'static str {
        match self {
            MonitorModel::PoissonRate => "poisson_rate",
            MonitorModel::GaussianMean => "gaussian_mean",
            MonitorModel::BoundedMean => "bounded_mean",
        }
    }

    /// Input layout read for this model.
    pub fn schema(self) -> Schema {
        match self {
            MonitorModel::PoissonRate => Schema::Ili,
            MonitorModel::GaussianMean | MonitorModel::BoundedMean => Schema::Bll,
        }
    }
}

impl FromStr for MonitorModel {
    type Err = Error;

    /// Accepts the model names plus `ili` and `bll` as aliases.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poisson_rate" | "ili" => Ok(MonitorModel::PoissonRate),
            "gaussian_mean" | "bll" => Ok(MonitorModel::GaussianMean),
            "bounded_mean" => Ok(MonitorModel::BoundedMean),
            other => Err(Error::config(format!(
                "unknown model {other:?} (expected poisson_rate, gaussian_mean or bounded_mean)"
            ))),
        }
    }
}

/// Rule tuning for a monitoring run; the horizon is the series length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    pub model: MonitorModel,
    pub epsilon: f64,
    pub width_max: f64,
    pub eta: f64,
    pub n_min: usize,
    pub alpha: f64,
}

impl MonitorConfig {
    pub fn scorecard(&self, n_max: usize) -> Result<ScorecardConfig> {
        let cfg = ScorecardConfig {
            epsilon: self.epsilon,
            width_max: self.width_max,
            eta: self.eta,
            n_min: self.n_min,
            n_max,
            alpha: self.alpha,
        };
        match self.model {
            MonitorModel::BoundedMean => cfg.validate()?,
            _ => cfg.validate_real_scale()?,
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: usize,
    pub m: f64,
    pub b: f64,
    pub width: f64,
    pub r: f64,
    pub fired_bdy: bool,
    pub fired_2cond: bool,
    pub fired_rm: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorTrace {
    pub config: MonitorConfig,
    pub rows: Vec<TraceRow>,
    pub reports: RuleReports,
}

/// Running posterior summaries per model.
struct Accumulator {
    model: MonitorModel,
    alpha: f64,
    z: f64,
    n: u64,
    sum: f64,
    // Welford state for log values
    log_mean: f64,
    log_m2: f64,
}

impl Accumulator {
    fn new(model: MonitorModel, alpha: f64) -> Result<Self> {
        Ok(Self {
            model,
            alpha,
            z: z_upper(alpha)?,
            n: 0,
            sum: 0.0,
            log_mean: 0.0,
            log_m2: 0.0,
        })
    }

    /// Adds one observation and returns `(M_n, B_n, W_n)`.
    fn push(&mut self, x: f64, line: u64) -> Result<(f64, f64, f64)> {
        self.n += 1;
        let n = self.n as f64;
        match self.model {
            MonitorModel::PoissonRate => {
                self.sum += x;
                let m = (self.sum + 0.5) / (n + 1.0);
                let w = gamma_interval(self.sum + 0.5, n + 1.0, self.alpha)?.width();
                Ok((m, m, w))
            }
            MonitorModel::GaussianMean => {
                if !(x > 0.0) {
                    return Err(Error::argument(format!(
                        "observation {line}: log-scale model needs positive values, got {x}"
                    )));
                }
                let l = x.ln();
                let delta = l - self.log_mean;
                self.log_mean += delta / n;
                self.log_m2 += delta * (l - self.log_mean);
                if self.n < 2 {
                    return Ok((x, x, f64::INFINITY));
                }
                let var = self.log_m2 / (n - 1.0);
                let m = (self.log_mean + var / 2.0).exp();
                let half = self.z * (var / n).sqrt();
                Ok((m, m, m * 2.0 * half.sinh()))
            }
            MonitorModel::BoundedMean => {
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::argument(format!(
                        "observation {line}: bounded model needs values in [0, 1], got {x}"
                    )));
                }
                self.sum += x;
                let m = (self.sum + 0.5) / (n + 1.0);
                let w = beta_interval(self.sum + 0.5, n - self.sum + 0.5, self.alpha)?.width();
                Ok((m, m.min(1.0 - m), w))
            }
        }
    }
}

fn reports_from_rows(rows: &[TraceRow]) -> RuleReports {
    let first = |rule: Rule, pick: fn(&TraceRow) -> bool| {
        rows.iter()
            .find(|r| pick(r))
            .map_or(StopReport::censored(rule, Censoring::Horizon), |r| {
                StopReport::stopped_at(rule, r.n, r.m)
            })
    };
    RuleReports {
        boundary_only: first(Rule::BoundaryOnly, |r| r.fired_bdy),
        two_cond: first(Rule::TwoCond, |r| r.fired_2cond),
        rm: first(Rule::Rm, |r| r.fired_rm),
    }
}

/// Scores every step of `series` and evaluates the three rules.
pub fn monitor_series(series: &[SeriesRecord], config: &MonitorConfig) -> Result<MonitorTrace> {
    if series.is_empty() {
        return Err(Error::argument("empty series"));
    }
    let card = config.scorecard(series.len())?;
    let mut tracker = RuleTracker::new(card);
    let mut acc = Accumulator::new(config.model, config.alpha)?;
    let mut rows = Vec::with_capacity(series.len());
    let mut prev = f64::NAN;
    for (i, rec) in series.iter().enumerate() {
        let (m, b, width) = acc.push(rec.value, rec.index)?;
        let r = if i == 0 { f64::INFINITY } else { (m - prev).abs() };
        let fired = tracker.observe_lazy(m, b, || width, || r);
        rows.push(TraceRow {
            n: i + 1,
            m,
            b,
            width,
            r,
            fired_bdy: fired.boundary_only,
            fired_2cond: fired.two_cond,
            fired_rm: fired.rm,
        });
        prev = m;
    }
    let reports = tracker.reports();
    debug_assert_eq!(reports, reports_from_rows(&rows));
    Ok(MonitorTrace {
        config: *config,
        rows,
        reports,
    })
}

fn tau_label(r: &StopReport) -> String {
    r.tau().map_or_else(|| "NA".into(), |t| t.to_string())
}

/// Renders a trace; `meta` is written first, then the run configuration and
/// the stopping times.
pub fn render_trace(trace: &MonitorTrace, meta: &Metadata) -> Result<String> {
    let mut out = String::new();
    for (k, v) in meta {
        if k.contains(['=', '\n']) || v.contains('\n') {
            return Err(Error::argument(format!("metadata entry {k:?} is not single-line key=value")));
        }
        let _ = writeln!(out, "# {k}={v}");
    }
    let cfg = serde_json::to_string(&trace.config)
        .map_err(|e| Error::numeric(format!("config serialization failed: {e}")))?;
    let _ = writeln!(out, "# monitor_config={cfg}");
    let _ = writeln!(out, "# tau_bdy={}", tau_label(&trace.reports.boundary_only));
    let _ = writeln!(out, "# tau_2cond={}", tau_label(&trace.reports.two_cond));
    let _ = writeln!(out, "# tau_rm={}", tau_label(&trace.reports.rm));
    let _ = writeln!(out, "{}", TRACE_HEADER.join(","));
    for r in &trace.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n,
            r.m,
            r.b,
            r.width,
            r.r,
            u8::from(r.fired_bdy),
            u8::from(r.fired_2cond),
            u8::from(r.fired_rm)
        );
    }
    Ok(out)
}

pub fn emit_trace(trace: &MonitorTrace, meta: &Metadata, path: &Path) -> Result<()> {
    std::fs::write(path, render_trace(trace, meta)?).map_err(|e| Error::io(path, e))
}

/// Parses a rendered trace. Returns the caller metadata (without the keys
/// written by [`render_trace`] itself) and the trace.
pub fn parse_trace(text: &str) -> Result<(Metadata, MonitorTrace)> {
    let bad = |line: u64, msg: String| Error::Parse {
        path: "<trace>".into(),
        line,
        msg,
    };
    let mut meta = Metadata::new();
    let mut config = None;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i as u64 + 1, l));
    let mut header_seen = false;
    let mut rows = Vec::new();
    for (line, l) in lines.by_ref() {
        if let Some(kv) = l.strip_prefix('#') {
            let (k, v) = kv
                .trim_start()
                .split_once('=')
                .ok_or_else(|| bad(line, "metadata line without '='".into()))?;
            match k {
                "monitor_config" => {
                    config = Some(
                        serde_json::from_str::<MonitorConfig>(v).map_err(|e| bad(line, e.to_string()))?,
                    )
                }
                "tau_bdy" | "tau_2cond" | "tau_rm" => {}
                _ => meta.push((k.to_string(), v.to_string())),
            }
            continue;
        }
        if l.split(',').ne(TRACE_HEADER) {
            return Err(bad(line, format!("unexpected header {l:?}")));
        }
        header_seen = true;
        break;
    }
    if !header_seen {
        return Err(bad(1, "missing trace header".into()));
    }
    let config = config.ok_or_else(|| bad(1, "missing monitor_config metadata".into()))?;
    for (line, l) in lines {
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != TRACE_HEADER.len() {
            return Err(bad(line, format!("expected {} fields, got {}", TRACE_HEADER.len(), f.len())));
        }
        let num = |i: usize| -> Result<f64> {
            f[i].parse().map_err(|_| bad(line, format!("bad {} value {:?}", TRACE_HEADER[i], f[i])))
        };
        let flag = |i: usize| -> Result<bool> {
            match f[i] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(bad(line, format!("bad {} flag {other:?}", TRACE_HEADER[i]))),
            }
        };
        rows.push(TraceRow {
            n: f[0].parse().map_err(|_| bad(line, format!("bad n {:?}", f[0])))?,
            m: num(1)?,
            b: num(2)?,
            width: num(3)?,
            r: num(4)?,
            fired_bdy: flag(5)?,
            fired_2cond: flag(6)?,
            fired_rm: flag(7)?,
        });
    }
    let reports = reports_from_rows(&rows);
    Ok((meta, MonitorTrace { config, rows, reports }))
}

pub fn load_trace(path: &Path) -> Result<(Metadata, MonitorTrace)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text).map_err(|e| match e {
        Error::Parse { line, msg, .. } => Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        },
        other => other,
    })
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scorecard::{Rule, StopReport};

/// One table row: a rule's stopping behaviour in one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub study: u8,
    pub scenario: String,
    pub rule: String,
    pub reps: usize,
    pub pct_stop: f64,
    /// Mean, sample SD and median of the stopping time over stopped runs.
    pub mean_tau: Option<f64>,
    pub sd_tau: Option<f64>,
    pub median_tau: Option<u64>,
    /// Percentage of runs that stopped although the truth exceeds epsilon.
    pub fdr_pct: Option<f64>,
    /// Percentage of three-condition stops where the raw estimate is exactly zero.
    pub pct_mle_zero: Option<f64>,
    /// Percentage of runs whose unpenalized fit diverged.
    pub pct_sep: Option<f64>,
    /// Median stability defect at the checkpoints.
    pub r_100: Option<f64>,
    pub r_500: Option<f64>,
    pub r_2000: Option<f64>,
    /// Largest realized step change `|M_n - M_(n-1)|` over the simulated prefixes.
    pub max_step_r: Option<f64>,
}

// Quantization goes through the same formatting as the emitted tables so
// that reading a table back reproduces `quantized` exactly.
fn round1(x: f64) -> f64 {
    format!("{x:.1}").parse().expect("formatted float")
}

fn sig3(x: f64) -> f64 {
    format!("{x:.2e}").parse().expect("formatted float")
}

impl SummaryRow {
    /// The row as it reads back from an emitted table.
    pub fn quantized(&self) -> Self {
        let one = |v: Option<f64>| v.map(round1);
        let sig = |v: Option<f64>| v.map(sig3);
        Self {
            study: self.study,
            scenario: self.scenario.clone(),
            rule: self.rule.clone(),
            reps: self.reps,
            pct_stop: round1(self.pct_stop),
            mean_tau: one(self.mean_tau),
            sd_tau: one(self.sd_tau),
            median_tau: self.median_tau,
            fdr_pct: one(self.fdr_pct),
            pct_mle_zero: one(self.pct_mle_zero),
            pct_sep: one(self.pct_sep),
            r_100: sig(self.r_100),
            r_500: sig(self.r_500),
            r_2000: sig(self.r_2000),
            max_step_r: sig(self.max_step_r),
        }
    }
}

/// Lower median of a sorted, non-empty slice.
fn lower_median(sorted: &[u64]) -> u64 {
    sorted[(sorted.len() - 1) / 2]
}

/// Summarizes one rule's outcomes over the replications of a cell. Stopping
/// statistics are conditional on stopping; the false-declaration rate is only
/// defined when `truth > epsilon`.
pub fn summarize(rule: Rule, reports: &[StopReport], truth: f64, epsilon: f64) -> Result<SummaryRow> {
    if reports.is_empty() {
        return Err(Error::argument("no replication outcomes to summarize"));
    }
    let reps = reports.len();
    let mut taus: Vec<u64> = reports.iter().filter_map(|r| r.tau().map(|t| t as u64)).collect();
    taus.sort_unstable();
    let k = taus.len();
    let pct_stop = 100.0 * k as f64 / reps as f64;
    let mean = (k > 0).then(|| taus.iter().map(|&t| t as f64).sum::<f64>() / k as f64);
    let sd = mean.filter(|_| k >= 2).map(|m| {
        let ss: f64 = taus.iter().map(|&t| (t as f64 - m).powi(2)).sum();
        (ss / (k - 1) as f64).sqrt()
    });
    let pct_mle_zero = if rule == Rule::Rm {
        let with_mle: Vec<f64> = reports
            .iter()
            .filter(|r| r.stopped())
            .filter_map(|r| r.mle_at_tau)
            .collect();
        (!with_mle.is_empty())
            .then(|| 100.0 * with_mle.iter().filter(|&&m| m == 0.0).count() as f64 / with_mle.len() as f64)
    } else {
        None
    };
    Ok(SummaryRow {
        study: 0,
        scenario: String::new(),
        rule: rule.as_str().to_string(),
        reps,
        pct_stop,
        mean_tau: mean,
        sd_tau: sd,
        median_tau: (k > 0).then(|| lower_median(&taus)),
        fdr_pct: (truth > epsilon).then_some(pct_stop),
        pct_mle_zero,
        pct_sep: None,
        r_100: None,
        r_500: None,
        r_2000: None,
        max_step_r: None,
    })
}

//! False-declaration frequency of the three-condition rule when the truth is
//! above the threshold.
//!
//! Here the width condition is interval containment: the equal-tailed Jeffreys
//! interval must lie inside `[0, epsilon]`. With the running-mean target the
//! exact defect vanishes, so a declaration happens at the first `n >= n_min`
//! where `S/n <= epsilon` and the upper Jeffreys quantile is `<= epsilon`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};
use crate::uncertainty::reg_inc_beta;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorControlConfig {
    pub epsilon: f64,
    /// True success probability, above `epsilon`.
    pub truth: f64,
    pub alpha: f64,
    pub reps: usize,
    pub n_min: usize,
    pub n_max: usize,
}

impl ErrorControlConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            truth: 2.0 * epsilon,
            alpha: 0.05,
            reps: 2000,
            n_min: 30,
            n_max: 5000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::config(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.truth > self.epsilon && self.truth <= 1.0) {
            return Err(Error::config("truth must exceed epsilon"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.reps == 0 || self.n_min == 0 || self.n_min > self.n_max {
            return Err(Error::config("need reps >= 1 and 1 <= n_min <= n_max"));
        }
        Ok(())
    }

    /// Monte Carlo allowance `alpha + 3 sqrt(alpha / reps)`.
    pub fn bound(&self) -> f64 {
        self.alpha + 3.0 * (self.alpha / self.reps as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorControlResult {
    pub config: ErrorControlConfig,
    pub seed: u64,
    pub false_declarations: usize,
    pub rate: f64,
    pub bound: f64,
}

impl ErrorControlResult {
    pub fn within_bound(&self) -> bool {
        self.rate <= self.bound
    }
}

/// For each `n`, the largest success count whose Jeffreys interval sits inside
/// `[0, epsilon]` and whose running mean is at most `epsilon`, or `None`.
pub fn declaration_limits(cfg: &ErrorControlConfig) -> Result<Vec<Option<u64>>> {
    let upper_tail = 1.0 - cfg.alpha / 2.0;
    let mut limits = vec![None; cfg.n_max + 1];
    let mut s = 0u64;
    for (n, slot) in limits.iter_mut().enumerate().skip(1) {
        let n = n as u64;
        let contained = |s: u64| -> Result<bool> {
            Ok(s as f64 <= cfg.epsilon * n as f64
                && reg_inc_beta(cfg.epsilon, s as f64 + 0.5, (n - s) as f64 + 0.5)? >= upper_tail)
        };
        // The limit is non-decreasing in n, so resume from the previous one.
        while s < n && contained(s + 1)? {
            s += 1;
        }
        if contained(s)? {
            *slot = Some(s);
        } else if s == 0 {
            *slot = None;
        } else {
            return Err(Error::numeric(format!("declaration limit not monotone at n = {n}")));
        }
    }
    Ok(limits)
}

pub fn run_error_control(cfg: &ErrorControlConfig, master_seed: u64) -> Result<ErrorControlResult> {
    cfg.validate()?;
    let limits = declaration_limits(cfg)?;
    let declared: Vec<bool> = (0..cfg.reps)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream(derive_seed(master_seed, &[j as u64]));
            let mut s = 0u64;
            for (n, limit) in limits.iter().enumerate().skip(1) {
                s += u64::from(rng.random::<f64>() < cfg.truth);
                if n >= cfg.n_min && limit.is_some_and(|lim| s <= lim) {
                    return true;
                }
            }
            false
        })
        .collect();
    let false_declarations = declared.iter().filter(|&&d| d).count();
    let rate = false_declarations as f64 / cfg.reps as f64;
    Ok(ErrorControlResult {
        config: *cfg,
        seed: master_seed,
        false_declarations,
        rate,
        bound: cfg.bound(),
    })
}

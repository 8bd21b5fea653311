//! Uncertainty widths `W_n`: equal-tailed conjugate credible intervals, the
//! Gaussian posterior width, the zero-success Clopper–Pearson bound and the
//! all-failure run-length threshold.

pub mod special;

use serde::{Deserialize, Serialize};

pub use special::{
    beta_quantile, gamma_quantile, normal_quantile, reg_inc_beta, reg_inc_gamma, QuantileOptions,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalWidth {
    pub lower: f64,
    pub upper: f64,
}

impl IntervalWidth {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Equal-tailed `1 - alpha` interval of `Beta(a, b)`.
pub fn beta_interval(a: f64, b: f64, alpha: f64) -> Result<IntervalWidth> {
    check_alpha(alpha)?;
    Ok(IntervalWidth {
        lower: beta_quantile(alpha / 2.0, a, b)?,
        upper: beta_quantile(1.0 - alpha / 2.0, a, b)?,
    })
}

/// Equal-tailed `1 - alpha` interval of `Gamma(shape, rate)`.
pub fn gamma_interval(shape: f64, rate: f64, alpha: f64) -> Result<IntervalWidth> {
    check_alpha(alpha)?;
    Ok(IntervalWidth {
        lower: gamma_quantile(alpha / 2.0, shape, rate)?,
        upper: gamma_quantile(1.0 - alpha / 2.0, shape, rate)?,
    })
}

/// Jeffreys `Beta(s + 1/2, n - s + 1/2)` credible interval for a Bernoulli probability.
pub fn jeffreys_beta_width(s: u64, n: u64, alpha: f64) -> Result<IntervalWidth> {
    if s > n {
        return Err(Error::domain(format!("successes {s} exceed trials {n}")));
    }
    beta_interval(s as f64 + 0.5, (n - s) as f64 + 0.5, alpha)
}

/// `Gamma(s + 1/2, n + 1)` credible interval for a Poisson rate.
pub fn jeffreys_gamma_width(s: u64, n: u64, alpha: f64) -> Result<IntervalWidth> {
    if n == 0 {
        return Err(Error::domain("poisson width needs at least one observation"));
    }
    gamma_interval(s as f64 + 0.5, n as f64 + 1.0, alpha)
}

/// Upper `alpha/2` standard normal quantile.
pub fn z_upper(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    normal_quantile(1.0 - alpha / 2.0)
}

/// Posterior credible width `2 z / sqrt(n / sigma2 + 1)` for a Gaussian mean
/// under a `N(0, 1)` prior.
pub fn gaussian_width(n: u64, sigma2: f64, alpha: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::domain(format!("sigma2 must be positive, got {sigma2}")));
    }
    Ok(gaussian_width_with_z(n, sigma2, z_upper(alpha)?))
}

/// [`gaussian_width`] with a precomputed quantile.
pub fn gaussian_width_with_z(n: u64, sigma2: f64, z: f64) -> f64 {
    2.0 * z / (n as f64 / sigma2 + 1.0).sqrt()
}

/// One-sided upper Clopper–Pearson bound after zero successes: `1 - alpha^(1/n)`.
pub fn clopper_pearson_upper_zero(n: u64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if n == 0 {
        return Err(Error::domain("clopper-pearson bound needs n >= 1"));
    }
    Ok(-(alpha.ln() / n as f64).exp_m1())
}

/// Smallest all-failure run length supporting `p < epsilon` at level `alpha`:
/// `ceil(ln alpha / ln(1 - epsilon))`.
pub fn all_failure_threshold(alpha: f64, epsilon: f64) -> Result<u64> {
    check_alpha(alpha)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok((alpha.ln() / (-epsilon).ln_1p()).ceil().max(1.0) as u64)
}

//! Regularized incomplete beta and gamma functions and their inverses.
//!
//! Continued fractions use the modified Lentz scheme. Quantiles are found by
//! Newton steps safeguarded by a shrinking bracket.

use crate::error::{Error, Result};

const EPS: f64 = f64::EPSILON;
const FPMIN: f64 = f64::MIN_POSITIVE / EPS;
const MAX_CF_ITER: usize = 20_000;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

fn check_shapes(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::domain(format!("beta shapes must be positive and finite, got a={a} b={b}")));
    }
    Ok(())
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    check_shapes(a, b)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("x must lie in [0, 1], got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(ln_front.exp() * beta_cf(x, a, b)? / a)
    } else {
        Ok(1.0 - ln_front.exp() * beta_cf(1.0 - x, b, a)? / b)
    }
}

fn beta_cf(x: f64, a: f64, b: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_CF_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(Error::numeric(format!(
        "incomplete beta continued fraction did not converge (x={x}, a={a}, b={b})"
    )))
}

/// Beta density.
pub fn beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    ((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)).exp()
}

/// Regularized lower incomplete gamma function `P(shape, x)`.
pub fn reg_inc_gamma(shape: f64, x: f64) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(Error::domain(format!("gamma shape must be positive, got {shape}")));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(format!("x must be nonnegative, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let ln_front = -x + shape * x.ln() - ln_gamma(shape);
    if x < shape + 1.0 {
        let mut ap = shape;
        let mut del = 1.0 / shape;
        let mut sum = del;
        for _ in 0..MAX_CF_ITER {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * EPS {
                return Ok(sum * ln_front.exp());
            }
        }
        Err(Error::numeric(format!("incomplete gamma series did not converge (a={shape}, x={x})")))
    } else {
        let mut b = x + 1.0 - shape;
        let mut c = 1.0 / FPMIN;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=MAX_CF_ITER {
            let i = i as f64;
            let an = -i * (i - shape);
            b += 2.0;
            d = an * d + b;
            if d.abs() < FPMIN {
                d = FPMIN;
            }
            c = b + an / c;
            if c.abs() < FPMIN {
                c = FPMIN;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < EPS {
                return Ok(1.0 - ln_front.exp() * h);
            }
        }
        Err(Error::numeric(format!(
            "incomplete gamma continued fraction did not converge (a={shape}, x={x})"
        )))
    }
}

/// Gamma density with unit rate.
pub fn gamma_pdf(shape: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    ((shape - 1.0) * x.ln() - x - ln_gamma(shape)).exp()
}

/// Iteration cap and acceptance tolerance for quantile inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileOptions {
    pub max_iter: usize,
    /// Maximum accepted `|CDF(q) - p|`.
    pub tol: f64,
}

impl Default for QuantileOptions {
    fn default() -> Self {
        Self {
            max_iter: 400,
            tol: 1e-10,
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("probability must lie in (0, 1), got {p}")));
    }
    Ok(())
}

/// Inverts a continuous increasing CDF on `[lo, hi]`.
fn invert_cdf(
    p: f64,
    cdf: impl Fn(f64) -> Result<f64>,
    pdf: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    start: f64,
    opts: QuantileOptions,
) -> Result<f64> {
    let target = 4.0 * EPS * p.min(1.0 - p);
    let mut x = if start > lo && start < hi { start } else { 0.5 * (lo + hi) };
    let mut best = (f64::INFINITY, x);
    for _ in 0..opts.max_iter {
        let f = cdf(x)? - p;
        if f.abs() < best.0 {
            best = (f.abs(), x);
        }
        if f.abs() <= target {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 2.0 * EPS * x.abs() {
            break;
        }
        let d = pdf(x);
        let newton = x - f / d;
        x = if d > 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else if lo == 0.0 {
            hi / 8.0
        } else {
            0.5 * (lo + hi)
        };
    }
    if best.0 <= opts.tol {
        Ok(best.1)
    } else {
        Err(Error::numeric(format!(
            "quantile inversion did not converge for p={p}: residual {:e}",
            best.0
        )))
    }
}

/// Quantile of `Beta(a, b)`.
pub fn beta_quantile(p: f64, a: f64, b: f64) -> Result<f64> {
    beta_quantile_with(p, a, b, QuantileOptions::default())
}

pub fn beta_quantile_with(p: f64, a: f64, b: f64, opts: QuantileOptions) -> Result<f64> {
    check_p(p)?;
    check_shapes(a, b)?;
    invert_cdf(
        p,
        |x| reg_inc_beta(x, a, b),
        |x| beta_pdf(x, a, b),
        0.0,
        1.0,
        a / (a + b),
        opts,
    )
}

/// Quantile of `Gamma(shape, rate)`.
pub fn gamma_quantile(p: f64, shape: f64, rate: f64) -> Result<f64> {
    gamma_quantile_with(p, shape, rate, QuantileOptions::default())
}

pub fn gamma_quantile_with(p: f64, shape: f64, rate: f64, opts: QuantileOptions) -> Result<f64> {
    check_p(p)?;
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(Error::domain(format!("gamma shape must be positive, got {shape}")));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::domain(format!("gamma rate must be positive, got {rate}")));
    }
    let mut hi = shape.max(1.0);
    while reg_inc_gamma(shape, hi)? < p {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::numeric("could not bracket gamma quantile"));
        }
    }
    let q = invert_cdf(
        p,
        |x| reg_inc_gamma(shape, x),
        |x| gamma_pdf(shape, x),
        0.0,
        hi,
        shape,
        opts,
    )?;
    Ok(q / rate)
}

/// Standard normal quantile, through `Z^2 / 2 ~ Gamma(1/2, 1)`.
pub fn normal_quantile(p: f64) -> Result<f64> {
    check_p(p)?;
    if p == 0.5 {
        return Ok(0.0);
    }
    let tail = (2.0 * p - 1.0).abs();
    let z = (2.0 * gamma_quantile(tail, 0.5, 1.0)?).sqrt();
    Ok(if p > 0.5 { z } else { -z })
}

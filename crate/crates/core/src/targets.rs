//! Conditional target processes for the exactly sufficient families and the
//! exact reverse-coherence defect.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Running count summary `(n, S_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CountPath {
    pub n: u64,
    pub s: u64,
}

impl CountPath {
    pub fn push(&mut self, y: u64) {
        self.n += 1;
        self.s += y;
    }
}

/// Running Gaussian summary with known variance and a `N(0, 1)` prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPath {
    pub n: u64,
    pub sum: f64,
    pub sigma2: f64,
}

impl GaussianPath {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::domain(format!("sigma2 must be positive, got {sigma2}")));
        }
        Ok(Self { n: 0, sum: 0.0, sigma2 })
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
    }

    pub fn xbar(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    pub fn posterior_mean(&self) -> f64 {
        // n * xbar / sigma2 / (n / sigma2 + 1), written without forming xbar
        (self.sum / self.sigma2) / (self.n as f64 / self.sigma2 + 1.0)
    }
}

/// Targets whose exact reverse defect can be evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// `S_n / n`
    RunningMean,
    /// `(S_n + 1/2) / (n + 1)`
    JeffreysMean,
}

/// Jeffreys `Beta(1/2, 1/2)` posterior mean of a Bernoulli probability.
pub fn bernoulli_jeffreys_mean(s: u64, n: u64) -> Result<f64> {
    if s > n {
        return Err(Error::domain(format!("successes {s} exceed trials {n}")));
    }
    Ok((s as f64 + 0.5) / (n as f64 + 1.0))
}

/// Posterior mean `a / (a + b + k)` after `k` failures under a `Beta(a, b)` prior.
pub fn beta_prior_all_failure_mean(a: f64, b: f64, k: u64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::domain(format!("prior shapes must be positive, got a={a} b={b}")));
    }
    Ok(a / (a + b + k as f64))
}

/// Posterior mean of a Poisson rate under the `Gamma(1/2, 1)` prior:
/// the posterior is `Gamma(s + 1/2, n + 1)`.
pub fn poisson_jeffreys_mean(s: u64, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("poisson target needs at least one observation"));
    }
    Ok((s as f64 + 0.5) / (n as f64 + 1.0))
}

/// Conjugate posterior mean of a Gaussian mean under a `N(0, 1)` prior.
pub fn gaussian_posterior_mean(xbar: f64, n: u64, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::domain(format!("sigma2 must be positive, got {sigma2}")));
    }
    let precision = n as f64 / sigma2;
    Ok(precision * xbar / (precision + 1.0))
}

pub fn running_mean(s: u64, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("running mean of zero observations"));
    }
    Ok(s as f64 / n as f64)
}

/// Exact fraction over `i128`; only used for the defect identities.
#[derive(Debug, Clone, Copy)]
struct Frac {
    num: i128,
    den: i128,
}

impl Frac {
    fn new(num: i128, den: i128) -> Self {
        Self { num, den }
    }

    fn sub(self, o: Frac) -> Frac {
        let g = gcd(self.den, o.den);
        let l = self.den / g * o.den;
        Frac::new(self.num * (l / self.den) - o.num * (l / o.den), l)
    }

    fn to_f64(self) -> f64 {
        if self.num == 0 {
            return 0.0;
        }
        let g = gcd(self.num.abs(), self.den);
        (self.num / g) as f64 / (self.den / g) as f64
    }
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.abs().max(1)
}

/// `E[M_n | S_{n+1} = s_next] - M_{n+1}` for a Bernoulli stream.
///
/// Uses the exchangeable sub-sum identity `E[S_n | S_{n+1}] = S_{n+1} n / (n + 1)`
/// and exact rational arithmetic, so the running mean yields exactly zero.
pub fn exact_reverse_defect(kind: TargetKind, s_next: u64, n: u64) -> Result<f64> {
    if s_next > n + 1 {
        return Err(Error::domain(format!(
            "S_(n+1) = {s_next} exceeds n + 1 = {}",
            n + 1
        )));
    }
    defect_from_subsum(kind, s_next, n)
}

/// Poisson analogue of [`exact_reverse_defect`]: given the total of `n + 1`
/// iid Poisson counts, the first `n` sum to `Binomial(S_{n+1}, n/(n+1))`, so
/// the same sub-sum identity applies.
pub fn exact_reverse_defect_poisson(kind: TargetKind, s_next: u64, n: u64) -> Result<f64> {
    defect_from_subsum(kind, s_next, n)
}

fn defect_from_subsum(kind: TargetKind, s_next: u64, n: u64) -> Result<f64> {
    let s = s_next as i128;
    let n_i = n as i128;
    // E[S_n | S_{n+1} = s] = s n / (n + 1)
    let cond = match kind {
        TargetKind::RunningMean => {
            if n == 0 {
                return Err(Error::domain("running mean undefined at n = 0"));
            }
            // (s n / (n + 1)) / n
            Frac::new(s * n_i, (n_i + 1) * n_i)
        }
        // (s n / (n + 1) + 1/2) / (n + 1)
        TargetKind::JeffreysMean => Frac::new(2 * s * n_i + n_i + 1, 2 * (n_i + 1) * (n_i + 1)),
    };
    let next = match kind {
        TargetKind::RunningMean => Frac::new(s, n_i + 1),
        TargetKind::JeffreysMean => Frac::new(2 * s + 1, 2 * (n_i + 2)),
    };
    Ok(cond.sub(next).to_f64())
}

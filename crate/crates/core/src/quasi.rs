//! Perturbed Bernoulli target processes: latent heterogeneity, exponential
//! smoothing and damped pseudo-count updates, plus the median stability
//! defect summary used to tell exact, quasi-martingale and drifting targets
//! apart.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logistic::{expit, logit};
use crate::rng::child_stream;

/// Which perturbation a path is generated under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum Perturbation {
    /// Per-observation logit-normal heterogeneity with scale `sigma`.
    Heterogeneity { sigma: f64 },
    /// Smoothing with gain `n^-gamma`.
    Smoothing { gamma: f64 },
    /// Pseudo-count forgetting with `lambda_n = kappa / (n + kappa)`.
    Damped { kappa: f64 },
}

impl Perturbation {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Perturbation::Heterogeneity { sigma } if sigma >= 0.0 && sigma.is_finite() => Ok(()),
            Perturbation::Smoothing { gamma } if gamma > 0.0 && gamma <= 1.0 => Ok(()),
            Perturbation::Damped { kappa } if kappa >= 0.0 && kappa.is_finite() => Ok(()),
            other => Err(Error::config(format!("invalid perturbation parameters: {other:?}"))),
        }
    }

    /// The parameter value that makes the target an exact reverse martingale.
    pub fn is_exact(&self) -> bool {
        match *self {
            Perturbation::Heterogeneity { sigma } => sigma == 0.0,
            Perturbation::Smoothing { gamma } => gamma == 1.0,
            Perturbation::Damped { kappa } => kappa == 0.0,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Perturbation::Heterogeneity { sigma } => format!("A_sigma={sigma}"),
            Perturbation::Smoothing { gamma } => format!("B_gamma={gamma}"),
            Perturbation::Damped { kappa } => format!("C_kappa={kappa}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub perturbation: Perturbation,
    pub base_rate: f64,
    pub n_max: usize,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_rate > 0.0 && self.base_rate < 1.0) {
            return Err(Error::config(format!(
                "base rate must lie in (0, 1), got {}",
                self.base_rate
            )));
        }
        if self.n_max == 0 {
            return Err(Error::config("n_max must be positive"));
        }
        self.perturbation.validate()
    }

    pub fn generate(&self) -> Result<ScenarioPath> {
        self.validate()?;
        let (p, n, seed) = (self.base_rate, self.n_max, self.seed);
        match self.perturbation {
            Perturbation::Heterogeneity { sigma } => scenario_a_path(p, sigma, n, seed),
            Perturbation::Smoothing { gamma } => scenario_b_path(p, gamma, n, seed),
            Perturbation::Damped { kappa } => scenario_c_path(p, kappa, n, seed),
        }
    }
}

/// Observations `y_1..y_n` and the target values `M_1..M_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPath {
    pub y: Vec<u8>,
    pub m: Vec<f64>,
}

impl ScenarioPath {
    /// `M_n` for `n >= 1`.
    pub fn m_at(&self, n: usize) -> f64 {
        self.m[n - 1]
    }

    /// `|M_n - M_(n-1)|`, infinite at `n = 1`.
    pub fn r_at(&self, n: usize) -> f64 {
        if n < 2 {
            f64::INFINITY
        } else {
            (self.m[n - 1] - self.m[n - 2]).abs()
        }
    }
}

// Substream ids: uniforms deciding each label, and latent normals.
const UNIFORMS: u64 = 0;
const LATENT: u64 = 1;

fn check_rate(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("base rate must lie in (0, 1), got {p}")));
    }
    Ok(())
}

/// Plain iid `Bernoulli(p)` labels; the label stream shared by all scenarios.
pub fn bernoulli_labels(p: f64, n: usize, seed: u64) -> Result<Vec<u8>> {
    check_rate(p)?;
    let mut u = child_stream(seed, &[UNIFORMS]);
    Ok((0..n).map(|_| u8::from(u.random::<f64>() < p)).collect())
}

fn running_means(y: &[u8]) -> Vec<f64> {
    let mut s = 0u64;
    y.iter()
        .enumerate()
        .map(|(i, &v)| {
            s += u64::from(v);
            s as f64 / (i + 1) as f64
        })
        .collect()
}

/// Latent heterogeneity: `p_i = expit(logit(p_base) + sigma Z_i)`, `M_n = S_n / n`.
pub fn scenario_a_path(p_base: f64, sigma: f64, n_max: usize, seed: u64) -> Result<ScenarioPath> {
    check_rate(p_base)?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma must be >= 0, got {sigma}")));
    }
    let y = if sigma == 0.0 {
        bernoulli_labels(p_base, n_max, seed)?
    } else {
        let mut u = child_stream(seed, &[UNIFORMS]);
        let mut z = child_stream(seed, &[LATENT]);
        let base = logit(p_base);
        (0..n_max)
            .map(|_| {
                let zi: f64 = z.sample(StandardNormal);
                let pi = expit(base + sigma * zi);
                u8::from(u.random::<f64>() < pi)
            })
            .collect()
    };
    let m = running_means(&y);
    Ok(ScenarioPath { y, m })
}

/// `M_1 = Y_1`, then `M_n = a_n Y_n + (1 - a_n) M_(n-1)` with `a_n = n^-gamma`.
pub fn smoothing_recursion(y: &[u8], gamma: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut m = 0.0;
    for (i, &v) in y.iter().enumerate() {
        let a = ((i + 1) as f64).powf(-gamma);
        m = a * f64::from(v) + (1.0 - a) * m;
        out.push(m);
    }
    out
}

/// Exponential smoothing of a `Bernoulli(p_base)` stream. At `gamma = 1` the
/// recursion is the running mean and is evaluated in closed form.
pub fn scenario_b_path(p_base: f64, gamma: f64, n_max: usize, seed: u64) -> Result<ScenarioPath> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::domain(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    let y = bernoulli_labels(p_base, n_max, seed)?;
    let m = if gamma == 1.0 {
        running_means(&y)
    } else {
        smoothing_recursion(&y, gamma)
    };
    Ok(ScenarioPath { y, m })
}

/// Jeffreys pseudo-counts whose excess over the base shrinks by
/// `1 - kappa / (n + kappa)` before each update.
pub fn damped_pseudo_counts(y: &[u8], kappa: f64) -> Vec<f64> {
    const A0: f64 = 0.5;
    const B0: f64 = 0.5;
    let (mut a, mut b) = (A0, B0);
    let mut out = Vec::with_capacity(y.len());
    for (i, &v) in y.iter().enumerate() {
        let n = (i + 1) as f64;
        let keep = 1.0 - kappa / (n + kappa);
        let yv = f64::from(v);
        a = keep * (a - A0) + A0 + yv;
        b = keep * (b - B0) + B0 + (1.0 - yv);
        out.push(a / (a + b));
    }
    out
}

pub fn scenario_c_path(p_base: f64, kappa: f64, n_max: usize, seed: u64) -> Result<ScenarioPath> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::domain(format!("kappa must be >= 0, got {kappa}")));
    }
    let y = bernoulli_labels(p_base, n_max, seed)?;
    let m = damped_pseudo_counts(&y, kappa);
    Ok(ScenarioPath { y, m })
}

/// Median of a sample; the mean of the two middle order statistics for even sizes.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let k = values.len();
    Some(if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    })
}

pub const DEFAULT_CHECKPOINTS: [usize; 3] = [100, 500, 2000];

/// Cross-replication median of `|M_n - M_(n-1)|` at each checkpoint. Paths
/// hold `M_1..M_N`.
pub fn defect_summary(paths: &[Vec<f64>], checkpoints: &[usize]) -> Result<Vec<f64>> {
    if paths.is_empty() {
        return Err(Error::argument("no paths to summarize"));
    }
    checkpoints
        .iter()
        .map(|&n| {
            if n < 2 {
                return Err(Error::argument(format!("checkpoint {n} has no defect")));
            }
            let mut r = paths
                .iter()
                .map(|m| {
                    if n > m.len() {
                        Err(Error::argument(format!(
                            "checkpoint {n} beyond a path of length {}",
                            m.len()
                        )))
                    } else {
                        Ok((m[n - 1] - m[n - 2]).abs())
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(median(&mut r).expect("non-empty"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{bernoulli_jeffreys_mean, running_mean};

    #[test]
    fn sigma_zero_is_plain_bernoulli() {
        let a = scenario_a_path(0.02, 0.0, 500, 9).unwrap();
        assert_eq!(a.y, bernoulli_labels(0.02, 500, 9).unwrap());
        assert_eq!(a, scenario_a_path(0.02, 0.0, 500, 9).unwrap());
        let b = scenario_a_path(0.02, 1.0, 500, 9).unwrap();
        assert_eq!(b, scenario_a_path(0.02, 1.0, 500, 9).unwrap());
    }

    #[test]
    fn heterogeneity_marginal_rate_matches_quadrature() {
        // E[expit(logit(p) + Z)] by the trapezoid rule on [-12, 12]
        let p: f64 = 0.02;
        let base = logit(p);
        let h = 1e-3;
        let mut integral = 0.0;
        let mut z: f64 = -12.0;
        while z <= 12.0 {
            let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
            integral += expit(base + z) * phi * h;
            z += h;
        }
        assert!((integral - 0.031_088_017_999_666).abs() < 1e-6);
        let n = 200_000;
        let path = scenario_a_path(p, 1.0, n, 17).unwrap();
        let rate = path.m[n - 1];
        let se = (integral * (1.0 - integral) / n as f64).sqrt();
        assert!((rate - integral).abs() < 4.0 * se, "rate {rate} vs {integral}");
    }

    #[test]
    fn gamma_one_reproduces_running_mean() {
        for seed in 0..100 {
            let path = scenario_b_path(0.3, 1.0, 2000, seed).unwrap();
            let mut s = 0;
            for (i, &y) in path.y.iter().enumerate() {
                s += u64::from(y);
                assert_eq!(path.m[i], running_mean(s, i as u64 + 1).unwrap());
            }
            let rec = smoothing_recursion(&path.y, 1.0);
            for (a, b) in rec.iter().zip(&path.m) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn kappa_zero_reproduces_jeffreys_mean() {
        for seed in 0..100 {
            let path = scenario_c_path(0.3, 0.0, 2000, seed).unwrap();
            let mut s = 0;
            for (i, &y) in path.y.iter().enumerate() {
                s += u64::from(y);
                assert_eq!(path.m[i], bernoulli_jeffreys_mean(s, i as u64 + 1).unwrap());
            }
        }
    }

    #[test]
    fn damped_two_step_example() {
        let exact = damped_pseudo_counts(&[1, 0], 0.0);
        let damped = damped_pseudo_counts(&[1, 0], 2.0);
        assert_eq!(exact, vec![0.75, 0.5]);
        assert_eq!(damped[0], 0.75);
        assert!((damped[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn all_zero_paths() {
        assert!(smoothing_recursion(&[0; 50], 0.5).iter().all(|&m| m == 0.0));
        for kappa in [0.0, 0.5, 2.0, 50.0] {
            let m = damped_pseudo_counts(&[0; 200], kappa);
            assert!(m.windows(2).all(|w| w[1] < w[0]), "kappa={kappa}");
        }
    }

    #[test]
    fn targets_stay_in_unit_interval() {
        for (i, pert) in [
            Perturbation::Heterogeneity { sigma: 2.0 },
            Perturbation::Smoothing { gamma: 0.3 },
            Perturbation::Damped { kappa: 5.0 },
        ]
        .into_iter()
        .enumerate()
        {
            let spec = PerturbationSpec {
                perturbation: pert,
                base_rate: 0.4,
                n_max: 1000,
                seed: i as u64,
            };
            let path = spec.generate().unwrap();
            assert!(path.m.iter().all(|m| (0.0..=1.0).contains(m)));
        }
    }

    #[test]
    fn defect_summary_examples() {
        let flat = vec![vec![0.25; 2000]; 5];
        assert_eq!(defect_summary(&flat, &DEFAULT_CHECKPOINTS).unwrap(), vec![0.0; 3]);
        assert!(defect_summary(&[vec![0.1; 50]], &[100]).is_err());
        assert!(defect_summary(&[], &[10]).is_err());
    }

    fn medians(pert: Perturbation, reps: u64) -> Vec<f64> {
        let paths: Vec<Vec<f64>> = (0..reps)
            .map(|seed| {
                PerturbationSpec {
                    perturbation: pert,
                    base_rate: 0.01,
                    n_max: 2000,
                    seed,
                }
                .generate()
                .unwrap()
                .m
            })
            .collect();
        defect_summary(&paths, &DEFAULT_CHECKPOINTS).unwrap()
    }

    #[test]
    fn smoothing_defect_ordering() {
        let r05 = medians(Perturbation::Smoothing { gamma: 0.5 }, 1000);
        let r075 = medians(Perturbation::Smoothing { gamma: 0.75 }, 1000);
        let r1 = medians(Perturbation::Smoothing { gamma: 1.0 }, 1000);
        assert!(r05[2] > r075[2] && r075[2] > r1[2], "{r05:?} {r075:?} {r1:?}");
        assert!(r05[2] > r05[0]);
        assert!(r1[2] < r1[0]);
    }
}

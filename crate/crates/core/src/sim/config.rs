use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quasi::Perturbation;
use crate::scorecard::ScorecardConfig;
use crate::targets::TargetKind;

pub const DEFAULT_MASTER_SEED: u64 = 2718;
pub const DEFAULT_REPS: usize = 1000;

/// Where the stability defect `r_n` of an exactly sufficient target comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectSource {
    /// `|E[M_(n-1) | S_n] - M_n|` evaluated exactly.
    ExactDefect,
    /// Observable step change `|M_n - M_(n-1)|`.
    StepChange,
}

impl DefectSource {
    pub fn as_str(self) -> &'static str {
        match self {
            DefectSource::ExactDefect => "exact_defect",
            DefectSource::StepChange => "step_change",
        }
    }
}

/// Shared scorecard settings of a study (epsilon varies per cell in some studies).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleSettings {
    pub width_max: f64,
    pub eta: f64,
    pub n_min: usize,
    pub alpha: f64,
}

impl RuleSettings {
    pub fn scorecard(&self, epsilon: f64, n_max: usize) -> ScorecardConfig {
        ScorecardConfig {
            epsilon,
            width_max: self.width_max,
            eta: self.eta,
            n_min: self.n_min,
            n_max,
            alpha: self.alpha,
        }
    }
}

/// Bernoulli rare-event study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliStudy {
    pub ps: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub n_max: usize,
    pub rules: RuleSettings,
    /// Target whose boundary distance is monitored.
    pub target: TargetKind,
    pub defect: DefectSource,
    pub sprt_alpha: f64,
    pub sprt_beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticScenario {
    pub d: usize,
    pub rho: f64,
    pub n_max: usize,
}

/// Ridge logistic study evaluated at the covariate origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticStudy {
    pub scenarios: Vec<LogisticScenario>,
    pub ridge: f64,
    pub epsilon: f64,
    pub rules: RuleSettings,
    pub diverge_norm: f64,
}

/// Gaussian mean with known variance and a `N(0, 1)` prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalStudy {
    pub mus: Vec<f64>,
    pub sigma2: f64,
    pub epsilon: f64,
    pub n_max: usize,
    pub rules: RuleSettings,
    pub cusum_k: f64,
    pub arl0: f64,
    pub calibration_runs: usize,
}

/// Poisson rare-event surveillance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonStudy {
    pub lambdas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub n_max: usize,
    pub rules: RuleSettings,
    pub target: TargetKind,
    pub defect: DefectSource,
    pub sprt_alpha: f64,
    pub sprt_beta: f64,
    pub arl0: f64,
    pub calibration_runs: usize,
}

/// Perturbed Bernoulli targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiStudy {
    pub perturbations: Vec<Perturbation>,
    pub base_rate: f64,
    pub epsilon: f64,
    pub n_max: usize,
    pub rules: RuleSettings,
    pub checkpoints: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum StudyDesign {
    Bernoulli(BernoulliStudy),
    Logistic(LogisticStudy),
    Normal(NormalStudy),
    Poisson(PoissonStudy),
    Quasi(QuasiStudy),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub id: u8,
    pub reps: usize,
    pub design: StudyDesign,
}

impl StudyConfig {
    /// Default design of a Monte Carlo study. Ids 5 and 6 are single-series
    /// monitoring runs and have no Monte Carlo design.
    pub fn defaults(id: u8) -> Result<Self> {
        let design = match id {
            1 => StudyDesign::Bernoulli(BernoulliStudy {
                ps: vec![0.001, 0.005, 0.010, 0.050],
                epsilons: vec![0.005, 0.010],
                n_max: 5000,
                rules: RuleSettings {
                    width_max: 0.02,
                    eta: 1e-6,
                    n_min: 30,
                    alpha: 0.05,
                },
                target: TargetKind::RunningMean,
                defect: DefectSource::ExactDefect,
                sprt_alpha: 0.05,
                sprt_beta: 0.05,
            }),
            2 => StudyDesign::Logistic(LogisticStudy {
                scenarios: vec![
                    LogisticScenario { d: 3, rho: 0.01, n_max: 500 },
                    LogisticScenario { d: 3, rho: 0.005, n_max: 500 },
                    LogisticScenario { d: 20, rho: 0.01, n_max: 1000 },
                ],
                ridge: 1.0,
                epsilon: 0.05,
                rules: RuleSettings {
                    width_max: 0.05,
                    eta: 0.01,
                    n_min: 30,
                    alpha: 0.05,
                },
                diverge_norm: crate::logistic::DIVERGE_NORM,
            }),
            3 => StudyDesign::Normal(NormalStudy {
                mus: vec![0.0, 0.01, 0.02, 0.05, 0.10],
                sigma2: 1.0,
                epsilon: 0.05,
                n_max: 3000,
                rules: RuleSettings {
                    width_max: 0.05,
                    eta: 1e-6,
                    n_min: 30,
                    alpha: 0.05,
                },
                cusum_k: 0.025,
                arl0: 500.0,
                calibration_runs: 2000,
            }),
            4 => StudyDesign::Poisson(PoissonStudy {
                lambdas: vec![0.001, 0.005, 0.010, 0.050],
                epsilons: vec![0.005, 0.010],
                n_max: 5000,
                rules: RuleSettings {
                    width_max: 0.02,
                    eta: 1e-6,
                    n_min: 30,
                    alpha: 0.05,
                },
                target: TargetKind::RunningMean,
                defect: DefectSource::ExactDefect,
                sprt_alpha: 0.05,
                sprt_beta: 0.05,
                arl0: 500.0,
                calibration_runs: 2000,
            }),
            7 => StudyDesign::Quasi(QuasiStudy {
                perturbations: vec![
                    Perturbation::Heterogeneity { sigma: 0.0 },
                    Perturbation::Heterogeneity { sigma: 0.3 },
                    Perturbation::Heterogeneity { sigma: 1.0 },
                    Perturbation::Smoothing { gamma: 1.0 },
                    Perturbation::Smoothing { gamma: 0.75 },
                    Perturbation::Smoothing { gamma: 0.5 },
                    Perturbation::Damped { kappa: 0.0 },
                    Perturbation::Damped { kappa: 0.5 },
                    Perturbation::Damped { kappa: 2.0 },
                ],
                base_rate: 0.01,
                epsilon: 0.05,
                n_max: 2000,
                rules: RuleSettings {
                    width_max: 0.05,
                    eta: 0.01,
                    n_min: 30,
                    alpha: 0.05,
                },
                checkpoints: crate::quasi::DEFAULT_CHECKPOINTS.to_vec(),
            }),
            5 | 6 => {
                return Err(Error::config(format!(
                    "study {id} monitors a single series; use the monitor subcommand"
                )))
            }
            other => return Err(Error::config(format!("unknown study id {other}"))),
        };
        Ok(Self {
            id,
            reps: DEFAULT_REPS,
            design,
        })
    }

    pub fn with_reps(mut self, reps: usize) -> Self {
        self.reps = reps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::config("need at least one replication"));
        }
        let nonempty = |len: usize, what: &str| {
            if len == 0 {
                Err(Error::config(format!("study {}: empty {what} grid", self.id)))
            } else {
                Ok(())
            }
        };
        let rate = |p: f64, what: &str| {
            if p > 0.0 && p < 1.0 {
                Ok(())
            } else {
                Err(Error::config(format!("{what} must lie in (0, 1), got {p}")))
            }
        };
        match &self.design {
            StudyDesign::Bernoulli(s) => {
                nonempty(s.ps.len(), "probability")?;
                nonempty(s.epsilons.len(), "epsilon")?;
                for &p in &s.ps {
                    rate(p, "p")?;
                }
                for &e in &s.epsilons {
                    s.rules.scorecard(e, s.n_max).validate()?;
                    crate::benchmarks::SprtConfig {
                        p0: e,
                        p1: e / 2.0,
                        alpha: s.sprt_alpha,
                        beta: s.sprt_beta,
                    }
                    .validate()?;
                }
            }
            StudyDesign::Logistic(s) => {
                nonempty(s.scenarios.len(), "scenario")?;
                for sc in &s.scenarios {
                    if sc.d == 0 {
                        return Err(Error::config("logistic scenario needs d >= 1"));
                    }
                    rate(sc.rho, "rho")?;
                    s.rules.scorecard(s.epsilon, sc.n_max).validate()?;
                }
                if !(s.ridge > 0.0) {
                    return Err(Error::config("the logistic study needs a positive ridge penalty"));
                }
            }
            StudyDesign::Normal(s) => {
                nonempty(s.mus.len(), "mean")?;
                if s.mus.iter().any(|m| !m.is_finite()) || !(s.sigma2 > 0.0) {
                    return Err(Error::config("means must be finite and sigma2 positive"));
                }
                s.rules.scorecard(s.epsilon, s.n_max).validate_real_scale()?;
                check_arl(s.arl0, s.calibration_runs)?;
            }
            StudyDesign::Poisson(s) => {
                nonempty(s.lambdas.len(), "rate")?;
                nonempty(s.epsilons.len(), "epsilon")?;
                if s.lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
                    return Err(Error::config("Poisson rates must be positive"));
                }
                for &e in &s.epsilons {
                    s.rules.scorecard(e, s.n_max).validate_real_scale()?;
                    crate::benchmarks::PoissonSprtConfig {
                        lambda0: e,
                        lambda1: e / 2.0,
                        alpha: s.sprt_alpha,
                        beta: s.sprt_beta,
                    }
                    .validate()?;
                }
                check_arl(s.arl0, s.calibration_runs)?;
            }
            StudyDesign::Quasi(s) => {
                nonempty(s.perturbations.len(), "perturbation")?;
                rate(s.base_rate, "base rate")?;
                for p in &s.perturbations {
                    p.validate()?;
                }
                s.rules.scorecard(s.epsilon, s.n_max).validate()?;
                if let Some(&c) = s.checkpoints.iter().find(|&&c| c < 2 || c > s.n_max) {
                    return Err(Error::config(format!(
                        "checkpoint {c} outside 2..={}",
                        s.n_max
                    )));
                }
            }
        }
        Ok(())
    }

    /// Source of `r_n` recorded in output metadata.
    pub fn defect_source(&self) -> DefectSource {
        match &self.design {
            StudyDesign::Bernoulli(s) => s.defect,
            StudyDesign::Poisson(s) => s.defect,
            _ => DefectSource::StepChange,
        }
    }
}

fn check_arl(arl0: f64, runs: usize) -> Result<()> {
    if !(arl0 > 1.0) || runs == 0 {
        return Err(Error::config(format!(
            "CUSUM calibration needs ARL_0 > 1 and at least one run, got {arl0} and {runs}"
        )));
    }
    Ok(())
}

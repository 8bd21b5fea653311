//! Replication engine for the Monte Carlo studies.
//!
//! Replication `j` of grid cell `c` draws from the stream seeded by
//! `derive_seed(master, [c, j])`. Replications run in parallel and are merged
//! in `(cell, replication)` order, so results do not depend on the number of
//! threads.

use std::cell::RefCell;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::*;
use super::summary::{summarize, SummaryRow};
use super::table::Metadata;
use crate::benchmarks::{
    calibrate_cusum_threshold, Cusum, CusumCalibration, CusumModel, PoissonSprtConfig, Sprt,
    SprtConfig,
};
use crate::error::{Error, Result};
use crate::logistic::{
    detect_separation, fit_ridge_logistic_from, predict_prob, predict_prob_complement,
    predictive_width, LogisticDesign, LogisticStream, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::quasi::{median, PerturbationSpec};
use crate::rng::{derive_seed, stream};
use crate::scorecard::{Rule, RuleTracker, StopReport};
use crate::targets::{exact_reverse_defect, exact_reverse_defect_poisson, GaussianPath, TargetKind};
use crate::uncertainty::{gaussian_width_with_z, jeffreys_beta_width, jeffreys_gamma_width, z_upper};

/// Seed-path tag for threshold calibrations, kept apart from cell indices.
const CALIBRATION_TAG: u64 = u64::MAX;

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    /// One report per rule, in the cell's rule order.
    pub reports: Vec<StopReport>,
    pub separated: Option<bool>,
    /// `r_n` at the study's checkpoints.
    pub checkpoint_r: Vec<f64>,
    /// Largest step change `|M_n - M_(n-1)|` for `n >= n_min` over the simulated prefix.
    pub max_step_r: f64,
}

impl RepOutcome {
    pub fn report(&self, rules: &[Rule], rule: Rule) -> Option<&StopReport> {
        rules.iter().position(|&r| r == rule).map(|i| &self.reports[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub label: String,
    pub truth: f64,
    pub epsilon: f64,
    pub rules: Vec<Rule>,
    pub checkpoints: Vec<usize>,
    pub reps: Vec<RepOutcome>,
}

impl CellOutcome {
    pub fn reports(&self, rule: Rule) -> Vec<StopReport> {
        self.reps
            .iter()
            .filter_map(|r| r.report(&self.rules, rule).copied())
            .collect()
    }
}

/// Full record of a study run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRun {
    pub config: StudyConfig,
    pub seed: u64,
    pub cells: Vec<CellOutcome>,
    /// Calibrated CUSUM thresholds, keyed by a label.
    pub calibrations: Vec<(String, CusumCalibration)>,
}

const SCORECARD_RULES: [Rule; 3] = [Rule::BoundaryOnly, Rule::TwoCond, Rule::Rm];

fn rules_with(extra: &[Rule]) -> Vec<Rule> {
    SCORECARD_RULES.iter().chain(extra).copied().collect()
}

fn rep_seed(master: u64, cell: usize, rep: usize) -> u64 {
    derive_seed(master, &[cell as u64, rep as u64])
}

/// Collects the first error raised inside a lazily evaluated closure.
struct ErrorSlot(RefCell<Option<Error>>);

impl ErrorSlot {
    fn new() -> Self {
        Self(RefCell::new(None))
    }

    fn value(&self, r: Result<f64>) -> f64 {
        r.unwrap_or_else(|e| {
            self.0.borrow_mut().get_or_insert(e);
            f64::INFINITY
        })
    }

    fn check(self) -> Result<()> {
        self.0.into_inner().map_or(Ok(()), Err)
    }
}

fn target_value(kind: TargetKind, s: u64, n: u64) -> f64 {
    match kind {
        TargetKind::RunningMean => s as f64 / n as f64,
        TargetKind::JeffreysMean => (s as f64 + 0.5) / (n as f64 + 1.0),
    }
}

fn par_reps<F>(reps: usize, f: F) -> Result<Vec<RepOutcome>>
where
    F: Fn(usize) -> Result<RepOutcome> + Sync + Send,
{
    (0..reps).into_par_iter().map(f).collect()
}

fn bernoulli_rep(s: &BernoulliStudy, p: f64, eps: f64, seed: u64) -> Result<RepOutcome> {
    let cfg = s.rules.scorecard(eps, s.n_max);
    let mut tracker = RuleTracker::new(cfg);
    let mut sprt = Sprt::bernoulli(&SprtConfig::new(eps, eps / 2.0, s.sprt_alpha, s.sprt_beta)?)?;
    let mut rng = stream(seed);
    let errors = ErrorSlot::new();
    let (mut sum, mut prev_m, mut max_step) = (0u64, f64::NAN, 0.0f64);
    let mut mle_at_rm = None;
    for n in 1..=s.n_max as u64 {
        let y = u64::from(rng.random::<f64>() < p);
        sum += y;
        let m = target_value(s.target, sum, n);
        let step = (m - prev_m).abs();
        if n as usize >= cfg.n_min && n > 1 {
            max_step = max_step.max(step);
        }
        if !tracker.all_stopped() {
            let f = tracker.observe_lazy(
                m,
                m.min(1.0 - m),
                || errors.value(jeffreys_beta_width(sum, n, cfg.alpha).map(|i| i.width())),
                || match (s.defect, n) {
                    (_, 1) => f64::INFINITY,
                    (DefectSource::ExactDefect, _) => {
                        errors.value(exact_reverse_defect(s.target, sum, n - 1)).abs()
                    }
                    (DefectSource::StepChange, _) => step,
                },
            );
            if f.rm && mle_at_rm.is_none() {
                mle_at_rm = Some(sum as f64 / n as f64);
            }
        }
        sprt.update(y);
        if tracker.all_stopped() && sprt.decided() {
            break;
        }
        prev_m = m;
    }
    errors.check()?;
    let r = tracker.reports();
    let rm = mle_at_rm.map_or(r.rm, |mle| r.rm.with_mle(mle));
    Ok(RepOutcome {
        reports: vec![r.boundary_only, r.two_cond, rm, sprt.report()],
        separated: None,
        checkpoint_r: Vec::new(),
        max_step_r: max_step,
    })
}

fn poisson_rep(s: &PoissonStudy, lambda: f64, eps: f64, h: f64, seed: u64) -> Result<RepOutcome> {
    let cfg = s.rules.scorecard(eps, s.n_max);
    let mut tracker = RuleTracker::new(cfg);
    let mut sprt = Sprt::poisson(&PoissonSprtConfig::new(eps, eps / 2.0, s.sprt_alpha, s.sprt_beta)?)?;
    let mut cusum = Cusum::new(CusumModel::Poisson { lambda0: eps, lambda1: 2.0 * eps }, h)?;
    let draw = Poisson::new(lambda).map_err(|e| Error::config(format!("Poisson rate {lambda}: {e}")))?;
    let mut rng = stream(seed);
    let errors = ErrorSlot::new();
    let (mut sum, mut prev_m, mut max_step) = (0u64, f64::NAN, 0.0f64);
    let mut mle_at_rm = None;
    for n in 1..=s.n_max as u64 {
        let x = draw.sample(&mut rng) as u64;
        sum += x;
        let m = target_value(s.target, sum, n);
        let step = (m - prev_m).abs();
        if n as usize >= cfg.n_min && n > 1 {
            max_step = max_step.max(step);
        }
        if !tracker.all_stopped() {
            let f = tracker.observe_lazy(
                m,
                m,
                || errors.value(jeffreys_gamma_width(sum, n, cfg.alpha).map(|i| i.width())),
                || match (s.defect, n) {
                    (_, 1) => f64::INFINITY,
                    (DefectSource::ExactDefect, _) => {
                        errors.value(exact_reverse_defect_poisson(s.target, sum, n - 1)).abs()
                    }
                    (DefectSource::StepChange, _) => step,
                },
            );
            if f.rm && mle_at_rm.is_none() {
                mle_at_rm = Some(sum as f64 / n as f64);
            }
        }
        sprt.update(x);
        cusum.update(x as f64);
        if tracker.all_stopped() && sprt.decided() && cusum.report().stopped() {
            break;
        }
        prev_m = m;
    }
    errors.check()?;
    let r = tracker.reports();
    let rm = mle_at_rm.map_or(r.rm, |mle| r.rm.with_mle(mle));
    Ok(RepOutcome {
        reports: vec![r.boundary_only, r.two_cond, rm, sprt.report(), cusum.report()],
        separated: None,
        checkpoint_r: Vec::new(),
        max_step_r: max_step,
    })
}

fn normal_rep(s: &NormalStudy, mu: f64, h: f64, z: f64, seed: u64) -> Result<RepOutcome> {
    let cfg = s.rules.scorecard(s.epsilon, s.n_max);
    let mut tracker = RuleTracker::new(cfg);
    let mut cusum = Cusum::new(CusumModel::Normal { k: s.cusum_k }, h)?;
    let mut path = GaussianPath::new(s.sigma2)?;
    let mut rng = stream(seed);
    // The width is deterministic; if it never reaches width_max inside the
    // horizon only the boundary rule can still fire.
    let width_unreachable = gaussian_width_with_z(s.n_max as u64, s.sigma2, z) > cfg.width_max;
    let (mut prev_m, mut max_step) = (f64::NAN, 0.0f64);
    for n in 1..=s.n_max {
        let x = mu + s.sigma2.sqrt() * rng.sample::<f64, _>(StandardNormal);
        path.push(x);
        let m = path.posterior_mean();
        let step = if n == 1 { f64::INFINITY } else { (m - prev_m).abs() };
        if n >= cfg.n_min && n > 1 {
            max_step = max_step.max(step);
        }
        if !tracker.all_stopped() {
            tracker.observe_lazy(m, m.abs(), || gaussian_width_with_z(n as u64, s.sigma2, z), || step);
        }
        cusum.update(x);
        let scorecard_done = tracker.all_stopped() || (width_unreachable && tracker.boundary_stopped());
        if scorecard_done && cusum.report().stopped() {
            break;
        }
        prev_m = m;
    }
    let r = tracker.reports();
    Ok(RepOutcome {
        reports: vec![r.boundary_only, r.two_cond, r.rm, cusum.report()],
        separated: None,
        checkpoint_r: Vec::new(),
        max_step_r: max_step,
    })
}

fn logistic_rep(s: &LogisticStudy, sc: &LogisticScenario, seed: u64) -> Result<RepOutcome> {
    let cfg = s.rules.scorecard(s.epsilon, sc.n_max);
    let mut tracker = RuleTracker::new(cfg);
    let mut design = LogisticDesign::new(sc.d, s.ridge)?;
    let origin = vec![0.0; sc.d];
    let mut beta = vec![0.0; sc.d + 1];
    let mut prev_m = f64::NAN;
    let mut max_step = 0.0f64;
    let errors = ErrorSlot::new();
    let first_fit = cfg.n_min.saturating_sub(1).max(1);
    for (i, (x, y)) in LogisticStream::new(sc.d, sc.rho, seed)?.take(sc.n_max).enumerate() {
        let n = i + 1;
        design.push(&x, y)?;
        if n < first_fit {
            tracker.observe_lazy(f64::NAN, f64::INFINITY, || f64::INFINITY, || f64::INFINITY);
            continue;
        }
        let fit = fit_ridge_logistic_from(&design, &beta, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        beta.clone_from(&fit.coefficients);
        let m = predict_prob(&beta, &origin)?;
        let b = m.min(predict_prob_complement(&beta, &origin)?);
        let step = (m - prev_m).abs();
        if n >= cfg.n_min {
            max_step = max_step.max(step);
        }
        tracker.observe_lazy(
            m,
            b,
            || {
                if fit.converged {
                    errors.value(predictive_width(&fit, &design, &origin, cfg.alpha))
                } else {
                    f64::INFINITY
                }
            },
            || if prev_m.is_nan() { f64::INFINITY } else { step },
        );
        prev_m = m;
        if tracker.all_stopped() {
            break;
        }
    }
    errors.check()?;
    // checked on the data seen up to the three-condition stop (or the horizon)
    let separated = detect_separation(&design, s.diverge_norm, DEFAULT_MAX_ITER);
    let r = tracker.reports();
    Ok(RepOutcome {
        reports: vec![r.boundary_only, r.two_cond, r.rm],
        separated: Some(separated),
        checkpoint_r: Vec::new(),
        max_step_r: max_step,
    })
}

fn quasi_rep(s: &QuasiStudy, spec: PerturbationSpec) -> Result<RepOutcome> {
    let cfg = s.rules.scorecard(s.epsilon, s.n_max);
    let path = spec.generate()?;
    let mut tracker = RuleTracker::new(cfg);
    let errors = ErrorSlot::new();
    let mut sum = 0u64;
    let mut max_step = 0.0f64;
    for n in 1..=s.n_max {
        sum += u64::from(path.y[n - 1]);
        let m = path.m_at(n);
        let r = path.r_at(n);
        if n >= cfg.n_min && n > 1 {
            max_step = max_step.max(r);
        }
        if !tracker.all_stopped() {
            tracker.observe_lazy(
                m,
                m.min(1.0 - m),
                || errors.value(jeffreys_beta_width(sum, n as u64, cfg.alpha).map(|i| i.width())),
                || r,
            );
        }
    }
    errors.check()?;
    let r = tracker.reports();
    Ok(RepOutcome {
        reports: vec![r.boundary_only, r.two_cond, r.rm],
        separated: None,
        checkpoint_r: s.checkpoints.iter().map(|&c| path.r_at(c)).collect(),
        max_step_r: max_step,
    })
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

/// Runs every replication of every grid cell.
pub fn simulate_study(config: &StudyConfig, master_seed: u64) -> Result<StudyRun> {
    config.validate()?;
    let reps = config.reps;
    let mut cells = Vec::new();
    let mut calibrations = Vec::new();
    match &config.design {
        StudyDesign::Bernoulli(s) => {
            let rules = rules_with(&[Rule::Sprt]);
            for (ei, &eps) in s.epsilons.iter().enumerate() {
                for (pi, &p) in s.ps.iter().enumerate() {
                    let c = ei * s.ps.len() + pi;
                    let outcomes = par_reps(reps, |j| bernoulli_rep(s, p, eps, rep_seed(master_seed, c, j)))?;
                    cells.push(CellOutcome {
                        label: format!("p={};eps={}", fmt_num(p), fmt_num(eps)),
                        truth: p,
                        epsilon: eps,
                        rules: rules.clone(),
                        checkpoints: Vec::new(),
                        reps: outcomes,
                    });
                }
            }
        }
        StudyDesign::Poisson(s) => {
            let rules = rules_with(&[Rule::Sprt, Rule::Cusum]);
            for (ei, &eps) in s.epsilons.iter().enumerate() {
                let cal = calibrate_cusum_threshold(
                    CusumModel::Poisson { lambda0: eps, lambda1: 2.0 * eps },
                    s.arl0,
                    s.calibration_runs,
                    derive_seed(master_seed, &[CALIBRATION_TAG, ei as u64]),
                )?;
                let h = cal.h;
                calibrations.push((format!("eps_{}", fmt_num(eps)), cal));
                for (li, &lambda) in s.lambdas.iter().enumerate() {
                    let c = ei * s.lambdas.len() + li;
                    let outcomes =
                        par_reps(reps, |j| poisson_rep(s, lambda, eps, h, rep_seed(master_seed, c, j)))?;
                    cells.push(CellOutcome {
                        label: format!("lambda={};eps={}", fmt_num(lambda), fmt_num(eps)),
                        truth: lambda,
                        epsilon: eps,
                        rules: rules.clone(),
                        checkpoints: Vec::new(),
                        reps: outcomes,
                    });
                }
            }
        }
        StudyDesign::Normal(s) => {
            let rules = rules_with(&[Rule::Cusum]);
            let cal = calibrate_cusum_threshold(
                CusumModel::Normal { k: s.cusum_k },
                s.arl0,
                s.calibration_runs,
                derive_seed(master_seed, &[CALIBRATION_TAG, 0]),
            )?;
            let h = cal.h;
            calibrations.push((format!("k_{}", fmt_num(s.cusum_k)), cal));
            let z = z_upper(s.rules.alpha)?;
            for (c, &mu) in s.mus.iter().enumerate() {
                let outcomes = par_reps(reps, |j| normal_rep(s, mu, h, z, rep_seed(master_seed, c, j)))?;
                cells.push(CellOutcome {
                    label: format!("mu={}", fmt_num(mu)),
                    truth: mu.abs(),
                    epsilon: s.epsilon,
                    rules: rules.clone(),
                    checkpoints: Vec::new(),
                    reps: outcomes,
                });
            }
        }
        StudyDesign::Logistic(s) => {
            for (c, sc) in s.scenarios.iter().enumerate() {
                let outcomes = par_reps(reps, |j| logistic_rep(s, sc, rep_seed(master_seed, c, j)))?;
                cells.push(CellOutcome {
                    label: format!("d={};rho={}", sc.d, fmt_num(sc.rho)),
                    truth: sc.rho,
                    epsilon: s.epsilon,
                    rules: SCORECARD_RULES.to_vec(),
                    checkpoints: Vec::new(),
                    reps: outcomes,
                });
            }
        }
        StudyDesign::Quasi(s) => {
            for (c, &pert) in s.perturbations.iter().enumerate() {
                let outcomes = par_reps(reps, |j| {
                    quasi_rep(
                        s,
                        PerturbationSpec {
                            perturbation: pert,
                            base_rate: s.base_rate,
                            n_max: s.n_max,
                            seed: rep_seed(master_seed, c, j),
                        },
                    )
                })?;
                cells.push(CellOutcome {
                    label: pert.label(),
                    truth: s.base_rate,
                    epsilon: s.epsilon,
                    rules: SCORECARD_RULES.to_vec(),
                    checkpoints: s.checkpoints.clone(),
                    reps: outcomes,
                });
            }
        }
    }
    Ok(StudyRun {
        config: config.clone(),
        seed: master_seed,
        cells,
        calibrations,
    })
}

impl StudyRun {
    pub fn rows(&self) -> Result<Vec<SummaryRow>> {
        let mut rows = Vec::new();
        for cell in &self.cells {
            let pct_sep = {
                let flags: Vec<bool> = cell.reps.iter().filter_map(|r| r.separated).collect();
                (!flags.is_empty())
                    .then(|| 100.0 * flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64)
            };
            let checkpoint_median = |target: usize| -> Option<f64> {
                let i = cell.checkpoints.iter().position(|&c| c == target)?;
                let mut v: Vec<f64> = cell.reps.iter().map(|r| r.checkpoint_r[i]).collect();
                median(&mut v)
            };
            let max_step = cell.reps.iter().map(|r| r.max_step_r).fold(0.0f64, f64::max);
            for &rule in &cell.rules {
                let mut row = summarize(rule, &cell.reports(rule), cell.truth, cell.epsilon)?;
                row.study = self.config.id;
                row.scenario = cell.label.clone();
                row.pct_sep = pct_sep;
                row.r_100 = checkpoint_median(100);
                row.r_500 = checkpoint_median(500);
                row.r_2000 = checkpoint_median(2000);
                if SCORECARD_RULES.contains(&rule) {
                    row.max_step_r = Some(max_step);
                }
                rows.push(row);
            }
        }
        Ok(rows)
    }

    /// Provenance recorded alongside emitted tables.
    pub fn metadata(&self) -> Result<Metadata> {
        let mut meta: Metadata = vec![
            ("study".into(), self.config.id.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("reps".into(), self.config.reps.to_string()),
            ("data".into(), "simulated".into()),
            ("r_source".into(), self.config.defect_source().as_str().into()),
        ];
        for (label, cal) in &self.calibrations {
            meta.push((
                format!("cusum_h[{label}]"),
                format!(
                    "{} (ARL0 estimate {:.1} over {} runs{})",
                    cal.h,
                    cal.arl0,
                    cal.mc_runs,
                    if cal.within_tolerance { "" } else { ", nearest attainable" }
                ),
            ));
        }
        let config = serde_json::to_string(&self.config)
            .map_err(|e| Error::numeric(format!("config serialization failed: {e}")))?;
        meta.push(("config".into(), config));
        meta.push(("version".into(), env!("CARGO_PKG_VERSION").into()));
        Ok(meta)
    }
}

/// Simulates a study and summarizes it into table rows.
pub fn run_study(config: &StudyConfig, master_seed: u64) -> Result<Vec<SummaryRow>> {
    simulate_study(config, master_seed)?.rows()
}

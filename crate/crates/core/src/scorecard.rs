//! Scorecard data model and the boundary / two-condition / three-condition
//! stopping rules.
//!
//! Every rule is a first-hitting time over `n >= n_min`:
//!
//! * boundary-only: `B_n <= epsilon`
//! * two-condition: `B_n <= epsilon` and `W_n <= width_max`
//! * three-condition: additionally `r_n <= eta`
//!
//! The conditions are checked at the same `n`; nothing latches. Because the
//! stopping sets are nested, `tau_bdy <= tau_2cond <= tau_rm` on every path,
//! with a censored rule ordered after every finite time.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tuning tuple shared by all scorecard rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorecardConfig {
    /// Boundary threshold, `0 < epsilon < 1/2` on the probability scale.
    pub epsilon: f64,
    /// Maximum tolerated uncertainty width.
    pub width_max: f64,
    /// Stability tolerance; `f64::INFINITY` disables the stability screen.
    pub eta: f64,
    /// Burn-in: no rule may stop before this index.
    pub n_min: usize,
    /// Censoring horizon.
    pub n_max: usize,
    /// Coverage level used by the width providers.
    pub alpha: f64,
}

impl ScorecardConfig {
    pub fn new(
        epsilon: f64,
        width_max: f64,
        eta: f64,
        n_min: usize,
        n_max: usize,
        alpha: f64,
    ) -> Result<Self> {
        let cfg = Self {
            epsilon,
            width_max,
            eta,
            n_min,
            n_max,
            alpha,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the probability-scale invariants (`epsilon < 1/2`).
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::config(format!(
                "epsilon must lie in (0, 1/2), got {}",
                self.epsilon
            )));
        }
        self.validate_common()
    }

    /// Checks everything except the upper bound on `epsilon`, for targets on
    /// an unbounded scale where the threshold is a physical level.
    pub fn validate_real_scale(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        self.validate_common()
    }

    fn validate_common(&self) -> Result<()> {
        if !(self.width_max > 0.0) {
            return Err(Error::config(format!(
                "width_max must be positive, got {}",
                self.width_max
            )));
        }
        if !(self.eta >= 0.0) {
            return Err(Error::config(format!(
                "eta must be nonnegative, got {}",
                self.eta
            )));
        }
        if self.n_min < 1 || self.n_min > self.n_max {
            return Err(Error::config(format!(
                "need 1 <= n_min <= n_max, got n_min={} n_max={}",
                self.n_min, self.n_max
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// One step of a monitored target: `(n, M_n, B_n, W_n, r_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepScore {
    pub n: usize,
    pub m: f64,
    pub b: f64,
    pub width: f64,
    pub r: f64,
}

impl StepScore {
    /// Score for a probability-scale target; `b = min(m, 1 - m)`.
    pub fn probability(n: usize, m: f64, width: f64, r: f64) -> Result<Self> {
        let b = boundary_distance(m)?;
        Self::checked(n, m, b, width, r)
    }

    /// Score for a real-scale target, with `b = |m - boundary|`.
    pub fn real(n: usize, m: f64, boundary: f64, width: f64, r: f64) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::domain(format!("target value must be finite, got {m}")));
        }
        Self::checked(n, m, (m - boundary).abs(), width, r)
    }

    fn checked(n: usize, m: f64, b: f64, width: f64, r: f64) -> Result<Self> {
        if !(width >= 0.0) {
            return Err(Error::domain(format!("width must be nonnegative, got {width}")));
        }
        if !(r >= 0.0) {
            return Err(Error::domain(format!("stability defect must be nonnegative, got {r}")));
        }
        Ok(Self { n, m, b, width, r })
    }
}

/// Distance of a probability from the nearer boundary.
pub fn boundary_distance(m: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::domain(format!("probability out of [0, 1]: {m}")));
    }
    Ok(m.min(1.0 - m))
}

/// Observable stability defect `|M_n - M_{n-1}|`.
pub fn stability_defect(m_curr: f64, m_prev: f64) -> f64 {
    (m_curr - m_prev).abs()
}

/// Stopping rules reported by the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    BoundaryOnly,
    TwoCond,
    Rm,
    Sprt,
    Cusum,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::BoundaryOnly => "boundary_only",
            Rule::TwoCond => "two_cond",
            Rule::Rm => "rm",
            Rule::Sprt => "sprt",
            Rule::Cusum => "cusum",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "boundary_only" => Rule::BoundaryOnly,
            "two_cond" => Rule::TwoCond,
            "rm" => Rule::Rm,
            "sprt" => Rule::Sprt,
            "cusum" => Rule::Cusum,
            _ => return None,
        })
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why a rule did not stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Censoring {
    /// The horizon (or the end of the data) was reached.
    Horizon,
    /// A sequential test terminated in favour of the null at this index.
    NullAccepted { at: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopTime {
    At(usize),
    Censored(Censoring),
}

impl StopTime {
    pub fn tau(self) -> Option<usize> {
        match self {
            StopTime::At(n) => Some(n),
            StopTime::Censored(_) => None,
        }
    }

    /// Orders stop times as extended integers with censoring at +infinity.
    pub fn cmp_extended(self, other: StopTime) -> Ordering {
        match (self.tau(), other.tau()) {
            (Some(a), Some(b)) => a.cmp(&b),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopReport {
    pub rule: Rule,
    pub time: StopTime,
    /// Target value at the stopping index.
    pub m_at_tau: Option<f64>,
    /// Raw (unsmoothed) estimate at the stopping index, when the caller has one.
    pub mle_at_tau: Option<f64>,
}

impl StopReport {
    pub fn stopped_at(rule: Rule, tau: usize, m: f64) -> Self {
        Self {
            rule,
            time: StopTime::At(tau),
            m_at_tau: Some(m),
            mle_at_tau: None,
        }
    }

    pub fn censored(rule: Rule, why: Censoring) -> Self {
        Self {
            rule,
            time: StopTime::Censored(why),
            m_at_tau: None,
            mle_at_tau: None,
        }
    }

    pub fn stopped(&self) -> bool {
        self.time.tau().is_some()
    }

    pub fn tau(&self) -> Option<usize> {
        self.time.tau()
    }

    pub fn with_mle(mut self, mle: f64) -> Self {
        if self.stopped() {
            self.mle_at_tau = Some(mle);
        }
        self
    }
}

/// Reports of the three scorecard rules on one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleReports {
    pub boundary_only: StopReport,
    pub two_cond: StopReport,
    pub rm: StopReport,
}

impl RuleReports {
    pub fn get(&self, rule: Rule) -> Option<&StopReport> {
        match rule {
            Rule::BoundaryOnly => Some(&self.boundary_only),
            Rule::TwoCond => Some(&self.two_cond),
            Rule::Rm => Some(&self.rm),
            _ => None,
        }
    }

    /// `tau_bdy <= tau_2cond <= tau_rm` with censoring at +infinity.
    pub fn is_nested(&self) -> bool {
        self.boundary_only.time.cmp_extended(self.two_cond.time) != Ordering::Greater
            && self.two_cond.time.cmp_extended(self.rm.time) != Ordering::Greater
    }
}

/// Which conditions hold at one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Firing {
    pub boundary_only: bool,
    pub two_cond: bool,
    pub rm: bool,
}

/// Streaming evaluator for the three scorecard rules.
///
/// Feed steps in order `n = 1, 2, ...`; each rule records its first
/// qualifying index at or after `n_min`.
#[derive(Debug, Clone)]
pub struct RuleTracker {
    config: ScorecardConfig,
    next_n: usize,
    bdy: Option<(usize, f64)>,
    two: Option<(usize, f64)>,
    rm: Option<(usize, f64)>,
}

impl RuleTracker {
    pub fn new(config: ScorecardConfig) -> Self {
        Self {
            config,
            next_n: 1,
            bdy: None,
            two: None,
            rm: None,
        }
    }

    pub fn config(&self) -> &ScorecardConfig {
        &self.config
    }

    /// Index expected by the next call to [`observe`](Self::observe).
    pub fn next_index(&self) -> usize {
        self.next_n
    }

    /// All three rules have stopped; later steps cannot change the reports.
    pub fn all_stopped(&self) -> bool {
        self.rm.is_some()
    }

    pub fn boundary_stopped(&self) -> bool {
        self.bdy.is_some()
    }

    /// Past the horizon: later steps are ignored.
    pub fn exhausted(&self) -> bool {
        self.next_n > self.config.n_max
    }

    pub fn observe(&mut self, score: &StepScore) -> Result<Firing> {
        if score.n != self.next_n {
            return Err(Error::argument(format!(
                "scores must be indexed contiguously from 1: expected n={}, got n={}",
                self.next_n, score.n
            )));
        }
        Ok(self.observe_lazy(score.m, score.b, || score.width, || score.r))
    }

    /// Like [`observe`](Self::observe) but the width and the defect are only
    /// computed when the conditions before them already hold inside the
    /// scan window.
    pub fn observe_lazy(
        &mut self,
        m: f64,
        b: f64,
        width: impl FnOnce() -> f64,
        r: impl FnOnce() -> f64,
    ) -> Firing {
        let n = self.next_n;
        self.next_n += 1;
        let cfg = &self.config;
        if n < cfg.n_min || n > cfg.n_max {
            return Firing::default();
        }
        let close = b <= cfg.epsilon;
        let narrow = close && width() <= cfg.width_max;
        let stable = narrow && r() <= cfg.eta;
        if close && self.bdy.is_none() {
            self.bdy = Some((n, m));
        }
        if narrow && self.two.is_none() {
            self.two = Some((n, m));
        }
        if stable && self.rm.is_none() {
            self.rm = Some((n, m));
        }
        Firing {
            boundary_only: close,
            two_cond: narrow,
            rm: stable,
        }
    }

    pub fn reports(&self) -> RuleReports {
        let mk = |rule, hit: Option<(usize, f64)>| match hit {
            Some((n, m)) => StopReport::stopped_at(rule, n, m),
            None => StopReport::censored(rule, Censoring::Horizon),
        };
        RuleReports {
            boundary_only: mk(Rule::BoundaryOnly, self.bdy),
            two_cond: mk(Rule::TwoCond, self.two),
            rm: mk(Rule::Rm, self.rm),
        }
    }
}

/// Evaluates the boundary-only, two-condition and three-condition rules over
/// a score sequence indexed `1..` contiguously.
pub fn evaluate_rules(scores: &[StepScore], config: &ScorecardConfig) -> Result<RuleReports> {
    if scores.is_empty() {
        return Err(Error::argument("empty score sequence"));
    }
    let mut tracker = RuleTracker::new(*config);
    for s in scores {
        if tracker.exhausted() || tracker.all_stopped() {
            break;
        }
        tracker.observe(s)?;
    }
    Ok(tracker.reports())
}

/// Aggregates per-point score sequences over a finite covariate grid into the
/// region-wise sequence: at each `n` the boundary distance, width and defect
/// are the maxima over the grid. `m` is taken from the point attaining the
/// largest boundary distance.
pub fn region_scores(grid: &[Vec<StepScore>]) -> Result<Vec<StepScore>> {
    let first = grid.first().ok_or_else(|| Error::argument("empty covariate grid"))?;
    let len = first.len();
    if grid.iter().any(|g| g.len() != len) {
        return Err(Error::argument("grid points must share the same step indexing"));
    }
    let mut out = Vec::with_capacity(len);
    for i in 0..len {
        let n = first[i].n;
        let mut agg = first[i];
        for point in &grid[1..] {
            let s = &point[i];
            if s.n != n {
                return Err(Error::argument(format!(
                    "grid points disagree on step index at position {i}: {} vs {}",
                    n, s.n
                )));
            }
            if s.b > agg.b {
                agg.b = s.b;
                agg.m = s.m;
            }
            agg.width = agg.width.max(s.width);
            agg.r = agg.r.max(s.r);
        }
        out.push(agg);
    }
    Ok(out)
}

/// Region-wise three-condition rule over a finite covariate grid.
pub fn region_scorecard(grid: &[Vec<StepScore>], config: &ScorecardConfig) -> Result<StopReport> {
    let agg = region_scores(grid)?;
    Ok(evaluate_rules(&agg, config)?.rm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(eps: f64, w: f64, eta: f64, n_min: usize, n_max: usize) -> ScorecardConfig {
        ScorecardConfig::new(eps, w, eta, n_min, n_max, 0.05).unwrap()
    }

    fn seq(ms: &[(f64, f64)]) -> Vec<StepScore> {
        let mut prev: Option<f64> = None;
        ms.iter()
            .enumerate()
            .map(|(i, &(m, w))| {
                let r = prev.map_or(f64::INFINITY, |p| stability_defect(m, p));
                prev = Some(m);
                StepScore::probability(i + 1, m, w, r).unwrap()
            })
            .collect()
    }

    #[test]
    fn boundary_distance_examples() {
        assert_eq!(boundary_distance(0.5).unwrap(), 0.5);
        assert_eq!(boundary_distance(0.05).unwrap(), 0.05);
        assert!((boundary_distance(0.975).unwrap() - 0.025).abs() < 1e-15);
        assert!(boundary_distance(1.2).is_err());
        assert!(boundary_distance(-0.1).is_err());
        assert!(boundary_distance(f64::NAN).is_err());
    }

    #[test]
    fn stability_defect_examples() {
        assert_eq!(stability_defect(0.25, 0.5), 0.25);
        assert_eq!(stability_defect(0.3, 0.3), 0.0);
        assert!((stability_defect(0.1, 0.05) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn config_invariants() {
        assert!(ScorecardConfig::new(0.5, 0.1, 0.0, 1, 10, 0.05).is_err());
        assert!(ScorecardConfig::new(0.01, 0.0, 0.0, 1, 10, 0.05).is_err());
        assert!(ScorecardConfig::new(0.01, 0.1, -1.0, 1, 10, 0.05).is_err());
        assert!(ScorecardConfig::new(0.01, 0.1, 0.0, 0, 10, 0.05).is_err());
        assert!(ScorecardConfig::new(0.01, 0.1, 0.0, 11, 10, 0.05).is_err());
        assert!(ScorecardConfig::new(0.01, 0.1, 0.0, 1, 10, 1.0).is_err());
        assert!(ScorecardConfig::new(0.01, 0.1, f64::INFINITY, 1, 10, 0.05).is_ok());
    }

    #[test]
    fn empty_sequence_is_an_argument_error() {
        let c = cfg(0.1, 0.1, 0.1, 1, 10);
        assert!(matches!(evaluate_rules(&[], &c), Err(Error::Argument(_))));
    }

    #[test]
    fn noncontiguous_indices_rejected() {
        let c = cfg(0.1, 0.1, 0.1, 1, 10);
        let mut s = seq(&[(0.5, 1.0), (0.5, 1.0)]);
        s[1].n = 3;
        assert!(evaluate_rules(&s, &c).is_err());
    }

    #[test]
    fn far_from_boundary_censors_everything() {
        let c = cfg(0.05, 1.0, 1.0, 1, 5);
        let s = seq(&[(0.3, 0.0); 5]);
        let r = evaluate_rules(&s, &c).unwrap();
        assert!(!r.boundary_only.stopped() && !r.two_cond.stopped() && !r.rm.stopped());
        assert_eq!(r.rm.time, StopTime::Censored(Censoring::Horizon));
    }

    #[test]
    fn rules_scan_independently() {
        // n=2 close but wide; n=3 close and narrow but jumped; n=4 all three.
        let c = cfg(0.1, 0.05, 0.01, 2, 10);
        let s = seq(&[(0.5, 1.0), (0.08, 0.2), (0.02, 0.01), (0.02, 0.01)]);
        let r = evaluate_rules(&s, &c).unwrap();
        assert_eq!(r.boundary_only.tau(), Some(2));
        assert_eq!(r.two_cond.tau(), Some(3));
        assert_eq!(r.rm.tau(), Some(4));
        assert_eq!(r.rm.m_at_tau, Some(0.02));
        assert!(r.is_nested());
    }

    #[test]
    fn burn_in_and_horizon_respected() {
        let c = cfg(0.1, 1.0, 1.0, 3, 4);
        let s = seq(&[(0.01, 0.0); 6]);
        let r = evaluate_rules(&s, &c).unwrap();
        assert_eq!(r.boundary_only.tau(), Some(3));
        // r_1 is +inf, so the stability rule cannot fire at n=1 even without burn-in.
        let c1 = cfg(0.1, 1.0, 1.0, 1, 4);
        let r1 = evaluate_rules(&s, &c1).unwrap();
        assert_eq!(r1.boundary_only.tau(), Some(1));
        assert_eq!(r1.rm.tau(), Some(2));
        let late = seq(&[(0.5, 0.0), (0.5, 0.0), (0.5, 0.0), (0.5, 0.0), (0.01, 0.0)]);
        assert!(!evaluate_rules(&late, &c).unwrap().boundary_only.stopped());
    }

    #[test]
    fn infinite_eta_matches_two_condition() {
        let c = cfg(0.1, 0.05, f64::INFINITY, 1, 10);
        let s = seq(&[(0.5, 1.0), (0.08, 0.2), (0.02, 0.01), (0.02, 0.01)]);
        let r = evaluate_rules(&s, &c).unwrap();
        assert_eq!(r.rm.time, r.two_cond.time);
    }

    #[test]
    fn real_scale_scores_measure_distance_to_boundary_value() {
        let s = StepScore::real(1, -0.03, 0.0, 0.5, 0.0).unwrap();
        assert_eq!(s.b, 0.03);
        assert!(StepScore::real(1, f64::NAN, 0.0, 0.5, 0.0).is_err());
        assert!(StepScore::probability(1, 0.2, -1.0, 0.0).is_err());
    }

    #[test]
    fn region_examples() {
        let c = cfg(0.1, 0.05, 0.01, 2, 10);
        let a = seq(&[(0.5, 1.0), (0.08, 0.2), (0.02, 0.01), (0.02, 0.01)]);
        let single = region_scorecard(std::slice::from_ref(&a), &c).unwrap();
        assert_eq!(single, evaluate_rules(&a, &c).unwrap().rm);

        let interior = seq(&[(0.5, 0.0); 4]);
        let both = region_scorecard(&[a.clone(), interior], &c).unwrap();
        assert!(!both.stopped());

        assert!(region_scorecard(&[], &c).is_err());
        assert!(region_scorecard(&[a.clone(), a[..2].to_vec()], &c).is_err());
    }

    #[test]
    fn region_aggregation_matches_brute_force_maxima() {
        let a = seq(&[(0.5, 1.0), (0.08, 0.2), (0.02, 0.01), (0.03, 0.02)]);
        let b = seq(&[(0.4, 0.5), (0.9, 0.3), (0.99, 0.005), (0.97, 0.04)]);
        let agg = region_scores(&[a.clone(), b.clone()]).unwrap();
        for i in 0..a.len() {
            let bb = if a[i].b >= b[i].b { a[i].b } else { b[i].b };
            let ww = if a[i].width >= b[i].width { a[i].width } else { b[i].width };
            let rr = if a[i].r >= b[i].r { a[i].r } else { b[i].r };
            assert_eq!(agg[i].b, bb);
            assert_eq!(agg[i].width, ww);
            assert_eq!(agg[i].r, rr);
        }
    }
}

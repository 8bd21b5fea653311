//! C interface to the rmstop toolkit.
//!
//! Every fallible function returns an [`RmStatus`]; on failure a description
//! is available from [`rm_last_error`] on the calling thread. Stateful
//! objects are opaque handles created by `*_new` and released by `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rmstop::benchmarks::{
    calibrate_cusum_threshold, Cusum, CusumModel, PoissonSprtConfig, Sprt, SprtConfig,
};
use rmstop::scorecard::{RuleTracker, ScorecardConfig, StepScore, StopReport};
use rmstop::targets::{exact_reverse_defect, TargetKind};
use rmstop::uncertainty::{
    all_failure_threshold, clopper_pearson_upper_zero, jeffreys_beta_width, jeffreys_gamma_width,
};
use rmstop::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmStatus {
    Ok = 0,
    NullPointer = 1,
    /// An argument is outside the function's domain.
    Domain = 2,
    /// A configuration is inconsistent.
    Config = 3,
    /// A numerical routine did not converge.
    Numeric = 4,
    /// A call does not fit the object's state, e.g. out-of-order steps.
    Argument = 5,
    Calibration = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmRule {
    BoundaryOnly = 0,
    TwoCond = 1,
    Rm = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmTarget {
    RunningMean = 0,
    JeffreysMean = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmCusumKind {
    Normal = 0,
    Poisson = 1,
}

/// Tuning of the three scorecard rules. Set `eta` to infinity to disable
/// the stability screen.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RmScorecardConfig {
    pub epsilon: f64,
    pub width_max: f64,
    pub eta: f64,
    pub n_min: u64,
    pub n_max: u64,
    pub alpha: f64,
}

/// Conditions that held at the latest step.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RmFiring {
    pub boundary_only: bool,
    pub two_cond: bool,
    pub rm: bool,
}

/// `tau` and `m_at_tau` are meaningful only when `stopped` is true;
/// otherwise they are 0 and NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RmStopReport {
    pub stopped: bool,
    pub tau: u64,
    pub m_at_tau: f64,
}

/// CUSUM chart: `k` is used by the normal chart, the rates by the Poisson chart.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RmCusumSpec {
    pub kind: RmCusumKind,
    pub k: f64,
    pub lambda0: f64,
    pub lambda1: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RmCalibration {
    pub h: f64,
    pub arl0: f64,
    /// False when the estimate could not be brought within tolerance and `h`
    /// is the smallest threshold reaching the target.
    pub within_tolerance: bool,
}

/// Streaming scorecard rule tracker.
pub struct RmTracker(RuleTracker);

/// Wald sequential probability ratio test.
pub struct RmSprt(Sprt);

/// One-sided CUSUM chart.
pub struct RmCusum(Cusum);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(err: Error) -> RmStatus {
    let status = match err {
        Error::Domain(_) => RmStatus::Domain,
        Error::Config(_) => RmStatus::Config,
        Error::Numeric(_) => RmStatus::Numeric,
        Error::Calibration(_) => RmStatus::Calibration,
        _ => RmStatus::Argument,
    };
    set_error(err.to_string());
    status
}

fn null(name: &str) -> RmStatus {
    set_error(format!("{name} is null"));
    RmStatus::NullPointer
}

/// Runs `f` with panics converted to `RmStatus::Panic`.
fn guard(f: impl FnOnce() -> Result<(), RmStatus>) -> RmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RmStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            RmStatus::Panic
        }
    }
}

macro_rules! deref_mut {
    ($p:ident) => {
        match unsafe { $p.as_mut() } {
            Some(v) => v,
            None => return Err(null(stringify!($p))),
        }
    };
}

macro_rules! deref {
    ($p:ident) => {
        match unsafe { $p.as_ref() } {
            Some(v) => v,
            None => return Err(null(stringify!($p))),
        }
    };
}

fn stop_report(r: &StopReport) -> RmStopReport {
    match r.tau() {
        Some(t) => RmStopReport {
            stopped: true,
            tau: t as u64,
            m_at_tau: r.m_at_tau.unwrap_or(f64::NAN),
        },
        None => RmStopReport {
            stopped: false,
            tau: 0,
            m_at_tau: f64::NAN,
        },
    }
}

fn cusum_model(spec: &RmCusumSpec) -> CusumModel {
    match spec.kind {
        RmCusumKind::Normal => CusumModel::Normal { k: spec.k },
        RmCusumKind::Poisson => CusumModel::Poisson {
            lambda0: spec.lambda0,
            lambda1: spec.lambda1,
        },
    }
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rm_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Smallest all-failure run length whose one-sided bound falls to `epsilon`.
#[no_mangle]
pub extern "C" fn rm_all_failure_threshold(alpha: f64, epsilon: f64, out: *mut u64) -> RmStatus {
    guard(|| {
        let out = deref_mut!(out);
        *out = all_failure_threshold(alpha, epsilon).map_err(fail)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn rm_clopper_pearson_upper_zero(n: u64, alpha: f64, out: *mut f64) -> RmStatus {
    guard(|| {
        let out = deref_mut!(out);
        *out = clopper_pearson_upper_zero(n, alpha).map_err(fail)?;
        Ok(())
    })
}

/// Equal-tailed Jeffreys interval for a Bernoulli probability after `s` successes in `n` trials.
#[no_mangle]
pub extern "C" fn rm_jeffreys_beta_interval(
    s: u64,
    n: u64,
    alpha: f64,
    lower: *mut f64,
    upper: *mut f64,
) -> RmStatus {
    guard(|| {
        let (lower, upper) = (deref_mut!(lower), deref_mut!(upper));
        let iv = jeffreys_beta_width(s, n, alpha).map_err(fail)?;
        (*lower, *upper) = (iv.lower, iv.upper);
        Ok(())
    })
}

/// Equal-tailed Jeffreys interval for a Poisson rate after `s` events in `n` periods.
#[no_mangle]
pub extern "C" fn rm_jeffreys_gamma_interval(
    s: u64,
    n: u64,
    alpha: f64,
    lower: *mut f64,
    upper: *mut f64,
) -> RmStatus {
    guard(|| {
        let (lower, upper) = (deref_mut!(lower), deref_mut!(upper));
        let iv = jeffreys_gamma_width(s, n, alpha).map_err(fail)?;
        (*lower, *upper) = (iv.lower, iv.upper);
        Ok(())
    })
}

/// `E[M_n | S_(n+1) = s_next] - M_(n+1)` for a Bernoulli target.
#[no_mangle]
pub extern "C" fn rm_exact_reverse_defect(target: RmTarget, s_next: u64, n: u64, out: *mut f64) -> RmStatus {
    guard(|| {
        let out = deref_mut!(out);
        let kind = match target {
            RmTarget::RunningMean => TargetKind::RunningMean,
            RmTarget::JeffreysMean => TargetKind::JeffreysMean,
        };
        *out = exact_reverse_defect(kind, s_next, n).map_err(fail)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn rm_tracker_new(config: *const RmScorecardConfig, out: *mut *mut RmTracker) -> RmStatus {
    guard(|| {
        let (c, out) = (deref!(config), deref_mut!(out));
        let cfg = ScorecardConfig {
            epsilon: c.epsilon,
            width_max: c.width_max,
            eta: c.eta,
            n_min: c.n_min as usize,
            n_max: c.n_max as usize,
            alpha: c.alpha,
        };
        cfg.validate_real_scale().map_err(fail)?;
        *out = Box::into_raw(Box::new(RmTracker(RuleTracker::new(cfg))));
        Ok(())
    })
}

/// Feeds the next step. `b` is the distance of `m` from the boundary, `width`
/// the uncertainty width and `r` the stability defect (infinity when undefined).
#[no_mangle]
pub extern "C" fn rm_tracker_observe(
    tracker: *mut RmTracker,
    m: f64,
    b: f64,
    width: f64,
    r: f64,
    firing: *mut RmFiring,
) -> RmStatus {
    guard(|| {
        let t = deref_mut!(tracker);
        for (name, v) in [("boundary distance", b), ("width", width), ("stability defect", r)] {
            if v.is_nan() || v < 0.0 {
                return Err(fail(Error::Domain(format!("{name} must be nonnegative, got {v}"))));
            }
        }
        let score = StepScore { n: t.0.next_index(), m, b, width, r };
        let f = t.0.observe(&score).map_err(fail)?;
        if let Some(out) = unsafe { firing.as_mut() } {
            *out = RmFiring {
                boundary_only: f.boundary_only,
                two_cond: f.two_cond,
                rm: f.rm,
            };
        }
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn rm_tracker_report(tracker: *const RmTracker, rule: RmRule, out: *mut RmStopReport) -> RmStatus {
    guard(|| {
        let (t, out) = (deref!(tracker), deref_mut!(out));
        let reports = t.0.reports();
        *out = stop_report(match rule {
            RmRule::BoundaryOnly => &reports.boundary_only,
            RmRule::TwoCond => &reports.two_cond,
            RmRule::Rm => &reports.rm,
        });
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn rm_tracker_free(tracker: *mut RmTracker) {
    if !tracker.is_null() {
        drop(unsafe { Box::from_raw(tracker) });
    }
}

/// Bernoulli SPRT of `p0` against `p1`.
#[no_mangle]
pub extern "C" fn rm_sprt_new_bernoulli(p0: f64, p1: f64, alpha: f64, beta: f64, out: *mut *mut RmSprt) -> RmStatus {
    guard(|| {
        let out = deref_mut!(out);
        let cfg = SprtConfig::new(p0, p1, alpha, beta).map_err(fail)?;
        *out = Box::into_raw(Box::new(RmSprt(Sprt::bernoulli(&cfg).map_err(fail)?)));
        Ok(())
    })
}

/// Poisson SPRT of rate `lambda0` against `lambda1`.
#[no_mangle]
pub extern "C" fn rm_sprt_new_poisson(
    lambda0: f64,
    lambda1: f64,
    alpha: f64,
    beta: f64,
    out: *mut *mut RmSprt,
) -> RmStatus {
    guard(|| {
        let out = deref_mut!(out);
        let cfg = PoissonSprtConfig::new(lambda0, lambda1, alpha, beta).map_err(fail)?;
        *out = Box::into_raw(Box::new(RmSprt(Sprt::poisson(&cfg).map_err(fail)?)));
        Ok(())
    })
}

/// Feeds one observation; `decided` becomes true once either hypothesis is accepted.
#[no_mangle]
pub extern "C" fn rm_sprt_update(sprt: *mut RmSprt, x: u64, decided: *mut bool) -> RmStatus {
    guard(|| {
        let s = deref_mut!(sprt);
        let d = s.0.update(x);
        if let Some(out) = unsafe { decided.as_mut() } {
            *out = d;
        }
        Ok(())
    })
}

/// Acceptance of the alternative counts as the stop; acceptance of the null
/// and an undecided test both report `stopped = false`.
#[no_mangle]
pub extern "C" fn rm_sprt_report(sprt: *const RmSprt, out: *mut RmStopReport) -> RmStatus {
    guard(|| {
        let (s, out) = (deref!(sprt), deref_mut!(out));
        *out = stop_report(&s.0.report());
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn rm_sprt_free(sprt: *mut RmSprt) {
    if !sprt.is_null() {
        drop(unsafe { Box::from_raw(sprt) });
    }
}

#[no_mangle]
pub extern "C" fn rm_cusum_new(spec: *const RmCusumSpec, h: f64, out: *mut *mut RmCusum) -> RmStatus {
    guard(|| {
        let (spec, out) = (deref!(spec), deref_mut!(out));
        *out = Box::into_raw(Box::new(RmCusum(Cusum::new(cusum_model(spec), h).map_err(fail)?)));
        Ok(())
    })
}

/// Feeds one observation; `alarm` reports whether the chart has signalled.
#[no_mangle]
pub extern "C" fn rm_cusum_update(cusum: *mut RmCusum, x: f64, alarm: *mut bool) -> RmStatus {
    guard(|| {
        let c = deref_mut!(cusum);
        let a = c.0.update(x);
        if let Some(out) = unsafe { alarm.as_mut() } {
            *out = a;
        }
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn rm_cusum_statistic(cusum: *const RmCusum, out: *mut f64) -> RmStatus {
    guard(|| {
        let (c, out) = (deref!(cusum), deref_mut!(out));
        *out = c.0.statistic();
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn rm_cusum_free(cusum: *mut RmCusum) {
    if !cusum.is_null() {
        drop(unsafe { Box::from_raw(cusum) });
    }
}

/// Calibrates the CUSUM threshold to an in-control average run length by
/// Monte Carlo with `runs` simulated charts. Deterministic given `seed`.
#[no_mangle]
pub extern "C" fn rm_calibrate_cusum(
    spec: *const RmCusumSpec,
    target_arl0: f64,
    runs: u64,
    seed: u64,
    out: *mut RmCalibration,
) -> RmStatus {
    guard(|| {
        let (spec, out) = (deref!(spec), deref_mut!(out));
        let cal = calibrate_cusum_threshold(cusum_model(spec), target_arl0, runs as usize, seed).map_err(fail)?;
        *out = RmCalibration {
            h: cal.h,
            arl0: cal.arl0,
            within_tolerance: cal.within_tolerance,
        };
        Ok(())
    })
}

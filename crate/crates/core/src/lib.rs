//! Sequential boundary-declaration toolkit.
//!
//! A boundary declaration ("this probability is practically zero") is made
//! only when three signals hold at the same step: the conditional target is
//! close to the boundary, its uncertainty width is small, and its trajectory
//! is stable. This crate provides the scorecard rules, the conditional target
//! processes and widths they consume, the classical SPRT/CUSUM comparators,
//! ridge logistic fitting with separation detection, perturbed target
//! generators, a deterministic Monte Carlo harness, and series monitoring.

pub mod benchmarks;
pub mod error;
pub mod ingest;
pub mod logistic;
pub mod quasi;
pub mod rng;
pub mod scorecard;
pub mod sim;
pub mod targets;
pub mod uncertainty;

pub use error::{Error, Result};
pub use scorecard::{
    boundary_distance, evaluate_rules, region_scorecard, stability_defect, Censoring, Rule,
    RuleReports, RuleTracker, ScorecardConfig, StepScore, StopReport, StopTime,
};

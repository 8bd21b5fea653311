//! Command-line front end.
//!
//! Exit status is 0 on success, 2 when a file cannot be read or written and 1
//! for every other failure (bad flags, invalid configuration, malformed input).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use super::generate::{gen_bll_default, gen_ili_series, BLL_DEFAULT_SEED, ILI_DEFAULT_SEED};
use super::monitor::{emit_trace, monitor_series, MonitorConfig, MonitorModel};
use super::series::load_series_csv;
use crate::benchmarks::{calibrate_cusum_threshold, CusumModel};
use crate::error::{Error, Result};
use crate::sim::config::{StudyConfig, DEFAULT_MASTER_SEED, DEFAULT_REPS};
use crate::sim::studies::simulate_study;
use crate::sim::table::{emit_table, Metadata, TableFormat};
use crate::uncertainty::{all_failure_threshold, clopper_pearson_upper_zero};

/// Environment variable consulted for the master seed when `--seed` is not given.
pub const SEED_ENV: &str = "RMSTOP_SEED";

#[derive(Parser, Debug)]
#[command(name = "rmstop", version, about = "Sequential boundary-declaration scorecard toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a Monte Carlo study and write its summary table.
    Study {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=7))]
        id: u8,
        #[arg(long, default_value_t = DEFAULT_REPS)]
        reps: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the extension of --out, else csv.
        #[arg(long)]
        format: Option<String>,
    },
    /// Monitor one series and write the per-step trace.
    Monitor {
        /// Input CSV; when absent or missing a synthetic series is generated.
        #[arg(long)]
        input: Option<PathBuf>,
        /// poisson_rate (alias ili), gaussian_mean (alias bll) or bounded_mean.
        #[arg(long)]
        model: String,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        width_max: f64,
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value_t = 30)]
        n_min: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Seed of the synthetic fallback series.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibrate a CUSUM threshold to an in-control ARL.
    CalibrateCusum {
        #[arg(long, value_enum)]
        model: CusumKind,
        #[arg(long)]
        arl0: f64,
        #[arg(long)]
        seed: Option<u64>,
        /// Reference value of the normal chart.
        #[arg(long, default_value_t = 0.025)]
        k: f64,
        #[arg(long, default_value_t = 0.01)]
        lambda0: f64,
        /// Defaults to twice lambda0.
        #[arg(long)]
        lambda1: Option<f64>,
        #[arg(long, default_value_t = 2000)]
        runs: usize,
    },
    /// Print the all-failure run length and its Clopper–Pearson dual.
    Threshold {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        epsilon: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CusumKind {
    Normal,
    Poisson,
}

fn master_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_MASTER_SEED),
    }
}

fn table_format(explicit: Option<&str>, out: &Path) -> Result<TableFormat> {
    match explicit {
        Some(f) => f.parse(),
        None if out.extension().is_some_and(|e| e == "json") => Ok(TableFormat::Json),
        None => Ok(TableFormat::Csv),
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Study { id, reps, seed, out, format } => {
            let format = table_format(format.as_deref(), &out)?;
            let seed = master_seed(seed)?;
            let config = StudyConfig::defaults(id)?.with_reps(reps);
            log::info!("study {id}: {reps} replications, seed {seed}");
            let run = simulate_study(&config, seed)?;
            emit_table(&run.rows()?, &run.metadata()?, format, &out)?;
            println!("wrote {}", out.display());
        }
        Command::Monitor { input, model, epsilon, width_max, eta, n_min, alpha, seed, out } => {
            let model: MonitorModel = model.parse()?;
            let config = MonitorConfig { model, epsilon, width_max, eta, n_min, alpha };
            config.scorecard(n_min.max(1))?;
            let mut meta: Metadata = vec![("model".into(), model.as_str().into())];
            let loaded = match &input {
                Some(path) => match load_series_csv(path, model.schema()) {
                    Ok(s) => Some((s, path)),
                    Err(Error::MissingInput(_)) => None,
                    Err(e) => return Err(e),
                },
                None => None,
            };
            let series = match loaded {
                Some((s, path)) => {
                    meta.push(("data".into(), "real".into()));
                    meta.push(("input".into(), path.display().to_string()));
                    s
                }
                None => {
                    let (s, default_seed, generator) = match model {
                        MonitorModel::PoissonRate => {
                            let seed = seed.unwrap_or(ILI_DEFAULT_SEED);
                            (gen_ili_series(seed), seed, "ili")
                        }
                        MonitorModel::GaussianMean => {
                            let seed = seed.unwrap_or(BLL_DEFAULT_SEED);
                            (gen_bll_default(seed), seed, "bll")
                        }
                        MonitorModel::BoundedMean => {
                            return Err(input.map_or_else(
                                || Error::config("bounded_mean has no synthetic fallback; pass --input"),
                                Error::MissingInput,
                            ))
                        }
                    };
                    let reason = input.as_ref().map_or_else(
                        || "no --input given".to_string(),
                        |p| format!("{} not found", p.display()),
                    );
                    log::warn!("{reason}; using the synthetic {generator} series (seed {default_seed})");
                    meta.push(("data".into(), "synthetic".into()));
                    meta.push(("generator".into(), generator.into()));
                    meta.push(("seed".into(), default_seed.to_string()));
                    meta.push(("fallback_reason".into(), reason));
                    s
                }
            };
            let trace = monitor_series(&series, &config)?;
            emit_trace(&trace, &meta, &out)?;
            let tau = |r: &crate::scorecard::StopReport| r.tau().map_or("censored".into(), |t| t.to_string());
            println!(
                "tau_bdy={} tau_2cond={} tau_rm={} (n={})",
                tau(&trace.reports.boundary_only),
                tau(&trace.reports.two_cond),
                tau(&trace.reports.rm),
                series.len()
            );
        }
        Command::CalibrateCusum { model, arl0, seed, k, lambda0, lambda1, runs } => {
            let model = match model {
                CusumKind::Normal => CusumModel::Normal { k },
                CusumKind::Poisson => CusumModel::Poisson {
                    lambda0,
                    lambda1: lambda1.unwrap_or(2.0 * lambda0),
                },
            };
            let cal = calibrate_cusum_threshold(model, arl0, runs, master_seed(seed)?)?;
            println!("h={}", cal.h);
            println!("arl0_estimate={:.2}", cal.arl0);
            println!("runs={} seed={} evaluations={}", cal.mc_runs, cal.seed, cal.trace.len());
        }
        Command::Threshold { alpha, epsilon } => {
            let n = all_failure_threshold(alpha, epsilon)?;
            println!("{n}");
            println!("clopper_pearson_upper_zero(n={n})={}", clopper_pearson_upper_zero(n, alpha)?);
            if n > 1 {
                println!(
                    "clopper_pearson_upper_zero(n={})={}",
                    n - 1,
                    clopper_pearson_upper_zero(n - 1, alpha)?
                );
            }
        }
    }
    Ok(())
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                2
            } else {
                1
            }
        }
    }
}

//! Synthetic stand-ins for the weekly ILI rates and the blood-lead series.

use rand::Rng;
use rand_distr::StandardNormal;

use super::series::SeriesRecord;
use crate::error::{Error, Result};
use crate::rng::child_stream;

pub const ILI_WEEKS: usize = 312;
pub const ILI_DEFAULT_SEED: u64 = 2018;

pub const BLL_DEFAULT_N: usize = 7000;
pub const BLL_GEOMETRIC_MEAN: f64 = 0.82;
pub const BLL_GEOMETRIC_SD: f64 = 2.1;
pub const BLL_FLOOR: f64 = 0.01;
pub const BLL_DEFAULT_SEED: u64 = 2017;

const WEEKS_PER_YEAR: f64 = 52.0;
const ILI_TROUGH: f64 = 20.0;
const ILI_PEAK: f64 = 168.0;
// Sharpness of the winter epidemic; with this exponent the profile averages
// about 60 per week over a season.
const ILI_SHAPE: f64 = 4.4;
const ILI_PEAK_WEEK: f64 = 6.0;
const ILI_NOISE_SD: f64 = 0.05;
const ILI_PEAK_JITTER: f64 = 6.0;

/// Weekly rate per 10,000 visits: a winter epidemic peak on a low off-season
/// floor, with a per-season peak height and multiplicative week-to-week noise.
pub fn gen_ili_series(seed: u64) -> Vec<SeriesRecord> {
    let mut season_rng = child_stream(seed, &[0]);
    let mut noise_rng = child_stream(seed, &[1]);
    let years = ILI_WEEKS.div_ceil(WEEKS_PER_YEAR as usize);
    let peaks: Vec<f64> = (0..years)
        .map(|_| ILI_PEAK + ILI_PEAK_JITTER * (2.0 * season_rng.random::<f64>() - 1.0))
        .collect();
    (0..ILI_WEEKS)
        .map(|t| {
            let phase = 2.0 * std::f64::consts::PI * (t as f64 - ILI_PEAK_WEEK) / WEEKS_PER_YEAR;
            let profile = ((1.0 + phase.cos()) / 2.0).powf(ILI_SHAPE);
            let level = ILI_TROUGH + (peaks[t / WEEKS_PER_YEAR as usize] - ILI_TROUGH) * profile;
            let z: f64 = noise_rng.sample(StandardNormal);
            let noise = (ILI_NOISE_SD * z.clamp(-3.0, 3.0)).exp();
            SeriesRecord {
                index: t as u64 + 1,
                value: level * noise,
            }
        })
        .collect()
}

/// Log-normal measurements with geometric mean `gm` and geometric SD `gsd`,
/// floored at the detection limit.
pub fn gen_bll_series(n: usize, gm: f64, gsd: f64, floor: f64, seed: u64) -> Result<Vec<SeriesRecord>> {
    if !(gm > 0.0 && gsd > 0.0 && gm.is_finite() && gsd.is_finite()) {
        return Err(Error::config(format!(
            "geometric mean and SD must be positive, got {gm} and {gsd}"
        )));
    }
    if !(floor >= 0.0) {
        return Err(Error::config(format!("detection floor must be nonnegative, got {floor}")));
    }
    let (mu, sigma) = (gm.ln(), gsd.ln());
    let mut rng = child_stream(seed, &[0]);
    Ok((0..n)
        .map(|i| {
            let z: f64 = rng.sample(StandardNormal);
            SeriesRecord {
                index: i as u64 + 1,
                value: (mu + sigma * z).exp().max(floor),
            }
        })
        .collect())
}

pub fn gen_bll_default(seed: u64) -> Vec<SeriesRecord> {
    gen_bll_series(BLL_DEFAULT_N, BLL_GEOMETRIC_MEAN, BLL_GEOMETRIC_SD, BLL_FLOOR, seed)
        .expect("default parameters are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ili_shape_over_seeds() {
        for seed in 1..=20 {
            let s = gen_ili_series(seed);
            assert_eq!(s.len(), ILI_WEEKS);
            for year in s.chunks(52) {
                let mean = year.iter().map(|r| r.value).sum::<f64>() / year.len() as f64;
                assert!((50.0..=70.0).contains(&mean), "seed {seed}: annual mean {mean}");
                let peak = year.iter().map(|r| r.value).fold(0.0, f64::max);
                assert!((150.0..=200.0).contains(&peak), "seed {seed}: peak {peak}");
            }
            let trough = s.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
            assert!((15.0..=25.0).contains(&trough), "seed {seed}: trough {trough}");
        }
        assert_eq!(gen_ili_series(4), gen_ili_series(4));
        assert_ne!(gen_ili_series(4), gen_ili_series(5));
    }

    #[test]
    fn bll_geometric_mean_and_floor() {
        let s = gen_bll_default(BLL_DEFAULT_SEED);
        assert_eq!(s.len(), 7000);
        let gm = (s.iter().map(|r| r.value.ln()).sum::<f64>() / s.len() as f64).exp();
        assert!((gm / BLL_GEOMETRIC_MEAN - 1.0).abs() <= 0.05, "{gm}");
        assert!(s.iter().all(|r| r.value >= BLL_FLOOR));
        let floored = gen_bll_series(100, 0.02, 3.0, 0.01, 1).unwrap();
        assert!(floored.iter().any(|r| r.value == 0.01));
        assert!(gen_bll_series(10, 0.0, 2.0, 0.01, 1).is_err());
        assert_eq!(gen_bll_default(3), gen_bll_default(3));
    }
}

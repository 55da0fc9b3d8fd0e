use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{TrafficSeries, SECONDS_PER_DAY};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Monday 2014-03-31T00:00:00Z, so day 0 of every generated week is a weekday.
const START_EPOCH: i64 = 1_396_224_000;
const PEAK_FLOW: f64 = 100.0;
const WEEKEND_FACTOR: f64 = 0.6;
/// Downstream noise relative to the upstream noise level.
const LOCAL_NOISE_RATIO: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub locations: usize,
    pub days: usize,
    pub steps_per_day: usize,
    pub seed: u64,
    /// Gaussian noise standard deviation as a fraction of the peak flow.
    pub noise: f64,
}

/// Smooth daily profile in `[0.15, ~1]` with morning and evening rush peaks.
fn daily_profile(fraction_of_day: f64) -> f64 {
    let base = 0.15 + 0.35 * (0.5 - 0.5 * (2.0 * PI * fraction_of_day).cos());
    let bump = |centre: f64, width: f64| (-((fraction_of_day - centre) / width).powi(2)).exp();
    base + 0.45 * bump(8.0 / 24.0, 0.06) + 0.40 * bump(17.5 / 24.0, 0.07)
}

/// Corridor with a planted upstream-to-downstream delay of one step per
/// location and daily/weekly periodicity (weekends scaled by 0.6).
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<TrafficSeries> {
    let SyntheticConfig {
        locations: p,
        days,
        steps_per_day: d,
        seed,
        noise,
    } = *cfg;
    if p < 2 || days < 15 || d < 12 {
        return Err(Error::Domain(format!(
            "synthetic series needs p >= 2, days >= 15, steps-per-day >= 12 (got {p}, {days}, {d})"
        )));
    }
    if SECONDS_PER_DAY % d as i64 != 0 {
        return Err(Error::Domain(format!("{d} steps per day do not divide 86400 s")));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::Domain(format!("noise level {noise} must be >= 0")));
    }

    let steps = days * d;
    // Location 0 is generated `p - 1` steps early so every delayed copy is defined.
    let lead = p - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let upstream_noise = Normal::new(0.0, noise * PEAK_FLOW).expect("finite std");
    let local_noise = Normal::new(0.0, LOCAL_NOISE_RATIO * noise * PEAK_FLOW).expect("finite std");

    let mut upstream = Vec::with_capacity(steps + lead);
    for k in 0..steps + lead {
        let step = k as i64 - lead as i64;
        let day = step.div_euclid(d as i64);
        let within = step.rem_euclid(d as i64) as f64 / d as f64;
        let factor = if day.rem_euclid(7) >= 5 { WEEKEND_FACTOR } else { 1.0 };
        let clean = PEAK_FLOW * factor * daily_profile(within);
        upstream.push((clean + upstream_noise.sample(&mut rng)).max(0.0));
    }

    let mut rows = vec![upstream];
    for _ in 1..p {
        let prev = rows.last().expect("at least one row");
        let mut next = vec![0.0; steps + lead];
        for k in 1..steps + lead {
            next[k] = (prev[k - 1] + local_noise.sample(&mut rng)).max(0.0);
        }
        rows.push(next);
    }

    let mut values = Tensor::zeros(&[p, steps]);
    for (loc, row) in rows.iter().enumerate() {
        values.data_mut()[loc * steps..(loc + 1) * steps].copy_from_slice(&row[lead..]);
    }
    let ids = (0..p).map(|i| format!("S{:03}", i + 1)).collect();
    TrafficSeries::new(values, ids, START_EPOCH, SECONDS_PER_DAY / d as i64)
}

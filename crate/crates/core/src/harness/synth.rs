//! Seeded synthetic hourly station data with a diurnal wind cycle.

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::ingest::{TimeSeriesFrame, NUM_CHANNELS};

/// Generator parameters; wind speeds in m/s, time in hours.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub length: usize,
    /// Mean level of WS10mi.
    pub base: f64,
    /// Amplitude of the daily cycle.
    pub amplitude: f64,
    pub period: f64,
    /// Linear trend per hour.
    pub slope: f64,
    /// AR(1) coefficient of the wind-speed noise.
    pub phi: f64,
    /// Innovation standard deviation of the wind-speed noise.
    pub noise_std: f64,
    /// Seeds the couplings between wind speed and the other channels.
    pub mixing_seed: u64,
    pub start: NaiveDateTime,
}

pub const MIN_SYNTHETIC_LENGTH: usize = 200;

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            length: 4000,
            base: 2.7,
            amplitude: 1.0,
            period: 24.0,
            slope: 0.0,
            phi: 0.8,
            noise_std: 0.6,
            mixing_seed: 0,
            start: NaiveDate::from_ymd_opt(2020, 1, 1)
                .unwrap()
                .and_hms_opt(0, 0, 0)
                .unwrap(),
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length < MIN_SYNTHETIC_LENGTH {
            return Err(Error::Parameter(format!(
                "synthetic length must be at least {MIN_SYNTHETIC_LENGTH} hours, got {}",
                self.length
            )));
        }
        let finite = [
            self.base,
            self.amplitude,
            self.period,
            self.slope,
            self.phi,
            self.noise_std,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite || self.period <= 0.0 || self.noise_std < 0.0 || self.phi.abs() >= 1.0 {
            return Err(Error::Parameter(format!("invalid synthetic spec {self:?}")));
        }
        Ok(())
    }
}

/// AR(1) process started from its stationary distribution.
struct Ar1 {
    phi: f64,
    noise: Normal<f64>,
    state: f64,
}

impl Ar1 {
    fn new(phi: f64, std: f64, rng: &mut impl Rng) -> Self {
        let noise = Normal::new(0.0, std).expect("std is finite and non-negative");
        let stationary = Normal::new(0.0, std / (1.0 - phi * phi).sqrt()).expect("finite");
        Self {
            phi,
            noise,
            state: stationary.sample(rng),
        }
    }

    fn next(&mut self, rng: &mut impl Rng) -> f64 {
        let v = self.state;
        self.state = self.phi * self.state + self.noise.sample(rng);
        v
    }
}

fn wrap_degrees(d: f64) -> f64 {
    let w = d.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Generates a frame whose WS10mi is
/// `max(0, base + amplitude * sin(2 pi t / period) + slope * t + e_t)`, with
/// `e_t` an AR(1) process. WS2mi tracks WS10mi closely; the other channels are
/// smooth processes loosely coupled to the wind and kept within their bounds.
pub fn gen_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<TimeSeriesFrame> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mix = ChaCha8Rng::seed_from_u64(spec.mixing_seed);
    let temp_coupling = mix.gen_range(-1.0..-0.2);
    let pres_coupling = mix.gen_range(-2.0..-0.5);
    let dir_coupling = mix.gen_range(5.0..20.0);
    let dir_offset = mix.gen_range(0.0..360.0);

    let two_pi = 2.0 * std::f64::consts::PI;
    let mut wind_noise = Ar1::new(spec.phi, spec.noise_std, &mut rng);
    let gust = Normal::new(0.0, 0.25 * spec.noise_std).expect("finite");
    let mut temp_noise = Ar1::new(0.95, 0.3, &mut rng);
    let mut pres_noise = Ar1::new(0.99, 0.3, &mut rng);
    let mut hum_noise = Ar1::new(0.9, 2.0, &mut rng);
    let mut rain_latent = Ar1::new(0.85, 0.5, &mut rng);
    let mut dir_noise = Ar1::new(0.95, 8.0, &mut rng);
    let veer = Normal::new(0.0, 10.0).expect("finite");

    let n = spec.length;
    let mut cols: [Vec<f64>; NUM_CHANNELS] = std::array::from_fn(|_| Vec::with_capacity(n));
    let mut timestamps = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64;
        let daily = (two_pi * t / spec.period).sin();
        let ws10 =
            (spec.base + spec.amplitude * daily + spec.slope * t + wind_noise.next(&mut rng))
                .max(0.0);
        let ws2 = (ws10 + gust.sample(&mut rng)).max(0.0);
        let anomaly = ws10 - spec.base;
        let tem = 10.0
            + 6.0 * (two_pi * (t - 6.0) / 24.0).sin()
            + temp_coupling * anomaly
            + temp_noise.next(&mut rng);
        let prs =
            (1000.0 + pres_coupling * anomaly + pres_noise.next(&mut rng)).clamp(850.0, 1100.0);
        let rhu = (60.0 - 2.0 * (tem - 10.0) + hum_noise.next(&mut rng)).clamp(0.0, 100.0);
        let pre = (2.0 * (rain_latent.next(&mut rng) - 0.8)).max(0.0);
        let wd10 = wrap_degrees(
            dir_offset
                + 40.0 * (two_pi * t / (24.0 * 7.0)).sin()
                + dir_coupling * anomaly
                + dir_noise.next(&mut rng),
        );
        let wd2 = wrap_degrees(wd10 + veer.sample(&mut rng));
        for (c, v) in [prs, tem, rhu, pre, wd2, ws2, wd10, ws10]
            .into_iter()
            .enumerate()
        {
            cols[c].push(v);
        }
        timestamps.push(spec.start + Duration::hours(i as i64));
    }
    TimeSeriesFrame::new(timestamps, cols)
}

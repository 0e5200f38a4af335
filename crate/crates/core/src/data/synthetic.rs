//! Seeded stand-in for the hourly Ontario dataset.
//!
//! Demand (kW) is
//!
//! ```text
//! base + daily * sin(2 pi (hour - 10) / 24) + weekly * cos(2 pi (hour_of_week - 84) / 168)
//!      + coupling * |temperature - comfort| + noise
//! ```
//!
//! Temperature follows an annual and a daily cycle plus AR(1) noise. All
//! calendar columns are derived from the timestamp.

use std::f64::consts::PI;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike, Weekday};
use rand::Rng;
use rand_distr::StandardNormal;

use super::RawRecord;
use crate::metaheuristics::seeded_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub hours: usize,
    pub seed: u64,
    pub start: NaiveDateTime,
    pub base_kw: f64,
    pub daily_amplitude_kw: f64,
    pub weekly_amplitude_kw: f64,
    /// Extra load per degree away from the comfort temperature.
    pub temperature_coupling_kw: f64,
    pub comfort_temperature: f64,
    /// Std of the iid demand noise.
    pub noise_kw: f64,
    /// Multiplier on every weather noise term; 0 makes weather deterministic.
    pub weather_noise: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            hours: 4000,
            seed: 0,
            start: NaiveDate::from_ymd_opt(2017, 1, 1)
                .and_then(|d| d.and_hms_opt(0, 0, 0))
                .expect("valid date"),
            base_kw: 15.5e6,
            daily_amplitude_kw: 1.2e6,
            weekly_amplitude_kw: 0.5e6,
            temperature_coupling_kw: 40e3,
            comfort_temperature: 18.0,
            noise_kw: 0.12e6,
            weather_noise: 1.0,
        }
    }
}

/// `hours` records from the default spec.
pub fn synthesize_load(hours: usize, seed: u64) -> Vec<RawRecord> {
    SyntheticSpec {
        hours,
        seed,
        ..SyntheticSpec::default()
    }
    .generate()
}

fn is_holiday(date: NaiveDate) -> bool {
    let (m, d) = (date.month(), date.day());
    let nth_monday = |n: u32| date.weekday() == Weekday::Mon && (d - 1) / 7 + 1 == n;
    matches!((m, d), (1, 1) | (7, 1) | (12, 25) | (12, 26))
        || (m == 9 && nth_monday(1))
        || (m == 10 && nth_monday(2))
        || (m == 5 && date.weekday() == Weekday::Mon && (18..=24).contains(&d))
}

impl SyntheticSpec {
    pub fn generate(&self) -> Vec<RawRecord> {
        let mut rng = seeded_rng(self.seed);
        let mut gauss = move || -> f64 { rng.sample(StandardNormal) };
        let wn = self.weather_noise;
        let mut temp_anomaly = 0.0;
        let mut records = Vec::with_capacity(self.hours);

        for t in 0..self.hours {
            let ts = self.start + Duration::hours(t as i64);
            let date = ts.date();
            let hour = ts.hour();
            let dow = date.weekday().num_days_from_monday();
            let hour_of_week = (dow * 24 + hour) as f64;
            let doy = date.ordinal();

            temp_anomaly = 0.95 * temp_anomaly + 0.6 * wn * gauss();
            let annual = 2.0 * PI * (doy as f64 - 110.0) / 365.25;
            let diurnal = 2.0 * PI * (hour as f64 - 9.0) / 24.0;
            let temperature = 8.0 + 14.0 * annual.sin() + 4.0 * diurnal.sin() + temp_anomaly;
            let spread = (3.0 + 2.0 * (-diurnal).cos().abs() + wn * gauss().abs()).max(0.0);
            let dew_point = temperature - spread;
            let relative_humidity = relative_humidity(temperature, dew_point);
            let wind_speed =
                (12.0 + 5.0 * (2.0 * PI * t as f64 / 97.0).sin() + 4.0 * wn * gauss()).abs();
            let precipitation = (wn * gauss() - 1.6).max(0.0) * 2.0;
            let visibility =
                (30.0 - 0.2 * relative_humidity - 4.0 * precipitation).clamp(0.5, 50.0);

            let daily = (2.0 * PI * ((hour as f64) - 10.0) / 24.0).sin();
            let weekly = (2.0 * PI * (hour_of_week - 84.0) / 168.0).cos();
            let demand = self.base_kw
                + self.daily_amplitude_kw * daily
                + self.weekly_amplitude_kw * weekly
                + self.temperature_coupling_kw * (temperature - self.comfort_temperature).abs()
                + self.noise_kw * gauss();

            let holiday = is_holiday(date);
            let weekend = dow >= 5;
            records.push(RawRecord {
                timestamp: ts,
                ontario_demand: demand.max(1.0),
                daily_peak: 0.0,
                year: date.year(),
                quarter: (date.month() - 1) / 3 + 1,
                month: date.month(),
                week_of_year: date.iso_week().week(),
                day_of_year: doy,
                state_holiday: if holiday { 1.0 } else { 0.0 },
                hour_of_day: hour,
                day_of_week: dow,
                day_type: if holiday {
                    2.0
                } else if weekend {
                    1.0
                } else {
                    0.0
                },
                temperature,
                dew_point,
                relative_humidity,
                wind_speed,
                visibility,
                precipitation,
            });
        }

        // daily_peak: max demand over the calendar day (within the generated span)
        let mut i = 0;
        while i < records.len() {
            let day = records[i].timestamp.date();
            let j = records[i..]
                .iter()
                .position(|r| r.timestamp.date() != day)
                .map_or(records.len(), |k| i + k);
            let peak = records[i..j]
                .iter()
                .map(|r| r.ontario_demand)
                .fold(f64::MIN, f64::max);
            records[i..j].iter_mut().for_each(|r| r.daily_peak = peak);
            i = j;
        }
        records
    }
}

/// Magnus-formula relative humidity in percent, clamped to `[0, 100]`.
fn relative_humidity(temperature: f64, dew_point: f64) -> f64 {
    let gamma = |t: f64| 17.625 * t / (243.04 + t);
    (100.0 * (gamma(dew_point) - gamma(temperature)).exp()).clamp(0.0, 100.0)
}

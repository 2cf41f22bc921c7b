//! Synthetic hourly load with PJM-like texture: trend, summer and winter
//! peaks, daily and weekly cycles, clustered month-level shocks, and an
//! optional demand slump.

use chrono::{Datelike, Duration, NaiveDate, Timelike, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::arima::ArmaSpec;
use crate::error::{Error, Result};
use crate::garch::GarchParams;
use crate::ingest::{HourlyRecord, HourlySeries};
use crate::innovation::InnovationDist;
use crate::memforecast::simulate_mem;
use crate::series::YearMonth;

/// A temporary drop in demand, ramping down and back up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slump {
    pub start: YearMonth,
    pub months: u32,
    /// Fractional depth at the trough.
    pub depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub start_year: i32,
    pub years: u32,
    /// Average load in the first year, MW.
    pub base_load: f64,
    pub annual_growth: f64,
    pub seasonal_amplitude: f64,
    pub daily_amplitude: f64,
    pub weekend_factor: f64,
    /// Hour-level multiplicative noise.
    pub hourly_noise: f64,
    /// Month-level log shocks follow AR(1) with GARCH(1,1) errors.
    pub monthly_ar: f64,
    pub monthly_garch: (f64, f64, f64),
    pub slump: Option<Slump>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            start_year: 1993,
            years: 24,
            base_load: 110_000.0,
            annual_growth: 0.012,
            seasonal_amplitude: 0.14,
            daily_amplitude: 0.16,
            weekend_factor: 0.9,
            hourly_noise: 0.02,
            monthly_ar: 0.5,
            monthly_garch: (2e-5, 0.15, 0.75),
            slump: Some(Slump {
                start: YearMonth { year: 2008, month: 9 },
                months: 14,
                depth: 0.07,
            }),
            seed: 42,
        }
    }
}

impl Slump {
    fn factor(&self, month: YearMonth) -> f64 {
        let k = self.start.months_until(month);
        if k < 0 || k >= self.months as i64 {
            return 1.0;
        }
        let x = (k as f64 + 0.5) / self.months as f64;
        1.0 - self.depth * (std::f64::consts::PI * x).sin()
    }
}

/// Generate `years` full calendar years of hourly load.
pub fn synthetic_hourly(config: &SynthConfig) -> Result<HourlySeries> {
    if config.years == 0 {
        return Err(Error::invalid("need at least one year"));
    }
    if !(config.base_load > 0.0) || !(config.weekend_factor > 0.0) {
        return Err(Error::invalid("base load and weekend factor must be positive"));
    }
    let months = 12 * config.years as usize;
    let (omega, alpha, beta) = config.monthly_garch;
    let garch = GarchParams::new(omega, vec![alpha], vec![beta])?;
    let mean = ArmaSpec {
        mean: 0.0,
        ar: vec![config.monthly_ar],
        ma: vec![],
        sigma: 1.0,
    };
    let shocks = simulate_mem(&mean, &garch, months, config.seed, InnovationDist::Normal)?.values;

    let first = NaiveDate::from_ymd_opt(config.start_year, 1, 1)
        .ok_or_else(|| Error::invalid(format!("bad start year {}", config.start_year)))?;
    let last = NaiveDate::from_ymd_opt(config.start_year + config.years as i32, 1, 1)
        .ok_or_else(|| Error::invalid("end year out of range"))?;
    let hours = (last - first).num_hours();
    let first_month = YearMonth::new(config.start_year, 1)?;
    let start = first.and_hms_opt(0, 0, 0).expect("midnight exists");
    let noise = Normal::new(0.0, config.hourly_noise).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    let tau = std::f64::consts::TAU;

    let mut records = Vec::with_capacity(hours as usize);
    for i in 0..hours {
        let ts = start + Duration::hours(i);
        let month = YearMonth::new(ts.year(), ts.month())?;
        let k = first_month.months_until(month) as usize;
        let years = i as f64 / (365.25 * 24.0);
        let doy = ts.ordinal0() as f64 / 365.25;
        let season = 1.0
            + config.seasonal_amplitude * (tau * (doy - 0.55)).cos()
            + 0.5 * config.seasonal_amplitude * (2.0 * tau * (doy - 0.05)).cos();
        let daily = 1.0 + config.daily_amplitude * (tau * (ts.hour() as f64 - 10.0) / 24.0).sin();
        let weekly = match ts.weekday() {
            Weekday::Sat | Weekday::Sun => config.weekend_factor,
            _ => 1.0,
        };
        let slump = config.slump.map_or(1.0, |s| s.factor(month));
        let level = config.base_load * (1.0 + config.annual_growth).powf(years) * shocks[k].exp();
        let load = level * season * daily * weekly * slump * (1.0 + noise.sample(&mut rng));
        records.push(HourlyRecord::new(ts, load.max(1.0))?);
    }
    HourlySeries::new(records, "UTC")
}

// Fit the ARIMA-GARCH model to monthly peak load and forecast a year
// ahead with 95% bands.

use std::error::Error;

use voltcast::ingest::aggregate_monthly;
use voltcast::memforecast::{fit_mem, forecast_mem, parameter_table, MemConfig};
use voltcast::series::{split_train_test, AggregationMode, YearMonth};
use voltcast::synth::{synthetic_hourly, SynthConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let hourly = synthetic_hourly(&SynthConfig::default())?;
    let monthly = aggregate_monthly(&hourly, AggregationMode::Peak)?;
    let split = split_train_test(&monthly, YearMonth::new(2015, 12)?)?;

    let model = fit_mem(&split.train, &MemConfig::default())?;
    for row in parameter_table(&model)? {
        let t = row.t_statistic.map_or("-".into(), |t| format!("{t:.2}"));
        println!(
            "{:<16} {:>14.4} t {:>7}{}",
            row.name,
            row.estimate,
            t,
            if row.significant { " *" } else { "" }
        );
    }

    let fc = forecast_mem(&model, 12, 0.05)?;
    for (i, month) in fc.months.iter().enumerate() {
        println!(
            "{month} {:>9.0} [{:>9.0}, {:>9.0}] actual {:>9.0}",
            fc.point[i],
            fc.lower[i],
            fc.upper[i],
            split.test.values()[i]
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}

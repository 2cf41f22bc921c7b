// The two backtests: a 2016 hold-out scored on MAPE, and a 2008 hold-out
// scored on direction of change only.

use std::error::Error;

use voltcast::ingest::aggregate_monthly;
use voltcast::memforecast::{run_experiment, ExperimentConfig, Scoring};
use voltcast::series::{split_train_test, AggregationMode, YearMonth};
use voltcast::synth::{synthetic_hourly, SynthConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let monthly = aggregate_monthly(&synthetic_hourly(&SynthConfig::default())?, AggregationMode::Peak)?;

    let holdout = split_train_test(&monthly, YearMonth::new(2015, 12)?)?;
    let report = run_experiment(&holdout, &ExperimentConfig::default())?;
    let m = report.metrics;
    println!(
        "2016: MAPE {:.2}% MAE {:.0} DA {:.2} coverage {:.2}",
        m.mape, m.mae, m.directional_accuracy, report.ci_coverage
    );

    let recession = split_train_test(&monthly, YearMonth::new(2007, 12)?)?;
    let recession = voltcast::series::SplitSpec {
        test: recession.test.slice(0, 12)?,
        ..recession
    };
    let config = ExperimentConfig {
        name: "recession".into(),
        scoring: Scoring::DirectionOnly,
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&recession, &config)?;
    println!("2008: directional accuracy {:.2}", report.metrics.directional_accuracy);

    let mut csv = Vec::new();
    report.write_series_csv(&mut csv)?;
    println!(
        "{}",
        String::from_utf8(csv)?.lines().take(3).collect::<Vec<_>>().join("\n")
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}

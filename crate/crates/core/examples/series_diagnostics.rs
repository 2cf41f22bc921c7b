// Summary statistics, transforms and correlograms of a monthly series.

use std::error::Error;

use voltcast::ingest::aggregate_monthly;
use voltcast::series::{acf, describe, difference, integrate, log_transform, pacf, AggregationMode};
use voltcast::synth::{synthetic_hourly, SynthConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let hourly = synthetic_hourly(&SynthConfig {
        years: 8,
        slump: None,
        ..SynthConfig::default()
    })?;
    let monthly = aggregate_monthly(&hourly, AggregationMode::Peak)?;

    let diffed = difference(&monthly, 1)?;
    let logged = log_transform(&monthly)?;
    for (name, values) in [
        ("raw", monthly.values()),
        ("diff", diffed.values()),
        ("log", logged.values()),
    ] {
        let s = describe(values)?;
        println!(
            "{name:<5} n {:>3} mean {:>10.2} sd {:>9.2} skew {:>6.3} kurt {:>6.3}",
            s.n, s.mean, s.std_dev, s.skewness, s.kurtosis
        );
    }

    // Differencing records the values needed to undo it.
    let back = integrate(&diffed, &monthly.values()[..1])?;
    assert_eq!(back.values(), monthly.values());

    let r = acf(diffed.values(), 12)?;
    let p = pacf(diffed.values(), 12)?;
    println!("lag   acf    pacf   (±{:.3})", r[1].confidence_bound);
    for (a, b) in r.iter().zip(&p).skip(1) {
        println!("{:>3} {:>6.3} {:>6.3}", a.lag, a.value, b.value);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}

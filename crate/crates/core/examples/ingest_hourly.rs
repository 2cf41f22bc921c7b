// Parse a messy hourly extract, clean it, and aggregate to monthly peaks.

use std::error::Error;

use voltcast::ingest::{aggregate_monthly, clean_series, parse_hourly_csv, CleaningPolicy, CsvSchema, DuplicatePolicy};
use voltcast::series::AggregationMode;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // Two days of semicolon-separated data with a repeated hour, a
    // two-hour hole and one unreadable row.
    let mut text = String::from("Datetime;PJM_Load\n");
    for day in 1..=2 {
        for hour in 0..24 {
            if day == 2 && (hour == 5 || hour == 6) {
                continue;
            }
            let load = 30_000.0 + 500.0 * hour as f64;
            text.push_str(&format!("2016-03-{day:02} {hour:02}:00;{load}\n"));
            if day == 1 && hour == 2 {
                text.push_str(&format!("2016-03-01 02:00;{}\n", load + 100.0));
            }
        }
    }
    text.push_str("2016-03-03 00:00;n/a\n");

    let schema = CsvSchema {
        timestamp_column: "Datetime".into(),
        load_column: "PJM_Load".into(),
        delimiter: b';',
        ..CsvSchema::default()
    };
    let (hourly, report) = parse_hourly_csv(text.as_bytes(), &schema)?;
    println!("read {} rows, rejected {:?}", report.rows_read, report.rows_rejected);

    let policy = CleaningPolicy {
        duplicates: DuplicatePolicy::Average,
        ..CleaningPolicy::default()
    };
    let (clean, actions) = clean_series(&hourly, &policy)?;
    println!(
        "{} duplicate hours averaged, {} hours interpolated",
        actions.duplicates_resolved(),
        actions.interpolated()
    );
    assert_eq!(clean.len(), 48);

    for mode in [AggregationMode::Peak, AggregationMode::Mean] {
        let monthly = aggregate_monthly(&clean, mode)?;
        println!("{mode:>5}: {} = {:.1} MW", monthly.start(), monthly.values()[0]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}

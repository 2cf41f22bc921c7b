// Simulate an ARMA process, pick an order, fit it and forecast the mean.

use std::error::Error;

use voltcast::arima::{
    fit_arima, forecast_mean, select_order, simulate_arma, ArimaFitOptions, ArimaOrder, ArmaSpec, Criterion,
};
use voltcast::innovation::InnovationDist;
use voltcast::series::{MonthlySeries, YearMonth};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let spec = ArmaSpec {
        mean: 100.0,
        ar: vec![0.6],
        ma: vec![0.3],
        sigma: 2.0,
    };
    let values = simulate_arma(&spec, 400, 11, InnovationDist::Normal)?;
    let series = MonthlySeries::new(YearMonth::new(1990, 1)?, values)?;

    let options = ArimaFitOptions::default();
    let selection = select_order(&series, 2, 1, 2, Criterion::Bic, &options)?;
    for c in selection.ranked.iter().take(3) {
        println!("ARIMA{} bic {:.2}", c.order, c.bic);
    }

    let model = fit_arima(&series, ArimaOrder::new(1, 0, 1), &options)?;
    for ((name, est), se) in model.param_names.iter().zip(model.estimates()).zip(&model.stderr) {
        println!(
            "{name:<10} {est:>9.4} ({})",
            se.map_or("-".into(), |s| format!("{s:.4}"))
        );
    }

    let fc = forecast_mean(&model, 6, &series)?;
    println!(
        "forecast from {}: {:?}",
        fc.start,
        fc.point.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}

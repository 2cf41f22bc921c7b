// Fit GARCH(1,1) to simulated shocks and locate volatility clusters.

use std::error::Error;

use voltcast::garch::{detect_clusters, fit_garch, simulate_garch, GarchFitOptions, GarchOrder, GarchParams};
use voltcast::innovation::{DistFamily, InnovationDist};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let truth = GarchParams::new(0.1, vec![0.1], vec![0.8])?;
    let (shocks, _) = simulate_garch(&truth, 3000, 5, InnovationDist::StudentT { nu: 8.0 })?;

    for family in [DistFamily::Normal, DistFamily::StudentT] {
        let model = fit_garch(&shocks, GarchOrder::new(1, 1), family, &GarchFitOptions::default())?;
        let p = &model.params;
        println!(
            "{family:<9} omega {:.3} alpha {:.3} beta {:.3} loglik {:.1} ({})",
            p.omega, p.alpha[0], p.beta[0], model.loglik, model.dist
        );
        if family == DistFamily::StudentT {
            let ahead = model.forecast_variance(24)?;
            println!(
                "variance forecast: next {:.3}, in 24 months {:.3}, long run {:.3}",
                ahead[0],
                ahead[23],
                p.unconditional_variance()
            );
            let clusters = detect_clusters(&model.h, 1.5)?;
            let longest = clusters.iter().max_by_key(|c| c.len());
            println!("{} high-variance clusters; longest {:?}", clusters.len(), longest);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}

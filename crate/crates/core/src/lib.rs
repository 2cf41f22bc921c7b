//! Long-term electric load forecasting with an ARIMA mean model and GARCH
//! errors.
//!
//! The pipeline runs hourly load through [`ingest`] to a monthly
//! [`series::MonthlySeries`], checks it with [`stattests`], fits
//! [`arima`] and [`garch`] stages, and forecasts or backtests through
//! [`memforecast`]. The `examples/` directory walks through each step.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arima;
pub mod cli;
pub mod error;
pub mod garch;
pub mod ingest;
pub mod innovation;
pub mod memforecast;
pub mod optim;
pub mod series;
pub mod stattests;
pub mod synth;

pub use error::{Error, Result};

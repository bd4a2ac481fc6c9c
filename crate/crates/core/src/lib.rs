//! Forecasting daily hearing-aid usage from minute-level device logs.
//!
//! The crate covers the whole path from raw logs to explained forecasts:
//!
//! - [`ingest`] parses, validates and synthesizes minute logs;
//! - [`prep`] turns them into scaled, imputed, windowed daily series;
//! - [`nn`] is the numerical kernel (LSTM, self-attention, Adam, gradient checks);
//! - [`model`] holds attn-ED, the Vanilla LSTM baseline, training and search;
//! - [`metrics`] implements sMAPE, MAPE and WAPE and the evaluation protocol;
//! - [`explain`] provides Kernel SHAP with an exact oracle and summary plots;
//! - [`cli`] wires everything into reproducible subcommands.

pub mod cli;
pub mod explain;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod prep;
pub mod seed;

//! Random-forest regression toolkit for daily financial panels.
//!
//! The crate covers the whole workflow: loading `date,value` series, aligning them
//! to a business-day calendar, building window-change features, growing CART
//! regression trees and forests with out-of-bag error, linear baselines, predictor
//! importance, partial effects and horizon-shifted forecasting datasets. A
//! synthetic data generator with a known response function makes every step
//! testable without proprietary data.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod analysis;
pub mod cart;
pub mod dataio;
pub mod error;
pub mod experiment;
pub mod forest;
pub mod linear;
pub mod report;
pub mod synthgen;

pub use error::{Error, Result};

//! Sharpe-optimal linear trading signals.
//!
//! Builds a trading signal as a linear combination of exogenous variables
//! and picks the coefficients that maximize the empirical Sharpe ratio of
//! the resulting PnL, in closed form. On top of that sit regularization
//! schemes (L2, L1, PCA truncation, significance filtering), a beta
//! neutrality constraint, and a rolling train-then-predict backtest engine
//! with z-score gating and PnL-sign correction.

pub mod backtest;
pub mod cli;
pub mod error;
mod linalg;
mod objective;
pub mod oracle;
pub mod preprocess;
pub mod solver;
pub mod synthetic;
mod types;

pub use error::{Error, Result};
pub use types::{Alpha, FeaturePanel, Moments, PriceSeries, TransformedPanel, INTERCEPT_NAME};

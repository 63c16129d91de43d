//! Pricing, hedging and calibration of VIX options when forward variance is
//! driven by a Gaussian Volterra process, optionally time-changed by an
//! independent affine modulator.
//!
//! Module map:
//! - [`kernels`]: Volterra kernels, cumulative energy and grid covariances.
//! - [`lognormal`]: toy model, grids, Gaussian laws, Monte Carlo schemes and
//!   the log-average control variate, Black implied volatility.
//! - [`modulated`]: affine modulators, the ψ/φ Riccati system, two-stage Monte
//!   Carlo and characteristic-function pricing.
//! - [`hedging`]: pathwise deltas and variance-swap hedges.
//! - [`calibration`]: smile fitting.
//! - [`marketdata`]: quote files, configs and result persistence.

pub mod calibration;
pub mod engine;
pub mod error;
pub mod hedging;
pub mod kernels;
pub mod linalg;
pub mod lognormal;
pub mod marketdata;
pub mod modulated;
pub mod quadrature;
pub mod special;

pub use error::{Error, ErrorKind, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Gaussian Volterra (lognormal) forward variance: the toy model, Monte Carlo
//! schemes on power grids and the log-average control variate.

pub mod control;
pub mod convergence;
pub mod curve;
pub mod grid;
pub mod implied;
pub mod law;
pub mod mc;
pub mod payoff;
pub mod toy;

pub use control::{control_variate_price, log_average_moments, LogAverageMoments};
pub use convergence::{convergence_study, ConvergenceReport, ConvergenceRow, ConvergenceSpec};
pub use curve::ForwardVarianceCurve;
pub use grid::{DiscretizationGrid, Scheme};
pub use implied::black_implied_vol;
pub use law::{build_law, GaussianLaw};
pub use mc::{price_vix_option_mc, price_vix_options_mc, McConfig, McPrice, VixFunctional, GAUSS_TAG};
pub use payoff::{black_call, Payoff};
pub use toy::{toy_call_price, toy_hedge_ratio, ToyModel};

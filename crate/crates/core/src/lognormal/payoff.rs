//! Payoffs written on `x = VIX²` and their lognormal (control variate)
//! counterparts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::norm_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payoff {
    /// `(√x − K)⁺`
    Call { strike: f64 },
    /// `(K − √x)⁺`
    Put { strike: f64 },
    /// `√x`
    Future,
    /// `x`
    VarianceSwap,
    /// `1{√x > K}`
    Digital { strike: f64 },
}

impl Payoff {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Payoff::Call { strike } | Payoff::Put { strike } | Payoff::Digital { strike } => {
                if !(strike >= 0.0 && strike.is_finite()) {
                    return Err(Error::invalid(format!("strike must be >= 0, got {strike}")));
                }
            }
            _ => {}
        }
        Ok(())
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        let v = x.max(0.0).sqrt();
        match *self {
            Payoff::Call { strike } => (v - strike).max(0.0),
            Payoff::Put { strike } => (strike - v).max(0.0),
            Payoff::Future => v,
            Payoff::VarianceSwap => x,
            Payoff::Digital { strike } => {
                if v > strike {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `f'(x)` with `x` floored at `floor`; errors for payoffs whose derivative
    /// is not a bounded function.
    pub fn derivative(&self, x: f64, floor: f64) -> Result<f64> {
        let x = x.max(floor);
        let v = x.sqrt();
        Ok(match *self {
            Payoff::Call { strike } => {
                if v > strike {
                    0.5 / v
                } else {
                    0.0
                }
            }
            Payoff::Put { strike } => {
                if v < strike {
                    -0.5 / v
                } else {
                    0.0
                }
            }
            Payoff::Future => 0.5 / v,
            Payoff::VarianceSwap => 1.0,
            Payoff::Digital { .. } => {
                return Err(Error::Unsupported(
                    "digital payoff has no bounded derivative".into(),
                ))
            }
        })
    }

    /// Payoff evaluated on `x = e^y` (the log-average proxy).
    #[inline]
    pub fn value_log(&self, y: f64) -> f64 {
        self.value(y.exp())
    }

    /// `E[f(e^Y)]` for `Y ~ N(m, v)`.
    pub fn lognormal_expectation(&self, m: f64, v: f64) -> f64 {
        let sd = v.max(0.0).sqrt();
        // S = e^{Y/2} is lognormal with log-mean m/2 and log-variance v/4
        let fwd = (0.5 * m + v / 8.0).exp();
        match *self {
            Payoff::Call { strike } => black_call(fwd, strike, 0.5 * sd),
            Payoff::Put { strike } => black_call(fwd, strike, 0.5 * sd) - fwd + strike,
            Payoff::Future => fwd,
            Payoff::VarianceSwap => (m + 0.5 * v).exp(),
            Payoff::Digital { strike } => {
                if strike <= 0.0 {
                    return 1.0;
                }
                if sd == 0.0 {
                    return if fwd > strike { 1.0 } else { 0.0 };
                }
                let s = 0.5 * sd;
                norm_cdf(((fwd / strike).ln() - 0.5 * s * s) / s)
            }
        }
    }
}

/// Black call price with total standard deviation `s = σ√T` and zero rates.
pub fn black_call(fwd: f64, strike: f64, s: f64) -> f64 {
    if strike <= 0.0 {
        return fwd;
    }
    if s <= 0.0 {
        return (fwd - strike).max(0.0);
    }
    let d1 = ((fwd / strike).ln() + 0.5 * s * s) / s;
    fwd * norm_cdf(d1) - strike * norm_cdf(d1 - s)
}

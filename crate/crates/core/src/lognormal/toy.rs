//! Lognormal model for the instantaneous forward variance `ξ_t(T0)`, fully
//! described by the variance function `c`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::special::norm_cdf;

pub type VarianceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ToyModel {
    pub xi_t: f64,
    pub c_fn: VarianceFn,
}

impl fmt::Debug for ToyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ToyModel").field("xi_t", &self.xi_t).finish_non_exhaustive()
    }
}

/// Price and the two Black-Scholes arguments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyQuote {
    pub price: f64,
    pub d1: f64,
    pub d2: f64,
}

impl ToyModel {
    /// Validates positivity of `ξ_t` and monotonicity/continuity of `c` on a
    /// probe grid over `[0, probe_end]`.
    pub fn new(xi_t: f64, c_fn: VarianceFn, probe_end: f64) -> Result<Self> {
        if !(xi_t > 0.0 && xi_t.is_finite()) {
            return Err(Error::Domain(format!("xi_t must be positive, got {xi_t}")));
        }
        let probes = 257;
        let mut prev = c_fn(0.0);
        let mut max_jump: f64 = 0.0;
        for k in 1..probes {
            let v = c_fn(probe_end * k as f64 / (probes - 1) as f64);
            if !v.is_finite() || v < prev - 1e-14 * prev.abs().max(1.0) {
                return Err(Error::invalid("variance function must be finite and nondecreasing"));
            }
            max_jump = max_jump.max(v - prev);
            prev = v;
        }
        let total = prev - c_fn(0.0);
        if total > 0.0 && max_jump > 0.5 * total && probes > 2 {
            return Err(Error::invalid("variance function looks discontinuous on the probe grid"));
        }
        Ok(ToyModel { xi_t, c_fn })
    }

    /// `c(t) = α²[T0^{2H} − (T0 − t)^{2H}] / (2H)`: the variance function of a
    /// power-law kernel observed at date `T0`.
    pub fn rough(xi_t: f64, alpha: f64, hurst: f64, t0: f64) -> Result<Self> {
        let h2 = 2.0 * hurst;
        let c: VarianceFn = Arc::new(move |t: f64| {
            let rem = (t0 - t).max(0.0);
            alpha * alpha * (t0.powf(h2) - rem.powf(h2)) / h2
        });
        Self::new(xi_t, c, t0)
    }

    fn remaining(&self, t: f64, t0: f64) -> Result<f64> {
        let v = (self.c_fn)(t0) - (self.c_fn)(t);
        if v < 0.0 {
            return Err(Error::invalid(format!(
                "remaining variance c(T0) - c(t) = {v} is negative"
            )));
        }
        Ok(v)
    }

    /// Call on `ξ_{T0}(T0)` with strike `K`.
    pub fn call(&self, strike: f64, t: f64, t0: f64) -> Result<ToyQuote> {
        if !(strike > 0.0) {
            return Err(Error::invalid(format!("strike must be positive, got {strike}")));
        }
        let v = self.remaining(t, t0)?;
        if v == 0.0 {
            let intrinsic = (self.xi_t - strike).max(0.0);
            let inf = if self.xi_t > strike { f64::INFINITY } else { f64::NEG_INFINITY };
            return Ok(ToyQuote {
                price: intrinsic,
                d1: inf,
                d2: inf,
            });
        }
        Ok(quote(self.xi_t, strike, v))
    }

    /// Units of the variance swap held by the perfect hedge: `N(d¹)`.
    pub fn hedge_ratio(&self, strike: f64, t: f64, t0: f64) -> Result<f64> {
        Ok(norm_cdf(self.call(strike, t, t0)?.d1))
    }
}

/// Call on a lognormal `Ξ` with current value `xi` and remaining variance
/// function increment `v > 0` (log-variance `4v`).
pub fn quote(xi: f64, strike: f64, v: f64) -> ToyQuote {
    let sd = v.sqrt();
    let half_log = 0.5 * (xi / strike).ln();
    let d1 = (half_log + v) / sd;
    let d2 = (half_log - v) / sd;
    ToyQuote {
        price: xi * norm_cdf(d1) - strike * norm_cdf(d2),
        d1,
        d2,
    }
}

pub fn toy_call_price(model: &ToyModel, strike: f64, t: f64, t0: f64) -> Result<ToyQuote> {
    model.call(strike, t, t0)
}

pub fn toy_hedge_ratio(model: &ToyModel, strike: f64, t: f64, t0: f64) -> Result<f64> {
    model.hedge_ratio(strike, t, t0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(slope: f64) -> VarianceFn {
        Arc::new(move |t| slope * t)
    }

    #[test]
    fn at_the_money_example() {
        let m = ToyModel::new(0.04, linear(0.01), 1.0).unwrap();
        let q = m.call(0.04, 0.0, 1.0).unwrap();
        assert!((q.d1 - 0.1).abs() < 1e-15 && (q.d2 + 0.1).abs() < 1e-15);
        assert!((q.price - 0.003_186_226_982_162_32).abs() < 1e-15, "{}", q.price);
        assert!((m.hedge_ratio(0.04, 0.0, 1.0).unwrap() - 0.539_827_8).abs() < 1e-7);
    }

    #[test]
    fn limits() {
        let m = ToyModel::new(0.04, linear(0.01), 1.0).unwrap();
        assert!((m.call(1e-12, 0.0, 1.0).unwrap().price - 0.04).abs() < 1e-11);
        assert!((m.hedge_ratio(1e-12, 0.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(m.hedge_ratio(1e6, 0.0, 1.0).unwrap() < 1e-12);
        let flat = ToyModel::new(0.05, linear(0.0), 1.0).unwrap();
        assert!((flat.call(0.04, 0.0, 1.0).unwrap().price - 0.01).abs() < 1e-17);
        assert!(m.call(0.04, 1.0, 0.5).is_err());
    }
}

//! Black (lognormal forward) implied volatility.

use super::payoff::black_call;
use crate::error::{Error, Result};
use crate::special::norm_pdf;

/// Implied volatility of a call on a lognormal forward `F` with zero rates.
pub fn black_implied_vol(price: f64, forward: f64, strike: f64, maturity: f64) -> Result<f64> {
    if !(forward > 0.0 && strike > 0.0 && maturity > 0.0) {
        return Err(Error::invalid(format!(
            "implied vol needs F, K, T > 0 (F={forward}, K={strike}, T={maturity})"
        )));
    }
    let lower = (forward - strike).max(0.0);
    if !(price > lower && price < forward) {
        return Err(Error::Arbitrage {
            price,
            lower,
            upper: forward,
        });
    }
    let sqrt_t = maturity.sqrt();
    // bracket on total deviation s = σ√T
    let (mut lo, mut hi) = (0.0, 1.0);
    while black_call(forward, strike, hi) < price {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::numerical("implied vol bracket", price));
        }
    }
    let ln_fk = (forward / strike).ln();
    let mut s = {
        // Brenner-Subrahmanyam style start, clamped into the bracket
        let guess = (2.0 * std::f64::consts::PI).sqrt() * price / forward + ln_fk.abs().sqrt();
        guess.clamp(0.05 * hi, 0.95 * hi)
    };
    for _ in 0..300 {
        let f = black_call(forward, strike, s) - price;
        if f.abs() < 1e-13 * forward.max(1e-300) || (hi - lo) < 1e-16 {
            return Ok(s / sqrt_t);
        }
        if f > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let d1 = ln_fk / s + 0.5 * s;
        let vega = forward * norm_pdf(d1);
        let newton = s - f / vega;
        s = if vega > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    let res = (black_call(forward, strike, s) - price).abs();
    if res < 1e-10 {
        Ok(s / sqrt_t)
    } else {
        Err(Error::numerical("implied vol", res))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let p = black_call(0.2, 0.2, 0.6 * 0.5f64.sqrt());
        let v = black_implied_vol(p, 0.2, 0.2, 0.5).unwrap();
        assert!((v - 0.6).abs() < 1e-8);
        for &(k, vol) in &[(0.1, 1.2), (0.3, 0.4), (0.16, 0.05), (0.25, 2.5)] {
            let p = black_call(0.2, k, vol * 0.5f64.sqrt());
            let v = black_implied_vol(p, 0.2, k, 0.5).unwrap();
            assert!((black_call(0.2, k, v * 0.5f64.sqrt()) - p).abs() < 1e-10, "{k} {vol} {v}");
        }
    }

    #[test]
    fn near_intrinsic_does_not_crash() {
        let v = black_implied_vol(0.05 + 1e-14, 0.2, 0.15, 0.5).unwrap();
        assert!(v >= 0.0 && v < 0.2);
    }

    #[test]
    fn band_violations() {
        assert!(matches!(
            black_implied_vol(0.3, 0.2, 0.1, 1.0),
            Err(Error::Arbitrage { .. })
        ));
        assert!(black_implied_vol(0.1, 0.2, 0.1, 1.0).is_err());
    }
}

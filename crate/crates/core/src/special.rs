//! Special functions: standard normal distribution and the Gauss
//! hypergeometric function on the negative real axis.

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

const MAX_TERMS: usize = 20_000;

/// Power series of 2F1 for 0 ≤ w < 1.
fn series(a: f64, b: f64, c: f64, w: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * w;
        sum += term;
        if term == 0.0 || (term.abs() <= 1e-17 * sum.abs() && k > 2) {
            return Ok(sum);
        }
    }
    Err(Error::numerical("hyp2f1 series", term.abs()))
}

/// Gauss hypergeometric function ₂F₁(a, b; c; x) for x ≤ 0 and c > b > 0.
///
/// The argument is mapped into [0, 1) by the Pfaff transformation
/// ₂F₁(a,b;c;x) = (1−x)^{−a} ₂F₁(a, c−b; c; x/(x−1)); when the mapped argument
/// is close to 1 the 1−w connection formula is applied.
pub fn hyp2f1(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    if !(x <= 0.0) || !(c > b && b > 0.0) {
        return Err(Error::invalid(format!(
            "hyp2f1 requires x <= 0 and c > b > 0 (got a={a}, b={b}, c={c}, x={x})"
        )));
    }
    if x == 0.0 || a == 0.0 {
        return Ok(1.0);
    }
    let w = x / (x - 1.0);
    let bb = c - b;
    let pre = (1.0 - x).powf(-a);
    let s = c - a - bb;
    let near_integer = (s - s.round()).abs() < 1e-6;
    if w <= 0.6 || near_integer {
        return Ok(pre * series(a, bb, c, w)?);
    }
    // 1 − w connection formula
    let v = 1.0 - w;
    let t1 = gamma(c) * gamma(s) / (gamma(c - a) * gamma(c - bb)) * series(a, bb, 1.0 - s, v)?;
    let t2 = v.powf(s) * gamma(c) * gamma(-s) / (gamma(a) * gamma(bb))
        * series(c - a, c - bb, 1.0 + s, v)?;
    Ok(pre * (t1 + t2))
}

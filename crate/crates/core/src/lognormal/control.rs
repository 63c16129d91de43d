//! Continuous-time log-average approximation `VIX̄² = exp((1/Θ)∫ log ξ_T(u) du)`
//! and its closed-form option prices.

use super::curve::ForwardVarianceCurve;
use super::payoff::Payoff;
use crate::error::{Error, Result};
use crate::kernels::{weighted_cross_integral, Kernel};
use crate::quadrature::{graded_rule, integrate, Tolerance};

/// Mean and variance of `Y = log VIX̄²_T` given information at `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogAverageMoments {
    pub mean: f64,
    pub variance: f64,
}

fn check_window(t: f64, horizon: f64, theta: f64) -> Result<()> {
    if !(t <= horizon && theta > 0.0) {
        return Err(Error::invalid(format!(
            "need t <= T and Θ > 0 (t={t}, T={horizon}, Θ={theta})"
        )));
    }
    Ok(())
}

/// Window average `Ḡ(s) = (1/Θ)∫_T^{T+Θ} g(u − s) du` for a one-factor kernel.
pub fn window_average<K: Kernel + ?Sized>(kernel: &K, s: f64, horizon: f64, theta: f64) -> Result<f64> {
    let mut out = vec![0.0; kernel.dimension()];
    kernel.lag_integral_into(horizon - s, horizon + theta - s, &mut out)?;
    Ok(out[0] / theta)
}

/// `m_Y` and `σ_Y²` by one-dimensional quadrature:
/// `σ_Y² = 4∫ₜᵀ ‖Ḡ(s)‖² ds`.
pub fn log_average_moments<K: Kernel + ?Sized>(
    kernel: &K,
    curve: &ForwardVarianceCurve,
    t: f64,
    horizon: f64,
    theta: f64,
) -> Result<LogAverageMoments> {
    check_window(t, horizon, theta)?;
    curve.validate()?;
    let tol = Tolerance::new(1e-16, 1e-12);
    let drift = if t == horizon || kernel.is_zero() {
        0.0
    } else {
        integrate(
            |u| {
                let a = kernel.cumulative_energy(u - t).unwrap_or(f64::NAN);
                let b = kernel.cumulative_energy(u - horizon).unwrap_or(f64::NAN);
                -2.0 * (a - b)
            },
            horizon,
            horizon + theta,
            tol,
        )? / theta
    };
    let mean = curve.log_integral(horizon, horizon + theta) / theta + drift;
    let d = kernel.dimension();
    let variance = if t == horizon || kernel.is_zero() {
        0.0
    } else {
        let mut buf = vec![0.0; d];
        4.0 * integrate(
            |s| {
                if kernel
                    .lag_integral_into(horizon - s, horizon + theta - s, &mut buf)
                    .is_err()
                {
                    return f64::NAN;
                }
                buf.iter().map(|x| x * x).sum::<f64>() / (theta * theta)
            },
            t,
            horizon,
            tol,
        )?
    };
    Ok(LogAverageMoments { mean, variance })
}

/// `σ_Y² = (1/Θ²)∫∫ C(u, v) du dv` on a tensor product of graded
/// Gauss-Legendre rules (`order` nodes per panel, 8 panels per axis), with
/// `C(u, v)` itself by quadrature. Independent of [`log_average_moments`].
pub fn log_average_variance_tensor<K: Kernel + ?Sized>(
    kernel: &K,
    t: f64,
    horizon: f64,
    theta: f64,
    order: usize,
) -> Result<f64> {
    check_window(t, horizon, theta)?;
    // graded towards u = T, where C(u, ·) is least regular
    let (x, w) = graded_rule(horizon + theta, horizon, 8, order, 0.2);
    let n = x.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in i..n {
            let c = 4.0 * weighted_cross_integral(kernel, x[i], x[j], t, horizon, |_| 1.0)?;
            let f = if i == j { 1.0 } else { 2.0 };
            total += f * w[i].abs() * w[j].abs() * c;
        }
    }
    Ok(total / (theta * theta))
}

/// `E[f(VIX̄²_T)]` under the continuous log-average approximation.
pub fn control_variate_price<K: Kernel + ?Sized>(
    kernel: &K,
    curve: &ForwardVarianceCurve,
    t: f64,
    horizon: f64,
    theta: f64,
    payoff: Payoff,
) -> Result<f64> {
    payoff.validate()?;
    let m = log_average_moments(kernel, curve, t, horizon, theta)?;
    Ok(payoff.lognormal_expectation(m.mean, m.variance))
}

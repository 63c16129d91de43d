//! Volterra kernels `g`, their cumulative energy `G(t) = ∫₀ᵗ ‖g(s)‖² ds` and
//! the covariance of the log Doléans exponentials on a grid of dates.

use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::quadrature::{integrate, Tolerance};
use crate::special::hyp2f1;

/// A deterministic Volterra kernel with values in ℝᵈ.
///
/// Implementations describe `g(t, s)` for `s < t`. Time-homogeneous kernels
/// (`g(t, s) = g(t − s)`) additionally expose the lag-based methods which the
/// covariance routines and the modulated model rely on.
pub trait Kernel: Debug + Send + Sync {
    fn dimension(&self) -> usize {
        1
    }

    fn time_homogeneous(&self) -> bool;

    /// `g(t, s)` written into `out` (length `dimension()`).
    fn evaluate_into(&self, t: f64, s: f64, out: &mut [f64]) -> Result<()>;

    /// `g(t1, s)ᵀ g(t2, s)` for `s < min(t1, t2)`.
    fn inner(&self, t1: f64, t2: f64, s: f64) -> Result<f64> {
        let d = self.dimension();
        let mut a = vec![0.0; d];
        let mut b = vec![0.0; d];
        self.evaluate_into(t1, s, &mut a)?;
        self.evaluate_into(t2, s, &mut b)?;
        Ok(a.iter().zip(&b).map(|(x, y)| x * y).sum())
    }

    /// `g(τ1)ᵀ g(τ2)` for a homogeneous kernel, `τ1, τ2 > 0`. No argument
    /// checks: callers guarantee positive lags.
    fn lag_inner(&self, tau1: f64, tau2: f64) -> f64 {
        self.inner(tau1, tau2, 0.0).unwrap_or(f64::NAN)
    }

    /// `g(τ)` written into `out` for a homogeneous kernel.
    fn lag_into(&self, tau: f64, out: &mut [f64]) {
        if self.evaluate_into(tau, 0.0, out).is_err() {
            out.iter_mut().for_each(|x| *x = f64::NAN);
        }
    }

    /// `∫_lo^hi g(τ) dτ` (componentwise) for a homogeneous kernel.
    fn lag_integral_into(&self, lo: f64, hi: f64, out: &mut [f64]) -> Result<()> {
        let d = self.dimension();
        let beta = self.singular_exponent();
        let mut buf = vec![0.0; d];
        for (k, o) in out.iter_mut().enumerate().take(d) {
            // τ = lo + (hi − lo)·w^q removes a power singularity at τ = 0
            let q = if lo == 0.0 { 1.0 / (beta + 1.0) } else { 1.0 };
            *o = integrate(
                |w| {
                    if w <= 0.0 && lo == 0.0 {
                        return 0.0;
                    }
                    let tau = lo + (hi - lo) * w.powf(q);
                    self.lag_into(tau, &mut buf);
                    buf[k] * (hi - lo) * q * w.powf(q - 1.0)
                },
                0.0,
                1.0,
                Tolerance::new(1e-15, 1e-12),
            )?;
        }
        Ok(())
    }

    /// Exponent β with ‖g(τ)‖ ~ τ^β as τ → 0 (0 for bounded kernels).
    fn singular_exponent(&self) -> f64 {
        0.0
    }

    /// `G(t) = ∫₀ᵗ ‖g(s)‖² ds`.
    fn cumulative_energy(&self, t: f64) -> Result<f64> {
        if !self.time_homogeneous() {
            return Err(Error::Unsupported(
                "cumulative energy requires a time-homogeneous kernel".into(),
            ));
        }
        if t < 0.0 {
            return Err(Error::invalid(format!("cumulative energy at negative time {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let q = 1.0 / (2.0 * self.singular_exponent() + 1.0);
        integrate(
            |w| {
                if w <= 0.0 {
                    return 0.0;
                }
                let tau = t * w.powf(q);
                self.lag_inner(tau, tau) * t * q * w.powf(q - 1.0)
            },
            0.0,
            1.0,
            Tolerance::new(1e-16, 1e-13),
        )
    }

    /// Closed-form `∫_a^b g(t_i,s)ᵀ g(t_j,s) ds` for `t_i = t_j`, if known.
    fn diagonal_closed_form(&self, _ti: f64, _a: f64, _b: f64) -> Option<f64> {
        None
    }

    fn is_zero(&self) -> bool {
        false
    }
}

/// Power-law (fractional) kernel `g(τ) = α τ^{H − 1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawKernel {
    pub alpha: f64,
    pub hurst: f64,
}

impl PowerLawKernel {
    pub fn new(alpha: f64, hurst: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("power-law kernel needs alpha > 0, got {alpha}")));
        }
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::invalid(format!("power-law kernel needs 0 < H < 1, got {hurst}")));
        }
        Ok(PowerLawKernel { alpha, hurst })
    }

    /// Kernel whose scale is set from the volatility of volatility `ν`:
    /// `α = 2ν √(Γ(3/2 − H) / (Γ(H + 1) Γ(2 − 2H)))`.
    pub fn from_nu(nu: f64, hurst: f64) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::invalid(format!("nu must be positive, got {nu}")));
        }
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::invalid(format!("power-law kernel needs 0 < H < 1, got {hurst}")));
        }
        let alpha =
            2.0 * nu * (gamma(1.5 - hurst) / (gamma(hurst + 1.0) * gamma(2.0 - 2.0 * hurst))).sqrt();
        Self::new(alpha, hurst)
    }

    pub fn evaluate(&self, t: f64, s: f64) -> Result<f64> {
        if !(s < t) {
            return Err(Error::Domain(format!(
                "power-law kernel evaluated at s={s} >= t={t}"
            )));
        }
        Ok(self.alpha * (t - s).powf(self.hurst - 0.5))
    }

    /// Off-diagonal covariance `4∫ₜᵀ g(t_i−s) g(t_j−s) ds` for `t_i < t_j` via
    /// the hypergeometric closed form.
    pub fn covariance_closed_form(&self, t: f64, horizon: f64, ti: f64, tj: f64) -> Result<f64> {
        let (ti, tj) = if ti <= tj { (ti, tj) } else { (tj, ti) };
        let h = self.hurst;
        if ti == tj {
            return Ok(2.0 * self.alpha * self.alpha / h
                * ((ti - t).powf(2.0 * h) - (ti - horizon).powf(2.0 * h)));
        }
        let d = tj - ti;
        let (a, b, c) = (0.5 - h, 0.5 + h, 1.5 + h);
        let upper = (ti - t).powf(h + 0.5) * hyp2f1(a, b, c, -(ti - t) / d)?;
        let lower = if ti > horizon {
            (ti - horizon).powf(h + 0.5) * hyp2f1(a, b, c, -(ti - horizon) / d)?
        } else {
            0.0
        };
        Ok(4.0 * self.alpha * self.alpha / (h + 0.5) * d.powf(h - 0.5) * (upper - lower))
    }
}

impl Kernel for PowerLawKernel {
    fn time_homogeneous(&self) -> bool {
        true
    }

    fn evaluate_into(&self, t: f64, s: f64, out: &mut [f64]) -> Result<()> {
        out[0] = self.evaluate(t, s)?;
        Ok(())
    }

    fn inner(&self, t1: f64, t2: f64, s: f64) -> Result<f64> {
        Ok(self.evaluate(t1, s)? * self.evaluate(t2, s)?)
    }

    #[inline]
    fn lag_inner(&self, tau1: f64, tau2: f64) -> f64 {
        self.alpha * self.alpha * (tau1 * tau2).powf(self.hurst - 0.5)
    }

    fn lag_into(&self, tau: f64, out: &mut [f64]) {
        out[0] = self.alpha * tau.powf(self.hurst - 0.5);
    }

    fn lag_integral_into(&self, lo: f64, hi: f64, out: &mut [f64]) -> Result<()> {
        let p = self.hurst + 0.5;
        out[0] = self.alpha * (hi.powf(p) - lo.powf(p)) / p;
        Ok(())
    }

    fn singular_exponent(&self) -> f64 {
        (self.hurst - 0.5).min(0.0)
    }

    fn cumulative_energy(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::invalid(format!("cumulative energy at negative time {t}")));
        }
        let h2 = 2.0 * self.hurst;
        Ok(self.alpha * self.alpha * t.powf(h2) / h2)
    }

    fn diagonal_closed_form(&self, ti: f64, a: f64, b: f64) -> Option<f64> {
        let h2 = 2.0 * self.hurst;
        Some(self.alpha * self.alpha / h2 * ((ti - a).powf(h2) - (ti - b).powf(h2)))
    }
}

/// Exponential kernel `g(τ) = η e^{−κτ}` (one-factor Bergomi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialKernel {
    pub eta: f64,
    pub kappa: f64,
}

impl ExponentialKernel {
    pub fn new(eta: f64, kappa: f64) -> Result<Self> {
        if !(eta > 0.0 && kappa >= 0.0) {
            return Err(Error::invalid(format!(
                "exponential kernel needs eta > 0 and kappa >= 0, got {eta}, {kappa}"
            )));
        }
        Ok(ExponentialKernel { eta, kappa })
    }
}

impl Kernel for ExponentialKernel {
    fn time_homogeneous(&self) -> bool {
        true
    }

    fn evaluate_into(&self, t: f64, s: f64, out: &mut [f64]) -> Result<()> {
        if !(s < t) {
            return Err(Error::Domain(format!("kernel evaluated at s={s} >= t={t}")));
        }
        out[0] = self.eta * (-self.kappa * (t - s)).exp();
        Ok(())
    }

    fn lag_inner(&self, tau1: f64, tau2: f64) -> f64 {
        self.eta * self.eta * (-self.kappa * (tau1 + tau2)).exp()
    }

    fn lag_into(&self, tau: f64, out: &mut [f64]) {
        out[0] = self.eta * (-self.kappa * tau).exp();
    }

    fn lag_integral_into(&self, lo: f64, hi: f64, out: &mut [f64]) -> Result<()> {
        out[0] = if self.kappa == 0.0 {
            self.eta * (hi - lo)
        } else {
            self.eta * ((-self.kappa * lo).exp() - (-self.kappa * hi).exp()) / self.kappa
        };
        Ok(())
    }

    fn cumulative_energy(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::invalid(format!("cumulative energy at negative time {t}")));
        }
        if self.kappa == 0.0 {
            return Ok(self.eta * self.eta * t);
        }
        Ok(self.eta * self.eta * (1.0 - (-2.0 * self.kappa * t).exp()) / (2.0 * self.kappa))
    }
}

/// The zero kernel in dimension `d`: a deterministic variance curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroKernel {
    pub dimension: usize,
}

impl Kernel for ZeroKernel {
    fn dimension(&self) -> usize {
        self.dimension
    }
    fn time_homogeneous(&self) -> bool {
        true
    }
    fn evaluate_into(&self, t: f64, s: f64, out: &mut [f64]) -> Result<()> {
        if !(s < t) {
            return Err(Error::Domain(format!("kernel evaluated at s={s} >= t={t}")));
        }
        out.iter_mut().for_each(|x| *x = 0.0);
        Ok(())
    }
    fn lag_inner(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn lag_into(&self, _: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
    }
    fn lag_integral_into(&self, _: f64, _: f64, out: &mut [f64]) -> Result<()> {
        out.iter_mut().for_each(|x| *x = 0.0);
        Ok(())
    }
    fn cumulative_energy(&self, _: f64) -> Result<f64> {
        Ok(0.0)
    }
    fn diagonal_closed_form(&self, _: f64, _: f64, _: f64) -> Option<f64> {
        Some(0.0)
    }
    fn is_zero(&self) -> bool {
        true
    }
}

/// Serializable kernel description as used in model configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelSpec {
    PowerLaw {
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        nu: Option<f64>,
        hurst: f64,
    },
    Exponential { eta: f64, kappa: f64 },
    Zero,
}

impl KernelSpec {
    pub fn build(&self) -> Result<Arc<dyn Kernel>> {
        Ok(match *self {
            KernelSpec::PowerLaw { alpha, nu, hurst } => match (alpha, nu) {
                (Some(a), None) => Arc::new(PowerLawKernel::new(a, hurst)?),
                (None, Some(n)) => Arc::new(PowerLawKernel::from_nu(n, hurst)?),
                _ => {
                    return Err(Error::invalid(
                        "power_law kernel needs exactly one of alpha or nu",
                    ))
                }
            },
            KernelSpec::Exponential { eta, kappa } => Arc::new(ExponentialKernel::new(eta, kappa)?),
            KernelSpec::Zero => Arc::new(ZeroKernel { dimension: 1 }),
        })
    }
}

/// Valuation time `t`, observation date `T` and grid dates `t_0 < … < t_n`,
/// all at or after `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub t: f64,
    pub horizon: f64,
    pub dates: Vec<f64>,
}

impl CovarianceSpec {
    pub fn new(t: f64, horizon: f64, dates: Vec<f64>) -> Result<Self> {
        let s = CovarianceSpec { t, horizon, dates };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t.is_finite() && self.horizon.is_finite() && self.t <= self.horizon) {
            return Err(Error::invalid(format!(
                "need t <= T, got t={} T={}",
                self.t, self.horizon
            )));
        }
        if self.dates.is_empty() {
            return Err(Error::invalid("empty grid"));
        }
        if self.dates[0] < self.horizon {
            return Err(Error::invalid(format!(
                "first grid date {} precedes T={}",
                self.dates[0], self.horizon
            )));
        }
        if self.dates.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("grid dates must be strictly increasing"));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        let n = self.dates.len();
        format!(
            "t={} T={} dates[{}]=[{}, …, {}]",
            self.t,
            self.horizon,
            n,
            self.dates[0],
            self.dates[n - 1]
        )
    }
}

/// Quadrature settings for covariance integrals.
const COV_TOL: Tolerance = Tolerance {
    abs: 1e-16,
    rel: 1e-11,
    max_pieces: 2000,
};

/// `∫_a^b w(s) g(t_i−s)ᵀ g(t_j−s) ds` for a homogeneous kernel, `t_i ≤ t_j`,
/// `b ≤ t_i`, computed in the variable `y = log(t_i − s)` so that the
/// (near-)singular behaviour at `s → t_i` becomes an exponential tail.
pub fn weighted_cross_integral<K: Kernel + ?Sized, W: Fn(f64) -> f64>(
    kernel: &K,
    ti: f64,
    tj: f64,
    a: f64,
    b: f64,
    weight: W,
) -> Result<f64> {
    let (ti, tj) = if ti <= tj { (ti, tj) } else { (tj, ti) };
    if !(a <= b && b <= ti) {
        return Err(Error::invalid(format!(
            "cross integral needs a <= b <= t_i (a={a}, b={b}, t_i={ti})"
        )));
    }
    if a == b || kernel.is_zero() {
        return Ok(0.0);
    }
    let gap = tj - ti;
    let y_hi = (ti - a).ln();
    let f = |y: f64| {
        let tau = y.exp();
        let s = ti - tau;
        weight(s) * kernel.lag_inner(tau, gap + tau) * tau
    };
    if ti - b > 0.0 {
        let y_lo = (ti - b).ln();
        return integrate(f, y_lo, y_hi, COV_TOL);
    }
    // improper at s = t_i: integrand ~ e^{p y} as y → −∞
    let beta = kernel.singular_exponent();
    let p = if gap == 0.0 { 2.0 * beta + 1.0 } else { beta + 1.0 };
    if !(p > 0.0) {
        return Err(Error::Domain("kernel is not square integrable at the grid start".into()));
    }
    let y_lo = y_hi - 42.0 / p;
    let body = integrate(f, y_lo, y_hi, COV_TOL)?;
    Ok(body + f(y_lo) / p)
}

/// Covariance `C_ij = 4∫ₜᵀ g(t_i,s)ᵀ g(t_j,s) ds` and means
/// `m_i = −2∫ₜᵀ ‖g(t_i,s)‖² ds` of the log Doléans exponentials.
pub fn covariance_matrix<K: Kernel + ?Sized>(
    kernel: &K,
    spec: &CovarianceSpec,
) -> Result<(SymMatrix, Vec<f64>)> {
    spec.validate()?;
    if !kernel.time_homogeneous() {
        return Err(Error::Unsupported(
            "covariance quadrature is implemented for time-homogeneous kernels".into(),
        ));
    }
    let n = spec.dates.len();
    let (t, big_t) = (spec.t, spec.horizon);
    let mut c = SymMatrix::zeros(n);
    for i in 0..n {
        let ti = spec.dates[i];
        let cii = match kernel.diagonal_closed_form(ti, t, big_t) {
            Some(v) => 4.0 * v,
            None => 4.0 * weighted_cross_integral(kernel, ti, ti, t, big_t, |_| 1.0)?,
        };
        c.set_sym(i, i, cii);
        for j in i + 1..n {
            let v = 4.0 * weighted_cross_integral(kernel, ti, spec.dates[j], t, big_t, |_| 1.0)?;
            c.set_sym(i, j, v);
        }
    }
    let mean = (0..n).map(|i| -0.5 * c.get(i, i)).collect();
    Ok((c, mean))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulative_energy_closed_forms() {
        let k = PowerLawKernel::new(1.0, 0.5).unwrap();
        assert!((k.cumulative_energy(2.0).unwrap() - 2.0).abs() < 1e-14);
        let k = PowerLawKernel::new(1.0, 0.1).unwrap();
        assert!((k.cumulative_energy(1.0).unwrap() - 5.0).abs() < 1e-13);
    }

    #[test]
    fn generic_energy_quadrature_matches_power_law() {
        #[derive(Debug)]
        struct Generic(PowerLawKernel);
        impl Kernel for Generic {
            fn time_homogeneous(&self) -> bool {
                true
            }
            fn evaluate_into(&self, t: f64, s: f64, out: &mut [f64]) -> Result<()> {
                out[0] = self.0.evaluate(t, s)?;
                Ok(())
            }
            fn singular_exponent(&self) -> f64 {
                self.0.hurst - 0.5
            }
        }
        let k = Generic(PowerLawKernel::new(0.2, 0.1).unwrap());
        let want = 0.04 * 0.5f64.powf(0.2) / 0.2;
        let got = k.cumulative_energy(0.5).unwrap();
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        let mut out = [0.0];
        k.lag_integral_into(0.0, 0.3, &mut out).unwrap();
        let mut exact = [0.0];
        k.0.lag_integral_into(0.0, 0.3, &mut exact).unwrap();
        assert!((out[0] - exact[0]).abs() < 1e-10);
    }

    #[test]
    fn evaluation_at_or_after_t_is_an_error() {
        let k = PowerLawKernel::new(1.0, 0.1).unwrap();
        assert!(k.evaluate(1.0, 1.0).is_err());
        assert!(k.evaluate(1.0, 1.5).is_err());
    }

    #[test]
    fn nu_constructor_brownian_case() {
        // H = 1/2: Γ(1)/(Γ(3/2)Γ(1)) = 2/√π
        let k = PowerLawKernel::from_nu(0.5, 0.5).unwrap();
        let want = (2.0 / std::f64::consts::PI.sqrt()).sqrt();
        assert!((k.alpha - want).abs() < 1e-14);
    }

    #[test]
    fn brownian_covariance() {
        let k = PowerLawKernel::new(1.0, 0.5).unwrap();
        let spec = CovarianceSpec::new(0.0, 1.0, vec![1.0, 1.1]).unwrap();
        let (c, m) = covariance_matrix(&k, &spec).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((c.get(i, j) - 4.0).abs() < 1e-10, "{i}{j} {}", c.get(i, j));
            }
            assert!((m[i] + 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_date_diagonal() {
        let k = PowerLawKernel::new(0.2, 0.1).unwrap();
        let spec = CovarianceSpec::new(0.0, 1.0, vec![1.05]).unwrap();
        let (c, m) = covariance_matrix(&k, &spec).unwrap();
        let want = 2.0 * 0.04 / 0.1 * (1.05f64.powf(0.2) - 0.05f64.powf(0.2));
        assert!((c.get(0, 0) - want).abs() < 1e-14);
        assert_eq!(m[0], -0.5 * c.get(0, 0));
    }

    #[test]
    fn quadrature_agrees_with_hypergeometric_form() {
        let k = PowerLawKernel::new(0.2, 0.1).unwrap();
        let dates: Vec<f64> = (0..=12).map(|i| 1.0 + 0.1 * (i as f64 / 12.0).powi(2)).collect();
        let spec = CovarianceSpec::new(0.0, 1.0, dates.clone()).unwrap();
        let (c, _) = covariance_matrix(&k, &spec).unwrap();
        for i in 0..dates.len() {
            for j in 0..dates.len() {
                let cf = k.covariance_closed_form(0.0, 1.0, dates[i], dates[j]).unwrap();
                let rel = (c.get(i, j) - cf).abs() / cf.abs();
                assert!(rel < 1e-8, "({i},{j}) {} vs {cf}", c.get(i, j));
            }
        }
    }

    #[test]
    fn diagonal_quadrature_matches_closed_form_for_generic_path() {
        let k = PowerLawKernel::new(0.7, 0.3).unwrap();
        for &(ti, a, b) in &[(1.0, 0.0, 1.0), (1.2, 0.3, 1.0)] {
            let q = weighted_cross_integral(&k, ti, ti, a, b, |_| 1.0).unwrap();
            let cf = k.diagonal_closed_form(ti, a, b).unwrap();
            assert!((q - cf).abs() < 1e-10 * cf, "{q} vs {cf}");
        }
    }
}

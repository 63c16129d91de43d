//! Characteristic exponent of the log-average proxy `Y = log VIX̄²_T` under the
//! Lévy-OU modulator and Fourier pricing of payoffs on `√VIX̄² = e^{Y/2}`.
//!
//! Conditionally on Γ, `Y` is Gaussian with variance `4∫ₜᵀ Γ_s ‖Ḡ(s)‖² ds`
//! and mean affine in `Γ_T`. Writing `J(r) = ∫_r^T e^{−λ(s−r)} ‖Ḡ(s)‖² ds`,
//! `E(r) = e^{−λ(T−r)}` and `P` for the window average of `ψ(· − T)`,
//!
//! `Ψ(z) = iz(A₀ + Φ̄ − γΨ̄) − 2z²γJ(t) + izγE(t)P + ∫ₜᵀ Ψ_L(−2z²J(r) + izE(r)P) dr`
//!
//! with `Ψ_L(u) = Λu/(a−u)` the Lévy exponent of the driving process.

use num_complex::Complex64;

use super::model::ModulatedModel;
use super::modulator::ModulatorKind;
use crate::error::{Error, Result};
use crate::lognormal::Payoff;
use crate::quadrature::{integrate, GaussLegendre, Tolerance};

/// Log-scale span covered by the r-quadrature below `T`.
const LOG_SPAN: f64 = 40.0;
const PANEL_NODES: usize = 8;
/// Truncation level of the Fourier integrand.
const ENVELOPE: f64 = 1e-12;
const MAX_FREQUENCY: f64 = 1e4;
const INVERSION_NODES: usize = 16;

/// Averaging measure over the VIX window.
#[derive(Debug, Clone, PartialEq)]
pub enum WindowMeasure {
    /// `(1/Θ) du` on `[T, T+Θ]`, with `A₀ = (1/Θ)∫ log ξ_t(u) du`.
    Uniform,
    /// `Σ_j w_j δ_{t_j}` with constant `A₀ = log_const` (the scheme proxies).
    Discrete {
        dates: Vec<f64>,
        weights: Vec<f64>,
        log_const: f64,
    },
}

/// Precomputed pieces of `Ψ(z)`; each evaluation is a sum over the r-nodes.
#[derive(Debug, Clone)]
pub struct LogAverageCharacteristic {
    pub t: f64,
    pub maturity: f64,
    /// `A₀ + Φ̄ − γΨ̄`.
    drift: f64,
    gamma: f64,
    /// `J(t)` and `E(t)P`.
    j_t: f64,
    ep_t: f64,
    big_lambda: f64,
    a: f64,
    /// r-nodes: `(r, weight, J(r), E(r)P)`.
    nodes: Vec<(f64, f64, f64, f64)>,
}

impl LogAverageCharacteristic {
    pub fn new(model: &ModulatedModel, t: f64, maturity: f64, theta: f64, measure: &WindowMeasure) -> Result<Self> {
        let (lambda, big_lambda, a) = match model.modulator.kind {
            ModulatorKind::LevyOu { lambda, big_lambda, a } => (lambda, big_lambda, a),
            ModulatorKind::Cir { .. } => {
                return Err(Error::Unsupported(
                    "the explicit characteristic exponent is available for the Lévy-OU modulator only".into(),
                ))
            }
        };
        if !(t <= maturity && theta > 0.0) {
            return Err(Error::invalid(format!(
                "need t <= T and Θ > 0 (t={t}, T={maturity}, Θ={theta})"
            )));
        }
        model.solution.check_range(maturity + theta - t)?;
        let gamma = model.modulator.gamma0;
        let kernel = model.kernel.as_ref();
        let d = kernel.dimension();
        let tol = Tolerance::new(1e-15, 1e-12);

        let (a0, phibar, psibar, p) = match measure {
            WindowMeasure::Uniform => {
                let (lo, hi) = (maturity, maturity + theta);
                let phibar = integrate(|u| model.phi(u - maturity) - model.phi(u - t), lo, hi, tol)? / theta;
                let psibar = integrate(|u| model.psi(u - t), lo, hi, tol)? / theta;
                let p = integrate(|u| model.psi(u - maturity), lo, hi, tol)? / theta;
                (model.curve.log_integral(lo, hi) / theta, phibar, psibar, p)
            }
            WindowMeasure::Discrete {
                dates,
                weights,
                log_const,
            } => {
                if dates.len() != weights.len() || dates.iter().any(|&u| u < maturity) {
                    return Err(Error::invalid("discrete window measure needs dates >= T, one weight each"));
                }
                let mut s = (0.0, 0.0, 0.0);
                for (&u, &w) in dates.iter().zip(weights) {
                    s.0 += w * (model.phi(u - maturity) - model.phi(u - t));
                    s.1 += w * model.psi(u - t);
                    s.2 += w * model.psi(u - maturity);
                }
                (*log_const, s.0, s.1, s.2)
            }
        };

        // ‖Ḡ(s)‖² as a function of x = T − s > 0 (lags stay exact as s → T)
        let mut buf = vec![0.0; d];
        let mut acc = vec![0.0; d];
        let mut g2 = |x: f64| -> f64 {
            match measure {
                WindowMeasure::Uniform => {
                    if kernel.lag_integral_into(x, theta + x, &mut acc).is_err() {
                        return f64::NAN;
                    }
                    acc.iter().map(|x| (x / theta).powi(2)).sum()
                }
                WindowMeasure::Discrete { dates, weights, .. } => {
                    acc.iter_mut().for_each(|x| *x = 0.0);
                    for (&u, &w) in dates.iter().zip(weights) {
                        kernel.lag_into((u - maturity) + x, &mut buf);
                        for k in 0..d {
                            acc[k] += w * buf[k];
                        }
                    }
                    acc.iter().map(|x| x * x).sum()
                }
            }
        };

        let mut nodes = Vec::new();
        let mut j_t = 0.0;
        if t < maturity && !kernel.is_zero() {
            let y_hi = (maturity - t).ln();
            let y_lo = y_hi - LOG_SPAN;
            // K(r) = ∫_r^T e^{−λ(s−t)} ‖Ḡ(s)‖² ds, integrated in y = log(T − s)
            let mut f = |y: f64| {
                let x = y.exp();
                (-lambda * (maturity - x - t)).exp() * g2(x) * x
            };
            let power = match measure {
                WindowMeasure::Uniform => 1.0,
                WindowMeasure::Discrete { .. } => 2.0 * kernel.singular_exponent() + 1.0,
            };
            let mut k_edge = f(y_lo) / power;
            let gl = GaussLegendre::new(PANEL_NODES);
            let panels = LOG_SPAN.round() as usize;
            for m in 0..panels {
                let (ya, yb) = (y_lo + m as f64, y_lo + (m + 1) as f64);
                let (ys, ws) = gl.mapped(ya, yb);
                for (&y, &w) in ys.iter().zip(&ws) {
                    let k_r = k_edge + gl.integrate(&mut f, ya, y);
                    let r = maturity - y.exp();
                    let j = (lambda * (r - t)).exp() * k_r;
                    let e = (-lambda * (maturity - r)).exp();
                    nodes.push((r, w * y.exp(), j, e * p));
                }
                k_edge += gl.integrate(&mut f, ya, yb);
            }
            j_t = k_edge;
            if !j_t.is_finite() {
                return Err(Error::numerical("window energy J(t)", f64::NAN));
            }
        }
        Ok(LogAverageCharacteristic {
            t,
            maturity,
            drift: a0 + phibar - gamma * psibar,
            gamma,
            j_t,
            ep_t: (-lambda * (maturity - t)).exp() * p,
            big_lambda,
            a,
            nodes,
        })
    }

    /// `Ψ(z)` with `E[e^{izY}] = e^{Ψ(z)}`.
    pub fn exponent(&self, z: Complex64) -> Result<Complex64> {
        let iz = Complex64::i() * z;
        let z2 = z * z;
        let mut out = iz * self.drift - 2.0 * z2 * self.gamma * self.j_t + iz * self.gamma * self.ep_t;
        if self.big_lambda == 0.0 {
            return Ok(out);
        }
        for &(r, w, j, ep) in &self.nodes {
            let h = -2.0 * z2 * j + iz * ep;
            if h.re >= self.a {
                return Err(Error::Contour(format!(
                    "Lévy exponent argument {:.6} >= a = {} at s = {r:.9}",
                    h.re, self.a
                )));
            }
            out += w * self.big_lambda * h / (self.a - h);
        }
        Ok(out)
    }

    /// Largest `c` with `E[e^{cY}] < ∞` on the quadrature nodes.
    pub fn max_real_moment(&self) -> f64 {
        if self.big_lambda == 0.0 {
            return f64::INFINITY;
        }
        let mut c_max = f64::INFINITY;
        for &(_, _, j, ep) in &self.nodes {
            // 2c²J + c·EP = a
            let den = ep + (ep * ep + 8.0 * j * self.a).sqrt();
            let c = if den > 0.0 { 2.0 * self.a / den } else { f64::INFINITY };
            c_max = c_max.min(c);
        }
        c_max
    }

    /// True when `Y` is almost surely constant.
    pub fn is_degenerate(&self) -> bool {
        self.gamma * self.j_t == 0.0
            && (self.big_lambda == 0.0 || self.nodes.iter().all(|&(_, _, j, ep)| j == 0.0 && ep == 0.0))
    }

    /// `E[e^{cY}]` for real `c`.
    pub fn real_moment(&self, c: f64) -> Result<f64> {
        if c >= self.max_real_moment() {
            return Err(Error::Contour(format!(
                "E[exp({c}·Y)] is infinite (largest finite moment {:.6})",
                self.max_real_moment()
            )));
        }
        Ok(self.exponent(Complex64::new(0.0, -c))?.re.exp())
    }
}

/// Carr-Madan pricer for calls on `S = e^{Y/2}`; the damped transform is
/// tabulated once on a fixed Gauss-Legendre grid shared by all strikes.
#[derive(Debug, Clone)]
pub struct FourierPricer {
    pub characteristic: LogAverageCharacteristic,
    pub damping: f64,
    pub forward: f64,
    nodes: Vec<f64>,
    values: Vec<Complex64>,
}

impl FourierPricer {
    pub fn new(characteristic: LogAverageCharacteristic) -> Result<Self> {
        let ch = characteristic;
        if ch.is_degenerate() {
            let forward = (0.5 * ch.drift).exp();
            return Ok(FourierPricer {
                characteristic: ch,
                damping: 0.0,
                forward,
                nodes: Vec::new(),
                values: Vec::new(),
            });
        }
        // moments of S: E[S^c] finite for c < 2·c_max(Y)
        let c_s = 2.0 * ch.max_real_moment();
        if c_s <= 1.0 + 1e-3 {
            return Err(Error::Contour(format!(
                "no damping parameter available: E[VIX̄^c] finite only for c < {c_s:.6}"
            )));
        }
        let damping = (0.75 * (c_s - 1.0)).min(2.0);
        let forward = ch.real_moment(0.5)?;
        let transform = |v: f64| -> Result<Complex64> {
            let w = Complex64::new(v, -(damping + 1.0));
            let chi = ch.exponent(0.5 * w)?.exp();
            let denom = Complex64::new(damping * damping + damping - v * v, (2.0 * damping + 1.0) * v);
            Ok(chi / denom)
        };
        // envelope search for the truncation frequency
        let mut v_max = 1.0;
        while v_max < MAX_FREQUENCY && transform(v_max)?.norm() > ENVELOPE {
            v_max *= 1.5;
        }
        let v_max = v_max.min(MAX_FREQUENCY);
        let width = (v_max / 64.0).clamp(0.25, 4.0);
        let panels = (v_max / width).ceil() as usize;
        let gl = GaussLegendre::new(INVERSION_NODES);
        let mut nodes = Vec::with_capacity(panels * INVERSION_NODES);
        let mut values = Vec::with_capacity(panels * INVERSION_NODES);
        for m in 0..panels {
            let (xs, ws) = gl.mapped(m as f64 * width, (m + 1) as f64 * width);
            for (x, w) in xs.into_iter().zip(ws) {
                nodes.push(x);
                values.push(w * transform(x)?);
            }
        }
        Ok(FourierPricer {
            characteristic: ch,
            damping,
            forward,
            nodes,
            values,
        })
    }

    /// `E[(e^{Y/2} − K)⁺]`.
    pub fn call(&self, strike: f64) -> f64 {
        if strike <= 0.0 {
            return self.forward;
        }
        if self.nodes.is_empty() {
            return (self.forward - strike).max(0.0);
        }
        let k = strike.ln();
        let mut s = 0.0;
        for (&v, c) in self.nodes.iter().zip(&self.values) {
            s += (Complex64::from_polar(1.0, -v * k) * c).re;
        }
        ((-self.damping * k).exp() / std::f64::consts::PI * s).max(0.0)
    }

    /// Expectation of `payoff(e^Y)`.
    pub fn price(&self, payoff: &Payoff) -> Result<f64> {
        payoff.validate()?;
        match *payoff {
            Payoff::Call { strike } => Ok(self.call(strike)),
            Payoff::Put { strike } => Ok((self.call(strike) - self.forward + strike).max(0.0)),
            Payoff::Future => Ok(self.forward),
            Payoff::VarianceSwap => {
                if self.nodes.is_empty() {
                    Ok(self.forward * self.forward)
                } else {
                    self.characteristic.real_moment(1.0)
                }
            }
            Payoff::Digital { .. } => Err(Error::Unsupported("Fourier pricing of digital payoffs".into())),
        }
    }
}

/// `Ψ(z)` of `log VIX̄²_T` for the uniform window measure.
pub fn characteristic_exponent(
    model: &ModulatedModel,
    t: f64,
    maturity: f64,
    theta: f64,
    z: Complex64,
) -> Result<Complex64> {
    LogAverageCharacteristic::new(model, t, maturity, theta, &WindowMeasure::Uniform)?.exponent(z)
}

/// Price of the VIX call `(√VIX̄² − K)⁺` under the log-average approximation.
pub fn approximate_price_fourier(model: &ModulatedModel, t: f64, maturity: f64, theta: f64, strike: f64) -> Result<f64> {
    if !(strike >= 0.0) {
        return Err(Error::invalid(format!("strike must be >= 0, got {strike}")));
    }
    let ch = LogAverageCharacteristic::new(model, t, maturity, theta, &WindowMeasure::Uniform)?;
    Ok(FourierPricer::new(ch)?.call(strike))
}

/// Several payoffs with one tabulated transform.
pub fn approximate_prices_fourier(
    model: &ModulatedModel,
    t: f64,
    maturity: f64,
    theta: f64,
    payoffs: &[Payoff],
) -> Result<Vec<f64>> {
    let ch = LogAverageCharacteristic::new(model, t, maturity, theta, &WindowMeasure::Uniform)?;
    let pricer = FourierPricer::new(ch)?;
    payoffs.iter().map(|p| pricer.price(p)).collect()
}

//! Hedge ratios: the perfect variance-swap delta of the toy model, the
//! pathwise Fréchet delta of the discretised VIX functional, and the
//! two-variance-swap hedge under a CIR modulator.

use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::engine::{path_rng, run_paths, try_run_paths, Stat};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::linalg::solve2;
use crate::lognormal::toy::quote;
use crate::lognormal::{
    build_law, DiscretizationGrid, ForwardVarianceCurve, GaussianLaw, McConfig, Payoff, Scheme, ToyModel,
    VixFunctional, GAUSS_TAG,
};
use crate::modulated::mc::{inner_draw, MODULATOR_TAG};
use crate::modulated::simulate::simulate_modulator;
use crate::modulated::{ConditionalLawBuilder, ModulatedModel, ModulatorKind};
use crate::quadrature::{integrate, GaussLegendre, Tolerance};

pub use crate::lognormal::toy_hedge_ratio;

/// Lower bound on `VIX²` inside `f'`: the law of `VIX²` has no atom at zero,
/// the floor only guards the `1/(2√x)` factor against round-off.
pub const DERIVATIVE_FLOOR: f64 = 1e-10;
/// Hedge systems with a larger 2-norm condition number are rejected.
pub const MAX_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

impl From<Stat> for DeltaEstimate {
    fn from(s: Stat) -> Self {
        DeltaEstimate {
            estimate: s.mean,
            std_error: s.std_error(),
        }
    }
}

/// Weights `q_j` with `∫_a^b E_n(v) dv = Σ_j q_j e^{Z_j}` for the scheme's
/// interpolant `E_n` of the Doléans exponentials (`a == b` gives the point value).
fn interpolant_weights(dates: &[f64], scheme: Scheme, a: f64, b: f64) -> Result<Vec<f64>> {
    let (lo, hi) = (dates[0], dates[dates.len() - 1]);
    if !(lo <= a && a <= b && b <= hi) {
        return Err(Error::Range(format!("[{a}, {b}] is not inside the window [{lo}, {hi}]")));
    }
    let mut q = vec![0.0; dates.len()];
    let point = a == b;
    for i in 0..dates.len() - 1 {
        let (c0, c1) = (dates[i], dates[i + 1]);
        let (l, h) = (a.max(c0), b.min(c1));
        if point {
            if !(c0 <= a && a <= c1) {
                continue;
            }
        } else if h <= l {
            continue;
        }
        let w = c1 - c0;
        match scheme {
            Scheme::Rectangle => {
                // the last date only enters through the closed right end
                if point {
                    if a < c1 || i + 2 == dates.len() {
                        q[i] = 1.0;
                    }
                } else {
                    q[i] += h - l;
                }
            }
            Scheme::Trapezoid => {
                if point {
                    let th = (a - c0) / w;
                    q[i] = 1.0 - th;
                    q[i + 1] = th;
                } else {
                    let r = 0.5 * ((h - c0).powi(2) - (l - c0).powi(2)) / w;
                    q[i] += (h - l) - r;
                    q[i + 1] += r;
                }
            }
        }
        if point {
            break;
        }
    }
    Ok(q)
}

/// Scheme masses of `(1/Θ)∫ ξ(u) w(u) du` on the grid dates: the functional
/// `Σ_j m_j e^{Z_j}` equals `(1/Θ)∫ ξ(u) w(u) E_n(u) du`.
fn weighted_masses<W: Fn(f64) -> f64>(curve: &ForwardVarianceCurve, dates: &[f64], scheme: Scheme, w: W) -> Vec<f64> {
    let n = dates.len() - 1;
    let theta = dates[n] - dates[0];
    let gl = GaussLegendre::new(8);
    let mut m = vec![0.0; n + 1];
    for i in 0..n {
        let (a, b) = (dates[i], dates[i + 1]);
        for (l, h, v) in curve.pieces(a, b) {
            let (xs, ws) = gl.mapped(l, h);
            for (x, wt) in xs.into_iter().zip(ws) {
                let f = v * w(x) * wt / theta;
                match scheme {
                    Scheme::Rectangle => m[i] += f,
                    Scheme::Trapezoid => {
                        let th = (x - a) / (b - a);
                        m[i] += f * (1.0 - th);
                        m[i + 1] += f * th;
                    }
                }
            }
        }
    }
    m
}

#[inline]
fn weighted_exp(q: &[f64], z: &[f64]) -> f64 {
    q.iter().zip(z).filter(|(w, _)| **w != 0.0).map(|(w, z)| w * z.exp()).sum()
}

fn draw(law: &GaussianLaw, seed: u64, p: usize, normals: &mut Vec<f64>, z: &mut [f64]) {
    crate::lognormal::mc::draw_gaussian(law, seed, p, normals, z);
}

fn delta_with_weights(
    law: &GaussianLaw,
    functional: &VixFunctional,
    config: &McConfig,
    payoff: Payoff,
    q: &[f64],
    scale: f64,
) -> Result<DeltaEstimate> {
    payoff.derivative(1.0, DERIVATIVE_FLOOR)?;
    let n = law.dim();
    let stats = run_paths(
        config.paths,
        1,
        || (Vec::new(), vec![0.0; n]),
        |(normals, z), p, out| {
            draw(law, config.seed, p, normals, z);
            let x = functional.vix2(z);
            let d = payoff.derivative(x, DERIVATIVE_FLOOR).unwrap_or(0.0);
            out[0] = d * weighted_exp(q, z) * scale;
        },
    );
    Ok(stats[0].into())
}

/// Pathwise estimate of `D_xF(t, x)(v) = E[f'(VIX²_n) E_n(v)] / Θ`, the
/// sensitivity of the price to the forward variance curve at date `v`.
pub fn frechet_delta_mc<K: Kernel + ?Sized>(
    kernel: &K,
    curve: &ForwardVarianceCurve,
    grid: &DiscretizationGrid,
    t: f64,
    config: &McConfig,
    payoff: Payoff,
    v: f64,
) -> Result<DeltaEstimate> {
    frechet_delta_window_mc(kernel, curve, grid, t, config, payoff, v, v)
}

/// Average of `D_xF(t, x)(v)` over `v ∈ [a, b]` (a point when `a == b`).
#[allow(clippy::too_many_arguments)]
pub fn frechet_delta_window_mc<K: Kernel + ?Sized>(
    kernel: &K,
    curve: &ForwardVarianceCurve,
    grid: &DiscretizationGrid,
    t: f64,
    config: &McConfig,
    payoff: Payoff,
    a: f64,
    b: f64,
) -> Result<DeltaEstimate> {
    config.validate()?;
    payoff.validate()?;
    let functional = VixFunctional::new(curve, grid.dates(), config.scheme)?;
    let law = build_law(kernel, &functional.dates, t, grid.maturity)?;
    let q = interpolant_weights(&functional.dates, config.scheme, a, b)?;
    let width = if a == b { 1.0 } else { b - a };
    delta_with_weights(&law, &functional, config, payoff, &q, 1.0 / (grid.theta * width))
}

/// Central finite difference of the discretised price under a bump of the
/// curve by `±rel_bump·ξ` on `[a, b)`, per unit of bumped mass (common random
/// numbers). Oracle for [`frechet_delta_window_mc`].
#[allow(clippy::too_many_arguments)]
pub fn bump_delta_fd<K: Kernel + ?Sized>(
    kernel: &K,
    curve: &ForwardVarianceCurve,
    grid: &DiscretizationGrid,
    t: f64,
    config: &McConfig,
    payoff: Payoff,
    a: f64,
    b: f64,
    rel_bump: f64,
) -> Result<DeltaEstimate> {
    config.validate()?;
    payoff.validate()?;
    if !(rel_bump > 0.0 && a < b) {
        return Err(Error::invalid("bump needs a positive size and a nonempty interval"));
    }
    let eps = rel_bump * curve.integral(a, b) / (b - a);
    let up = VixFunctional::new(&curve.bumped(a, b, eps)?, grid.dates(), config.scheme)?;
    let down = VixFunctional::new(&curve.bumped(a, b, -eps)?, grid.dates(), config.scheme)?;
    let law = build_law(kernel, &up.dates, t, grid.maturity)?;
    let n = law.dim();
    let scale = 1.0 / (2.0 * eps * (b - a));
    let stats = run_paths(
        config.paths,
        1,
        || (Vec::new(), vec![0.0; n]),
        |(normals, z), p, out| {
            draw(&law, config.seed, p, normals, z);
            out[0] = (payoff.value(up.vix2(z)) - payoff.value(down.vix2(z))) * scale;
        },
    );
    Ok(stats[0].into())
}

/// When the hedge of the toy model is rebalanced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RebalanceClock {
    /// Equally spaced in calendar time.
    Calendar,
    /// Equally spaced in the variance function `c`.
    Variance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HedgeSimulation {
    pub rebalances: usize,
    pub mean_pnl: f64,
    pub pnl_variance: f64,
    /// Standard error of the second moment of the P&L.
    pub variance_std_error: f64,
}

/// Simulates the discretely rebalanced `N(d¹)` hedge of the toy-model call in
/// the variance swap `Ξ_s = ξ_s(T0)` over `[t, T0]`. The P&L is
/// `price + Σ δ_i (Ξ_{i+1} − Ξ_i) − (Ξ_{T0} − K)⁺`.
#[allow(clippy::too_many_arguments)]
pub fn toy_discrete_hedge(
    model: &ToyModel,
    strike: f64,
    t: f64,
    t0: f64,
    rebalances: usize,
    clock: RebalanceClock,
    paths: usize,
    seed: u64,
) -> Result<HedgeSimulation> {
    if rebalances == 0 || paths < 2 {
        return Err(Error::invalid("need at least one rebalance and two paths"));
    }
    let q0 = model.call(strike, t, t0)?;
    let c = &model.c_fn;
    let (c_start, c_end) = (c(t), c(t0));
    let dates: Vec<f64> = (0..=rebalances)
        .map(|i| {
            let f = i as f64 / rebalances as f64;
            match clock {
                RebalanceClock::Calendar => t + (t0 - t) * f,
                RebalanceClock::Variance => {
                    // invert the nondecreasing c by bisection
                    let target = c_start + (c_end - c_start) * f;
                    let (mut lo, mut hi) = (t, t0);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if c(mid) < target {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    if i == rebalances {
                        t0
                    } else {
                        hi
                    }
                }
            }
        })
        .collect();
    let cv: Vec<f64> = dates.iter().map(|&s| c(s)).collect();
    let stats = run_paths(
        paths,
        2,
        || (),
        |_, p, out| {
            let mut rng = path_rng(seed, p, GAUSS_TAG);
            let mut xi = model.xi_t;
            let mut pnl = q0.price;
            for i in 0..rebalances {
                let remaining = c_end - cv[i];
                let delta = if remaining > 0.0 {
                    crate::special::norm_cdf(quote(xi, strike, remaining).d1)
                } else if xi > strike {
                    1.0
                } else {
                    0.0
                };
                let dc = cv[i + 1] - cv[i];
                let z: f64 = StandardNormal.sample(&mut rng);
                let next = xi * (-2.0 * dc + 2.0 * dc.sqrt() * z).exp();
                pnl += delta * (next - xi);
                xi = next;
            }
            pnl -= (xi - strike).max(0.0);
            out[0] = pnl;
            out[1] = pnl * pnl;
        },
    );
    Ok(HedgeSimulation {
        rebalances,
        mean_pnl: stats[0].mean,
        pnl_variance: stats[0].variance(),
        variance_std_error: stats[1].std_error(),
    })
}

/// A variance swap on `[start, start + length]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapWindow {
    pub start: f64,
    pub length: f64,
}

impl SwapWindow {
    pub fn label(&self) -> String {
        format!("variance_swap[{:.6},{:.6}]", self.start, self.start + self.length)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirHedgeSpec {
    pub t: f64,
    pub maturity: f64,
    pub theta: f64,
    pub payoff: Payoff,
    pub notional: f64,
    pub swaps: [SwapWindow; 2],
    /// Grid size of the VIX scheme used inside the estimator.
    pub n: usize,
    pub kappa: f64,
    /// Relative bump of `Γ_t` for the finite difference in γ.
    pub gamma_bump: f64,
}

impl CirHedgeSpec {
    pub fn new(t: f64, maturity: f64, theta: f64, payoff: Payoff, swaps: [SwapWindow; 2]) -> Self {
        CirHedgeSpec {
            t,
            maturity,
            theta,
            payoff,
            notional: 1.0,
            swaps,
            n: 20,
            kappa: 2.0,
            gamma_bump: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeReport {
    pub instruments: Vec<String>,
    pub weights: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Instantaneous variance of the hedged P&L per unit time: the
    /// noise-corrected estimate below, floored at zero.
    pub residual_risk: f64,
    /// Unbiased (possibly negative) estimate from an independent batch.
    pub residual_estimate: f64,
    pub residual_std_error: f64,
    /// Option loadings on the kernel noise `W` and the modulator noise `B`.
    pub option_loadings: [f64; 2],
    pub loading_std_errors: [f64; 2],
    pub condition: f64,
}

impl HedgeReport {
    pub fn ratios(&self) -> BTreeMap<String, f64> {
        self.instruments.iter().cloned().zip(self.weights.iter().copied()).collect()
    }
}

/// Per-unit-√Γ loadings `(2/Θ_j)∫ ξ g(u−t) du` and `(δ/Θ_j)∫ ξ ψ(u−t) du` of a swap.
fn swap_loadings(model: &ModulatedModel, t: f64, delta: f64, w: &SwapWindow) -> Result<[f64; 2]> {
    if !(w.start >= t && w.length > 0.0) {
        return Err(Error::invalid(format!(
            "swap window [{}, +{}] must start at or after t = {t} and have positive length",
            w.start, w.length
        )));
    }
    model.solution.check_range(w.start + w.length - t)?;
    let mut buf = [0.0];
    let tol = Tolerance::new(1e-14, 1e-11);
    let mut a = 0.0;
    let mut b = 0.0;
    for (l, h, v) in model.curve.pieces(w.start, w.start + w.length) {
        a += v * integrate(
            |u| {
                model.kernel.lag_into(u - t, &mut buf);
                buf[0]
            },
            l,
            h,
            tol,
        )?;
        b += v * integrate(|u| model.psi(u - t), l, h, tol)?;
    }
    Ok([2.0 * a / w.length, delta * b / w.length])
}

/// Option loadings from one batch: `(L_W, L_B)` with standard errors, per
/// unit notional and unit `√Γ_t`.
fn option_loadings(model: &ModulatedModel, spec: &CirHedgeSpec, delta: f64, paths: usize, seed: u64) -> Result<[Stat; 2]> {
    let grid = DiscretizationGrid::new(spec.maturity, spec.theta, spec.n, spec.kappa)?;
    let functional = VixFunctional::new(&model.curve, grid.dates(), Scheme::Trapezoid)?;
    let dates = &functional.dates;
    let gamma = model.modulator.gamma0;
    let h = spec.gamma_bump * gamma.max(1e-3);
    let base = ConditionalLawBuilder::new(model, dates, spec.t, spec.maturity)?;
    let up = base.with_gamma0(gamma + h);
    let down = base.with_gamma0((gamma - h).max(0.0));
    let h_eff = 0.5 * (up.gamma0() - down.gamma0());
    let g_mass = weighted_masses(&model.curve, dates, Scheme::Trapezoid, |u| {
        let mut b = [0.0];
        model.kernel.lag_into(u - spec.t, &mut b);
        b[0]
    });
    let psi_mass = weighted_masses(&model.curve, dates, Scheme::Trapezoid, |u| model.psi(u - spec.t));
    let payoff = spec.payoff;
    let n = dates.len();
    let stats = try_run_paths(
        paths,
        2,
        || (Vec::new(), vec![0.0; n]),
        |(normals, z), p, out| -> Result<()> {
            let sim = |b: &ConditionalLawBuilder| {
                let mut rng = path_rng(seed, p, MODULATOR_TAG);
                let m = model.modulator.with_gamma0(b.gamma0());
                simulate_modulator(&m, spec.t, spec.maturity, &mut rng)
            };
            let law = base.path_law(&sim(&base))?;
            inner_draw(&law, seed, p, normals, z);
            let x = functional.vix2(z);
            let d = payoff.derivative(x, DERIVATIVE_FLOOR)?;
            let w_load = 2.0 * d * weighted_exp(&g_mass, z);
            let psi_load = d * weighted_exp(&psi_mass, z);
            let law_up = up.path_law(&sim(&up))?;
            inner_draw(&law_up, seed, p, normals, z);
            let f_up = payoff.value(functional.vix2(z));
            let law_down = down.path_law(&sim(&down))?;
            inner_draw(&law_down, seed, p, normals, z);
            let f_down = payoff.value(functional.vix2(z));
            out[0] = spec.notional * w_load;
            out[1] = spec.notional * delta * ((f_up - f_down) / (2.0 * h_eff) + psi_load);
            Ok(())
        },
    )?;
    Ok([stats[0], stats[1]])
}

/// Two-variance-swap hedge of a VIX payoff under a CIR modulator, matching
/// the option's loadings on the kernel noise and on the modulator noise.
pub fn cir_two_swap_hedge(model: &ModulatedModel, spec: &CirHedgeSpec, config: &McConfig) -> Result<HedgeReport> {
    config.validate()?;
    spec.payoff.validate()?;
    spec.payoff.derivative(1.0, DERIVATIVE_FLOOR)?;
    let delta = match model.modulator.kind {
        ModulatorKind::Cir { delta, .. } => delta,
        ModulatorKind::LevyOu { .. } => {
            return Err(Error::Unsupported(
                "the two-swap hedge is defined for the CIR modulator; jump modulators are not spanned".into(),
            ))
        }
    };
    if model.kernel.dimension() != 1 {
        return Err(Error::Unsupported("two-swap hedge needs a one-factor kernel".into()));
    }
    let s1 = swap_loadings(model, spec.t, delta, &spec.swaps[0])?;
    let s2 = swap_loadings(model, spec.t, delta, &spec.swaps[1])?;
    let l = option_loadings(model, spec, delta, config.paths, config.seed)?;
    let check = option_loadings(model, spec, delta, config.paths, config.seed ^ 0x5bd1_e995_9e37_79b9)?;
    let lw = [l[0].mean, l[1].mean];
    let se = [l[0].std_error(), l[1].std_error()];
    let (weights, std_errors, cond, instruments) = if delta == 0.0 {
        let h = lw[0] / s1[0];
        (
            vec![h, 0.0],
            vec![se[0] / s1[0].abs(), 0.0],
            1.0,
            vec![spec.swaps[0].label(), spec.swaps[1].label()],
        )
    } else {
        let a = [[s1[0], s2[0]], [s1[1], s2[1]]];
        let (h, cond) = solve2(a, lw);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::UnstableHedge {
                condition: cond,
                limit: MAX_CONDITION,
            });
        }
        // propagate the independent loading errors through A⁻¹
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let inv = [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]];
        let e = |r: usize| ((inv[r][0] * se[0]).powi(2) + (inv[r][1] * se[1]).powi(2)).sqrt();
        (
            h.to_vec(),
            vec![e(0), e(1)],
            cond,
            vec![spec.swaps[0].label(), spec.swaps[1].label()],
        )
    };
    // residual on the independent batch: L' − A·h = ε' − ε in expectation
    let gamma = model.modulator.gamma0;
    let spanned = [
        weights[0] * s1[0] + weights[1] * s2[0],
        weights[0] * s1[1] + weights[1] * s2[1],
    ];
    let mut residual = 0.0;
    let mut residual_var = 0.0;
    for k in 0..2 {
        let d = check[k].mean - spanned[k];
        let noise = check[k].std_error().powi(2) + se[k].powi(2);
        residual += d * d - noise;
        residual_var += 2.0 * noise * noise + 4.0 * (d * d - noise).max(0.0) * noise;
    }
    Ok(HedgeReport {
        instruments,
        weights,
        std_errors,
        residual_risk: (gamma * residual).max(0.0),
        residual_estimate: gamma * residual,
        residual_std_error: gamma * residual_var.sqrt(),
        option_loadings: lw,
        loading_std_errors: se,
        condition: cond,
    })
}

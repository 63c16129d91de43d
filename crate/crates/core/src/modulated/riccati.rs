//! The Riccati pair `ψ' = 2‖g‖² + R(ψ)`, `φ' = F(ψ)`, `ψ(0) = φ(0) = 0`.
//!
//! Both functions are tabulated on a grid graded towards 0. ψ is stored
//! through `ϕ = ψ − 2G`, whose equation `ϕ' = R(ϕ + 2G)` has no singular
//! forcing term; values between nodes come from cubic Hermite interpolation
//! using the exact derivatives, and the exact `2G` is added back.

use std::sync::Arc;

use super::modulator::{AffineModulator, ModulatorKind};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::quadrature::{integrate, GaussLegendre, Tolerance};

/// Nodes of the explicit Lévy-OU tabulation.
const EXPLICIT_NODES: usize = 400;
/// Largest RK4 step in years.
const RK4_MAX_STEP: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct PsiPhiSolution {
    pub horizon: f64,
    pub bound_a: f64,
    nodes: Vec<f64>,
    rem: Vec<f64>,
    drem: Vec<f64>,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    kernel: Arc<dyn Kernel>,
}

#[inline]
fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    if h == 0.0 {
        return y0;
    }
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * d1
}

impl PsiPhiSolution {
    fn locate(&self, t: f64) -> usize {
        let i = self.nodes.partition_point(|&x| x <= t);
        i.clamp(1, self.nodes.len() - 1) - 1
    }

    fn interp(&self, t: f64, y: &[f64], d: &[f64]) -> f64 {
        let i = self.locate(t);
        hermite(self.nodes[i], self.nodes[i + 1], y[i], y[i + 1], d[i], d[i + 1], t)
    }

    /// ψ(τ) for `0 ≤ τ ≤ horizon` (clamped into the table range).
    pub fn psi(&self, tau: f64) -> f64 {
        let tau = tau.clamp(0.0, self.horizon);
        if tau == 0.0 {
            return 0.0;
        }
        let g = self.kernel.cumulative_energy(tau).unwrap_or(f64::NAN);
        self.interp(tau, &self.rem, &self.drem) + 2.0 * g
    }

    pub fn phi(&self, tau: f64) -> f64 {
        let tau = tau.clamp(0.0, self.horizon);
        if tau == 0.0 {
            return 0.0;
        }
        self.interp(tau, &self.phi, &self.dphi)
    }

    pub fn check_range(&self, tau: f64) -> Result<()> {
        if !(tau >= 0.0 && tau <= self.horizon * (1.0 + 1e-12)) {
            return Err(Error::Range(format!(
                "lag {tau} outside the solved horizon [0, {}]",
                self.horizon
            )));
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

/// Smallest `A` on `{2G(T)·2^j : j ≤ 40}` (plus the analytic CIR root)
/// satisfying `2G(T) + T·max(0, R(A)) ≤ A` with `F(A)` finite.
pub fn assumption_bound(modulator: &AffineModulator, two_g: f64, horizon: f64) -> Result<f64> {
    if let ModulatorKind::Cir { delta, .. } = modulator.kind {
        let c = 2.0 * two_g * horizon * delta * delta;
        if c > 1.0 {
            return Err(Error::Feasibility(format!(
                "CIR feasibility needs 4G(T)Tδ² ≤ 1; here 4G(T)Tδ² = {c:.6} with T = {horizon}"
            )));
        }
    }
    let limit = modulator.domain_limit();
    if two_g >= limit {
        return Err(Error::Feasibility(format!(
            "2G(T) = {two_g:.6} is not below a = {limit} for T = {horizon}"
        )));
    }
    let feasible = |a: f64| {
        a > 0.0 && a < limit && two_g + horizon * modulator.r(a).max(0.0) <= a * (1.0 + 1e-12)
    };
    let mut candidates: Vec<f64> = (0..=40).map(|j| two_g * 2f64.powi(j)).collect();
    if let ModulatorKind::Cir { delta, .. } = modulator.kind {
        let q = horizon * delta * delta;
        if q > 0.0 {
            let disc = (1.0 - 2.0 * two_g * q).max(0.0);
            candidates.push((1.0 - disc.sqrt()) / q);
        }
    }
    if two_g == 0.0 {
        candidates.push(0.0f64.max(f64::MIN_POSITIVE));
    }
    candidates
        .into_iter()
        .filter(|&a| feasible(a))
        .min_by(f64::total_cmp)
        .ok_or_else(|| {
            Error::Feasibility(format!(
                "no A > 0 with 2G(T) + T·max(0, R(A)) <= A (2G(T) = {two_g:.6}, T = {horizon})"
            ))
        })
}

/// Explicit Lévy-OU solution `ψ(τ) = 2∫₀^τ e^{−λ(τ−s)}‖g(s)‖² ds`.
pub fn levy_ou_psi(kernel: &dyn Kernel, lambda: f64, tau: f64) -> Result<f64> {
    if tau <= 0.0 {
        return Ok(0.0);
    }
    if lambda == 0.0 {
        return Ok(2.0 * kernel.cumulative_energy(tau)?);
    }
    let q = 1.0 / (2.0 * kernel.singular_exponent() + 1.0);
    let v = integrate(
        |w| {
            if w <= 0.0 {
                return 0.0;
            }
            let s = tau * w.powf(q);
            (-lambda * (tau - s)).exp() * kernel.lag_inner(s, s) * tau * q * w.powf(q - 1.0)
        },
        0.0,
        1.0,
        Tolerance::new(1e-16, 1e-13),
    )?;
    Ok(2.0 * v)
}

fn graded_nodes(horizon: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            if k == n {
                horizon
            } else {
                horizon * (k as f64 / n as f64).powi(3)
            }
        })
        .collect()
}

/// Solves the Riccati pair on `[0, horizon]`.
pub fn solve_psi_phi(
    kernel: Arc<dyn Kernel>,
    modulator: &AffineModulator,
    horizon: f64,
) -> Result<PsiPhiSolution> {
    if !kernel.time_homogeneous() {
        return Err(Error::Unsupported("modulated models need a time-homogeneous kernel".into()));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
    }
    modulator.validate()?;
    let two_g = 2.0 * kernel.cumulative_energy(horizon)?;
    let bound_a = assumption_bound(modulator, two_g, horizon)?;
    let sol = match modulator.kind {
        ModulatorKind::LevyOu { lambda, .. } => solve_explicit(kernel, modulator, lambda, horizon, bound_a)?,
        ModulatorKind::Cir { .. } => solve_rk4(kernel, modulator, horizon, bound_a)?,
    };
    sol.check_bounds(modulator)?;
    Ok(sol)
}

fn solve_explicit(
    kernel: Arc<dyn Kernel>,
    modulator: &AffineModulator,
    lambda: f64,
    horizon: f64,
    bound_a: f64,
) -> Result<PsiPhiSolution> {
    let nodes = graded_nodes(horizon, EXPLICIT_NODES);
    let limit = modulator.domain_limit();
    let psi_at = |tau: f64| -> Result<f64> {
        let v = levy_ou_psi(kernel.as_ref(), lambda, tau)?;
        if v >= limit {
            return Err(Error::Domain(format!("ψ({tau}) = {v} reaches a = {limit}")));
        }
        Ok(v)
    };
    let gl = GaussLegendre::new(6);
    let m = nodes.len();
    let (mut rem, mut drem, mut phi, mut dphi) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    for k in 1..m {
        let psi = psi_at(nodes[k])?;
        rem[k] = psi - 2.0 * kernel.cumulative_energy(nodes[k])?;
        drem[k] = modulator.r(psi);
        dphi[k] = modulator.f(psi);
        let (x, w) = gl.mapped(nodes[k - 1], nodes[k]);
        let mut inc = 0.0;
        for (x, w) in x.iter().zip(&w) {
            inc += w * modulator.f(psi_at(*x)?);
        }
        phi[k] = phi[k - 1] + inc;
    }
    Ok(PsiPhiSolution {
        horizon,
        bound_a,
        nodes,
        rem,
        drem,
        phi,
        dphi,
        kernel,
    })
}

/// Fixed-step RK4 in `(ϕ, φ)`; works for every modulator.
pub fn solve_rk4(
    kernel: Arc<dyn Kernel>,
    modulator: &AffineModulator,
    horizon: f64,
    bound_a: f64,
) -> Result<PsiPhiSolution> {
    let steps = ((3.0 * horizon / RK4_MAX_STEP).ceil() as usize).max(EXPLICIT_NODES);
    let nodes = graded_nodes(horizon, steps);
    let two_g = |t: f64| 2.0 * kernel.cumulative_energy(t).unwrap_or(f64::NAN);
    let limit = modulator.domain_limit();
    let m = nodes.len();
    let (mut rem, mut drem, mut phi, mut dphi) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let rhs = |t: f64, x: f64| {
        let psi = x + two_g(t);
        (modulator.r(psi), modulator.f(psi))
    };
    for k in 0..m - 1 {
        let (t0, h) = (nodes[k], nodes[k + 1] - nodes[k]);
        let x = rem[k];
        let (k1, l1) = rhs(t0, x);
        let (k2, l2) = rhs(t0 + 0.5 * h, x + 0.5 * h * k1);
        let (k3, l3) = rhs(t0 + 0.5 * h, x + 0.5 * h * k2);
        let (k4, l4) = rhs(t0 + h, x + h * k3);
        rem[k + 1] = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        phi[k + 1] = phi[k] + h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
        let psi = rem[k + 1] + two_g(nodes[k + 1]);
        if !(psi < limit) || !phi[k + 1].is_finite() {
            return Err(Error::Domain(format!(
                "ψ({}) = {psi} leaves the domain (limit {limit})",
                nodes[k + 1]
            )));
        }
        drem[k + 1] = modulator.r(psi);
        dphi[k + 1] = modulator.f(psi);
    }
    drem[0] = modulator.r(0.0);
    dphi[0] = modulator.f(0.0);
    Ok(PsiPhiSolution {
        horizon,
        bound_a,
        nodes,
        rem,
        drem,
        phi,
        dphi,
        kernel,
    })
}

impl PsiPhiSolution {
    fn check_bounds(&self, modulator: &AffineModulator) -> Result<()> {
        let fa = self.horizon * modulator.f(self.bound_a);
        for (k, &t) in self.nodes.iter().enumerate() {
            let psi = self.psi(t);
            let tol = 1e-9 * (1.0 + self.bound_a);
            if psi < -tol || psi > self.bound_a + tol || self.phi[k] < -tol || self.phi[k] > fa + tol {
                return Err(Error::numerical(
                    format!("ψ/φ bounds violated at τ = {t} (ψ = {psi}, φ = {}, A = {})", self.phi[k], self.bound_a),
                    psi.abs(),
                ));
            }
        }
        Ok(())
    }
}

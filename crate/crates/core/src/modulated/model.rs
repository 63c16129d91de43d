//! The modulated model: kernel, modulator, curve and the solved ψ/φ pair.

use std::sync::Arc;

use super::modulator::AffineModulator;
use super::riccati::{solve_psi_phi, PsiPhiSolution};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::lognormal::ForwardVarianceCurve;

#[derive(Debug, Clone)]
pub struct ModulatedModel {
    pub kernel: Arc<dyn Kernel>,
    pub modulator: AffineModulator,
    pub curve: ForwardVarianceCurve,
    pub solution: PsiPhiSolution,
}

impl ModulatedModel {
    /// Checks feasibility on `[0, horizon]` and solves the Riccati pair there.
    pub fn new(
        kernel: Arc<dyn Kernel>,
        modulator: AffineModulator,
        curve: ForwardVarianceCurve,
        horizon: f64,
    ) -> Result<Self> {
        curve.validate()?;
        let solution = solve_psi_phi(kernel.clone(), &modulator, horizon)?;
        Ok(ModulatedModel {
            kernel,
            modulator,
            curve,
            solution,
        })
    }

    /// Model solved on the horizon needed to price the window `[T, T + Θ]`
    /// seen from `t`.
    pub fn for_window(
        kernel: Arc<dyn Kernel>,
        modulator: AffineModulator,
        curve: ForwardVarianceCurve,
        t: f64,
        maturity: f64,
        theta: f64,
    ) -> Result<Self> {
        if !(t <= maturity && theta > 0.0) {
            return Err(Error::invalid(format!(
                "need t <= T and Θ > 0 (t={t}, T={maturity}, Θ={theta})"
            )));
        }
        Self::new(kernel, modulator, curve, maturity + theta - t)
    }

    pub fn horizon(&self) -> f64 {
        self.solution.horizon
    }

    pub fn psi(&self, tau: f64) -> f64 {
        self.solution.psi(tau)
    }

    pub fn phi(&self, tau: f64) -> f64 {
        self.solution.phi(tau)
    }

    /// `E[exp(2∫ₜᵘ ‖g(u−s)‖² Γ_s ds) | Γ_t = γ] = exp(γψ(u−t) + φ(u−t))`.
    pub fn laplace_transform(&self, t: f64, u: f64, gamma: f64) -> Result<f64> {
        self.solution.check_range(u - t)?;
        Ok((gamma * self.psi(u - t) + self.phi(u - t)).exp())
    }

    pub fn with_modulator(&self, modulator: AffineModulator) -> Result<Self> {
        Self::new(self.kernel.clone(), modulator, self.curve.clone(), self.horizon())
    }
}

pub fn laplace_transform(model: &ModulatedModel, t: f64, u: f64, gamma: f64) -> Result<f64> {
    model.laplace_transform(t, u, gamma)
}

//! Law of the log Doléans exponentials on the grid conditional on a modulator
//! path: `m_i = ψ(t_i−T)Γ_T + φ(t_i−T) − ψ(t_i−t)γ − φ(t_i−t)` and
//! `C_ij = 4∫ₜᵀ Γ_s g(t_i−s)ᵀ g(t_j−s) ds`.

use std::borrow::Cow;

use super::model::ModulatedModel;
use super::modulator::ModulatorKind;
use super::simulate::{cir_grid, ModulatorPath, CIR_STEPS_PER_YEAR};
use crate::error::{Error, Result};
use crate::kernels::{covariance_matrix, weighted_cross_integral, CovarianceSpec};
use crate::linalg::{pivoted_cholesky, Factor, SymMatrix};
use crate::lognormal::GaussianLaw;
use crate::quadrature::graded_rule;

const RANK_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
enum Structure {
    /// `base = 4∫ₜᵀ e^{−λ(s−t)} g g ds` and its factor.
    LevyOu {
        lambda: f64,
        base: SymMatrix,
        base_factor: Factor,
    },
    /// `basis[m] = 4∫ hat_m(s) g g ds` for the piecewise-linear interpolant of Γ
    /// on `knots`.
    Cir { knots: Vec<f64>, basis: Vec<SymMatrix> },
}

/// Precomputed pieces of the conditional law for a fixed grid.
#[derive(Debug, Clone)]
pub struct ConditionalLawBuilder {
    pub dates: Vec<f64>,
    pub t: f64,
    pub horizon: f64,
    gamma0: f64,
    /// `ψ(t_i − T)`, `ψ(t_i − t)` and `φ(t_i − T) − φ(t_i − t)`.
    psi_maturity: Vec<f64>,
    psi_start: Vec<f64>,
    phi_diff: Vec<f64>,
    structure: Structure,
    label: String,
    kernel: std::sync::Arc<dyn crate::kernels::Kernel>,
}

/// Sampling view of a conditional law: `Z = mean + scale·L·ξ`.
#[derive(Debug, Clone)]
pub struct PathLaw<'a> {
    pub mean: Vec<f64>,
    pub factor: Cow<'a, Factor>,
    pub scale: f64,
    /// Covariance when it was assembled for this path.
    pub cov: Option<SymMatrix>,
}

impl PathLaw<'_> {
    pub fn rank(&self) -> usize {
        self.factor.rank
    }

    pub fn sample_into(&self, normals: &[f64], out: &mut [f64]) {
        self.factor.apply(normals, out);
        for (o, m) in out.iter_mut().zip(&self.mean) {
            *o = m + self.scale * *o;
        }
    }
}

fn factor_checked(c: &SymMatrix, label: &str) -> Result<Factor> {
    let trace = c.trace();
    let mut jitter = 0.0;
    for attempt in 0..4 {
        let f = pivoted_cholesky(c, jitter, RANK_TOL);
        if f.reconstruction_error(c) <= 1e-10 {
            return Ok(f);
        }
        jitter = 1e-14 * trace * 10f64.powi(attempt);
    }
    Err(Error::SingularCovariance {
        grid: label.to_string(),
    })
}

impl ConditionalLawBuilder {
    pub fn new(model: &ModulatedModel, dates: &[f64], t: f64, horizon: f64) -> Result<Self> {
        let spec = CovarianceSpec::new(t, horizon, dates.to_vec())?;
        let last = dates[dates.len() - 1];
        model.solution.check_range(last - t)?;
        let gamma0 = model.modulator.gamma0;
        let psi_maturity: Vec<f64> = dates.iter().map(|&d| model.psi(d - horizon)).collect();
        let psi_start: Vec<f64> = dates.iter().map(|&d| model.psi(d - t)).collect();
        let phi_diff: Vec<f64> = dates.iter().map(|&d| model.phi(d - horizon) - model.phi(d - t)).collect();
        let kernel = model.kernel.as_ref();
        let n = dates.len();
        let structure = match model.modulator.kind {
            ModulatorKind::LevyOu { lambda, .. } => {
                let base = if lambda == 0.0 {
                    covariance_matrix(kernel, &spec)?.0
                } else {
                    let mut c = SymMatrix::zeros(n);
                    for i in 0..n {
                        for j in i..n {
                            let v = weighted_cross_integral(kernel, dates[i], dates[j], t, horizon, |s| {
                                (-lambda * (s - t)).exp()
                            })?;
                            c.set_sym(i, j, 4.0 * v);
                        }
                    }
                    c
                };
                let base_factor = factor_checked(&base, &spec.describe())?;
                Structure::LevyOu {
                    lambda,
                    base,
                    base_factor,
                }
            }
            ModulatorKind::Cir { .. } => {
                let knots = cir_grid(t, horizon, CIR_STEPS_PER_YEAR);
                let m = knots.len();
                let mut basis = vec![SymMatrix::zeros(n); m];
                for k in 0..m {
                    for i in 0..n {
                        for j in i..n {
                            let mut v = 0.0;
                            if k > 0 {
                                let (a, b) = (knots[k - 1], knots[k]);
                                v += weighted_cross_integral(kernel, dates[i], dates[j], a, b, |s| (s - a) / (b - a))?;
                            }
                            if k + 1 < m {
                                let (a, b) = (knots[k], knots[k + 1]);
                                v += weighted_cross_integral(kernel, dates[i], dates[j], a, b, |s| (b - s) / (b - a))?;
                            }
                            basis[k].set_sym(i, j, 4.0 * v);
                        }
                    }
                }
                Structure::Cir { knots, basis }
            }
        };
        Ok(ConditionalLawBuilder {
            dates: dates.to_vec(),
            t,
            horizon,
            gamma0,
            psi_maturity,
            psi_start,
            phi_diff,
            structure,
            label: spec.describe(),
            kernel: model.kernel.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dates.len()
    }

    /// `4∫_τ^T e^{−λ(s−τ)} g g ds` for a jump at `τ`, written as the base
    /// matrix scaled by `e^{λ(τ−t)}` minus a smooth integral over `[t, τ]`.
    fn jump_matrix(&self, lambda: f64, base: &SymMatrix, tau: f64) -> SymMatrix {
        let n = self.dim();
        let scale = (lambda * (tau - self.t)).exp();
        let mut c = base.scaled(scale);
        if tau <= self.t {
            return c;
        }
        // nodes graded towards τ, where the nearest kernel singularity (s = T) sits
        let dist = (self.horizon - tau).max(1e-300);
        let ratio: f64 = 0.3;
        let panels = (((dist / (tau - self.t)).ln() / ratio.ln()).ceil() as i64 + 1).clamp(1, 60) as usize;
        let (x, w) = graded_rule(self.t, tau, panels, 12, ratio);
        let mut gvals = vec![0.0; n * x.len()];
        let d = self.kernel.dimension();
        let mut buf = vec![0.0; d];
        for (q, &s) in x.iter().enumerate() {
            for i in 0..n {
                if d == 1 {
                    self.kernel.lag_into(self.dates[i] - s, &mut buf);
                    gvals[q * n + i] = buf[0];
                }
            }
        }
        for (q, &s) in x.iter().enumerate() {
            let wq = 4.0 * w[q] * (-lambda * (s - tau)).exp();
            let g = &gvals[q * n..(q + 1) * n];
            for i in 0..n {
                let gi = wq * g[i];
                for j in i..n {
                    let v = c.get(i, j) - gi * g[j];
                    c.set_sym(i, j, v);
                }
            }
        }
        c
    }

    /// Conditional law along `path` in sampling form.
    pub fn path_law(&self, path: &ModulatorPath) -> Result<PathLaw<'_>> {
        if (path.start() - self.t).abs() > 1e-12 || (path.end() - self.horizon).abs() > 1e-12 {
            return Err(Error::Range(format!(
                "modulator path covers [{}, {}], law needs [{}, {}]",
                path.start(),
                path.end(),
                self.t,
                self.horizon
            )));
        }
        let gamma_t = path.terminal();
        let mean: Vec<f64> = (0..self.dim())
            .map(|i| self.psi_maturity[i] * gamma_t + self.phi_diff[i] - self.psi_start[i] * self.gamma0)
            .collect();
        match (&self.structure, path) {
            (
                Structure::LevyOu {
                    lambda,
                    base,
                    base_factor,
                },
                ModulatorPath::Jumps { gamma0, times, sizes, .. },
            ) => {
                if times.is_empty() {
                    return Ok(PathLaw {
                        mean,
                        factor: Cow::Borrowed(base_factor),
                        scale: gamma0.max(0.0).sqrt(),
                        cov: None,
                    });
                }
                if self.kernel.dimension() != 1 {
                    return Err(Error::Unsupported("jump covariance for multi-factor kernels".into()));
                }
                let mut c = base.scaled(*gamma0);
                for (tau, j) in times.iter().zip(sizes) {
                    c.add_scaled(*j, &self.jump_matrix(*lambda, base, *tau));
                }
                let f = factor_checked(&c, &self.label)?;
                Ok(PathLaw {
                    mean,
                    factor: Cow::Owned(f),
                    scale: 1.0,
                    cov: Some(c),
                })
            }
            (Structure::Cir { knots, basis }, ModulatorPath::Grid { times, values }) => {
                if times.len() != knots.len() {
                    return Err(Error::Range("CIR path grid does not match the law's knots".into()));
                }
                let mut c = SymMatrix::zeros(self.dim());
                for (b, v) in basis.iter().zip(values) {
                    c.add_scaled(*v, b);
                }
                let f = factor_checked(&c, &self.label)?;
                Ok(PathLaw {
                    mean,
                    factor: Cow::Owned(f),
                    scale: 1.0,
                    cov: Some(c),
                })
            }
            _ => Err(Error::invalid("modulator path type does not match the model")),
        }
    }

    /// Conditional law along `path` as a [`GaussianLaw`].
    pub fn law(&self, path: &ModulatorPath) -> Result<GaussianLaw> {
        let pl = self.path_law(path)?;
        let cov = match (&pl.cov, &self.structure) {
            (Some(c), _) => c.clone(),
            (None, Structure::LevyOu { base, .. }) => base.scaled(pl.scale * pl.scale),
            (None, Structure::Cir { .. }) => unreachable!("CIR laws always carry their covariance"),
        };
        GaussianLaw::new(pl.mean, cov, &self.label)
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    /// Same grid and model with another starting value `Γ_t = γ`; paths passed
    /// to [`Self::path_law`] must then start from `γ` too.
    pub fn with_gamma0(&self, gamma0: f64) -> Self {
        ConditionalLawBuilder {
            gamma0,
            ..self.clone()
        }
    }
}

/// Conditional law of the grid vector given a modulator path.
pub fn conditional_law(
    model: &ModulatedModel,
    path: &ModulatorPath,
    dates: &[f64],
    t: f64,
    horizon: f64,
) -> Result<GaussianLaw> {
    ConditionalLawBuilder::new(model, dates, t, horizon)?.law(path)
}

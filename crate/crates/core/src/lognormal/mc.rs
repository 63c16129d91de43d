//! Monte Carlo pricing of VIX payoffs with the rectangle and trapezoid schemes.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::curve::ForwardVarianceCurve;
use super::grid::{scheme_weights, DiscretizationGrid, Scheme, SchemeWeights};
use super::law::{build_law, GaussianLaw};
use super::payoff::Payoff;
use crate::engine::{path_rng, run_paths};
use crate::error::{Error, Result};
use crate::kernels::Kernel;

/// Stream tag of the Gaussian draws of a path.
pub const GAUSS_TAG: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub paths: usize,
    pub seed: u64,
    pub use_control_variate: bool,
    pub scheme: Scheme,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            paths: 50_000,
            seed: 0,
            use_control_variate: true,
            scheme: Scheme::Trapezoid,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths < 2 {
            return Err(Error::invalid(format!("need at least 2 paths, got {}", self.paths)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McPrice {
    pub estimate: f64,
    pub std_error: f64,
    pub control_variate_offset: f64,
}

/// Everything needed to evaluate the discretised VIX functional on one grid.
#[derive(Debug, Clone)]
pub struct VixFunctional {
    pub dates: Vec<f64>,
    pub weights: SchemeWeights,
}

impl VixFunctional {
    pub fn new(curve: &ForwardVarianceCurve, dates: Vec<f64>, scheme: Scheme) -> Result<Self> {
        curve.validate()?;
        if dates.len() < 2 {
            return Err(Error::invalid("a scheme needs at least two grid dates"));
        }
        let weights = scheme_weights(curve, &dates, scheme);
        Ok(VixFunctional { dates, weights })
    }

    /// `VIX²_n` from the log exponentials `z`.
    #[inline]
    pub fn vix2(&self, z: &[f64]) -> f64 {
        self.weights
            .omega
            .iter()
            .zip(z)
            .filter(|(w, _)| **w != 0.0)
            .map(|(w, z)| w * z.exp())
            .sum()
    }

    /// Log-average proxy `Y = log VIX̄²_n`.
    #[inline]
    pub fn log_average(&self, z: &[f64]) -> f64 {
        self.weights.log_const + self.weights.nu.iter().zip(z).map(|(w, z)| w * z).sum::<f64>()
    }

    /// Exact mean and variance of `Y` under `law`.
    pub fn log_average_moments(&self, law: &GaussianLaw) -> (f64, f64) {
        let (m, v) = law.linear_moments(&self.weights.nu);
        (m + self.weights.log_const, v)
    }
}

/// Draws the Gaussian vector of path `p` into `z`.
pub fn draw_gaussian(law: &GaussianLaw, seed: u64, p: usize, normals: &mut Vec<f64>, z: &mut [f64]) {
    let mut rng = path_rng(seed, p, GAUSS_TAG);
    normals.clear();
    normals.extend((0..law.rank()).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
    law.sample_into(normals, z);
}

/// Prices several payoffs with common random numbers. `t` is the valuation
/// time, the observation date and window come from `grid`.
pub fn price_vix_options_mc<K: Kernel + ?Sized>(
    kernel: &K,
    curve: &ForwardVarianceCurve,
    grid: &DiscretizationGrid,
    t: f64,
    config: &McConfig,
    payoffs: &[Payoff],
) -> Result<Vec<McPrice>> {
    config.validate()?;
    for p in payoffs {
        p.validate()?;
    }
    let functional = VixFunctional::new(curve, grid.dates(), config.scheme)?;
    let law = build_law(kernel, &functional.dates, t, grid.maturity)?;
    Ok(price_with_law(&law, &functional, config, payoffs))
}

pub fn price_vix_option_mc<K: Kernel + ?Sized>(
    kernel: &K,
    curve: &ForwardVarianceCurve,
    grid: &DiscretizationGrid,
    t: f64,
    config: &McConfig,
    payoff: Payoff,
) -> Result<McPrice> {
    Ok(price_vix_options_mc(kernel, curve, grid, t, config, &[payoff])?[0])
}

/// Monte Carlo over a prepared law and functional.
pub fn price_with_law(
    law: &GaussianLaw,
    functional: &VixFunctional,
    config: &McConfig,
    payoffs: &[Payoff],
) -> Vec<McPrice> {
    let np = payoffs.len();
    let (my, vy) = functional.log_average_moments(law);
    let cv_means: Vec<f64> = payoffs.iter().map(|p| p.lognormal_expectation(my, vy)).collect();
    let cv = config.use_control_variate;
    let n = law.dim();
    let stats = run_paths(
        config.paths,
        2 * np,
        || (Vec::with_capacity(law.rank()), vec![0.0; n]),
        |(normals, z), p, out| {
            draw_gaussian(law, config.seed, p, normals, z);
            let x = functional.vix2(z);
            let y = if cv { functional.log_average(z) } else { 0.0 };
            for (k, pay) in payoffs.iter().enumerate() {
                let v = pay.value(x);
                if cv {
                    let adj = cv_means[k] - pay.value_log(y);
                    out[k] = v + adj;
                    out[np + k] = adj;
                } else {
                    out[k] = v;
                    out[np + k] = 0.0;
                }
            }
        },
    );
    (0..np)
        .map(|k| McPrice {
            estimate: stats[k].mean,
            std_error: stats[k].std_error(),
            control_variate_offset: stats[np + k].mean,
        })
        .collect()
}

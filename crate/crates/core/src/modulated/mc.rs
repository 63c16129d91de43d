//! Two-stage Monte Carlo for the modulated model: simulate Γ on `[t, T]`,
//! then draw the grid vector from its conditional Gaussian law.

use rand_distr::{Distribution, StandardNormal};

use super::conditional::{ConditionalLawBuilder, PathLaw};
use super::fourier::{FourierPricer, LogAverageCharacteristic, WindowMeasure};
use super::model::ModulatedModel;
use super::modulator::ModulatorKind;
use super::simulate::{simulate_modulator, ModulatorPath};
use crate::engine::{path_rng, try_run_paths};
use crate::error::{Error, Result};
use crate::lognormal::{DiscretizationGrid, McConfig, McPrice, Payoff, VixFunctional, GAUSS_TAG};

/// Stream tag of the modulator draws of a path.
pub const MODULATOR_TAG: u64 = 0;

/// Outer path `p`: the modulator trajectory.
pub fn outer_path(model: &ModulatedModel, seed: u64, p: usize, t: f64, maturity: f64) -> ModulatorPath {
    let mut rng = path_rng(seed, p, MODULATOR_TAG);
    simulate_modulator(&model.modulator, t, maturity, &mut rng)
}

/// Inner draw of path `p` from its conditional law.
pub fn inner_draw(law: &PathLaw<'_>, seed: u64, p: usize, normals: &mut Vec<f64>, z: &mut [f64]) {
    let mut rng = path_rng(seed, p, GAUSS_TAG);
    normals.clear();
    normals.extend((0..law.rank()).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
    law.sample_into(normals, z);
}

/// Exact expectations of the scheme's log-average proxy, or `None` when the
/// control variate is unavailable (CIR modulator, digital payoff, or an
/// infeasible Fourier contour).
fn control_means(
    model: &ModulatedModel,
    functional: &VixFunctional,
    t: f64,
    maturity: f64,
    payoffs: &[Payoff],
) -> Option<Vec<f64>> {
    if !matches!(model.modulator.kind, ModulatorKind::LevyOu { .. })
        || payoffs.iter().any(|p| matches!(p, Payoff::Digital { .. }))
    {
        return None;
    }
    let theta = functional.dates[functional.dates.len() - 1] - functional.dates[0];
    let measure = WindowMeasure::Discrete {
        dates: functional.dates.clone(),
        weights: functional.weights.nu.clone(),
        log_const: functional.weights.log_const,
    };
    let ch = LogAverageCharacteristic::new(model, t, maturity, theta, &measure).ok()?;
    let pricer = FourierPricer::new(ch).ok()?;
    payoffs.iter().map(|p| pricer.price(p).ok()).collect()
}

/// Prices several payoffs on common random numbers.
pub fn price_vix_options_mc_modulated(
    model: &ModulatedModel,
    grid: &DiscretizationGrid,
    t: f64,
    config: &McConfig,
    payoffs: &[Payoff],
) -> Result<Vec<McPrice>> {
    config.validate()?;
    for p in payoffs {
        p.validate()?;
    }
    let functional = VixFunctional::new(&model.curve, grid.dates(), config.scheme)?;
    let builder = ConditionalLawBuilder::new(model, &functional.dates, t, grid.maturity)?;
    let cv_means = if config.use_control_variate {
        control_means(model, &functional, t, grid.maturity, payoffs)
    } else {
        None
    };
    let np = payoffs.len();
    let n = functional.dates.len();
    let stats = try_run_paths(
        config.paths,
        2 * np,
        || (Vec::new(), vec![0.0; n]),
        |(normals, z), p, out| -> Result<()> {
            let path = outer_path(model, config.seed, p, t, grid.maturity);
            let law = builder.path_law(&path)?;
            inner_draw(&law, config.seed, p, normals, z);
            let x = functional.vix2(z);
            let y = functional.log_average(z);
            for (k, pay) in payoffs.iter().enumerate() {
                let v = pay.value(x);
                match &cv_means {
                    Some(m) => {
                        let adj = m[k] - pay.value_log(y);
                        out[k] = v + adj;
                        out[np + k] = adj;
                    }
                    None => {
                        out[k] = v;
                        out[np + k] = 0.0;
                    }
                }
            }
            Ok(())
        },
    )?;
    Ok((0..np)
        .map(|k| McPrice {
            estimate: stats[k].mean,
            std_error: stats[k].std_error(),
            control_variate_offset: stats[np + k].mean,
        })
        .collect())
}

pub fn price_vix_option_mc_modulated(
    model: &ModulatedModel,
    grid: &DiscretizationGrid,
    t: f64,
    config: &McConfig,
    payoff: Payoff,
) -> Result<McPrice> {
    Ok(price_vix_options_mc_modulated(model, grid, t, config, &[payoff])?[0])
}

/// Sample means of `e^{Z_i}` (which are 1 by the tower property) together with
/// their standard errors.
pub fn doleans_means_modulated(
    model: &ModulatedModel,
    dates: &[f64],
    t: f64,
    maturity: f64,
    paths: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if paths < 2 {
        return Err(Error::invalid("need at least 2 paths"));
    }
    let builder = ConditionalLawBuilder::new(model, dates, t, maturity)?;
    let n = dates.len();
    let stats = try_run_paths(
        paths,
        n,
        || (Vec::new(), vec![0.0; n]),
        |(normals, z), p, out| -> Result<()> {
            let path = outer_path(model, seed, p, t, maturity);
            let law = builder.path_law(&path)?;
            inner_draw(&law, seed, p, normals, z);
            for (o, zi) in out.iter_mut().zip(z.iter()) {
                *o = zi.exp();
            }
            Ok(())
        },
    )?;
    Ok(stats.iter().map(|s| (s.mean, s.std_error())).collect())
}

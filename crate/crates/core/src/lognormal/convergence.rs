//! Convergence of the discretised estimators in the number of grid points,
//! measured against a fine reference grid with common random numbers.

use serde::{Deserialize, Serialize};

use super::curve::ForwardVarianceCurve;
use super::grid::{DiscretizationGrid, Scheme};
use super::law::build_law;
use super::mc::{draw_gaussian, McConfig, McPrice, VixFunctional};
use super::payoff::Payoff;
use crate::engine::run_paths;
use crate::error::{Error, Result};
use crate::kernels::Kernel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSpec {
    pub t: f64,
    pub maturity: f64,
    pub theta: f64,
    pub payoff: Payoff,
    pub scheme: Scheme,
    pub kappa: f64,
    pub n_list: Vec<usize>,
    pub reference_scheme: Scheme,
    pub reference_kappa: f64,
    pub reference_n: usize,
    /// Only errors exceeding this many standard errors enter the slope fit
    /// (0 uses every point).
    pub min_error_in_se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub price: f64,
    pub std_error: f64,
    /// `|price_n − price_ref|` with common random numbers.
    pub abs_error: f64,
    /// Standard error of `price_n − price_ref`.
    pub error_std_error: f64,
    /// 95% interval of the signed error.
    pub error_ci_low: f64,
    pub error_ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub reference: McPrice,
    /// Least-squares slope of log error against log n.
    pub slope: Option<f64>,
    pub slope_points: usize,
    pub note: Option<String>,
}

/// Merges grids into one sorted date set; returns it with the index maps.
fn union_grid(grids: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<usize>>) {
    let mut all: Vec<f64> = grids.iter().flatten().copied().collect();
    all.sort_by(f64::total_cmp);
    let mut union: Vec<f64> = Vec::with_capacity(all.len());
    for d in all {
        match union.last() {
            Some(&last) if (d - last).abs() <= 4.0 * f64::EPSILON * d.abs() => {}
            _ => union.push(d),
        }
    }
    let maps = grids
        .iter()
        .map(|g| {
            g.iter()
                .map(|&d| {
                    let i = union.partition_point(|&u| u < d - 4.0 * f64::EPSILON * d.abs());
                    i.min(union.len() - 1)
                })
                .collect()
        })
        .collect();
    (union, maps)
}

pub fn slope_fit(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x.ln() / n, b + y.ln() / n));
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in points {
        let dx = x.ln() - mx;
        sxy += dx * (y.ln() - my);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

pub fn convergence_study<K: Kernel + ?Sized>(
    kernel: &K,
    curve: &ForwardVarianceCurve,
    spec: &ConvergenceSpec,
    config: &McConfig,
) -> Result<ConvergenceReport> {
    config.validate()?;
    spec.payoff.validate()?;
    if spec.n_list.is_empty() {
        return Err(Error::invalid("empty n list"));
    }
    let max_n = *spec.n_list.iter().max().expect("non-empty");
    if spec.reference_n <= max_n {
        return Err(Error::invalid(format!(
            "reference n ({}) must exceed max(n_list) ({max_n})",
            spec.reference_n
        )));
    }
    let mut grids = Vec::new();
    let mut schemes = Vec::new();
    for &n in &spec.n_list {
        grids.push(DiscretizationGrid::new(spec.maturity, spec.theta, n, spec.kappa)?.dates());
        schemes.push(spec.scheme);
    }
    grids.push(
        DiscretizationGrid::new(spec.maturity, spec.theta, spec.reference_n, spec.reference_kappa)?
            .dates(),
    );
    schemes.push(spec.reference_scheme);
    let (union, maps) = union_grid(&grids);
    let law = build_law(kernel, &union, spec.t, spec.maturity)?;
    let functionals: Vec<VixFunctional> = grids
        .iter()
        .zip(&schemes)
        .map(|(g, s)| VixFunctional::new(curve, g.clone(), *s))
        .collect::<Result<_>>()?;
    // control variate expectations on the union law
    let cv_means: Vec<f64> = functionals
        .iter()
        .zip(&maps)
        .map(|(f, map)| {
            let mut nu = vec![0.0; union.len()];
            for (w, &i) in f.weights.nu.iter().zip(map) {
                nu[i] += w;
            }
            let (m, v) = law.linear_moments(&nu);
            spec.payoff.lognormal_expectation(m + f.weights.log_const, v)
        })
        .collect();
    let m = functionals.len();
    let reference = m - 1;
    let payoff = spec.payoff;
    let cv = config.use_control_variate;
    let stats = run_paths(
        config.paths,
        2 * m,
        || (Vec::new(), vec![0.0; union.len()], vec![0.0; grids[reference].len()]),
        |(normals, z, local), p, out| {
            draw_gaussian(&law, config.seed, p, normals, z);
            for k in 0..m {
                let map = &maps[k];
                let zl = &mut local[..map.len()];
                for (dst, &i) in zl.iter_mut().zip(map) {
                    *dst = z[i];
                }
                let mut v = payoff.value(functionals[k].vix2(zl));
                if cv {
                    v += cv_means[k] - payoff.value_log(functionals[k].log_average(zl));
                }
                out[k] = v;
            }
            for k in 0..m {
                out[m + k] = out[k] - out[reference];
            }
        },
    );
    let rows: Vec<ConvergenceRow> = spec
        .n_list
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let d = &stats[m + k];
            let se = d.std_error();
            ConvergenceRow {
                n,
                price: stats[k].mean,
                std_error: stats[k].std_error(),
                abs_error: d.mean.abs(),
                error_std_error: se,
                error_ci_low: d.mean - 1.96 * se,
                error_ci_high: d.mean + 1.96 * se,
            }
        })
        .collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.abs_error > spec.min_error_in_se * r.error_std_error && r.abs_error > 0.0)
        .map(|r| (r.n as f64, r.abs_error))
        .collect();
    let slope = slope_fit(&pts);
    let note = if slope.is_none() {
        Some("slope omitted: fewer than two usable points".to_string())
    } else {
        None
    };
    Ok(ConvergenceReport {
        rows,
        reference: McPrice {
            estimate: stats[reference].mean,
            std_error: stats[reference].std_error(),
            control_variate_offset: 0.0,
        },
        slope,
        slope_points: pts.len(),
        note,
    })
}

//! Power grids on the VIX window and the quadrature weights of the rectangle
//! and trapezoid schemes.

use serde::{Deserialize, Serialize};

use super::curve::ForwardVarianceCurve;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rectangle,
    Trapezoid,
}

impl Scheme {
    /// Grid exponent used when none is given.
    pub fn default_kappa(self) -> f64 {
        match self {
            Scheme::Rectangle => 1.0,
            Scheme::Trapezoid => 2.0,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rectangle" => Ok(Scheme::Rectangle),
            "trapezoid" => Ok(Scheme::Trapezoid),
            _ => Err(Error::invalid(format!("unknown scheme '{s}' (rectangle|trapezoid)"))),
        }
    }
}

/// Dates `t_i = T + Θ (i/n)^κ`, `i = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationGrid {
    pub maturity: f64,
    pub theta: f64,
    pub n: usize,
    pub kappa: f64,
}

impl DiscretizationGrid {
    pub fn new(maturity: f64, theta: f64, n: usize, kappa: f64) -> Result<Self> {
        if !(maturity >= 0.0 && maturity.is_finite()) {
            return Err(Error::invalid(format!("maturity must be >= 0, got {maturity}")));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::invalid(format!("window length must be > 0, got {theta}")));
        }
        if n == 0 {
            return Err(Error::invalid("grid needs n >= 1"));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::invalid(format!("grid exponent must be > 0, got {kappa}")));
        }
        Ok(DiscretizationGrid {
            maturity,
            theta,
            n,
            kappa,
        })
    }

    pub fn date(&self, i: usize) -> f64 {
        if i == self.n {
            return self.maturity + self.theta;
        }
        let r = i as f64 / self.n as f64;
        let frac = if self.kappa == 1.0 { r } else { r.powf(self.kappa) };
        self.maturity + self.theta * frac
    }

    pub fn dates(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.date(i)).collect()
    }

    pub fn window_end(&self) -> f64 {
        self.maturity + self.theta
    }
}

/// Linear functionals of the grid values used by the schemes:
/// `VIX²_n = Σ_j omega_j e^{Z_j}` and the control variate
/// `Y = log_const + Σ_j nu_j Z_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeWeights {
    pub omega: Vec<f64>,
    pub nu: Vec<f64>,
    pub log_const: f64,
}

pub fn scheme_weights(
    curve: &ForwardVarianceCurve,
    dates: &[f64],
    scheme: Scheme,
) -> SchemeWeights {
    let n = dates.len() - 1;
    let theta = dates[n] - dates[0];
    let mut omega = vec![0.0; n + 1];
    let mut nu = vec![0.0; n + 1];
    for i in 0..n {
        let (a, b) = (dates[i], dates[i + 1]);
        match scheme {
            Scheme::Rectangle => {
                omega[i] += curve.integral(a, b) / theta;
                nu[i] += (b - a) / theta;
            }
            Scheme::Trapezoid => {
                let (l, r) = curve.linear_masses(a, b);
                omega[i] += l / theta;
                omega[i + 1] += r / theta;
                nu[i] += 0.5 * (b - a) / theta;
                nu[i + 1] += 0.5 * (b - a) / theta;
            }
        }
    }
    SchemeWeights {
        omega,
        nu,
        log_const: curve.log_integral(dates[0], dates[n]) / theta,
    }
}

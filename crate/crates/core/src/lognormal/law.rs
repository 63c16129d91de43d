//! Gaussian law of the log Doléans exponentials `Z_i` on a grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{covariance_matrix, CovarianceSpec, Kernel};
use crate::linalg::{pivoted_cholesky, Factor, SymMatrix};

/// Truncation level of the pivoted factorisation, relative to the trace.
const RANK_TOL: f64 = 1e-13;
/// Accepted relative Frobenius error of `L Lᵀ` against `C`.
const RECON_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianLaw {
    pub mean: Vec<f64>,
    pub cov: SymMatrix,
    pub chol: Factor,
}

impl GaussianLaw {
    /// Factorises `cov`, adding jitter `1e-14·trace·10^k` (k = 0, 1, 2) when the
    /// plain factor does not reproduce the matrix.
    pub fn new(mean: Vec<f64>, cov: SymMatrix, label: &str) -> Result<Self> {
        if mean.len() != cov.n {
            return Err(Error::invalid("mean and covariance sizes differ"));
        }
        let trace = cov.trace();
        if !trace.is_finite() || cov.data.iter().any(|x| !x.is_finite()) {
            return Err(Error::SingularCovariance {
                grid: label.to_string(),
            });
        }
        let mut jitter = 0.0;
        for attempt in 0..4 {
            let chol = pivoted_cholesky(&cov, jitter, RANK_TOL);
            if chol.reconstruction_error(&cov) <= RECON_TOL {
                return Ok(GaussianLaw { mean, cov, chol });
            }
            jitter = 1e-14 * trace * 10f64.powi(attempt);
        }
        Err(Error::SingularCovariance {
            grid: label.to_string(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn rank(&self) -> usize {
        self.chol.rank
    }

    /// `out = mean + L·normals` with `normals.len() == rank()`.
    #[inline]
    pub fn sample_into(&self, normals: &[f64], out: &mut [f64]) {
        self.chol.apply(normals, out);
        for (o, m) in out.iter_mut().zip(&self.mean) {
            *o += m;
        }
    }

    /// Mean and variance of the linear functional `Σ w_i Z_i`.
    pub fn linear_moments(&self, w: &[f64]) -> (f64, f64) {
        let m = w.iter().zip(&self.mean).map(|(a, b)| a * b).sum();
        let mut v = 0.0;
        for i in 0..self.dim() {
            if w[i] == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for j in 0..self.dim() {
                s += self.cov.get(i, j) * w[j];
            }
            v += w[i] * s;
        }
        (m, v.max(0.0))
    }
}

/// Law of `(Z_0, …, Z_n)` at `dates` seen from time `t` with observation date `T`.
pub fn build_law<K: Kernel + ?Sized>(kernel: &K, dates: &[f64], t: f64, horizon: f64) -> Result<GaussianLaw> {
    let spec = CovarianceSpec::new(t, horizon, dates.to_vec())?;
    let (cov, mean) = covariance_matrix(kernel, &spec)?;
    GaussianLaw::new(mean, cov, &spec.describe())
}

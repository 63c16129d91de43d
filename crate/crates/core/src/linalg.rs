//! Dense symmetric matrices and a rank-revealing (pivoted) Cholesky factor.

use serde::{Deserialize, Serialize};

/// Dense symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        SymMatrix {
            n: self.n,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    /// `self += c · other`.
    pub fn add_scaled(&mut self, c: f64, other: &SymMatrix) {
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += c * y;
        }
    }
}

/// Low-rank factor `L` (n × r, row-major, original index order) with
/// `L·Lᵀ ≈ C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub n: usize,
    pub rank: usize,
    pub rows: Vec<f64>,
}

impl Factor {
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.rank..(i + 1) * self.rank]
    }

    /// `out = L·z` for `z` of length `rank`.
    pub fn apply(&self, z: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            let r = self.row(i);
            let mut s = 0.0;
            for k in 0..self.rank {
                s += r[k] * z[k];
            }
            *o = s;
        }
    }

    /// Relative Frobenius distance between `L·Lᵀ` and `c`.
    pub fn reconstruction_error(&self, c: &SymMatrix) -> f64 {
        let norm = c.frobenius();
        let mut err = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let (ri, rj) = (self.row(i), self.row(j));
                let mut s = 0.0;
                for k in 0..self.rank {
                    s += ri[k] * rj[k];
                }
                let d = s - c.get(i, j);
                err += d * d;
            }
        }
        if norm == 0.0 {
            err.sqrt()
        } else {
            err.sqrt() / norm
        }
    }
}

/// Pivoted Cholesky of a symmetric PSD matrix, stopping once the trace of the
/// remaining Schur complement drops below `rel_tol · trace(C)`.
pub fn pivoted_cholesky(c: &SymMatrix, jitter: f64, rel_tol: f64) -> Factor {
    let n = c.n;
    let mut d: Vec<f64> = (0..n).map(|i| c.get(i, i) + jitter).collect();
    let total: f64 = d.iter().sum();
    let mut perm: Vec<usize> = (0..n).collect();
    // columns in original index order
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let stop = rel_tol * total;
    for k in 0..n {
        let remaining: f64 = perm[k..].iter().map(|&i| d[i].max(0.0)).sum();
        if remaining <= stop || total <= 0.0 {
            break;
        }
        let (mut best, mut best_val) = (k, f64::NEG_INFINITY);
        for (p, &i) in perm.iter().enumerate().skip(k) {
            if d[i] > best_val {
                best_val = d[i];
                best = p;
            }
        }
        if best_val <= 0.0 {
            break;
        }
        perm.swap(k, best);
        let piv = perm[k];
        let lkk = best_val.sqrt();
        let mut col = vec![0.0; n];
        col[piv] = lkk;
        for &row in &perm[k + 1..] {
            let mut s = c.get(row, piv);
            for prev in &cols {
                s -= prev[row] * prev[piv];
            }
            let v = s / lkk;
            col[row] = v;
            d[row] -= v * v;
        }
        d[piv] = 0.0;
        cols.push(col);
    }
    let rank = cols.len();
    let mut rows = vec![0.0; n * rank];
    for (k, col) in cols.iter().enumerate() {
        for i in 0..n {
            rows[i * rank + k] = col[i];
        }
    }
    Factor { n, rank, rows }
}

/// Solve a 2×2 system; returns the solution and the 2-norm condition number.
pub fn solve2(a: [[f64; 2]; 2], b: [f64; 2]) -> ([f64; 2], f64) {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    // singular values of a 2×2 matrix
    let s = a[0][0] * a[0][0] + a[0][1] * a[0][1] + a[1][0] * a[1][0] + a[1][1] * a[1][1];
    let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
    let smax = (0.5 * (s + disc)).sqrt();
    let smin2 = 0.5 * (s - disc);
    let cond = if det == 0.0 || smin2 <= 0.0 {
        f64::INFINITY
    } else {
        smax / (det.abs() / smax)
    };
    if det == 0.0 {
        return ([f64::NAN, f64::NAN], cond);
    }
    let x0 = (b[0] * a[1][1] - b[1] * a[0][1]) / det;
    let x1 = (a[0][0] * b[1] - a[1][0] * b[0]) / det;
    ([x0, x1], cond)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_rank_factor_reconstructs() {
        let mut c = SymMatrix::zeros(3);
        let vals = [[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        for i in 0..3 {
            for j in 0..3 {
                c.set_sym(i, j, vals[i][j]);
            }
        }
        let f = pivoted_cholesky(&c, 0.0, 1e-15);
        assert_eq!(f.rank, 3);
        assert!(f.reconstruction_error(&c) < 1e-15);
    }

    #[test]
    fn rank_one_detected() {
        let v = [1.0, 2.0, 3.0, 4.0];
        let mut c = SymMatrix::zeros(4);
        for i in 0..4 {
            for j in 0..4 {
                c.set_sym(i, j, v[i] * v[j]);
            }
        }
        let f = pivoted_cholesky(&c, 0.0, 1e-14);
        assert_eq!(f.rank, 1);
        assert!(f.reconstruction_error(&c) < 1e-14);
    }

    #[test]
    fn two_by_two_solve_and_condition() {
        let (x, cond) = solve2([[2.0, 0.0], [0.0, 0.5]], [2.0, 1.0]);
        assert_eq!(x, [1.0, 2.0]);
        assert!((cond - 4.0).abs() < 1e-12);
        let (_, cond) = solve2([[1.0, 1.0], [1.0, 1.0]], [1.0, 1.0]);
        assert!(cond.is_infinite());
    }
}

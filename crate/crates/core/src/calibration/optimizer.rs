//! Projected L-BFGS on the unit box with forward-difference gradients.
//!
//! Every test and step rule is invariant under multiplying the objective by a
//! positive constant, so scaled objectives produce the same iterates.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub max_iterations: usize,
    /// Relative decrease of the objective below which iteration stops.
    pub tolerance: f64,
    /// Forward-difference step in unit-box coordinates.
    pub gradient_step: f64,
    pub memory: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            max_iterations: 200,
            tolerance: 1e-10,
            gradient_step: 1e-6,
            memory: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOutcome {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Objective after each accepted iterate, starting with the initial point.
    pub trace: Vec<f64>,
    pub stop_reason: String,
}

const FIRST_STEP: f64 = 0.1;
const ARMIJO: f64 = 1e-4;
const BACKTRACKS: usize = 40;

fn gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], fx: f64, h: f64, evals: &mut usize) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut y = x.to_vec();
    for i in 0..x.len() {
        let forward = x[i] + h <= 1.0;
        y[i] = if forward { x[i] + h } else { x[i] - h };
        let mut fy = f(&y);
        *evals += 1;
        let mut step = y[i] - x[i];
        if !fy.is_finite() && forward && x[i] - h >= 0.0 {
            y[i] = x[i] - h;
            fy = f(&y);
            *evals += 1;
            step = -h;
        }
        g[i] = if fy.is_finite() { (fy - fx) / step } else { 0.0 };
        y[i] = x[i];
    }
    g
}

/// Minimises `f` over `[0, 1]^d` from `x0`. `f_ref > 0` sets the scale of an
/// acceptable objective: iteration stops once `f ≤ tolerance · f_ref`.
pub fn minimize_box<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], f_ref: f64, settings: &OptimizerSettings) -> OptimizerOutcome {
    let d = x0.len();
    let mut x: Vec<f64> = x0.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let mut fx = f(&x);
    let mut evals = 1;
    let mut trace = vec![fx];
    let done = |x: Vec<f64>, fx: f64, it: usize, evals: usize, trace: Vec<f64>, why: &str| OptimizerOutcome {
        x,
        objective: fx,
        iterations: it,
        evaluations: evals,
        trace,
        stop_reason: why.to_string(),
    };
    if !fx.is_finite() {
        return done(x, fx, 0, evals, trace, "infeasible start");
    }
    if d == 0 || fx <= settings.tolerance * f_ref {
        return done(x, fx, 0, evals, trace, "objective below tolerance");
    }
    let mut g = gradient(&f, &x, fx, settings.gradient_step, &mut evals);
    let mut pairs: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    for it in 1..=settings.max_iterations {
        let free: Vec<bool> = (0..d)
            .map(|i| !((x[i] <= 0.0 && g[i] > 0.0) || (x[i] >= 1.0 && g[i] < 0.0)))
            .collect();
        let pg: Vec<f64> = (0..d).map(|i| if free[i] { g[i] } else { 0.0 }).collect();
        if pg.iter().all(|v| *v == 0.0) {
            return done(x, fx, it - 1, evals, trace, "projected gradient vanishes");
        }
        // two-loop recursion restricted to the free variables
        let mut q = pg.clone();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * dot_free(s, &q, &free);
            for i in 0..d {
                if free[i] {
                    q[i] -= a * y[i];
                }
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = pairs.last() {
            let yy = dot_free(y, y, &free);
            let scale = if yy > 0.0 { dot_free(s, y, &free) / yy } else { 1.0 };
            q.iter_mut().for_each(|v| *v *= scale);
        }
        for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot_free(y, &q, &free);
            for i in 0..d {
                if free[i] {
                    q[i] += s[i] * (a - b);
                }
            }
        }
        let mut dir: Vec<f64> = (0..d).map(|i| if free[i] { -q[i] } else { 0.0 }).collect();
        if pairs.is_empty() || dot(&dir, &pg) >= 0.0 {
            // steepest descent, sized so the linear model predicts halving the
            // objective, and never longer than FIRST_STEP in any coordinate
            let m = pg.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let t = (FIRST_STEP / m).min(0.5 * fx / dot(&pg, &pg));
            dir = pg.iter().map(|v| -t * v).collect();
            pairs.clear();
        }
        // backtracking Armijo search along the projected path
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..BACKTRACKS {
            let xn: Vec<f64> = (0..d).map(|i| (x[i] + step * dir[i]).clamp(0.0, 1.0)).collect();
            let fnew = f(&xn);
            evals += 1;
            let decrease: f64 = (0..d).map(|i| g[i] * (xn[i] - x[i])).sum();
            if fnew.is_finite() && fnew <= fx + ARMIJO * decrease && xn != x {
                accepted = Some((xn, fnew));
                break;
            }
            // safeguarded quadratic interpolation of the backtrack
            let slope = decrease / step;
            let shrink = if fnew.is_finite() && slope < 0.0 {
                let q = -slope * step / (2.0 * (fnew - fx - slope * step));
                q.clamp(0.1, 0.5)
            } else {
                0.5
            };
            step *= shrink;
        }
        let Some((xn, fnew)) = accepted else {
            return done(x, fx, it - 1, evals, trace, "line search found no decrease");
        };
        let gn = gradient(&f, &xn, fnew, settings.gradient_step, &mut evals);
        let s: Vec<f64> = (0..d).map(|i| xn[i] - x[i]).collect();
        let y: Vec<f64> = (0..d).map(|i| gn[i] - g[i]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            pairs.push((s, y, 1.0 / sy));
            if pairs.len() > settings.memory {
                pairs.remove(0);
            }
        }
        let rel = (fx - fnew) / fx;
        x = xn;
        g = gn;
        fx = fnew;
        trace.push(fx);
        if fx <= settings.tolerance * f_ref {
            return done(x, fx, it, evals, trace, "objective below tolerance");
        }
        if rel <= settings.tolerance {
            return done(x, fx, it, evals, trace, "relative decrease below tolerance");
        }
    }
    let it = settings.max_iterations;
    done(x, fx, it, evals, trace, "iteration limit")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dot_free(a: &[f64], b: &[f64], free: &[bool]) -> f64 {
    (0..a.len()).filter(|&i| free[i]).map(|i| a[i] * b[i]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosen(x: &[f64]) -> f64 {
        // minimum at (0.6, 0.36) inside the box
        let (a, b) = (0.6, 10.0);
        (a - x[0]).powi(2) + b * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn finds_interior_minimum() {
        let out = minimize_box(rosen, &[0.1, 0.9], 1.0, &OptimizerSettings::default());
        assert!((out.x[0] - 0.6).abs() < 1e-3 && (out.x[1] - 0.36).abs() < 1e-3, "{out:?}");
    }

    #[test]
    fn respects_bounds() {
        let f = |x: &[f64]| (x[0] - 2.0).powi(2) + (x[1] + 0.5).powi(2);
        let out = minimize_box(f, &[0.5, 0.5], 1.0, &OptimizerSettings::default());
        assert!((out.x[0] - 1.0).abs() < 1e-12 && out.x[1].abs() < 1e-12, "{out:?}");
    }

    #[test]
    fn zero_objective_stops_at_once() {
        let out = minimize_box(|_| 0.0, &[0.3], 1.0, &OptimizerSettings::default());
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn scaling_the_objective_keeps_the_iterates() {
        let s = OptimizerSettings::default();
        let a = minimize_box(rosen, &[0.1, 0.9], 1.0, &s);
        let b = minimize_box(|x| 4.0 * rosen(x), &[0.1, 0.9], 4.0, &s);
        assert_eq!(a.x, b.x);
        assert_eq!(a.iterations, b.iterations);
        let scaled: Vec<f64> = a.trace.iter().map(|v| 4.0 * v).collect();
        assert_eq!(scaled, b.trace);
    }

    #[test]
    fn infinite_region_is_avoided() {
        let f = |x: &[f64]| if x[0] > 0.8 { f64::INFINITY } else { (x[0] - 0.9).powi(2) };
        let out = minimize_box(f, &[0.2], 1.0, &OptimizerSettings::default());
        assert!(out.x[0] <= 0.8 && out.x[0] > 0.75, "{out:?}");
    }
}

//! Exact simulation of the modulator between the valuation and observation
//! dates.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Poisson, StandardNormal};

use super::modulator::{AffineModulator, ModulatorKind};

/// Default CIR grid density (steps per year).
pub const CIR_STEPS_PER_YEAR: f64 = 200.0;
/// Minimum number of CIR steps on any interval.
pub const CIR_MIN_STEPS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum ModulatorPath {
    /// Lévy-OU: `Γ_s = γe^{−λ(s−t)} + Σ_{τ_k ≤ s} J_k e^{−λ(s−τ_k)}`.
    Jumps {
        start: f64,
        end: f64,
        gamma0: f64,
        lambda: f64,
        times: Vec<f64>,
        sizes: Vec<f64>,
    },
    /// CIR values on a grid, exact transitions.
    Grid { times: Vec<f64>, values: Vec<f64> },
}

impl ModulatorPath {
    pub fn start(&self) -> f64 {
        match self {
            ModulatorPath::Jumps { start, .. } => *start,
            ModulatorPath::Grid { times, .. } => times[0],
        }
    }

    pub fn end(&self) -> f64 {
        match self {
            ModulatorPath::Jumps { end, .. } => *end,
            ModulatorPath::Grid { times, .. } => times[times.len() - 1],
        }
    }

    pub fn value_at(&self, s: f64) -> f64 {
        match self {
            ModulatorPath::Jumps {
                start,
                gamma0,
                lambda,
                times,
                sizes,
                ..
            } => {
                let mut v = gamma0 * (-lambda * (s - start)).exp();
                for (tau, j) in times.iter().zip(sizes) {
                    if *tau <= s {
                        v += j * (-lambda * (s - tau)).exp();
                    }
                }
                v
            }
            ModulatorPath::Grid { times, values } => {
                let i = times.partition_point(|&x| x <= s).clamp(1, times.len() - 1) - 1;
                let w = ((s - times[i]) / (times[i + 1] - times[i])).clamp(0.0, 1.0);
                values[i] * (1.0 - w) + values[i + 1] * w
            }
        }
    }

    pub fn terminal(&self) -> f64 {
        match self {
            ModulatorPath::Grid { values, .. } => values[values.len() - 1],
            _ => self.value_at(self.end()),
        }
    }
}

pub fn cir_grid(t: f64, horizon: f64, steps_per_year: f64) -> Vec<f64> {
    let m = (((horizon - t) * steps_per_year).ceil() as usize).max(CIR_MIN_STEPS);
    (0..=m)
        .map(|k| if k == m { horizon } else { t + (horizon - t) * k as f64 / m as f64 })
        .collect()
}

fn chi2<R: Rng + ?Sized>(dof: f64, rng: &mut R) -> f64 {
    if dof <= 0.0 {
        return 0.0;
    }
    2.0 * Gamma::new(0.5 * dof, 1.0).expect("positive shape").sample(rng)
}

/// One exact CIR transition over `h` from `x`.
pub fn cir_step<R: Rng + ?Sized>(k: f64, theta: f64, delta: f64, x: f64, h: f64, rng: &mut R) -> f64 {
    let decay = (-k * h).exp();
    if delta == 0.0 {
        return theta + (x - theta) * decay;
    }
    let c = if k == 0.0 {
        0.25 * delta * delta * h
    } else {
        delta * delta * (1.0 - decay) / (4.0 * k)
    };
    let dof = 4.0 * k * theta / (delta * delta);
    let nc = x * decay / c;
    let draw = if dof > 1.0 {
        let z: f64 = StandardNormal.sample(rng);
        (z + nc.sqrt()).powi(2) + chi2(dof - 1.0, rng)
    } else {
        let n = if nc > 0.0 {
            Poisson::new(0.5 * nc).expect("positive mean").sample(rng)
        } else {
            0.0
        };
        chi2(dof + 2.0 * n, rng)
    };
    c * draw
}

/// Simulates Γ on `[t, T]` started from the modulator's `gamma0`.
pub fn simulate_modulator<R: Rng + ?Sized>(
    modulator: &AffineModulator,
    t: f64,
    horizon: f64,
    rng: &mut R,
) -> ModulatorPath {
    simulate_modulator_with_steps(modulator, t, horizon, CIR_STEPS_PER_YEAR, rng)
}

pub fn simulate_modulator_with_steps<R: Rng + ?Sized>(
    modulator: &AffineModulator,
    t: f64,
    horizon: f64,
    steps_per_year: f64,
    rng: &mut R,
) -> ModulatorPath {
    match modulator.kind {
        ModulatorKind::LevyOu {
            lambda,
            big_lambda,
            a,
        } => {
            let mean = big_lambda * (horizon - t);
            let count = if mean > 0.0 {
                Poisson::new(mean).expect("positive mean").sample(rng) as usize
            } else {
                0
            };
            let mut times: Vec<f64> = (0..count).map(|_| t + (horizon - t) * rng.random::<f64>()).collect();
            times.sort_by(f64::total_cmp);
            let exp = Exp::new(a).expect("a > 0");
            let sizes = (0..count).map(|_| exp.sample(rng)).collect();
            ModulatorPath::Jumps {
                start: t,
                end: horizon,
                gamma0: modulator.gamma0,
                lambda,
                times,
                sizes,
            }
        }
        ModulatorKind::Cir { k, theta, delta } => {
            let times = cir_grid(t, horizon, steps_per_year);
            let mut values = Vec::with_capacity(times.len());
            let mut x = modulator.gamma0;
            values.push(x);
            for w in times.windows(2) {
                x = cir_step(k, theta, delta, x, w[1] - w[0], rng);
                values.push(x);
            }
            ModulatorPath::Grid { times, values }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{path_rng, run_paths};

    #[test]
    fn deterministic_cases() {
        let m = AffineModulator::levy_ou(0.5, 0.0, 3.0, 0.2).unwrap();
        let p = simulate_modulator(&m, 0.0, 1.0, &mut path_rng(1, 0, 0));
        assert!((p.terminal() - 0.2 * (-0.5f64).exp()).abs() < 1e-15);
        let c = AffineModulator::cir(0.0, 0.3, 0.0, 0.2).unwrap();
        let p = simulate_modulator(&c, 0.0, 1.0, &mut path_rng(1, 0, 0));
        assert!(matches!(&p, ModulatorPath::Grid { values, .. } if values.iter().all(|&v| v == 0.2)));
    }

    #[test]
    fn ou_terminal_mean() {
        let m = AffineModulator::levy_ou(0.8, 3.0, 4.0, 0.05).unwrap();
        let stats = run_paths(100_000, 1, || (), |_, p, out| {
            out[0] = simulate_modulator(&m, 0.0, 0.5, &mut path_rng(11, p, 0)).terminal();
        });
        let want = 0.05 * (-0.4f64).exp() + 3.0 / 4.0 * (1.0 - (-0.4f64).exp()) / 0.8;
        assert!((stats[0].mean - want).abs() < 3.0 * stats[0].std_error(), "{} vs {want}", stats[0].mean);
    }

    #[test]
    fn cir_terminal_mean_both_regimes() {
        for &(k, theta, delta) in &[(2.0, 0.1, 0.5), (1.0, 0.05, 0.5)] {
            let m = AffineModulator::cir(k, theta, delta, 0.07).unwrap();
            let stats = run_paths(100_000, 1, || (), |_, p, out| {
                out[0] = simulate_modulator(&m, 0.0, 0.3, &mut path_rng(5, p, 0)).terminal();
            });
            let want = m.mean_at(0.3);
            assert!((stats[0].mean - want).abs() < 3.0 * stats[0].std_error(), "{k}: {} vs {want}", stats[0].mean);
        }
    }
}

//! Affine modulators Γ: Lévy-driven Ornstein-Uhlenbeck with exponential jumps
//! and the CIR diffusion.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModulatorKind {
    /// `dΓ = −λΓ dt + dL`, `L` compound Poisson with rate `Λ` and Exp(`a`) jumps.
    LevyOu {
        lambda: f64,
        #[serde(rename = "Lambda")]
        big_lambda: f64,
        a: f64,
    },
    /// `dΓ = k(θ − Γ) dt + δ√Γ dB`.
    Cir { k: f64, theta: f64, delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineModulator {
    #[serde(flatten)]
    pub kind: ModulatorKind,
    pub gamma0: f64,
}

impl AffineModulator {
    pub fn levy_ou(lambda: f64, big_lambda: f64, a: f64, gamma0: f64) -> Result<Self> {
        let m = AffineModulator {
            kind: ModulatorKind::LevyOu {
                lambda,
                big_lambda,
                a,
            },
            gamma0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn cir(k: f64, theta: f64, delta: f64, gamma0: f64) -> Result<Self> {
        let m = AffineModulator {
            kind: ModulatorKind::Cir { k, theta, delta },
            gamma0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        ok("gamma0", self.gamma0)?;
        match self.kind {
            ModulatorKind::LevyOu {
                lambda,
                big_lambda,
                a,
            } => {
                ok("lambda", lambda)?;
                ok("Lambda", big_lambda)?;
                if !(a > 0.0 && a.is_finite()) {
                    return Err(Error::invalid(format!("a must be > 0, got {a}")));
                }
            }
            ModulatorKind::Cir { k, theta, delta } => {
                ok("k", k)?;
                ok("theta", theta)?;
                ok("delta", delta)?;
            }
        }
        Ok(())
    }

    /// `R(u)` of the Riccati system.
    pub fn r(&self, u: f64) -> f64 {
        match self.kind {
            ModulatorKind::LevyOu { lambda, .. } => -lambda * u,
            ModulatorKind::Cir { k, delta, .. } => -k * u + 0.5 * delta * delta * u * u,
        }
    }

    /// `F(u)` of the Riccati system; `+∞` outside the domain.
    pub fn f(&self, u: f64) -> f64 {
        match self.kind {
            ModulatorKind::LevyOu { .. } => self.levy_exponent(u),
            ModulatorKind::Cir { k, theta, .. } => k * theta * u,
        }
    }

    /// Lévy exponent `Ψ(u) = Λu/(a − u)` of the driving compound Poisson
    /// process (`+∞` for `u ≥ a`; 0 for the CIR variant).
    pub fn levy_exponent(&self, u: f64) -> f64 {
        match self.kind {
            ModulatorKind::LevyOu { big_lambda, a, .. } => {
                if u >= a {
                    f64::INFINITY
                } else {
                    big_lambda * u / (a - u)
                }
            }
            ModulatorKind::Cir { .. } => 0.0,
        }
    }

    pub fn levy_exponent_complex(&self, w: Complex64) -> Complex64 {
        match self.kind {
            ModulatorKind::LevyOu { big_lambda, a, .. } => big_lambda * w / (a - w),
            ModulatorKind::Cir { .. } => Complex64::new(0.0, 0.0),
        }
    }

    /// Upper end of the domain of `F` (`a` for Lévy-OU, `+∞` for CIR).
    pub fn domain_limit(&self) -> f64 {
        match self.kind {
            ModulatorKind::LevyOu { a, .. } => a,
            ModulatorKind::Cir { .. } => f64::INFINITY,
        }
    }

    /// `E[Γ_s]` at lag `h` from `Γ = γ`.
    pub fn mean_at(&self, h: f64) -> f64 {
        match self.kind {
            ModulatorKind::LevyOu {
                lambda,
                big_lambda,
                a,
            } => {
                let decay = (-lambda * h).exp();
                let drift = if lambda == 0.0 { h } else { (1.0 - decay) / lambda };
                self.gamma0 * decay + big_lambda / a * drift
            }
            ModulatorKind::Cir { k, theta, .. } => {
                let decay = (-k * h).exp();
                self.gamma0 * decay + theta * (1.0 - decay)
            }
        }
    }

    /// True when the modulator path is deterministic.
    pub fn is_deterministic(&self) -> bool {
        match self.kind {
            ModulatorKind::LevyOu { big_lambda, .. } => big_lambda == 0.0,
            ModulatorKind::Cir { delta, .. } => delta == 0.0,
        }
    }

    pub fn with_gamma0(&self, gamma0: f64) -> Self {
        AffineModulator { gamma0, ..*self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let m: AffineModulator = serde_json::from_str(
            r#"{"type": "levy_ou", "lambda": 0.08, "Lambda": 0.71, "a": 6.18, "gamma0": 0.05}"#,
        )
        .unwrap();
        assert_eq!(m, AffineModulator::levy_ou(0.08, 0.71, 6.18, 0.05).unwrap());
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"Lambda\":0.71"));
        let c: AffineModulator =
            serde_json::from_str(r#"{"type": "cir", "k": 1.0, "theta": 0.05, "delta": 0.5, "gamma0": 0.05}"#)
                .unwrap();
        assert!(matches!(c.kind, ModulatorKind::Cir { .. }));
    }

    #[test]
    fn riccati_functions() {
        let m = AffineModulator::levy_ou(0.5, 2.0, 4.0, 0.1).unwrap();
        assert_eq!(m.r(2.0), -1.0);
        assert_eq!(m.f(2.0), 2.0);
        assert!(m.f(4.0).is_infinite());
        let c = AffineModulator::cir(1.0, 0.2, 0.5, 0.1).unwrap();
        assert_eq!(c.r(2.0), -2.0 + 0.5);
        assert!((c.f(2.0) - 0.4).abs() < 1e-15);
        assert!(AffineModulator::levy_ou(0.1, 0.1, 0.0, 0.1).is_err());
    }
}

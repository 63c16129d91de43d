//! Today's forward variance curve `u ↦ ξ_t(u)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flat or piecewise-constant forward variance curve. Piecewise knots
/// `(u_k, v_k)` mean `ξ(u) = v_k` on `[u_k, u_{k+1})`; the first value extends
/// to the left and the last one to the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForwardVarianceCurve {
    Flat(f64),
    Piecewise(Vec<(f64, f64)>),
}

impl ForwardVarianceCurve {
    pub fn flat(v: f64) -> Result<Self> {
        let c = ForwardVarianceCurve::Flat(v);
        c.validate()?;
        Ok(c)
    }

    pub fn piecewise(knots: Vec<(f64, f64)>) -> Result<Self> {
        let c = ForwardVarianceCurve::Piecewise(knots);
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ForwardVarianceCurve::Flat(v) => {
                if !(*v > 0.0 && v.is_finite()) {
                    return Err(Error::Domain(format!("forward variance must be positive, got {v}")));
                }
            }
            ForwardVarianceCurve::Piecewise(k) => {
                if k.is_empty() {
                    return Err(Error::invalid("piecewise curve without knots"));
                }
                if k.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::invalid("curve knots must be strictly increasing"));
                }
                if let Some((u, v)) = k.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
                    return Err(Error::Domain(format!(
                        "forward variance must be positive, got {v} at u={u}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, u: f64) -> f64 {
        match self {
            ForwardVarianceCurve::Flat(v) => *v,
            ForwardVarianceCurve::Piecewise(k) => {
                let idx = k.partition_point(|(x, _)| *x <= u);
                k[idx.saturating_sub(1)].1
            }
        }
    }

    /// Constant pieces `(lo, hi, value)` covering `[a, b]`.
    pub(crate) fn pieces(&self, a: f64, b: f64) -> Vec<(f64, f64, f64)> {
        match self {
            ForwardVarianceCurve::Flat(v) => vec![(a, b, *v)],
            ForwardVarianceCurve::Piecewise(k) => {
                let mut out = Vec::new();
                let mut lo = a;
                let mut idx = k.partition_point(|(x, _)| *x <= a).saturating_sub(1);
                while lo < b {
                    let hi = if idx + 1 < k.len() { k[idx + 1].0.min(b) } else { b };
                    let hi = hi.max(lo);
                    if hi > lo {
                        out.push((lo, hi, k[idx].1));
                    }
                    lo = hi;
                    if idx + 1 < k.len() {
                        idx += 1;
                    } else {
                        break;
                    }
                }
                if lo < b {
                    out.push((lo, b, k[k.len() - 1].1));
                }
                out
            }
        }
    }

    /// `∫_a^b ξ(u) du`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.pieces(a, b).iter().map(|(l, h, v)| v * (h - l)).sum()
    }

    /// `∫_a^b log ξ(u) du`.
    pub fn log_integral(&self, a: f64, b: f64) -> f64 {
        self.pieces(a, b).iter().map(|(l, h, v)| v.ln() * (h - l)).sum()
    }

    /// The curve plus `eps` on `[a, b)`.
    pub fn bumped(&self, a: f64, b: f64, eps: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::invalid(format!("bump interval [{a}, {b}) is empty")));
        }
        let mut cuts = vec![a, b];
        if let ForwardVarianceCurve::Piecewise(k) = self {
            cuts.extend(k.iter().map(|(u, _)| *u));
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let first = cuts[0] - 1.0;
        let mut knots = vec![(first, self.value(first))];
        for u in cuts {
            let bump = if (a..b).contains(&u) { eps } else { 0.0 };
            knots.push((u, self.value(u) + bump));
        }
        Self::piecewise(knots)
    }

    /// `(∫_a^b ξ(u)(b−u)/(b−a) du, ∫_a^b ξ(u)(u−a)/(b−a) du)`: the masses the
    /// trapezoid blend puts on the left and right endpoint.
    pub fn linear_masses(&self, a: f64, b: f64) -> (f64, f64) {
        let w = b - a;
        let mut left = 0.0;
        let mut right = 0.0;
        for (l, h, v) in self.pieces(a, b) {
            // ∫_l^h (u − a) du
            let r = 0.5 * ((h - a).powi(2) - (l - a).powi(2));
            right += v * r / w;
            left += v * ((h - l) - r / w);
        }
        (left, right)
    }
}

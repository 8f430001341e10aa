//! The `d_α` family on `ℝ^N`: `d_α(p, p') = (Σ |p_i − p'_i|^α)^{1/α}`.
//!
//! For `α ≥ 1` this is a metric. For `0 < α < 1` it is only a
//! quasi-metric: symmetric and point-separating, with the triangle
//! inequality holding up to the factor `2^{1/α − 1}`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_len, parameter, Result};
use crate::numeric::{compensated_sum, pow_nonneg};

/// Exponent of the distance family. Always finite and strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct AlphaParam(f64);

impl AlphaParam {
    pub const ONE: AlphaParam = AlphaParam(1.0);

    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(parameter(format!("alpha must be finite and > 0, got {alpha}")));
        }
        Ok(AlphaParam(alpha))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// True when `d_α` satisfies the plain triangle inequality.
    pub fn is_metric(self) -> bool {
        self.0 >= 1.0
    }
}

impl TryFrom<f64> for AlphaParam {
    type Error = crate::Error;
    fn try_from(v: f64) -> Result<Self> {
        AlphaParam::new(v)
    }
}

impl From<AlphaParam> for f64 {
    fn from(a: AlphaParam) -> f64 {
        a.0
    }
}

/// `Σ |p_i − p2_i|^α`, i.e. `d_α^α`.
pub fn power_sum(p: &[f64], p2: &[f64], alpha: AlphaParam) -> Result<f64> {
    ensure_same_len(p.len(), p2.len())?;
    Ok(power_sum_unchecked(p, p2, alpha.0))
}

/// `(Σ |p_i − p2_i|^α)^{1/α}`.
pub fn alpha_distance(p: &[f64], p2: &[f64], alpha: AlphaParam) -> Result<f64> {
    ensure_same_len(p.len(), p2.len())?;
    Ok(distance_unchecked(p, p2, alpha.0))
}

/// Constant `K` in `d(p, p'') ≤ K (d(p, p') + d(p', p''))`.
pub fn quasi_triangle_factor(alpha: AlphaParam) -> f64 {
    if alpha.is_metric() {
        1.0
    } else {
        (1.0 / alpha.0 - 1.0).exp2()
    }
}

pub(crate) fn power_sum_unchecked(p: &[f64], p2: &[f64], alpha: f64) -> f64 {
    if alpha == 1.0 {
        return compensated_sum(p.iter().zip(p2).map(|(a, b)| (a - b).abs()));
    }
    compensated_sum(p.iter().zip(p2).map(|(a, b)| pow_nonneg((a - b).abs(), alpha)))
}

pub(crate) fn distance_unchecked(p: &[f64], p2: &[f64], alpha: f64) -> f64 {
    let s = power_sum_unchecked(p, p2, alpha);
    if alpha == 1.0 {
        s
    } else {
        pow_nonneg(s, 1.0 / alpha)
    }
}

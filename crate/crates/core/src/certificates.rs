//! Constructive `δ(ε)` certificates, the constants bounding the normalizers
//! over `N ≥ 2`, the four power-sum inequalities behind the certificates,
//! and the two rules for deriving new certificates from old ones.
//!
//! Every certificate issued here asserts: for all `N ≥ n_min` and all
//! `p, p'` in the domain, `d_α(p, p') < δ ⇒ |C(p) − C(p')| / C_{N,max} < ε`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_len, parameter, Error, Result};
use crate::functionals::{Family, Functional};
use crate::metric::{power_sum_unchecked, AlphaParam};
use crate::numeric::{compensated_sum, pow_nonneg};
use crate::simplex::{validate_q, Seed};

/// The bound that produced a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// `S_q^I`: `|ΔS| / S_max ≤ M d_1 ≤ M d_α^α`, `δ = (ε/M)^{1/α}`.
    IncompleteLinearBound,
    /// `S_q`, `q < 1`: `N^{1−q} d_1^q / |1 − N^{1−q}| ≤ M_1 d_α^{αq}`, `δ = (ε/M_1)^{1/(αq)}`.
    TsallisLowQ,
    /// `S_q`, `q > 1`: `q M_2 d_1 ≤ q M_2 d_α^α`, `δ = (ε/(q M_2))^{1/α}`.
    TsallisHighQ,
    /// `⟨C⟩_q`, `q > 1`: `δ = (ε/q)^{1/α}`.
    ExpectationHighQ,
    /// `⟨C⟩_q`, `q < 1`, `α ≤ q`: `δ = ε^{1/α}`.
    ExpectationLowQ,
    /// `R_q`, `q < 1`, `α ≤ q`, `N ≥ 3`: `δ = ((1 − q) ε)^{1/α}`.
    RenyiLowQ,
    /// Moved to a smaller exponent by [`downgrade_certificate`].
    Downgrade,
    /// Nonnegative combination by [`combine_certificates`].
    Combination,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub family: Family,
    /// `q`, or `κ` for the κ-entropy.
    pub parameter: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub n_min: usize,
    pub provenance: Provenance,
}

/// Which normalizer bound a [`BoundConstant`] covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFamily {
    /// `sup_{x≥2} 1/|1 − x^{1−1/q}|`, any admissible `q`.
    Incomplete,
    /// `sup_{x≥2} x^{1−q}/(x^{1−q} − 1)`, `q ∈ (0, 1)`.
    TsallisLow,
    /// `sup_{x≥2} 1/(1 − x^{1−q})`, `q > 1`.
    TsallisHigh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstant {
    pub value: f64,
    pub family: BoundFamily,
    pub q: f64,
}

impl BoundFamily {
    /// The bounded ratio at `x`.
    pub fn ratio(self, q: f64, x: f64) -> f64 {
        match self {
            BoundFamily::Incomplete => 1.0 / (1.0 - x.powf(1.0 - 1.0 / q)).abs(),
            BoundFamily::TsallisLow => {
                let t = x.powf(1.0 - q);
                t / (t - 1.0)
            }
            BoundFamily::TsallisHigh => 1.0 / (1.0 - x.powf(1.0 - q)),
        }
    }
}

/// Supremum of the family's ratio over `x ≥ 2`.
///
/// Each ratio is monotone decreasing in `x` on `[2, ∞)`, so the supremum
/// is its value at `x = 2`.
pub fn bound_constant(family: BoundFamily, q: f64) -> Result<BoundConstant> {
    let q = validate_q(q)?;
    match family {
        BoundFamily::TsallisLow if q >= 1.0 => {
            return Err(parameter(format!("tsallis_low requires q in (0, 1), got {q}")))
        }
        BoundFamily::TsallisHigh if q <= 1.0 => {
            return Err(parameter(format!("tsallis_high requires q > 1, got {q}")))
        }
        _ => {}
    }
    Ok(BoundConstant { value: family.ratio(q, 2.0), family, q })
}

fn check_epsilon(epsilon: f64) -> Result<f64> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(parameter(format!("epsilon must be finite and > 0, got {epsilon}")));
    }
    Ok(epsilon)
}

fn unsupported(msg: impl Into<String>) -> Error {
    Error::UnsupportedRegime(msg.into())
}

/// The δ of the direct (non-derived) stability bounds.
///
/// Covers Tsallis, incomplete entropy, Rényi and the incomplete
/// q-expectation; κ- and quantum-group certificates come from
/// [`certificate_for`]. `δ` is clamped to at most 1.
pub fn delta_for(family: Family, q: f64, alpha: f64, epsilon: f64) -> Result<StabilityCertificate> {
    let q = validate_q(q)?;
    let a = AlphaParam::new(alpha)?.get();
    let epsilon = check_epsilon(epsilon)?;

    let (delta, n_min, provenance) = match family {
        Family::Incomplete => {
            if a > 1.0 {
                return Err(unsupported(format!("incomplete entropy is certified only for alpha <= 1, got {a}")));
            }
            let m = bound_constant(BoundFamily::Incomplete, q)?.value;
            ((epsilon / m).powf(1.0 / a), 2, Provenance::IncompleteLinearBound)
        }
        Family::Tsallis => {
            if a > 1.0 {
                return Err(unsupported(format!("Tsallis entropy is certified only for alpha <= 1, got {a}")));
            }
            if q < 1.0 {
                let m1 = bound_constant(BoundFamily::TsallisLow, q)?.value;
                ((epsilon / m1).powf(1.0 / (a * q)), 2, Provenance::TsallisLowQ)
            } else {
                let m2 = bound_constant(BoundFamily::TsallisHigh, q)?.value;
                ((epsilon / (q * m2)).powf(1.0 / a), 2, Provenance::TsallisHighQ)
            }
        }
        Family::IncompleteExpectation => {
            if q > 1.0 {
                if a > 1.0 {
                    return Err(unsupported(format!(
                        "incomplete q-expectation with q > 1 is certified only for alpha <= 1, got {a}"
                    )));
                }
                ((epsilon / q).powf(1.0 / a), 2, Provenance::ExpectationHighQ)
            } else {
                if a > q {
                    return Err(unsupported(format!(
                        "incomplete q-expectation with q < 1 is certified only for alpha <= q = {q}, got {a}; \
                         it is 1-unstable (alternating-support witness)"
                    )));
                }
                (epsilon.powf(1.0 / a), 2, Provenance::ExpectationLowQ)
            }
        }
        Family::Renyi => {
            if q > 1.0 {
                return Err(unsupported(format!(
                    "Renyi entropy with q = {q} > 1 has no certificate; it is 1-unstable"
                )));
            }
            if a > q {
                return Err(unsupported(format!(
                    "Renyi entropy with q < 1 is certified only for alpha <= q = {q}, got {a}"
                )));
            }
            // |ΔR_q| / ln N = |Δ ln Σ p_i^q| / ((1 − q) ln N) and ln N > 1 for
            // N ≥ 3, so the ratio is below d_α^α / (1 − q).
            (((1.0 - q) * epsilon).powf(1.0 / a), 3, Provenance::RenyiLowQ)
        }
        Family::Kappa | Family::QuantumGroup => {
            return Err(parameter(format!(
                "{family} certificates are derived by decomposition; use certificate_for"
            )))
        }
    };
    Ok(StabilityCertificate {
        family,
        parameter: q,
        alpha: a,
        epsilon,
        delta: delta.min(1.0),
        n_min,
        provenance,
    })
}

/// Certificate for a smaller exponent `β ≤ α`: `δ_β = δ^{α/β}`.
pub fn downgrade_certificate(cert: &StabilityCertificate, beta: f64) -> Result<StabilityCertificate> {
    let beta = AlphaParam::new(beta)?.get();
    if beta > cert.alpha {
        return Err(parameter(format!(
            "certificates only move to smaller exponents: beta = {beta} > alpha = {}",
            cert.alpha
        )));
    }
    if !(cert.delta > 0.0 && cert.delta <= 1.0) {
        return Err(parameter(format!("certificate delta must lie in (0, 1], got {}", cert.delta)));
    }
    if beta == cert.alpha {
        return Ok(*cert);
    }
    Ok(StabilityCertificate {
        alpha: beta,
        delta: cert.delta.powf(cert.alpha / beta),
        provenance: Provenance::Downgrade,
        ..*cert
    })
}

/// Certificate for `λ C_1 + μ C_2` with `C_1, C_2 ≥ 0`: `δ = min(δ_1, δ_2)`.
///
/// The two tolerances must add up to at most `epsilon`. The family and
/// parameter of the result are those of `c1`; callers relabel.
pub fn combine_certificates(
    c1: &StabilityCertificate,
    c2: &StabilityCertificate,
    lambda: f64,
    mu: f64,
    epsilon: f64,
) -> Result<StabilityCertificate> {
    let epsilon = check_epsilon(epsilon)?;
    if !(lambda >= 0.0 && lambda.is_finite() && mu >= 0.0 && mu.is_finite()) {
        return Err(parameter(format!("weights must be finite and >= 0, got {lambda}, {mu}")));
    }
    if c1.alpha != c2.alpha {
        return Err(parameter(format!("mismatched exponents {} and {}", c1.alpha, c2.alpha)));
    }
    if c1.epsilon + c2.epsilon > epsilon * (1.0 + 1e-12) {
        return Err(parameter(format!(
            "component tolerances {} + {} exceed epsilon = {epsilon}",
            c1.epsilon, c2.epsilon
        )));
    }
    Ok(StabilityCertificate {
        epsilon,
        delta: c1.delta.min(c2.delta),
        n_min: c1.n_min.max(c2.n_min),
        provenance: Provenance::Combination,
        ..*c1
    })
}

/// Certificate for any functional in a proved regime.
///
/// κ-entropy: `S^κ = ½ S_{1+κ} + ½ S_{1−κ}`; quantum-group:
/// `S_q^{QG} = q/(q+1) S_q + 1/(q+1) S_{1/q}`. Both combine two Tsallis
/// certificates issued at `ε/2`.
pub fn certificate_for(f: &Functional, alpha: f64, epsilon: f64) -> Result<StabilityCertificate> {
    let epsilon = check_epsilon(epsilon)?;
    let (q1, q2, lambda, mu) = match *f {
        Functional::Kappa { kappa } => (1.0 + kappa, 1.0 - kappa, 0.5, 0.5),
        Functional::QuantumGroup { q } => (q, 1.0 / q, q / (q + 1.0), 1.0 / (q + 1.0)),
        _ => return delta_for(f.family(), f.parameter(), alpha, epsilon),
    };
    let c1 = delta_for(Family::Tsallis, q1, alpha, epsilon / 2.0)?;
    let c2 = delta_for(Family::Tsallis, q2, alpha, epsilon / 2.0)?;
    let combined = combine_certificates(&c1, &c2, lambda, mu, epsilon)?;
    Ok(StabilityCertificate { family: f.family(), parameter: f.parameter(), ..combined })
}

/// The four power-difference inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerBound {
    /// `α < 1`: `Σ|p_i^α − p'_i^α| ≤ d_α^α`.
    A,
    /// `α < 1`: `≤ N^{1−α} d_1^α`.
    B,
    /// `α > 1`: `≤ α d_1`.
    C,
    /// `α > 1`: `≤ α N^{1−1/α} d_α`.
    D,
}

impl PowerBound {
    pub const ALL: [PowerBound; 4] = [PowerBound::A, PowerBound::B, PowerBound::C, PowerBound::D];

    pub fn admits(self, alpha: f64) -> bool {
        match self {
            PowerBound::A | PowerBound::B => alpha < 1.0,
            PowerBound::C | PowerBound::D => alpha > 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PowerBound::A => "a",
            PowerBound::B => "b",
            PowerBound::C => "c",
            PowerBound::D => "d",
        }
    }
}

/// Left side `Σ|p_i^α − p2_i^α|` and right side of the chosen inequality.
pub fn lemma10_bounds(p: &[f64], p2: &[f64], alpha: f64, variant: PowerBound) -> Result<(f64, f64)> {
    ensure_same_len(p.len(), p2.len())?;
    let a = AlphaParam::new(alpha)?.get();
    if !variant.admits(a) {
        return Err(parameter(format!(
            "variant {} does not apply at alpha = {a}",
            variant.label()
        )));
    }
    if let Some(v) = p.iter().chain(p2).find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(parameter(format!("entries must lie in [0, 1], found {v}")));
    }
    let n = p.len() as f64;
    let lhs = compensated_sum(p.iter().zip(p2).map(|(&x, &y)| (pow_nonneg(x, a) - pow_nonneg(y, a)).abs()));
    let d1 = power_sum_unchecked(p, p2, 1.0);
    let rhs = match variant {
        PowerBound::A => power_sum_unchecked(p, p2, a),
        PowerBound::B => n.powf(1.0 - a) * pow_nonneg(d1, a),
        PowerBound::C => a * d1,
        PowerBound::D => a * n.powf(1.0 - 1.0 / a) * pow_nonneg(power_sum_unchecked(p, p2, a), 1.0 / a),
    };
    Ok((lhs, rhs))
}

/// Absolute slack allowed on `lhs ≤ rhs`.
pub const POWER_BOUND_SLACK: f64 = 1e-12;

/// Summary of a randomized run of one power-difference inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerBoundCheck {
    pub variant: PowerBound,
    pub alpha: f64,
    pub checks: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` over checks with `rhs > 0`.
    pub max_ratio: f64,
    /// Largest `lhs − rhs`.
    pub max_excess: f64,
}

fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| match rng.random_range(0..10) {
            0 | 1 => 0.0,
            2 => 1.0,
            _ => rng.random::<f64>(),
        })
        .collect()
}

/// Draws `trials` random pairs in `[0, 1]^N`, `1 ≤ N ≤ max_n`, and checks
/// the inequality on each. Pairs are independent, near-equal, or differ
/// by zeroed coordinates, in equal proportion.
pub fn check_power_bound(
    variant: PowerBound,
    alpha: f64,
    trials: usize,
    max_n: usize,
    seed: Seed,
) -> Result<PowerBoundCheck> {
    if !variant.admits(alpha) {
        return Err(parameter(format!("variant {} does not apply at alpha = {alpha}", variant.label())));
    }
    if max_n == 0 {
        return Err(parameter("max_n must be >= 1"));
    }
    let mut rng = seed.rng();
    let mut out = PowerBoundCheck { variant, alpha, checks: 0, violations: 0, max_ratio: 0.0, max_excess: f64::NEG_INFINITY };
    for _ in 0..trials {
        let n = rng.random_range(1..=max_n);
        let p = random_unit_vector(n, &mut rng);
        let p2 = match rng.random_range(0..3) {
            0 => random_unit_vector(n, &mut rng),
            1 => {
                let scale = 10f64.powf(-rng.random_range(1.0..12.0));
                p.iter().map(|&v| (v + scale * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0)).collect()
            }
            _ => p.iter().map(|&v| if rng.random_bool(0.5) { 0.0 } else { v }).collect(),
        };
        let (lhs, rhs) = lemma10_bounds(&p, &p2, alpha, variant)?;
        out.checks += 1;
        if lhs > rhs + POWER_BOUND_SLACK {
            out.violations += 1;
        }
        if rhs > 0.0 {
            out.max_ratio = out.max_ratio.max(lhs / rhs);
        }
        out.max_excess = out.max_excess.max(lhs - rhs);
    }
    Ok(out)
}

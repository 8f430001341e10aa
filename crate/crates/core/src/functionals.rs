//! The six functionals and their per-dimension maxima `C_{N,max}`.
//!
//! | family | domain | formula |
//! |---|---|---|
//! | Tsallis `S_q` | complete | `(1 − Σ p_i^q)/(q − 1)` |
//! | incomplete `S_q^I` | incomplete | `(1 − Σ p_i)/(1 − q)` |
//! | Rényi `R_q` | complete | `ln(Σ p_i^q)/(1 − q)` |
//! | κ-entropy `S^κ` | complete | `Σ (p_i^{1−κ} − p_i^{1+κ})/(2κ)` |
//! | quantum-group `S_q^{QG}` | complete | `Σ (p_i^{1/q} − p_i^q)/(q − 1/q)` |
//! | incomplete expectation `⟨C⟩_q` | incomplete | `Σ p_i^q C_i` |

use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_same_len, parameter, Error, Result};
use crate::numeric::{compensated_sum, pow_nonneg};
use crate::simplex::{
    uniform_complete, uniform_incomplete, validate_q, CompleteDistribution, Distribution,
    DistributionKind, IncompleteDistribution,
};

/// Family tag shared by functionals and certificates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Tsallis,
    Incomplete,
    Renyi,
    Kappa,
    QuantumGroup,
    IncompleteExpectation,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Tsallis => "tsallis",
            Family::Incomplete => "incomplete",
            Family::Renyi => "renyi",
            Family::Kappa => "kappa",
            Family::QuantumGroup => "quantum_group",
            Family::IncompleteExpectation => "incomplete_expectation",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A functional with validated parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FunctionalDescriptor", into = "FunctionalDescriptor")]
pub enum Functional {
    Tsallis { q: f64 },
    Incomplete { q: f64 },
    Renyi { q: f64 },
    Kappa { kappa: f64 },
    QuantumGroup { q: f64 },
    IncompleteExpectation { q: f64, observable: Vec<f64> },
}

fn validate_kappa(kappa: f64) -> Result<f64> {
    if !kappa.is_finite() || kappa.abs() >= 1.0 {
        return Err(parameter(format!("kappa must lie in (-1, 1), got {kappa}")));
    }
    if kappa == 0.0 {
        return Err(parameter("kappa = 0 (Shannon limit) is excluded"));
    }
    Ok(kappa)
}

impl Functional {
    pub fn tsallis(q: f64) -> Result<Self> {
        Ok(Functional::Tsallis { q: validate_q(q)? })
    }

    pub fn incomplete(q: f64) -> Result<Self> {
        Ok(Functional::Incomplete { q: validate_q(q)? })
    }

    pub fn renyi(q: f64) -> Result<Self> {
        Ok(Functional::Renyi { q: validate_q(q)? })
    }

    pub fn kappa(kappa: f64) -> Result<Self> {
        Ok(Functional::Kappa { kappa: validate_kappa(kappa)? })
    }

    pub fn quantum_group(q: f64) -> Result<Self> {
        Ok(Functional::QuantumGroup { q: validate_q(q)? })
    }

    pub fn incomplete_expectation(q: f64, observable: Vec<f64>) -> Result<Self> {
        let q = validate_q(q)?;
        if observable.iter().any(|c| !c.is_finite()) {
            return Err(parameter("observable entries must be finite"));
        }
        if observable.iter().all(|&c| c == 0.0) {
            return Err(parameter("observable must have at least one nonzero entry"));
        }
        Ok(Functional::IncompleteExpectation { q, observable })
    }

    pub fn family(&self) -> Family {
        match self {
            Functional::Tsallis { .. } => Family::Tsallis,
            Functional::Incomplete { .. } => Family::Incomplete,
            Functional::Renyi { .. } => Family::Renyi,
            Functional::Kappa { .. } => Family::Kappa,
            Functional::QuantumGroup { .. } => Family::QuantumGroup,
            Functional::IncompleteExpectation { .. } => Family::IncompleteExpectation,
        }
    }

    /// The deformation parameter (`κ` for the κ-entropy).
    pub fn parameter(&self) -> f64 {
        match *self {
            Functional::Tsallis { q }
            | Functional::Incomplete { q }
            | Functional::Renyi { q }
            | Functional::QuantumGroup { q }
            | Functional::IncompleteExpectation { q, .. } => q,
            Functional::Kappa { kappa } => kappa,
        }
    }

    pub fn observable(&self) -> Option<&[f64]> {
        match self {
            Functional::IncompleteExpectation { observable, .. } => Some(observable),
            _ => None,
        }
    }

    /// Constraint set the functional is defined on.
    pub fn domain(&self) -> DistributionKind {
        match *self {
            Functional::Incomplete { q } | Functional::IncompleteExpectation { q, .. } => {
                DistributionKind::Incomplete { q }
            }
            _ => DistributionKind::Complete,
        }
    }

    /// Smallest dimension at which the functional is defined.
    pub fn min_dimension(&self) -> usize {
        self.observable().map_or(1, <[f64]>::len)
    }

    pub fn evaluate(&self, p: &Distribution) -> Result<f64> {
        match (self, p) {
            (Functional::Tsallis { q }, Distribution::Complete(d)) => tsallis_entropy(d, *q),
            (Functional::Renyi { q }, Distribution::Complete(d)) => renyi_entropy(d, *q),
            (Functional::Kappa { kappa }, Distribution::Complete(d)) => kappa_entropy(d, *kappa),
            (Functional::QuantumGroup { q }, Distribution::Complete(d)) => quantum_group_entropy(d, *q),
            (Functional::Incomplete { q }, Distribution::Incomplete(d)) => incomplete_entropy(d, *q),
            (Functional::IncompleteExpectation { q, observable }, Distribution::Incomplete(d)) => {
                incomplete_q_expectation(d, *q, observable)
            }
            (f, p) => Err(domain(format!(
                "{} is not defined on {} distributions",
                f.family(),
                match p {
                    Distribution::Complete(_) => "complete",
                    Distribution::Incomplete(_) => "incomplete",
                }
            ))),
        }
    }
}

/// JSON shape of a functional: `{"variant", "q", "kappa", "observable"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionalDescriptor {
    pub variant: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<Vec<f64>>,
}

impl TryFrom<FunctionalDescriptor> for Functional {
    type Error = Error;

    fn try_from(d: FunctionalDescriptor) -> Result<Self> {
        let need_q = || d.q.ok_or_else(|| parameter(format!("{} requires q", d.variant)));
        match d.variant {
            Family::Tsallis => Functional::tsallis(need_q()?),
            Family::Incomplete => Functional::incomplete(need_q()?),
            Family::Renyi => Functional::renyi(need_q()?),
            Family::QuantumGroup => Functional::quantum_group(need_q()?),
            Family::Kappa => Functional::kappa(d.kappa.ok_or_else(|| parameter("kappa requires kappa"))?),
            Family::IncompleteExpectation => Functional::incomplete_expectation(
                need_q()?,
                d.observable.clone().ok_or_else(|| parameter("incomplete_expectation requires observable"))?,
            ),
        }
    }
}

impl From<Functional> for FunctionalDescriptor {
    fn from(f: Functional) -> Self {
        let variant = f.family();
        match f {
            Functional::Kappa { kappa } => {
                FunctionalDescriptor { variant, q: None, kappa: Some(kappa), observable: None }
            }
            Functional::IncompleteExpectation { q, observable } => {
                FunctionalDescriptor { variant, q: Some(q), kappa: None, observable: Some(observable) }
            }
            other => FunctionalDescriptor { variant, q: Some(other.parameter()), kappa: None, observable: None },
        }
    }
}

fn power_total(p: &[f64], q: f64) -> f64 {
    compensated_sum(p.iter().map(|&v| pow_nonneg(v, q)))
}

fn check_matching_q(p: &IncompleteDistribution, q: f64) -> Result<f64> {
    let q = validate_q(q)?;
    if p.q() != q {
        return Err(parameter(format!("distribution carries q = {}, functional uses q = {q}", p.q())));
    }
    Ok(q)
}

pub fn tsallis_entropy(p: &CompleteDistribution, q: f64) -> Result<f64> {
    let q = validate_q(q)?;
    Ok((1.0 - power_total(p.as_slice(), q)) / (q - 1.0))
}

pub fn incomplete_entropy(p: &IncompleteDistribution, q: f64) -> Result<f64> {
    let q = check_matching_q(p, q)?;
    Ok((1.0 - compensated_sum(p.as_slice().iter().copied())) / (1.0 - q))
}

pub fn renyi_entropy(p: &CompleteDistribution, q: f64) -> Result<f64> {
    let q = validate_q(q)?;
    let s = power_total(p.as_slice(), q);
    if !(s > 0.0) {
        return Err(domain("power sum vanishes"));
    }
    Ok(s.ln() / (1.0 - q))
}

/// Uses `p^{1−κ} − p^{1+κ}` so that zero coordinates contribute zero.
pub fn kappa_entropy(p: &CompleteDistribution, kappa: f64) -> Result<f64> {
    let kappa = validate_kappa(kappa)?;
    let lo = power_total(p.as_slice(), 1.0 - kappa);
    let hi = power_total(p.as_slice(), 1.0 + kappa);
    Ok((lo - hi) / (2.0 * kappa))
}

pub fn quantum_group_entropy(p: &CompleteDistribution, q: f64) -> Result<f64> {
    let q = validate_q(q)?;
    let direct = power_total(p.as_slice(), q);
    let inverse = power_total(p.as_slice(), 1.0 / q);
    Ok((inverse - direct) / (q - 1.0 / q))
}

pub fn incomplete_q_expectation(p: &IncompleteDistribution, q: f64, observable: &[f64]) -> Result<f64> {
    ensure_same_len(p.len(), observable.len())?;
    let q = check_matching_q(p, q)?;
    Ok(compensated_sum(p.as_slice().iter().zip(observable).map(|(&v, &c)| pow_nonneg(v, q) * c)))
}

/// How a maximum was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxProvenance {
    /// Closed form at a known maximizer.
    Analytic,
    /// Evaluated at the uniform distribution; maximality checked by search.
    Oracle,
}

/// `C_{N,max}` together with a point attaining it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxValue {
    pub value: f64,
    pub achieved_at: Distribution,
    pub provenance: MaxProvenance,
}

/// Supremum of `|f|` over the dimension-`n` slice of the domain.
pub fn functional_max(f: &Functional, n: usize) -> Result<MaxValue> {
    if n == 0 {
        return Err(parameter("N must be >= 1"));
    }
    let nf = n as f64;
    let (value, achieved_at, provenance) = match f {
        Functional::Tsallis { q } => {
            let value = (1.0 - nf.powf(1.0 - q)).abs() / (1.0 - q).abs();
            (value, Distribution::Complete(uniform_complete(n)?), MaxProvenance::Analytic)
        }
        Functional::Renyi { .. } => {
            if n == 1 {
                return Err(domain("Renyi maximum vanishes at N = 1"));
            }
            (nf.ln(), Distribution::Complete(uniform_complete(n)?), MaxProvenance::Analytic)
        }
        Functional::Incomplete { q } => {
            // Σ p_i at the incomplete uniform point is N · N^{-1/q} = N^{1 - 1/q}.
            let value = (1.0 - nf.powf(1.0 - 1.0 / q)).abs() / (1.0 - q).abs();
            (value, Distribution::Incomplete(uniform_incomplete(n, *q)?), MaxProvenance::Analytic)
        }
        Functional::Kappa { .. } | Functional::QuantumGroup { .. } => {
            let u = Distribution::Complete(uniform_complete(n)?);
            (f.evaluate(&u)?.abs(), u, MaxProvenance::Oracle)
        }
        Functional::IncompleteExpectation { q, observable } => {
            ensure_same_len(observable.len(), n)?;
            // The weights p_i^q are a convex combination, so the supremum of
            // |Σ p_i^q C_i| is attained at a vertex.
            let (idx, &c) = observable
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .expect("nonempty observable");
            let vertex = IncompleteDistribution::vertex(n, idx, *q)?;
            (c.abs(), Distribution::Incomplete(vertex), MaxProvenance::Analytic)
        }
    };
    Ok(MaxValue { value, achieved_at, provenance })
}

/// Shannon entropy `−Σ p ln p`. Reference for the `q → 1` limits only.
pub fn shannon_entropy(p: &CompleteDistribution) -> f64 {
    -compensated_sum(p.as_slice().iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()))
}

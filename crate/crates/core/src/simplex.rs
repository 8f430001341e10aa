//! Complete (`Σ p_i = 1`) and incomplete (`Σ p_i^q = 1`) distributions:
//! construction, validation, seeded sampling and budgeted perturbation.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, parameter, Result};
use crate::metric::{distance_unchecked, AlphaParam};
use crate::numeric::{compensated_sum, pow_nonneg};

/// Tolerance on the normalization constraint when validating input.
pub const CONSTRAINT_TOL: f64 = 1e-9;

/// Seed for every randomized operation. Same seed, same output.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

impl Seed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent stream `index` of this seed. Used for per-trial
    /// generators so results do not depend on scheduling.
    pub fn stream(self, index: u64) -> ChaCha8Rng {
        let mut rng = self.rng();
        rng.set_stream(index);
        rng
    }

    /// A new seed mixed from this one and `tag` (splitmix64 finalizer).
    pub fn derive(self, tag: u64) -> Seed {
        let mut z = self.0 ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Seed(z ^ (z >> 31))
    }
}

/// Validates a deformation parameter: finite, `> 0` and `≠ 1`.
pub fn validate_q(q: f64) -> Result<f64> {
    if !q.is_finite() || q <= 0.0 {
        return Err(parameter(format!("q must be finite and > 0, got {q}")));
    }
    if q == 1.0 {
        return Err(parameter("q = 1 is excluded"));
    }
    Ok(q)
}

/// Nonnegative finite weights, at least one entry.
#[derive(Debug, Clone, PartialEq)]
pub struct RawWeights(Vec<f64>);

impl RawWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(domain("weights must have at least one entry"));
        }
        if let Some((i, v)) = w.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(domain(format!("weight {i} is {v}; weights must be finite and >= 0")));
        }
        Ok(RawWeights(w))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn check_entries(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(domain("distribution must have at least one entry"));
    }
    for (i, &v) in p.iter().enumerate() {
        if !v.is_finite() || !(0.0..=1.0 + CONSTRAINT_TOL).contains(&v) {
            return Err(domain(format!("entry {i} is {v}; entries must lie in [0, 1]")));
        }
    }
    Ok(())
}

/// Probability vector with `Σ p_i = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompleteDistribution {
    p: Vec<f64>,
}

impl CompleteDistribution {
    /// Validates `p` against the constraint set (tolerance [`CONSTRAINT_TOL`]).
    pub fn new(p: Vec<f64>) -> Result<Self> {
        check_entries(&p)?;
        let s = compensated_sum(p.iter().copied());
        if (s - 1.0).abs() > CONSTRAINT_TOL {
            return Err(domain(format!("entries sum to {s}, expected 1")));
        }
        Ok(CompleteDistribution { p })
    }

    /// The point mass on coordinate `i`.
    pub fn vertex(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(parameter(format!("vertex index {i} out of range for N = {n}")));
        }
        let mut p = vec![0.0; n];
        p[i] = 1.0;
        Ok(CompleteDistribution { p })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.p
    }

    /// Divides by the sum after clipping negatives; `None` if nothing is left.
    pub(crate) fn project(raw: Vec<f64>) -> Option<Self> {
        let mut p = raw;
        for v in p.iter_mut() {
            if !(*v > 0.0) {
                *v = 0.0;
            }
        }
        let s = compensated_sum(p.iter().copied());
        if !(s > 0.0) || !s.is_finite() {
            return None;
        }
        for v in p.iter_mut() {
            *v = (*v / s).min(1.0);
        }
        Some(CompleteDistribution { p })
    }
}

/// Vector with `Σ p_i^q = 1`, carrying its `q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncompleteDistribution {
    p: Vec<f64>,
    q: f64,
}

impl IncompleteDistribution {
    pub fn new(p: Vec<f64>, q: f64) -> Result<Self> {
        let q = validate_q(q)?;
        check_entries(&p)?;
        let s = compensated_sum(p.iter().map(|&v| pow_nonneg(v, q)));
        if (s - 1.0).abs() > CONSTRAINT_TOL {
            return Err(domain(format!("q-powers sum to {s}, expected 1")));
        }
        Ok(IncompleteDistribution { p, q })
    }

    pub fn vertex(n: usize, i: usize, q: f64) -> Result<Self> {
        let q = validate_q(q)?;
        let p = CompleteDistribution::vertex(n, i)?.p;
        Ok(IncompleteDistribution { p, q })
    }

    /// Maps a complete distribution `w` to `p_i = w_i^{1/q}`, which has
    /// `Σ p_i^q = Σ w_i = 1`.
    pub fn from_escort(w: &CompleteDistribution, q: f64) -> Result<Self> {
        let q = validate_q(q)?;
        let inv = 1.0 / q;
        let p = w.p.iter().map(|&v| pow_nonneg(v, inv)).collect();
        Ok(IncompleteDistribution { p, q })
    }

    /// The weights `p_i^q`, a complete distribution.
    pub fn escort(&self) -> Vec<f64> {
        self.p.iter().map(|&v| pow_nonneg(v, self.q)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.p
    }

    fn project(raw: Vec<f64>, q: f64) -> Option<Self> {
        let mut p = raw;
        for v in p.iter_mut() {
            if !(*v > 0.0) {
                *v = 0.0;
            }
        }
        let s = compensated_sum(p.iter().map(|&v| pow_nonneg(v, q)));
        if !(s > 0.0) || !s.is_finite() {
            return None;
        }
        let scale = pow_nonneg(s, 1.0 / q);
        for v in p.iter_mut() {
            *v = (*v / scale).min(1.0);
        }
        Some(IncompleteDistribution { p, q })
    }
}

/// Which constraint set a distribution lives in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionKind {
    Complete,
    Incomplete { q: f64 },
}

impl DistributionKind {
    pub fn validate(self) -> Result<Self> {
        if let DistributionKind::Incomplete { q } = self {
            validate_q(q)?;
        }
        Ok(self)
    }

    pub fn uniform(self, n: usize) -> Result<Distribution> {
        match self {
            DistributionKind::Complete => uniform_complete(n).map(Distribution::Complete),
            DistributionKind::Incomplete { q } => uniform_incomplete(n, q).map(Distribution::Incomplete),
        }
    }

    pub fn vertex(self, n: usize, i: usize) -> Result<Distribution> {
        match self {
            DistributionKind::Complete => CompleteDistribution::vertex(n, i).map(Distribution::Complete),
            DistributionKind::Incomplete { q } => {
                IncompleteDistribution::vertex(n, i, q).map(Distribution::Incomplete)
            }
        }
    }

    /// Lifts a complete weight vector `w` into this set: identity for
    /// complete, `w_i^{1/q}` for incomplete.
    pub fn from_weights(self, w: CompleteDistribution) -> Result<Distribution> {
        match self {
            DistributionKind::Complete => Ok(Distribution::Complete(w)),
            DistributionKind::Incomplete { q } => {
                IncompleteDistribution::from_escort(&w, q).map(Distribution::Incomplete)
            }
        }
    }
}

/// A member of either constraint set.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Distribution {
    Complete(CompleteDistribution),
    Incomplete(IncompleteDistribution),
}

impl Distribution {
    pub fn as_slice(&self) -> &[f64] {
        match self {
            Distribution::Complete(d) => d.as_slice(),
            Distribution::Incomplete(d) => d.as_slice(),
        }
    }

    pub fn len(&self) -> usize {
        self.as_slice().len()
    }

    pub fn is_empty(&self) -> bool {
        self.as_slice().is_empty()
    }

    pub fn kind(&self) -> DistributionKind {
        match self {
            Distribution::Complete(_) => DistributionKind::Complete,
            Distribution::Incomplete(d) => DistributionKind::Incomplete { q: d.q },
        }
    }

    /// Deviation of the defining sum from 1.
    pub fn constraint_residual(&self) -> f64 {
        match self {
            Distribution::Complete(d) => compensated_sum(d.p.iter().copied()) - 1.0,
            Distribution::Incomplete(d) => {
                compensated_sum(d.p.iter().map(|&v| pow_nonneg(v, d.q))) - 1.0
            }
        }
    }
}

/// Sets that can be re-entered after an unconstrained step.
pub trait Constrained: Clone {
    fn values(&self) -> &[f64];

    /// Maps a raw vector of the same length back onto the set this value
    /// belongs to, or `None` if the raw vector has no admissible image.
    fn reproject(&self, raw: Vec<f64>) -> Option<Self>;

    /// Whether steps should preserve `Σ p_i` before projection.
    fn mass_preserving(&self) -> bool;
}

impl Constrained for CompleteDistribution {
    fn values(&self) -> &[f64] {
        &self.p
    }
    fn reproject(&self, raw: Vec<f64>) -> Option<Self> {
        CompleteDistribution::project(raw)
    }
    fn mass_preserving(&self) -> bool {
        true
    }
}

impl Constrained for IncompleteDistribution {
    fn values(&self) -> &[f64] {
        &self.p
    }
    fn reproject(&self, raw: Vec<f64>) -> Option<Self> {
        IncompleteDistribution::project(raw, self.q)
    }
    fn mass_preserving(&self) -> bool {
        false
    }
}

impl Constrained for Distribution {
    fn values(&self) -> &[f64] {
        self.as_slice()
    }
    fn reproject(&self, raw: Vec<f64>) -> Option<Self> {
        match self {
            Distribution::Complete(d) => d.reproject(raw).map(Distribution::Complete),
            Distribution::Incomplete(d) => d.reproject(raw).map(Distribution::Incomplete),
        }
    }
    fn mass_preserving(&self) -> bool {
        matches!(self, Distribution::Complete(_))
    }
}

/// `p_i = w_i / Σ w_j`.
pub fn normalize_complete(w: &RawWeights) -> Result<CompleteDistribution> {
    let s = compensated_sum(w.0.iter().copied());
    if !(s > 0.0) {
        return Err(domain("weights sum to zero"));
    }
    Ok(CompleteDistribution { p: w.0.iter().map(|&v| (v / s).min(1.0)).collect() })
}

/// `p_i = w_i / (Σ w_j^q)^{1/q}`.
pub fn normalize_incomplete(w: &RawWeights, q: f64) -> Result<IncompleteDistribution> {
    let q = validate_q(q)?;
    IncompleteDistribution::project(w.0.clone(), q).ok_or_else(|| domain("weights sum to zero"))
}

pub fn uniform_complete(n: usize) -> Result<CompleteDistribution> {
    if n == 0 {
        return Err(parameter("N must be >= 1"));
    }
    Ok(CompleteDistribution { p: vec![1.0 / n as f64; n] })
}

/// All entries `(1/N)^{1/q}`.
pub fn uniform_incomplete(n: usize, q: f64) -> Result<IncompleteDistribution> {
    let q = validate_q(q)?;
    if n == 0 {
        return Err(parameter("N must be >= 1"));
    }
    let v = (1.0 / n as f64).powf(1.0 / q);
    Ok(IncompleteDistribution { p: vec![v; n], q })
}

/// Uniform point of the simplex via normalized exponential spacings.
pub fn sample_complete_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CompleteDistribution> {
    if n == 0 {
        return Err(parameter("N must be >= 1"));
    }
    let e: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    CompleteDistribution::project(e).ok_or_else(|| domain("degenerate exponential draw"))
}

/// A uniform simplex point supported on a random subset whose size is
/// log-uniform in `[1, N]`.
pub fn sample_sparse_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CompleteDistribution> {
    if n == 0 {
        return Err(parameter("N must be >= 1"));
    }
    let k = log_uniform_size(1, n, rng);
    let support = index::sample(rng, n, k);
    let mut w = vec![0.0; n];
    for i in support.iter() {
        w[i] = rng.sample::<f64, _>(Exp1);
    }
    CompleteDistribution::project(w).ok_or_else(|| domain("degenerate exponential draw"))
}

pub fn sample_kind_with<R: Rng + ?Sized>(
    kind: DistributionKind,
    n: usize,
    rng: &mut R,
) -> Result<Distribution> {
    let kind = kind.validate()?;
    kind.from_weights(sample_complete_with(n, rng)?)
}

/// Seeded sample from the complete simplex, or its image under the power
/// map `w ↦ w^{1/q}` for the incomplete kind.
pub fn sample_distribution(kind: DistributionKind, n: usize, seed: Seed) -> Result<Distribution> {
    sample_kind_with(kind, n, &mut seed.rng())
}

pub(crate) fn log_uniform_size<R: Rng + ?Sized>(lo: usize, hi: usize, rng: &mut R) -> usize {
    if hi <= lo {
        return lo;
    }
    let u: f64 = rng.random();
    let k = ((lo as f64).ln() + u * ((hi as f64 + 1.0).ln() - (lo as f64).ln())).exp().floor() as usize;
    k.clamp(lo, hi)
}

/// Random step direction for `p`: Gaussian on a random support of
/// log-uniform size, centered when the set preserves mass.
pub fn random_direction<D: Constrained, R: Rng + ?Sized>(p: &D, rng: &mut R) -> Vec<f64> {
    let n = p.values().len();
    let mut dir = vec![0.0; n];
    if n < 2 {
        return dir;
    }
    let k = log_uniform_size(2, n, rng);
    let support = index::sample(rng, n, k).into_vec();
    for &i in &support {
        dir[i] = rng.sample(StandardNormal);
    }
    if p.mass_preserving() {
        let mean = compensated_sum(support.iter().map(|&i| dir[i])) / k as f64;
        for &i in &support {
            dir[i] -= mean;
        }
    }
    dir
}

const MAX_HALVINGS: usize = 80;
const REFINE_STEPS: usize = 10;

/// Moves `p` along `dir` and re-projects, choosing the step length by
/// halving then bisection so that `d_α(p, p') ≤ delta`.
pub fn perturb_along<D: Constrained>(p: &D, dir: &[f64], delta: f64, alpha: AlphaParam) -> D {
    let a = alpha.get();
    let x = p.values();
    if !(delta > 0.0) || dir.len() != x.len() {
        return p.clone();
    }
    let norm = distance_unchecked(dir, &vec![0.0; dir.len()], a);
    if !(norm > 0.0) || !norm.is_finite() {
        return p.clone();
    }
    let attempt = |t: f64| -> Option<D> {
        let raw = x.iter().zip(dir).map(|(v, d)| v + t * d).collect();
        let cand = p.reproject(raw)?;
        (distance_unchecked(x, cand.values(), a) <= delta).then_some(cand)
    };

    let mut t = delta / norm;
    let mut t_fail = None;
    let mut found = None;
    for _ in 0..MAX_HALVINGS {
        if let Some(c) = attempt(t) {
            found = Some(c);
            break;
        }
        t_fail = Some(t);
        t *= 0.5;
    }
    let Some(mut best) = found else {
        return p.clone();
    };
    if let Some(mut hi) = t_fail {
        let mut lo = t;
        for _ in 0..REFINE_STEPS {
            let mid = 0.5 * (lo + hi);
            match attempt(mid) {
                Some(c) => {
                    best = c;
                    lo = mid;
                }
                None => hi = mid,
            }
        }
    }
    best
}

/// Random `p'` in the same constraint set as `p` with `d_α(p, p') ≤ delta`.
pub fn perturb_within<D: Constrained>(p: &D, delta: f64, alpha: AlphaParam, seed: Seed) -> D {
    perturb_with(p, delta, alpha, &mut seed.rng())
}

pub fn perturb_with<D: Constrained, R: Rng + ?Sized>(
    p: &D,
    delta: f64,
    alpha: AlphaParam,
    rng: &mut R,
) -> D {
    debug_assert!(delta >= 0.0, "negative perturbation budget");
    let dir = random_direction(p, rng);
    perturb_along(p, &dir, delta, alpha)
}

//! Instability witnesses and the probe estimating the stability modulus
//! `sup { |C(p) − C(p')| / C_{N,max} : d_α(p, p') ≤ δ }` from below.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::StabilityCertificate;
use crate::error::{domain, ensure_same_len, parameter, Error, Result};
use crate::functionals::{functional_max, Family, Functional};
use crate::metric::{distance_unchecked, AlphaParam};
use crate::simplex::{
    log_uniform_size, perturb_along, random_direction, sample_kind_with, sample_sparse_with,
    uniform_complete, validate_q, CompleteDistribution, Distribution, DistributionKind,
    IncompleteDistribution, Seed,
};

/// Largest dimension a witness is materialized at (32 MiB per vector).
pub const MAX_WITNESS_DIM: u64 = 1 << 22;

/// Budgets `δ, δ/2, δ/4, δ/8` are tried for every search trial.
const LADDER: usize = 4;
const BISECTION_STEPS: usize = 30;

/// A pair of distributions and its normalized deviation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessPair {
    pub p: Distribution,
    pub p2: Distribution,
    pub observable: Option<Vec<f64>>,
    pub n: usize,
    /// Exponent under which `achieved_distance` is measured.
    pub alpha: f64,
    pub achieved_distance: f64,
    pub ratio: f64,
    /// Construction metadata (budget, parameters, alternative ratios).
    pub extra: BTreeMap<String, f64>,
}

impl WitnessPair {
    /// Measures `(p, p2)` under `f` and `d_α`.
    pub fn measure(f: &Functional, p: Distribution, p2: Distribution, alpha: AlphaParam) -> Result<Self> {
        let achieved_distance = crate::metric::alpha_distance(p.as_slice(), p2.as_slice(), alpha)?;
        let ratio = stability_ratio(f, &p, &p2)?;
        Ok(WitnessPair {
            n: p.len(),
            p,
            p2,
            observable: f.observable().map(<[f64]>::to_vec),
            alpha: alpha.get(),
            achieved_distance,
            ratio,
            extra: BTreeMap::new(),
        })
    }

    /// Checks both constraint sets and that the stored distance and ratio
    /// agree with a fresh evaluation within `tol`.
    pub fn is_consistent(&self, f: &Functional, tol: f64) -> Result<bool> {
        let alpha = AlphaParam::new(self.alpha)?;
        let fresh = WitnessPair::measure(f, self.p.clone(), self.p2.clone(), alpha)?;
        let on_set = |d: &Distribution| d.constraint_residual().abs() <= crate::simplex::CONSTRAINT_TOL;
        Ok(on_set(&self.p)
            && on_set(&self.p2)
            && (fresh.achieved_distance - self.achieved_distance).abs() <= tol
            && (fresh.ratio - self.ratio).abs() <= tol)
    }
}

/// `|f(p) − f(p2)| / f_{N,max}`.
pub fn stability_ratio(f: &Functional, p: &Distribution, p2: &Distribution) -> Result<f64> {
    ensure_same_len(p.len(), p2.len())?;
    let max = functional_max(f, p.len())?.value;
    if !(max > 0.0) {
        return Err(domain(format!("{} has zero maximum at N = {}", f.family(), p.len())));
    }
    Ok((f.evaluate(p)? - f.evaluate(p2)?).abs() / max)
}

/// The alternating-support pair showing the incomplete q-expectation is
/// 1-unstable for `q ∈ (0, 1)`.
///
/// With `W = ⌊(2/δ)^{q/(1−q)}⌋ + 1` and `N = 2W`, `p` puts `W^{−1/q}` on
/// odd coordinates (1-based), `p'` on even ones, and `C` is the indicator
/// of odd coordinates. Then `Σ p^q = Σ p'^q = 1`, `d_1(p, p') = 2W^{1−1/q} < δ`,
/// `⟨C⟩_q(p) = 1`, `⟨C⟩_q(p') = 0`, and the ratio is 1.
pub fn alternating_support_witness(q: f64, delta: f64) -> Result<WitnessPair> {
    alternating_support_witness_alpha(q, AlphaParam::ONE, delta)
}

/// The same construction under `d_α` for `q < α ≤ 1`: `d_α^α = 2W^{1−α/q}`,
/// which vanishes as `W → ∞`, so `W = ⌊(2/δ^α)^{q/(α−q)}⌋ + 1` suffices.
pub fn alternating_support_witness_alpha(q: f64, alpha: AlphaParam, delta: f64) -> Result<WitnessPair> {
    let q = validate_q(q)?;
    if q >= 1.0 {
        return Err(parameter(format!("the alternating-support witness needs q in (0, 1), got {q}")));
    }
    let a = alpha.get();
    if a <= q || a > 1.0 {
        return Err(parameter(format!("alpha must lie in (q, 1] = ({q}, 1], got {a}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(parameter(format!("delta must be finite and > 0, got {delta}")));
    }

    let target = delta.powf(a);
    let spread = |w: f64| 2.0 * w.powf(1.0 - a / q);
    let mut w = ((2.0 / target).powf(q / (a - q))).floor() + 1.0;
    while spread(w) >= target {
        w += 1.0;
    }
    let n_total = 2.0 * w;
    if !n_total.is_finite() || n_total > MAX_WITNESS_DIM as f64 {
        return Err(Error::TooLarge { n: n_total.min(u64::MAX as f64) as u64, limit: MAX_WITNESS_DIM });
    }
    let w_count = w as usize;
    let n = 2 * w_count;
    let mass = w.powf(-1.0 / q);

    // Index 0 is the first (odd, 1-based) coordinate.
    let odd: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { mass } else { 0.0 }).collect();
    let even: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 0.0 } else { mass }).collect();
    let observable: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();

    let f = Functional::incomplete_expectation(q, observable)?;
    let p = Distribution::Incomplete(IncompleteDistribution::new(odd, q)?);
    let p2 = Distribution::Incomplete(IncompleteDistribution::new(even, q)?);
    let mut pair = WitnessPair::measure(&f, p, p2, alpha)?;
    pair.extra.insert("q".into(), q);
    pair.extra.insert("delta".into(), delta);
    pair.extra.insert("W".into(), w);
    pair.extra.insert("epsilon".into(), 0.5);
    // Normalizing by Σ p_i = W^{1−1/q} instead of the supremum max|C_i| = 1.
    pair.extra.insert("linear_sum_normalizer_ratio".into(), w.powf(1.0 / q - 1.0));
    Ok(pair)
}

/// Two-point family exhibiting large Rényi deviations at small `d_1`.
///
/// `q < 1`: `p = e_1`, `p' = (1 − δ/2) e_1 + δ/(2(N−1))` elsewhere.
/// `q > 1`: `p` uniform, `p' = (1 − δ/2) p + (δ/2) e_1`.
/// In both cases `d_1(p, p') ≤ δ`.
pub fn renyi_instability_witness(q: f64, delta: f64, n: usize) -> Result<WitnessPair> {
    let q = validate_q(q)?;
    if n < 3 {
        return Err(parameter(format!("N must be >= 3, got {n}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(parameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    let half = delta / 2.0;
    let (p, p2) = if q < 1.0 {
        let p = CompleteDistribution::vertex(n, 0)?;
        let mut v = vec![half / (n - 1) as f64; n];
        v[0] = 1.0 - half;
        (p, CompleteDistribution::new(v)?)
    } else {
        let p = uniform_complete(n)?;
        let u = 1.0 / n as f64;
        let mut v = vec![(1.0 - half) * u; n];
        v[0] += half;
        (p, CompleteDistribution::new(v)?)
    };
    let f = Functional::renyi(q)?;
    let mut pair =
        WitnessPair::measure(&f, Distribution::Complete(p), Distribution::Complete(p2), AlphaParam::ONE)?;
    pair.extra.insert("q".into(), q);
    pair.extra.insert("delta".into(), delta);
    Ok(pair)
}

/// Search strategy of [`probe`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Sampled base points moved along random directions.
    Random,
    /// Largest feasible mass transfers between one coordinate and many.
    Greedy,
    /// Interpolations toward fixed analytic targets.
    Structured,
    All,
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Strategy::Random),
            "greedy" => Ok(Strategy::Greedy),
            "structured" => Ok(Strategy::Structured),
            "all" => Ok(Strategy::All),
            other => Err(parameter(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub best: WitnessPair,
    /// Number of pairs evaluated.
    pub trials: usize,
    pub strategy: Strategy,
    pub seed: Seed,
    pub delta: f64,
}

impl Functional {
    /// The functional at dimension `n`. Only the incomplete q-expectation
    /// depends on `n`: its observable is repeated cyclically to length `n`.
    pub fn at_dimension(&self, n: usize) -> Result<Functional> {
        match self {
            Functional::IncompleteExpectation { q, observable } if observable.len() != n => {
                let c: Vec<f64> = observable.iter().copied().cycle().take(n).collect();
                Functional::incomplete_expectation(*q, c)
            }
            other => Ok(other.clone()),
        }
    }
}

/// A scored candidate. Ordered by ratio, ties going to the lower index.
struct Candidate {
    ratio: f64,
    index: usize,
    p: Distribution,
    p2: Distribution,
}

fn better(a: Candidate, b: Candidate) -> Candidate {
    match a.ratio.total_cmp(&b.ratio) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            if a.index <= b.index {
                a
            } else {
                b
            }
        }
    }
}

struct Scorer<'a> {
    f: &'a Functional,
    kind: DistributionKind,
    max: f64,
    alpha: f64,
    delta: f64,
    n: usize,
}

impl Scorer<'_> {
    fn ratio(&self, base_value: f64, p2: &Distribution) -> f64 {
        match self.f.evaluate(p2) {
            Ok(v) => (base_value - v).abs() / self.max,
            Err(_) => 0.0,
        }
    }

    fn budgets(&self) -> impl Iterator<Item = f64> + '_ {
        (0..LADDER).map(move |j| self.delta * 0.5f64.powi(j as i32))
    }

    fn lift(&self, w: Vec<f64>) -> Option<Distribution> {
        let w = CompleteDistribution::project(w)?;
        self.kind.from_weights(w).ok()
    }

    fn dist(&self, a: &Distribution, b: &Distribution) -> f64 {
        distance_unchecked(a.as_slice(), b.as_slice(), self.alpha)
    }

    /// Best pair along the path `s ↦ lift(path(s))`, `s ∈ [0, 1]`, at each
    /// budget of the ladder. `path(0)` must lift to `base`.
    fn best_on_path<F>(&self, index: usize, base: &Distribution, path: F) -> Candidate
    where
        F: Fn(f64) -> Vec<f64>,
    {
        let base_value = self.f.evaluate(base).unwrap_or(0.0);
        let mut best = Candidate { ratio: 0.0, index, p: base.clone(), p2: base.clone() };
        let feasible = |s: f64, budget: f64| -> Option<Distribution> {
            let cand = self.lift(path(s))?;
            (self.dist(base, &cand) <= budget).then_some(cand)
        };
        for budget in self.budgets() {
            let found = if let Some(c) = feasible(1.0, budget) {
                Some(c)
            } else {
                let (mut lo, mut hi) = (0.0, 1.0);
                let mut keep = None;
                for _ in 0..BISECTION_STEPS {
                    let mid = 0.5 * (lo + hi);
                    match feasible(mid, budget) {
                        Some(c) => {
                            keep = Some(c);
                            lo = mid;
                        }
                        None => hi = mid,
                    }
                }
                keep
            };
            if let Some(p2) = found {
                let ratio = self.ratio(base_value, &p2);
                best = better(best, Candidate { ratio, index, p: base.clone(), p2 });
            }
        }
        best
    }

    fn random_base<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Distribution> {
        let u: f64 = rng.random();
        if u < 0.5 {
            sample_kind_with(self.kind, self.n, rng)
        } else if u < 0.75 {
            self.kind.from_weights(sample_sparse_with(self.n, rng)?)
        } else if u < 0.875 {
            self.kind.uniform(self.n)
        } else {
            let i = rng.random_range(0..self.n);
            self.kind.vertex(self.n, i)
        }
    }

    fn random_trial(&self, index: usize, seed: Seed) -> Result<Candidate> {
        let mut rng = seed.stream(index as u64);
        let base = self.random_base(&mut rng)?;
        let dir = random_direction(&base, &mut rng);
        let base_value = self.f.evaluate(&base)?;
        let alpha = AlphaParam::new(self.alpha)?;
        let mut best = Candidate { ratio: 0.0, index, p: base.clone(), p2: base.clone() };
        for budget in self.budgets() {
            let p2 = perturb_along(&base, &dir, budget, alpha);
            let ratio = self.ratio(base_value, &p2);
            best = better(best, Candidate { ratio, index, p: base.clone(), p2 });
        }
        Ok(best)
    }

    fn greedy_trial(&self, index: usize, seed: Seed) -> Result<Candidate> {
        let mut rng = seed.stream(index as u64);
        let base = self.random_base(&mut rng)?;
        let n = self.n;
        if n < 2 {
            return Ok(Candidate { ratio: 0.0, index, p: base.clone(), p2: base });
        }
        let w = weights_of(&base);
        let receiver = if rng.random_bool(0.5) {
            w.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(i, _)| i)
        } else {
            rng.random_range(0..n)
        };
        let k = log_uniform_size(1, n - 1, &mut rng);
        let donors: Vec<usize> = index::sample(&mut rng, n - 1, k)
            .into_iter()
            .map(|i| if i >= receiver { i + 1 } else { i })
            .collect();
        let spread = rng.random_bool(0.5);
        Ok(self.best_on_path(index, &base, |s| mass_transfer(&w, receiver, &donors, spread, s)))
    }

    fn structured(&self, first_index: usize) -> Result<Vec<Candidate>> {
        let n = self.n;
        let mut templates: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        let uniform = vec![1.0 / n as f64; n];
        let vertex = one_hot(n, 0);
        templates.push((vertex.clone(), uniform.clone()));
        templates.push((uniform.clone(), vertex.clone()));
        if n >= 2 {
            let mut rest = vec![1.0 / (n - 1) as f64; n];
            rest[0] = 0.0;
            templates.push((vertex, rest));
            let odd = indicator_uniform(n, |i| i % 2 == 0);
            let even = indicator_uniform(n, |i| i % 2 == 1);
            templates.push((odd.clone(), even.clone()));
            templates.push((even, odd));
        }
        if let Some(c) = self.f.observable() {
            let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
            if hi > lo {
                let top = indicator_uniform(n, |i| c[i] == hi);
                let bottom = indicator_uniform(n, |i| c[i] == lo);
                templates.push((top.clone(), bottom.clone()));
                templates.push((bottom, top));
            }
        }
        let mut out = Vec::with_capacity(templates.len());
        for (offset, (from, to)) in templates.into_iter().enumerate() {
            let Some(base) = self.lift(from.clone()) else { continue };
            let path = |s: f64| from.iter().zip(&to).map(|(a, b)| (1.0 - s) * a + s * b).collect();
            out.push(self.best_on_path(first_index + offset, &base, path));
        }
        Ok(out)
    }
}

fn weights_of(d: &Distribution) -> Vec<f64> {
    match d {
        Distribution::Complete(c) => c.as_slice().to_vec(),
        Distribution::Incomplete(i) => i.escort(),
    }
}

fn one_hot(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn indicator_uniform(n: usize, pred: impl Fn(usize) -> bool) -> Vec<f64> {
    let count = (0..n).filter(|&i| pred(i)).count().max(1);
    (0..n).map(|i| if pred(i) { 1.0 / count as f64 } else { 0.0 }).collect()
}

/// Moves the fraction `s` of the available mass between `receiver` and
/// `donors`. Concentrating drains donors proportionally; spreading splits
/// the receiver's mass equally.
fn mass_transfer(w: &[f64], receiver: usize, donors: &[usize], spread: bool, s: f64) -> Vec<f64> {
    let mut out = w.to_vec();
    if spread {
        let m = s * w[receiver];
        out[receiver] -= m;
        let share = m / donors.len() as f64;
        for &i in donors {
            out[i] += share;
        }
    } else {
        let avail: f64 = donors.iter().map(|&i| w[i]).sum();
        if avail > 0.0 {
            for &i in donors {
                out[i] -= s * w[i];
            }
            out[receiver] += s * avail;
        }
    }
    out
}

const TAG_RANDOM: u64 = 1;
const TAG_GREEDY: u64 = 2;

/// Searches for the largest normalized deviation within `d_α ≤ delta`.
///
/// Trials are independent, each with its own stream of `seed`, and are
/// reduced by maximum ratio with ties to the lowest trial index, so the
/// result does not depend on scheduling. With [`Strategy::All`] each of
/// the random and greedy strategies runs `trials` trials.
pub fn probe(
    f: &Functional,
    alpha: f64,
    delta: f64,
    n: usize,
    strategy: Strategy,
    trials: usize,
    seed: Seed,
) -> Result<ProbeResult> {
    let alpha = AlphaParam::new(alpha)?;
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(parameter(format!("delta must be finite and >= 0, got {delta}")));
    }
    if trials == 0 {
        return Err(parameter("trials must be >= 1"));
    }
    if n == 0 {
        return Err(parameter("N must be >= 1"));
    }
    let f = f.at_dimension(n)?;
    let max = functional_max(&f, n)?.value;
    if !(max > 0.0) {
        return Err(domain(format!("{} has zero maximum at N = {n}", f.family())));
    }
    let scorer = Scorer { f: &f, kind: f.domain(), max, alpha: alpha.get(), delta, n };

    let uniform = scorer.kind.uniform(n)?;
    let mut best = Candidate { ratio: 0.0, index: 0, p: uniform.clone(), p2: uniform };
    let mut evaluated = 0usize;
    let mut next_index = 1usize;

    if matches!(strategy, Strategy::Structured | Strategy::All) {
        for c in scorer.structured(next_index)? {
            best = better(best, c);
            evaluated += 1;
        }
        next_index += 64;
    }
    let mut run = |tag: u64, greedy: bool, best: Candidate, start: usize| -> Result<Candidate> {
        let sub = seed.derive(tag);
        let found = (0..trials)
            .into_par_iter()
            .map(|t| {
                // The stream depends only on `t`, so raising `trials` extends
                // the search without changing earlier trials.
                let c = if greedy { scorer.greedy_trial(t, sub) } else { scorer.random_trial(t, sub) };
                c.map(|c| Candidate { index: start + t, ..c })
            })
            .try_reduce_with(|a, b| Ok(better(a, b)));
        evaluated += trials;
        Ok(match found {
            Some(c) => better(best, c?),
            None => best,
        })
    };
    if matches!(strategy, Strategy::Greedy | Strategy::All) {
        best = run(TAG_GREEDY, true, best, next_index)?;
        next_index += trials;
    }
    if matches!(strategy, Strategy::Random | Strategy::All) {
        best = run(TAG_RANDOM, false, best, next_index)?;
    }

    let mut pair = WitnessPair::measure(&f, best.p, best.p2, alpha)?;
    pair.extra.insert("delta".into(), delta);
    Ok(ProbeResult { best: pair, trials: evaluated.max(1), strategy, seed, delta })
}

/// Outcome of [`verify_certificate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verification {
    /// No pair within the budget reached `ε`; the largest ratio seen per `N`.
    Pass { per_n: Vec<(usize, f64)> },
    Violation(Box<WitnessPair>),
}

impl Verification {
    pub fn passed(&self) -> bool {
        matches!(self, Verification::Pass { .. })
    }
}

/// Relative margin of [`strict_budget`]; well above the rounding of a
/// `d_α` sum over a million coordinates.
pub const STRICT_MARGIN: f64 = 1e-9;

/// Budget strictly inside `δ`, since the certified implication assumes
/// `d_α < δ`, with room for the distance to be recomputed differently.
pub fn strict_budget(delta: f64) -> f64 {
    delta * (1.0 - STRICT_MARGIN)
}

/// Probes `f` at every `N` in `n_list` with the certificate's budget and
/// reports the first pair whose ratio reaches `ε`.
pub fn verify_certificate(
    cert: &StabilityCertificate,
    f: &Functional,
    n_list: &[usize],
    trials: usize,
    seed: Seed,
) -> Result<Verification> {
    if cert.family != f.family() || cert.parameter != f.parameter() {
        return Err(parameter(format!(
            "certificate is for {} ({}), functional is {} ({})",
            cert.family,
            cert.parameter,
            f.family(),
            f.parameter()
        )));
    }
    if let Some(&n) = n_list.iter().find(|&&n| n < cert.n_min) {
        return Err(parameter(format!("N = {n} is below the certificate's n_min = {}", cert.n_min)));
    }
    let mut per_n = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let result = probe(f, cert.alpha, strict_budget(cert.delta), n, Strategy::All, trials, seed.derive(n as u64))?;
        if result.best.ratio >= cert.epsilon {
            let mut best = result.best;
            best.extra.insert("epsilon".into(), cert.epsilon);
            return Ok(Verification::Violation(Box::new(best)));
        }
        per_n.push((n, result.best.ratio));
    }
    Ok(Verification::Pass { per_n })
}

/// Families for which a structured instability witness is implemented.
pub fn has_witness(family: Family) -> bool {
    matches!(family, Family::IncompleteExpectation | Family::Renyi)
}

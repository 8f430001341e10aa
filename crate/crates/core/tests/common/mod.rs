//! Independent reference implementations for the integration tests.
//!
//! Nothing here calls into the library's evaluation code: functionals are
//! re-derived from their defining formulas, and maxima are found by brute
//! force over the weight simplex.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reference formulas, evaluated on plain slices. `q` is the deformation
/// parameter (κ for the κ-entropy).
#[derive(Debug, Clone)]
pub enum Oracle {
    Tsallis(f64),
    Incomplete(f64),
    Renyi(f64),
    Kappa(f64),
    QuantumGroup(f64),
    Expectation(f64, Vec<f64>),
}

fn sum(v: impl Iterator<Item = f64>) -> f64 {
    // Sorting before summation keeps the oracle independent of the library's
    // compensated sum while staying accurate for short vectors.
    let mut xs: Vec<f64> = v.collect();
    xs.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    xs.into_iter().sum()
}

fn pw(x: f64, a: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.powf(a)
    }
}

impl Oracle {
    /// Whether the functional lives on incomplete distributions.
    pub fn incomplete_q(&self) -> Option<f64> {
        match *self {
            Oracle::Incomplete(q) | Oracle::Expectation(q, _) => Some(q),
            _ => None,
        }
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        match self {
            Oracle::Tsallis(q) => (1.0 - sum(p.iter().map(|&x| pw(x, *q)))) / (q - 1.0),
            Oracle::Incomplete(q) => (1.0 - sum(p.iter().copied())) / (1.0 - q),
            Oracle::Renyi(q) => sum(p.iter().map(|&x| pw(x, *q))).ln() / (1.0 - q),
            Oracle::Kappa(k) => sum(p.iter().map(|&x| (pw(x, 1.0 - k) - pw(x, 1.0 + k)) / (2.0 * k))),
            Oracle::QuantumGroup(q) => sum(p.iter().map(|&x| (pw(x, 1.0 / q) - pw(x, *q)) / (q - 1.0 / q))),
            Oracle::Expectation(q, c) => sum(p.iter().zip(c).map(|(&x, &ci)| pw(x, *q) * ci)),
        }
    }

    /// `|f|` at the point with escort weights `w` (a complete distribution).
    pub fn eval_weights(&self, w: &[f64]) -> f64 {
        match self.incomplete_q() {
            Some(q) => {
                let p: Vec<f64> = w.iter().map(|&x| pw(x, 1.0 / q)).collect();
                self.eval(&p).abs()
            }
            None => self.eval(w).abs(),
        }
    }
}

/// Moves mass between pairs of coordinates with a shrinking step until no
/// move improves the objective.
pub fn polish(o: &Oracle, mut w: Vec<f64>) -> (f64, Vec<f64>) {
    let n = w.len();
    let mut best = o.eval_weights(&w);
    let mut step: f64 = 0.1;
    while step > 1e-13 {
        let mut improved = false;
        for i in 0..n {
            for j in 0..n {
                if i == j || w[j] == 0.0 {
                    continue;
                }
                let t = step.min(w[j]);
                let mut c = w.clone();
                c[i] += t;
                c[j] -= t;
                let v = o.eval_weights(&c);
                if v > best {
                    best = v;
                    w = c;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, w)
}

/// `max |f|` on `N = 2` by a dense grid over `w_1 ∈ [0, 1]` followed by
/// polishing around the best grid point.
pub fn brute_max_n2(o: &Oracle, points: usize) -> f64 {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..=points {
        let t = k as f64 / points as f64;
        let v = o.eval_weights(&[t, 1.0 - t]);
        if v > best.0 {
            best = (v, t);
        }
    }
    polish(o, vec![best.1, 1.0 - best.1]).0
}

/// `max |f|` on dimension `n` from `samples` uniform simplex draws (plus
/// the vertices), polished from the best few.
pub fn brute_max_random(o: &Oracle, n: usize, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut top: Vec<(f64, Vec<f64>)> = Vec::new();
    let consider = |w: Vec<f64>, top: &mut Vec<(f64, Vec<f64>)>| {
        let v = o.eval_weights(&w);
        if top.len() < 4 || v > top[top.len() - 1].0 {
            top.push((v, w));
            top.sort_by(|a, b| b.0.total_cmp(&a.0));
            top.truncate(4);
        }
    };
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        consider(e, &mut top);
    }
    for _ in 0..samples {
        let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let s: f64 = e.iter().sum();
        consider(e.iter().map(|x| x / s).collect(), &mut top);
    }
    top.into_iter().map(|(_, w)| polish(o, w).0).fold(f64::NEG_INFINITY, f64::max)
}

/// Plain `(Σ |Δ|^α)^{1/α}`.
pub fn d_alpha(p: &[f64], p2: &[f64], alpha: f64) -> f64 {
    p.iter().zip(p2).map(|(a, b)| (a - b).abs().powf(alpha)).sum::<f64>().powf(1.0 / alpha)
}

//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use common::{brute_max_n2, brute_max_random, d_alpha, Oracle};
use lesche_core::adversary::{
    alternating_support_witness, probe, renyi_instability_witness, strict_budget, Strategy,
};
use lesche_core::certificates::{check_power_bound, delta_for, lemma10_bounds, PowerBound};
use lesche_core::functionals::{
    functional_max, kappa_entropy, quantum_group_entropy, tsallis_entropy,
};
use lesche_core::metric::{alpha_distance, quasi_triangle_factor};
use lesche_core::simplex::{perturb_within, sample_complete_with, sample_sparse_with};
use lesche_core::{AlphaParam, Distribution, Functional, Seed};

/// Tolerance on witness distances against their closed forms.
const DISTANCE_TOL: f64 = 1e-12;
/// Slack on `lhs ≤ rhs` and on equality cases of the power-difference bounds.
const LEMMA_TOL: f64 = 1e-12;
/// Tolerance of the decomposition identities.
const IDENTITY_TOL: f64 = 1e-12;
/// Tolerance between `functional_max` and the brute-force maxima.
const MAX_TOL: f64 = 1e-6;
/// Tolerance used by the soundness grid; every cell issues its δ at this ε.
const SOUNDNESS_EPS: f64 = 0.1;
const SOUNDNESS_PAIRS: usize = 10_000;

type Criterion = (&'static str, fn() -> Outcome);
type OracleFor = Box<dyn Fn(usize) -> Oracle>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit_secs: f64) -> bool {
    elapsed.as_secs_f64() < limit_secs
}

fn alternating_support_reproduction() -> Outcome {
    let start = Instant::now();
    let w = match alternating_support_witness(0.5, 0.01) {
        Ok(w) => w,
        Err(e) => return outcome(false, format!("construction failed: {e}")),
    };
    let elapsed = start.elapsed();
    let f = Functional::incomplete_expectation(0.5, w.observable.clone().unwrap_or_default()).unwrap();
    let c_p = f.evaluate(&w.p).unwrap();
    let c_p2 = f.evaluate(&w.p2).unwrap();
    let d1 = d_alpha(w.p.as_slice(), w.p2.as_slice(), 1.0);
    let big_w = w.extra.get("W").copied().unwrap_or(f64::NAN);
    let pass = big_w == 201.0
        && w.n == 402
        && (d1 - 2.0 / 201.0).abs() < DISTANCE_TOL
        && (w.achieved_distance - 2.0 / 201.0).abs() < DISTANCE_TOL
        && d1 < 0.01
        && (c_p - 1.0).abs() < DISTANCE_TOL
        && c_p2.abs() < DISTANCE_TOL
        && (w.ratio - 1.0).abs() < DISTANCE_TOL
        && w.ratio > 0.5
        && within(elapsed, 1.0);
    outcome(
        pass,
        format!(
            "W={big_w} N={} d1={d1:.6e} <C>(p)={c_p} <C>(p')={c_p2} ratio={} ({:.3}s)",
            w.n,
            w.ratio,
            elapsed.as_secs_f64()
        ),
    )
}

struct Cell {
    functional: Functional,
    alpha: f64,
    n: usize,
}

fn soundness_cells() -> Vec<Cell> {
    let mut cells = Vec::new();
    let ns = [2usize, 3, 10, 100, 1000];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut push = |cells: &mut Vec<Cell>, f: &dyn Fn(usize, &mut ChaCha8Rng) -> Functional, alpha: f64| {
        for &n in &ns {
            cells.push(Cell { functional: f(n, &mut rng), alpha, n });
        }
    };
    for q in [0.5, 2.0] {
        for alpha in [0.5, 1.0] {
            push(&mut cells, &|_, _| Functional::incomplete(q).unwrap(), alpha);
            push(&mut cells, &|_, _| Functional::tsallis(q).unwrap(), alpha);
        }
    }
    let random_c = |q: f64| {
        move |n: usize, rng: &mut ChaCha8Rng| {
            let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            Functional::incomplete_expectation(q, c).unwrap()
        }
    };
    for alpha in [0.5, 1.0] {
        push(&mut cells, &random_c(2.0), alpha);
    }
    for alpha in [0.25, 0.5] {
        push(&mut cells, &random_c(0.5), alpha);
        push(&mut cells, &|_, _| Functional::renyi(0.5).unwrap(), alpha);
    }
    cells
}

/// Largest ratio in a cell, and the number of pairs at or above ε or
/// outside the δ-ball.
fn run_cell(cell: &Cell, index: u64) -> (f64, usize, usize) {
    let f = &cell.functional;
    let cert = delta_for(f.family(), f.parameter(), cell.alpha, SOUNDNESS_EPS).unwrap();
    let alpha = AlphaParam::new(cell.alpha).unwrap();
    let kind = f.domain();
    let oracle = match f {
        Functional::Tsallis { q } => Oracle::Tsallis(*q),
        Functional::Incomplete { q } => Oracle::Incomplete(*q),
        Functional::Renyi { q } => Oracle::Renyi(*q),
        Functional::IncompleteExpectation { q, observable } => Oracle::Expectation(*q, observable.clone()),
        other => unreachable!("{other:?} is not in the grid"),
    };
    let c_max = functional_max(f, cell.n).unwrap().value;
    let seed = Seed(0x5eed).derive(index);
    let mut rng = seed.rng();
    let (mut worst, mut violations, mut outside) = (0.0f64, 0, 0);
    for k in 0..SOUNDNESS_PAIRS {
        let w = if k % 2 == 0 {
            sample_complete_with(cell.n, &mut rng).unwrap()
        } else {
            sample_sparse_with(cell.n, &mut rng).unwrap()
        };
        let p = kind.from_weights(w).unwrap();
        let p2: Distribution = perturb_within(&p, strict_budget(cert.delta), alpha, seed.derive(k as u64));
        if d_alpha(p.as_slice(), p2.as_slice(), cell.alpha) >= cert.delta {
            outside += 1;
            continue;
        }
        let ratio = (oracle.eval(p.as_slice()) - oracle.eval(p2.as_slice())).abs() / c_max;
        worst = worst.max(ratio / SOUNDNESS_EPS);
        if ratio.is_nan() || ratio >= SOUNDNESS_EPS {
            violations += 1;
        }
    }
    (worst, violations, outside)
}

fn certificate_soundness() -> Outcome {
    let start = Instant::now();
    let cells = soundness_cells();
    let results: Vec<_> =
        cells.par_iter().enumerate().map(|(i, c)| run_cell(c, i as u64)).collect();
    let elapsed = start.elapsed();
    let violations: usize = results.iter().map(|r| r.1).sum();
    let outside: usize = results.iter().map(|r| r.2).sum();
    let (worst_i, worst) = results
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.0))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let wc = &cells[worst_i];
    let pass = violations == 0 && outside == 0 && within(elapsed, 600.0);
    outcome(
        pass,
        format!(
            "{} cells x {SOUNDNESS_PAIRS} pairs at eps={SOUNDNESS_EPS}: {violations} violations, {outside} pairs outside the ball; \
             largest ratio/eps {worst:.4} ({} q={} alpha={} N={}) ({:.1}s)",
            cells.len(),
            wc.functional.family(),
            wc.functional.parameter(),
            wc.alpha,
            wc.n,
            elapsed.as_secs_f64()
        ),
    )
}

fn power_bound_suite() -> Outcome {
    let combos: Vec<(PowerBound, f64)> = PowerBound::ALL
        .iter()
        .flat_map(|&v| {
            let alphas: &[f64] = match v {
                PowerBound::A | PowerBound::B => &[0.25, 0.5, 0.9],
                PowerBound::C | PowerBound::D => &[1.5, 2.0, 5.0],
            };
            alphas.iter().map(move |&a| (v, a))
        })
        .collect();
    let per = 1_000_000usize.div_ceil(combos.len());
    let checks: Vec<_> = combos
        .par_iter()
        .enumerate()
        .map(|(i, &(v, a))| check_power_bound(v, a, per, 16, Seed(10).derive(i as u64)).unwrap())
        .collect();
    let total: usize = checks.iter().map(|c| c.checks).sum();
    let violations: usize = checks.iter().map(|c| c.violations).sum();
    let excess = checks.iter().map(|c| c.max_excess).fold(f64::NEG_INFINITY, f64::max);
    let (lhs, rhs) = lemma10_bounds(&[1.0, 0.0], &[0.0, 1.0], 0.5, PowerBound::A).unwrap();
    let tight = (lhs - rhs).abs() <= LEMMA_TOL && (lhs - 2.0).abs() <= LEMMA_TOL;
    let pass = total >= 1_000_000 && violations == 0 && excess <= LEMMA_TOL && tight;
    outcome(
        pass,
        format!("{total} checks, {violations} violations, max lhs-rhs {excess:.3e}; tight case ({lhs}, {rhs})"),
    )
}

fn quasi_triangle() -> Outcome {
    let alpha = AlphaParam::new(0.5).unwrap();
    let k = quasi_triangle_factor(alpha);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = 0;
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let n = rng.random_range(1..=12);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..n).map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random_range(-1.0..1.0) }).collect()
        };
        // Half the triples are probability vectors, half arbitrary reals.
        let (x, y, z) = if i % 2 == 0 {
            let simplex = |rng: &mut ChaCha8Rng| sample_sparse_with(n, rng).unwrap().into_vec();
            (simplex(&mut rng), simplex(&mut rng), simplex(&mut rng))
        } else {
            (draw(&mut rng), draw(&mut rng), draw(&mut rng))
        };
        let dxz = alpha_distance(&x, &z, alpha).unwrap();
        let bound = k * (alpha_distance(&x, &y, alpha).unwrap() + alpha_distance(&y, &z, alpha).unwrap());
        if dxz > bound * (1.0 + 1e-12) + 1e-300 {
            failures += 1;
        }
        if bound > 0.0 {
            worst = worst.max(dxz / bound);
        }
    }
    let (x, y, z) = ([0.0, 0.0], [1.0, 0.0], [1.0, 1.0]);
    let dxz = alpha_distance(&x, &z, alpha).unwrap();
    let plain = alpha_distance(&x, &y, alpha).unwrap() + alpha_distance(&y, &z, alpha).unwrap();
    let documented = dxz == 4.0 && plain == 2.0 && dxz > plain && (dxz - k * plain).abs() <= 1e-12;
    outcome(
        failures == 0 && documented,
        format!(
            "factor {k}; {failures} failures in 10000 triples, max d(x,z)/bound {worst:.6}; (0,0),(1,0),(1,1): {dxz} > {plain}, bound {}",
            k * plain
        ),
    )
}

fn decomposition_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let n = rng.random_range(1..=64);
        let p = if i % 2 == 0 {
            sample_complete_with(n, &mut rng).unwrap()
        } else {
            sample_sparse_with(n, &mut rng).unwrap()
        };
        for k in [0.3, -0.3, 0.9, -0.9] {
            let lhs = kappa_entropy(&p, k).unwrap();
            let rhs = 0.5 * (tsallis_entropy(&p, 1.0 + k).unwrap() + tsallis_entropy(&p, 1.0 - k).unwrap());
            worst = worst.max((lhs - rhs).abs());
        }
        for q in [0.5, 2.0, 3.0] {
            let lhs = quantum_group_entropy(&p, q).unwrap();
            let rhs = q / (q + 1.0) * tsallis_entropy(&p, q).unwrap()
                + 1.0 / (q + 1.0) * tsallis_entropy(&p, 1.0 / q).unwrap();
            worst = worst.max((lhs - rhs).abs());
        }
    }
    outcome(worst <= IDENTITY_TOL, format!("10000 distributions, max |lhs-rhs| {worst:.3e}"))
}

fn renyi_instability() -> Outcome {
    let start = Instant::now();
    let series = |q: f64, delta: f64| -> Vec<f64> {
        [100usize, 1000, 10_000].iter().map(|&n| renyi_instability_witness(q, delta, n).unwrap().ratio).collect()
    };
    let low = series(0.5, 0.1);
    let high = series(2.0, 0.2);
    let structured = |q: f64, delta: f64| {
        probe(&Functional::renyi(q).unwrap(), 1.0, delta, 10_000, Strategy::Structured, 1, Seed(6)).unwrap().best.ratio
    };
    let probe_low = structured(0.5, 0.1);
    let probe_high = structured(2.0, 0.2);
    let elapsed = start.elapsed();
    let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
    let pass = low[2] >= 0.65
        && high[2] >= 0.45
        && probe_low >= 0.65
        && probe_high >= 0.45
        && increasing(&low)
        && increasing(&high)
        && within(elapsed, 5.0);
    outcome(
        pass,
        format!(
            "q=0.5 d=0.1 ratios {low:.4?} (probe {probe_low:.4}); q=2 d=0.2 ratios {high:.4?} (probe {probe_high:.4}) ({:.2}s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn maximizers() -> Outcome {
    let c = [0.3, -1.2, 0.7, 0.1];
    let families: Vec<(Functional, OracleFor)> = vec![
        (Functional::tsallis(0.5).unwrap(), Box::new(|_| Oracle::Tsallis(0.5))),
        (Functional::tsallis(2.0).unwrap(), Box::new(|_| Oracle::Tsallis(2.0))),
        (Functional::incomplete(0.5).unwrap(), Box::new(|_| Oracle::Incomplete(0.5))),
        (Functional::incomplete(2.0).unwrap(), Box::new(|_| Oracle::Incomplete(2.0))),
        (Functional::renyi(0.5).unwrap(), Box::new(|_| Oracle::Renyi(0.5))),
        (Functional::renyi(2.0).unwrap(), Box::new(|_| Oracle::Renyi(2.0))),
        (Functional::kappa(0.3).unwrap(), Box::new(|_| Oracle::Kappa(0.3))),
        (Functional::kappa(-0.9).unwrap(), Box::new(|_| Oracle::Kappa(-0.9))),
        (Functional::quantum_group(0.5).unwrap(), Box::new(|_| Oracle::QuantumGroup(0.5))),
        (Functional::quantum_group(3.0).unwrap(), Box::new(|_| Oracle::QuantumGroup(3.0))),
        (
            Functional::incomplete_expectation(0.5, c.to_vec()).unwrap(),
            Box::new(move |n| Oracle::Expectation(0.5, c[..n].to_vec())),
        ),
        (
            Functional::incomplete_expectation(2.0, c.to_vec()).unwrap(),
            Box::new(move |n| Oracle::Expectation(2.0, c[..n].to_vec())),
        ),
    ];
    let mut worst = (0.0f64, String::new());
    let mut checked = 0;
    for (i, (f, oracle)) in families.iter().enumerate() {
        for n in [2usize, 3, 4] {
            let f = match f {
                Functional::IncompleteExpectation { q, .. } => {
                    Functional::incomplete_expectation(*q, c[..n].to_vec()).unwrap()
                }
                other => other.clone(),
            };
            let o = oracle(n);
            let brute = if n == 2 {
                brute_max_n2(&o, 1_000_000)
            } else {
                brute_max_random(&o, n, 100_000, 70 + i as u64)
            };
            let got = functional_max(&f, n).unwrap().value;
            let err = (got - brute).abs();
            checked += 1;
            if err > worst.0 || worst.1.is_empty() {
                worst = (err, format!("{} {} N={n}", f.family(), f.parameter()));
            }
        }
    }
    outcome(
        worst.0 <= MAX_TOL,
        format!("{checked} (family, N) cases, max |C_max - brute| {:.3e} at {}", worst.0, worst.1),
    )
}

fn sweep_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| -> Option<Vec<u8>> {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_lesche"))
            .args(["sweep", "--seed", "42", "--trials", "100", "--out"])
            .arg(&path)
            .status()
            .ok()?;
        // 0 or 1 both mean a complete report.
        (status.code()? <= 1).then(|| std::fs::read(&path).ok()).flatten()
    };
    match (run("a.csv"), run("b.csv")) {
        (Some(a), Some(b)) => {
            let rows = a.iter().filter(|&&c| c == b'\n').count().saturating_sub(1);
            outcome(a == b && rows > 0, format!("{rows} rows, {} bytes, identical: {}", a.len(), a == b))
        }
        _ => outcome(false, "sweep did not produce a report"),
    }
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("alternating-support witness q=0.5 delta=0.01", alternating_support_reproduction),
        ("certificate soundness grid", certificate_soundness),
        ("power-difference inequalities", power_bound_suite),
        ("quasi-triangle inequality alpha=0.5", quasi_triangle),
        ("kappa and quantum-group decompositions", decomposition_identities),
        ("Renyi 1-instability witnesses", renyi_instability),
        ("maximizers against brute force", maximizers),
        ("sweep determinism", sweep_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {} [{}] {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

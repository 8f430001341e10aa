//! `lesche` command-line front end.
//!
//! Exit codes: 0 success or pass, 1 violation found or instability
//! demonstrated, 2 usage or input error. Data goes to standard output (or
//! `--out`), diagnostics to standard error.

mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use report::{render_report, write_report, Format, ReportRow, Verdict, CSV_HEADER};

use crate::adversary::{
    alternating_support_witness_alpha, probe, renyi_instability_witness, strict_budget, Strategy,
};
use crate::certificates::{certificate_for, check_power_bound, PowerBound, Provenance, StabilityCertificate};
use crate::error::{parameter, Error, Result};
use crate::functionals::{functional_max, Family, Functional};
use crate::io::{read_distributions_from_path, write_witness};
use crate::metric::AlphaParam;
use crate::numeric::format_g17;
use crate::simplex::{uniform_complete, uniform_incomplete, Distribution, Seed};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FOUND: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "lesche", version, about = "Stability certificates and instability witnesses for generalized entropies")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FunctionalName {
    Tsallis,
    Incomplete,
    Renyi,
    Kappa,
    #[value(alias = "quantum-group")]
    Qg,
    #[value(alias = "incomplete-expectation")]
    Iqe,
}

impl FunctionalName {
    fn family(self) -> Family {
        match self {
            FunctionalName::Tsallis => Family::Tsallis,
            FunctionalName::Incomplete => Family::Incomplete,
            FunctionalName::Renyi => Family::Renyi,
            FunctionalName::Kappa => Family::Kappa,
            FunctionalName::Qg => Family::QuantumGroup,
            FunctionalName::Iqe => Family::IncompleteExpectation,
        }
    }

    /// Builds the functional. `param` is `q`, or `κ` for the κ-entropy.
    fn build(self, param: f64, observable: Option<&[f64]>) -> Result<Functional> {
        match self {
            FunctionalName::Tsallis => Functional::tsallis(param),
            FunctionalName::Incomplete => Functional::incomplete(param),
            FunctionalName::Renyi => Functional::renyi(param),
            FunctionalName::Kappa => Functional::kappa(param),
            FunctionalName::Qg => Functional::quantum_group(param),
            FunctionalName::Iqe => {
                Functional::incomplete_expectation(param, observable.map_or_else(|| vec![1.0, 0.0], <[f64]>::to_vec))
            }
        }
    }
}

#[derive(Debug, Args)]
struct FunctionalArgs {
    #[arg(long, value_enum)]
    functional: FunctionalName,
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    kappa: Option<f64>,
    /// Observable of the incomplete q-expectation, repeated cyclically to
    /// length N. Defaults to 1,0.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    observable: Option<Vec<f64>>,
}

impl FunctionalArgs {
    fn build(&self) -> Result<Functional> {
        let param = if self.functional == FunctionalName::Kappa {
            self.kappa.ok_or_else(|| parameter("--kappa is required for the kappa entropy"))?
        } else {
            self.q.ok_or_else(|| parameter("--q is required"))?
        };
        self.functional.build(param, self.observable.as_deref())
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a functional on a distribution.
    Eval {
        #[command(flatten)]
        functional: FunctionalArgs,
        /// `uniform:N`, `iuniform:N` or a distribution CSV file.
        #[arg(long)]
        dist: String,
    },
    /// Print C_{N,max} as JSON.
    Max {
        #[command(flatten)]
        functional: FunctionalArgs,
        #[arg(long)]
        n: usize,
    },
    /// Issue a stability certificate as JSON.
    Certify {
        #[command(flatten)]
        functional: FunctionalArgs,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        eps: f64,
    },
    /// Probe a certificate at several dimensions.
    Verify {
        #[command(flatten)]
        functional: FunctionalArgs,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        eps: f64,
        /// Check a hand-built certificate with this δ instead of the issued one.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, value_delimiter = ',', default_value = "2,10,100")]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Search for the largest normalized deviation within a budget.
    Probe {
        #[command(flatten)]
        functional: FunctionalArgs,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "all")]
        strategy: Strategy,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Report a violation (exit 1) when the best ratio reaches this.
        #[arg(long)]
        eps: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Build an explicit instability witness (iqe or renyi).
    Witness {
        #[command(flatten)]
        functional: FunctionalArgs,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Dimension of the Rényi witness.
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        /// Instability is reported when the ratio exceeds this.
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        /// Output prefix; writes `<prefix>.csv` and `<prefix>.json`.
        #[arg(long, default_value = "witness")]
        out: PathBuf,
    },
    /// Randomized check of the power-difference inequalities.
    LemmaCheck {
        /// `10a`, `10b`, `10c`, `10d` or `all`.
        #[arg(long, default_value = "all")]
        lemma: String,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        /// Largest dimension drawn.
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Issue and probe certificates over a (functional, q, alpha, eps, N) grid.
    Sweep {
        #[arg(long, value_enum, value_delimiter = ',', default_value = "incomplete,tsallis,iqe,renyi")]
        functional: Vec<FunctionalName>,
        /// Deformation parameters (κ for the kappa entropy).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0.5,2")]
        q: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1")]
        alpha: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.01")]
        eps: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "2,3,10,100,1000")]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        observable: Option<Vec<f64>>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

/// Parses `argv` (including the program name) and runs the command.
pub fn parse_and_dispatch<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
            } else {
                let _ = write!(stdout, "{rendered}");
            }
            return code;
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn resolve_dist(spec: &str, f: &Functional) -> Result<Vec<Distribution>> {
    if let Some(n) = spec.strip_prefix("uniform:") {
        let n = n.parse().map_err(|e| parameter(format!("bad dimension in {spec:?}: {e}")))?;
        return Ok(vec![Distribution::Complete(uniform_complete(n)?)]);
    }
    if let Some(n) = spec.strip_prefix("iuniform:") {
        let n = n.parse().map_err(|e| parameter(format!("bad dimension in {spec:?}: {e}")))?;
        let q = match f.domain() {
            crate::simplex::DistributionKind::Incomplete { q } => q,
            crate::simplex::DistributionKind::Complete => f.parameter(),
        };
        return Ok(vec![Distribution::Incomplete(uniform_incomplete(n, q)?)]);
    }
    read_distributions_from_path(Path::new(spec))
}

fn family_label(f: &Functional) -> &'static str {
    f.family().name()
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let seed = Seed(cli.seed);
    match cli.command {
        Command::Eval { functional, dist } => {
            let f = functional.build()?;
            for d in resolve_dist(&dist, &f)? {
                let f = f.at_dimension(d.len())?;
                writeln!(stdout, "{}", format_g17(f.evaluate(&d)?))?;
            }
            Ok(EXIT_OK)
        }
        Command::Max { functional, n } => {
            let f = functional.build()?.at_dimension(n)?;
            let m = functional_max(&f, n)?;
            serde_json::to_writer(&mut *stdout, &m)?;
            writeln!(stdout)?;
            Ok(EXIT_OK)
        }
        Command::Certify { functional, alpha, eps } => {
            let f = functional.build()?;
            let cert = certificate_for(&f, alpha, eps)?;
            serde_json::to_writer(&mut *stdout, &cert)?;
            writeln!(stdout)?;
            Ok(EXIT_OK)
        }
        Command::Verify { functional, alpha, eps, delta, n_list, trials, output } => {
            let f = functional.build()?;
            let cert = match delta {
                Some(delta) => hand_built_certificate(&f, alpha, eps, delta)?,
                None => certificate_for(&f, alpha, eps)?,
            };
            if let Some(&n) = n_list.iter().find(|&&n| n < cert.n_min) {
                return Err(parameter(format!("N = {n} is below the certificate's n_min = {}", cert.n_min)));
            }
            let mut rows = Vec::with_capacity(n_list.len());
            for &n in &n_list {
                let result =
                    probe(&f, cert.alpha, strict_budget(cert.delta), n, Strategy::All, trials, seed.derive(n as u64))?;
                rows.push(ReportRow {
                    functional: family_label(&f).into(),
                    q: f.parameter(),
                    alpha: cert.alpha,
                    n,
                    delta: cert.delta,
                    epsilon: cert.epsilon,
                    ratio: result.best.ratio,
                    verdict: Verdict::from_ratio(result.best.ratio, cert.epsilon),
                    message: None,
                });
            }
            write_report(&rows, output.format, output.out.as_deref(), stdout)?;
            let violated = rows.iter().any(|r| r.verdict == Verdict::Violation);
            if violated {
                writeln!(stderr, "certificate violated")?;
            }
            Ok(if violated { EXIT_FOUND } else { EXIT_OK })
        }
        Command::Probe { functional, alpha, delta, n, strategy, trials, eps, output } => {
            let f = functional.build()?;
            let result = probe(&f, alpha, delta, n, strategy, trials, seed)?;
            let verdict = eps.map_or(Verdict::NotApplicable, |e| Verdict::from_ratio(result.best.ratio, e));
            let row = ReportRow {
                functional: family_label(&f).into(),
                q: f.parameter(),
                alpha,
                n,
                delta,
                epsilon: eps.unwrap_or(0.0),
                ratio: result.best.ratio,
                verdict,
                message: None,
            };
            write_report(&[row], output.format, output.out.as_deref(), stdout)?;
            Ok(if verdict == Verdict::Violation { EXIT_FOUND } else { EXIT_OK })
        }
        Command::Witness { functional, delta, alpha, n, eps, out } => {
            let q = functional.q.ok_or_else(|| parameter("--q is required"))?;
            let (f, pair) = match functional.functional {
                FunctionalName::Iqe => {
                    let pair = alternating_support_witness_alpha(q, AlphaParam::new(alpha)?, delta)?;
                    let c = pair.observable.clone().expect("witness carries its observable");
                    (Functional::incomplete_expectation(q, c)?, pair)
                }
                FunctionalName::Renyi => {
                    if alpha != 1.0 {
                        return Err(parameter("the Renyi witness is measured under d_1; drop --alpha"));
                    }
                    (Functional::renyi(q)?, renyi_instability_witness(q, delta, n)?)
                }
                other => {
                    return Err(Error::UnsupportedRegime(format!(
                        "no witness family is implemented for {}",
                        other.family()
                    )))
                }
            };
            let (csv_path, json_path) = write_witness(&out, &f, &pair)?;
            writeln!(stderr, "wrote {} and {}", csv_path.display(), json_path.display())?;
            writeln!(stdout, "{}", format_g17(pair.ratio))?;
            Ok(if pair.ratio > eps { EXIT_FOUND } else { EXIT_OK })
        }
        Command::LemmaCheck { lemma, trials, n, output } => {
            let variants = parse_lemma(&lemma)?;
            let mut rows = Vec::new();
            for (i, v) in variants.into_iter().enumerate() {
                let alphas: &[f64] = match v {
                    PowerBound::A | PowerBound::B => &[0.25, 0.5, 0.9],
                    PowerBound::C | PowerBound::D => &[1.5, 2.0, 5.0],
                };
                for (j, &a) in alphas.iter().enumerate() {
                    let check = check_power_bound(v, a, trials, n, seed.derive((i * 16 + j) as u64))?;
                    rows.push(ReportRow {
                        functional: format!("lemma10{}", v.label()),
                        q: 0.0,
                        alpha: a,
                        n,
                        delta: 0.0,
                        epsilon: crate::certificates::POWER_BOUND_SLACK,
                        ratio: check.max_ratio,
                        verdict: if check.violations == 0 { Verdict::Pass } else { Verdict::Violation },
                        message: None,
                    });
                }
            }
            write_report(&rows, output.format, output.out.as_deref(), stdout)?;
            let failed = rows.iter().any(|r| r.verdict == Verdict::Violation);
            Ok(if failed { EXIT_FOUND } else { EXIT_OK })
        }
        Command::Sweep { functional, q, alpha, eps, n_list, trials, observable, output } => {
            let grid = SweepGrid { functionals: functional, params: q, alphas: alpha, epsilons: eps, n_list };
            let rows = run_sweep(&grid, observable.as_deref(), trials, seed)?;
            write_report(&rows, output.format, output.out.as_deref(), stdout)?;
            let violated = rows.iter().any(|r| r.verdict == Verdict::Violation);
            Ok(if violated { EXIT_FOUND } else { EXIT_OK })
        }
    }
}

fn parse_lemma(s: &str) -> Result<Vec<PowerBound>> {
    let key = s.trim().trim_start_matches("10");
    Ok(match key {
        "a" => vec![PowerBound::A],
        "b" => vec![PowerBound::B],
        "c" => vec![PowerBound::C],
        "d" => vec![PowerBound::D],
        "all" | "" => PowerBound::ALL.to_vec(),
        other => return Err(parameter(format!("unknown lemma variant {other:?}"))),
    })
}

fn hand_built_certificate(f: &Functional, alpha: f64, epsilon: f64, delta: f64) -> Result<StabilityCertificate> {
    let alpha = AlphaParam::new(alpha)?.get();
    if !(delta > 0.0) || !(epsilon > 0.0) {
        return Err(parameter("--delta and --eps must be > 0"));
    }
    // Keep the dimension floor of the issued certificate when there is one.
    let issued = certificate_for(f, alpha, epsilon).ok();
    Ok(StabilityCertificate {
        family: f.family(),
        parameter: f.parameter(),
        alpha,
        epsilon,
        delta,
        n_min: issued.map_or(f.min_dimension(), |c| c.n_min),
        provenance: issued.map_or(Provenance::Downgrade, |c| c.provenance),
    })
}

struct SweepGrid {
    functionals: Vec<FunctionalName>,
    params: Vec<f64>,
    alphas: Vec<f64>,
    epsilons: Vec<f64>,
    n_list: Vec<usize>,
}

fn run_sweep(grid: &SweepGrid, observable: Option<&[f64]>, trials: usize, seed: Seed) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    let mut point = 0u64;
    for &name in &grid.functionals {
        for &param in &grid.params {
            for &alpha in &grid.alphas {
                for &eps in &grid.epsilons {
                    for &n in &grid.n_list {
                        point += 1;
                        let mut row = ReportRow {
                            functional: name.family().name().into(),
                            q: param,
                            alpha,
                            n,
                            delta: 0.0,
                            epsilon: eps,
                            ratio: 0.0,
                            verdict: Verdict::NotApplicable,
                            message: None,
                        };
                        match sweep_point(name, param, alpha, eps, n, observable, trials, seed.derive(point)) {
                            Ok((delta, ratio)) => {
                                row.delta = delta;
                                row.ratio = ratio;
                                row.verdict = Verdict::from_ratio(ratio, eps);
                            }
                            Err(e) => row.message = Some(e.to_string()),
                        }
                        rows.push(row);
                    }
                }
            }
        }
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn sweep_point(
    name: FunctionalName,
    param: f64,
    alpha: f64,
    eps: f64,
    n: usize,
    observable: Option<&[f64]>,
    trials: usize,
    seed: Seed,
) -> Result<(f64, f64)> {
    let f = name.build(param, observable)?;
    let cert = certificate_for(&f, alpha, eps)?;
    if n < cert.n_min {
        return Err(Error::UnsupportedRegime(format!(
            "certificate covers N >= {}, not N = {n}",
            cert.n_min
        )));
    }
    let result = probe(&f, cert.alpha, strict_budget(cert.delta), n, Strategy::All, trials, seed)?;
    Ok((cert.delta, result.best.ratio))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("lesche").chain(args.iter().copied());
        let code = parse_and_dispatch(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn eval_uniform() {
        let (code, out, _) = run(&["eval", "--functional", "tsallis", "--q", "2", "--dist", "uniform:4"]);
        assert_eq!((code, out.as_str()), (0, "0.75\n"));
    }

    #[test]
    fn eval_incomplete_uniform() {
        let (code, out, _) = run(&["eval", "--functional", "incomplete", "--q", "0.5", "--dist", "iuniform:2"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim().parse::<f64>().unwrap(), 1.0);
    }

    #[test]
    fn certify_renyi() {
        let (code, out, _) = run(&["certify", "--functional", "renyi", "--q", "0.5", "--alpha", "0.5", "--eps", "0.04"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["delta"].as_f64().unwrap() - 0.0004).abs() < 1e-15);
    }

    #[test]
    fn certify_unsupported_is_input_error() {
        let (code, _, err) = run(&["certify", "--functional", "renyi", "--q", "2", "--eps", "0.1"]);
        assert_eq!(code, 2);
        assert!(err.contains("unsupported regime"));
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run(&["frobnicate"]).0, 2);
        assert_eq!(run(&["eval", "--functional", "tsallis", "--bogus"]).0, 2);
        assert_eq!(run(&["eval", "--functional", "tsallis", "--dist", "uniform:3"]).0, 2);
        assert_eq!(run(&["lemma-check", "--lemma", "11z"]).0, 2);
    }

    #[test]
    fn lemma_check_passes() {
        let (code, out, _) = run(&["lemma-check", "--lemma", "10a", "--trials", "2000", "--seed", "7"]);
        assert_eq!(code, 0);
        let lines: Vec<_> = out.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1..].iter().all(|l| l.starts_with("lemma10a,") && l.ends_with(",pass")));
    }

    #[test]
    fn probe_with_threshold() {
        let (code, out, _) = run(&[
            "probe", "--functional", "renyi", "--q", "2", "--delta", "0.2", "--n", "10000", "--strategy",
            "structured", "--trials", "1", "--eps", "0.45",
        ]);
        assert_eq!(code, 1);
        assert!(out.lines().nth(1).unwrap().ends_with(",violation"));
    }

    #[test]
    fn sweep_marks_unsupported_points() {
        let (code, out, _) = run(&[
            "sweep", "--functional", "renyi", "--q", "2", "--alpha", "1", "--n-list", "10", "--format", "json",
        ]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v[0]["verdict"], "n/a");
        assert!(v[0]["message"].as_str().unwrap().contains("unsupported"));
    }
}

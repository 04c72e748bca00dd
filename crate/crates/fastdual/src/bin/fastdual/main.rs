use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use fastdual::code::{dual_product_check, sample_pair, CodeSpec, EncoderChain, Family};
use fastdual::distance::{empirical_failure_rate, exact_min_distance, sampled_chain, MAX_K_ENV};
use fastdual::emvp::run_demo;
use fastdual::rng::rng_from_seed;
use fastdual::spectral::{
    delta_from_grid, delta_m_solver, entropy_inverse, spectral_recursion, SpectralFamily, DEFAULT_GRID_TOL,
};
use fastdual::transition::{
    default_h, iowef_expected_count, markov_failure_bound, weight_tail_expectation, KernelKind, WeightModel,
};
use fastdual::verify::{
    envelope_dominance, identity_suite, middle_weight_configs, middle_weight_oracle, prime_ratio,
    restricted_comparison, CheckReport,
};
use fastdual::{BitVector, Error};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Linear-time repeat-accumulate codes, their duals and distance analysis.
///
/// Results go to stdout (or `--out`) as JSON lines; summaries go to stderr.
/// Exhaustive searches refuse `k > 28` unless FASTDUAL_MAX_K is raised.
#[derive(Parser, Debug)]
#[command(name = "fastdual", version)]
struct Cli {
    /// Worker threads for sweeps; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write results to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct CodeArgs {
    #[arg(long, default_value = "RDA")]
    family: Family,
    /// Block length (even).
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Rounds.
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct PairArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DeltaMethodArg {
    CriticalPoint,
    Grid,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum Suite {
    All,
    Envelope,
    Restricted,
    Identities,
    Ratio,
    MiddleWeight,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Emit the code spec with explicit permutations.
    Sample(CodeArgs),
    /// Encode bit strings read from stdin, one per line, coordinate 0 leftmost.
    Encode {
        #[command(flatten)]
        code: CodeArgs,
        /// Use the dual chain of the sampled pair (family must be RDA).
        #[arg(long)]
        dual: bool,
    },
    /// Check that the dual chain of a sampled pair annihilates the primal (n ≤ 16384).
    DualCheck(PairArgs),
    /// Exact minimum distance by exhaustive search (k ≤ 28).
    Distance(CodeArgs),
    /// Fraction of sampled codes with distance below --d, and the expected count of weights 1..=--d (k ≤ 28).
    FailureRate {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Expected codeword counts by weight and their sum over weights 1..=--d (n ≤ 4096).
    Iowef {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        d: usize,
        /// Boundary band width; defaults to ⌈log2(n)²⌉ capped at n/2.
        #[arg(long)]
        h: Option<usize>,
    },
    /// Split of the low-weight bound by the weight entering the last round (n ≤ 4096).
    TailSplit {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        h: Option<usize>,
    },
    /// Spectral shape table on a uniform grid (CSV by default; m ≤ 8).
    Spectral {
        #[arg(long, default_value = "A")]
        family: SpectralFamily,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        r: usize,
        #[arg(long, default_value_t = 0.0)]
        tau: f64,
        #[arg(long, default_value_t = 1e-3)]
        grid_step: f64,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
    },
    /// Relative distance threshold below which the spectral shape vanishes.
    Delta {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        r: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = DeltaMethodArg::CriticalPoint)]
        method: DeltaMethodArg,
        #[arg(long, default_value_t = 2.5e-4)]
        grid_step: f64,
    },
    /// Grid suites for the rate-function inequalities and finite-length ratio claims.
    VerifyBounds {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = 5e-3)]
        grid_step: f64,
        /// Restricted comparison: largest round count and grid step.
        #[arg(long, default_value_t = 4)]
        max_m: usize,
        #[arg(long, default_value_t = 1e-3)]
        spectral_step: f64,
        /// Ratio suite: largest block length and claimed constant.
        #[arg(long, default_value_t = 200)]
        n_max: usize,
        #[arg(long, default_value_t = 2.17)]
        constant: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Noiseless encrypted matrix-vector product round trip (n ≤ 16384).
    EmvpDemo {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = 16)]
        rows: usize,
        #[arg(long, default_value_t = 4)]
        queries: usize,
    },
    /// Median encode time per block length and successive ratios (timings vary run to run).
    BenchEncode {
        #[arg(long, default_value = "RDA")]
        family: Family,
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long, default_value_t = 14)]
        min_log: u32,
        #[arg(long, default_value_t = 20)]
        max_log: u32,
        #[arg(long, default_value_t = 7)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// JSON-lines sink; flushed to stdout or `--out` at the end.
#[derive(Default)]
struct Output {
    text: String,
    failed: bool,
}

impl Output {
    fn line<T: Serialize>(&mut self, value: &T) {
        self.text.push_str(&serde_json::to_string(value).expect("serializable"));
        self.text.push('\n');
    }

    fn raw(&mut self, s: &str) {
        self.text.push_str(s);
    }

    fn check(&mut self, ok: bool) {
        self.failed |= !ok;
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) | Error::CapExceeded { .. } | Error::Parse(_) | Error::DimensionMismatch { .. } => {
            EXIT_USAGE
        }
        Error::Internal(_) | Error::NoConvergence(_) => EXIT_CHECK_FAILED,
    }
}

fn chain_for(code: &CodeArgs) -> fastdual::Result<EncoderChain> {
    EncoderChain::from_spec(&CodeSpec::seeded(code.family, code.n, code.m, code.seed))
}

fn report(out: &mut Output, r: &CheckReport) {
    eprintln!("{} {}: worst {:.3e} (tolerance {:.3e})", if r.ok { "PASS" } else { "FAIL" }, r.name, r.worst, r.tolerance);
    out.check(r.ok);
    out.line(r);
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

fn run(cmd: Cmd, out: &mut Output) -> fastdual::Result<()> {
    match cmd {
        Cmd::Sample(code) => {
            let spec = CodeSpec::seeded(code.family, code.n, code.m, code.seed);
            let chain = EncoderChain::from_spec(&spec)?;
            let explicit = CodeSpec {
                seed: None,
                perms: Some(spec.permutations()?.iter().map(|p| (**p).clone()).collect()),
                ..spec
            };
            eprintln!("{} n={} k={} chain {}", code.family, chain.n(), chain.k(), chain.labels().join(" "));
            out.line(&json!({ "spec": explicit, "k": chain.k(), "labels": chain.labels() }));
        }
        Cmd::Encode { code, dual } => {
            let chain = if dual {
                if code.family != Family::RDA {
                    return Err(usage("--dual needs --family RDA"));
                }
                sample_pair(code.n, code.m, code.seed)?.dual().clone()
            } else {
                chain_for(&code)?
            };
            let mut count = 0;
            for line in io::stdin().lock().lines() {
                let line = line.map_err(|e| Error::Parse(e.to_string()))?;
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let msg: BitVector = line.parse()?;
                let codeword = chain.encode(&msg)?;
                out.line(&json!({ "message": msg, "codeword": codeword }));
                count += 1;
            }
            eprintln!("encoded {count} messages (k={}, n={})", chain.k(), chain.n());
        }
        Cmd::DualCheck(p) => {
            let pair = sample_pair(p.n, p.m, p.seed)?;
            let check = dual_product_check(&pair);
            eprintln!("dual check n={} m={} seed={}: {}", p.n, p.m, p.seed, if check.ok { "PASS" } else { "FAIL" });
            out.check(check.ok);
            out.line(&check);
        }
        Cmd::Distance(code) => {
            let rep = exact_min_distance(&sampled_chain(code.family, code.n, code.m, code.seed)?)?;
            eprintln!("{} n={} m={}: distance {} ({:.4})", code.family, rep.n, code.m, rep.abs_distance, rep.rel_distance);
            out.line(&rep);
        }
        Cmd::FailureRate { code, d, trials } => {
            let est = empirical_failure_rate(code.family, code.n, code.m, d, trials, code.seed)?;
            let bound = markov_failure_bound(&WeightModel::new(code.family, code.n, code.m), d)?;
            eprintln!(
                "{} n={} m={} d={}: {}/{} below d, bound {:.4}",
                code.family, code.n, code.m, d, est.failures, est.trials, bound
            );
            out.line(&json!({ "estimate": est, "markov_bound": bound }));
        }
        Cmd::Iowef { code, d, h } => {
            let res = iowef_expected_count(&WeightModel::new(code.family, code.n, code.m), d, h)?;
            eprintln!("{} n={} m={}: expected codewords of weight <= {} is {:.4e}", code.family, code.n, code.m, d, res.bound);
            out.line(&res);
        }
        Cmd::TailSplit { code, d, h } => {
            let h = h.unwrap_or_else(|| default_h(code.n));
            let split = weight_tail_expectation(&WeightModel::new(code.family, code.n, code.m), h, d)?;
            eprintln!("h={h} d={d}: star {:.4e}, starstar {:.4e}", split.star, split.starstar);
            out.line(&split);
        }
        Cmd::Spectral { family, m, r, tau, grid_step, format } => {
            let table = spectral_recursion(family, m, r, tau, grid_step)?;
            eprintln!("{family} m={m} tau={tau}: {} grid points", table.len());
            match format {
                TableFormat::Csv => out.raw(&table.to_csv()),
                TableFormat::Json => out.line(&table),
            }
        }
        Cmd::Delta { m, r, tol, method, grid_step } => {
            if matches!(method, DeltaMethodArg::Grid | DeltaMethodArg::Both) {
                let est = delta_from_grid(&spectral_recursion(SpectralFamily::A, m, r, 0.0, grid_step)?, DEFAULT_GRID_TOL);
                eprintln!("m={m} grid (step {grid_step}): delta = {:.6}", est.delta);
                out.line(&est);
            }
            if matches!(method, DeltaMethodArg::CriticalPoint | DeltaMethodArg::Both) {
                if !(2..=6).contains(&m) {
                    return Err(usage(format!("--m {m}: the critical-point method needs 2 <= m <= 6")));
                }
                let est = delta_m_solver(m, r, tol)?;
                eprintln!(
                    "m={m} critical point: delta = {:.10} (GV {:.10})",
                    est.delta,
                    entropy_inverse(1.0 - 1.0 / r as f64)?
                );
                out.line(&est);
            }
        }
        Cmd::VerifyBounds { suite, grid_step, max_m, spectral_step, n_max, constant, seed } => {
            let on = |s: Suite| suite == Suite::All || suite == s;
            if on(Suite::Identities) {
                for r in identity_suite(1e-3) {
                    report(out, &r);
                }
            }
            if on(Suite::Envelope) {
                for r in envelope_dominance(grid_step) {
                    report(out, &r);
                }
            }
            if on(Suite::Restricted) {
                for r in restricted_comparison(max_m, &[0.001, 0.01], spectral_step)? {
                    report(out, &r);
                }
            }
            if on(Suite::MiddleWeight) {
                report(out, &middle_weight_oracle(&middle_weight_configs(500, 50, seed))?);
            }
            if on(Suite::Ratio) {
                if n_max < 8 {
                    return Err(usage("--n-max must be at least 8"));
                }
                for kind in [KernelKind::A, KernelKind::D] {
                    report(out, &prime_ratio(kind, 8, n_max, constant));
                }
            }
        }
        Cmd::EmvpDemo { pair, rows, queries } => {
            let t = run_demo(pair.n, pair.m, rows, queries, pair.seed)?;
            eprintln!(
                "emvp n={} m={} rows={}: {}/{} queries exact -> {}",
                t.n,
                t.m,
                t.rows,
                t.queries.iter().filter(|q| q.ok).count(),
                t.queries.len(),
                if t.ok { "PASS" } else { "FAIL" }
            );
            out.check(t.ok);
            out.line(&t);
        }
        Cmd::BenchEncode { family, m, min_log, max_log, reps, seed } => {
            if min_log > max_log || max_log > 26 || reps == 0 {
                return Err(usage("need --min-log <= --max-log <= 26 and --reps >= 1"));
            }
            let mut prev: Option<f64> = None;
            for log in min_log..=max_log {
                let n = 1usize << log;
                let chain = chain_for(&CodeArgs { family, n, m, seed })?;
                let msg = BitVector::random(&mut rng_from_seed(seed), chain.k());
                let times: Vec<f64> = (0..reps)
                    .map(|_| {
                        let t = Instant::now();
                        let c = chain.encode(&msg).expect("shapes match");
                        std::hint::black_box(c);
                        t.elapsed().as_secs_f64()
                    })
                    .collect();
                let med = median(times);
                let ratio = prev.map(|p| med / p);
                eprintln!("n=2^{log}: median {:.3e} s{}", med, ratio.map(|r| format!(", ratio {r:.2}")).unwrap_or_default());
                out.line(&json!({ "n": n, "m": m, "family": family, "median_seconds": med, "ratio_to_half": ratio }));
                prev = Some(med);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let mut out = Output::default();
    if let Err(e) = run(cli.cmd, &mut out) {
        eprintln!("error: {e}");
        if matches!(e, Error::CapExceeded { .. }) {
            eprintln!("(the exhaustive cap can be raised through {MAX_K_ENV})");
        }
        return ExitCode::from(exit_code(&e));
    }
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &out.text),
        None => io::stdout().lock().write_all(out.text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: writing output: {e}");
        return ExitCode::from(EXIT_CHECK_FAILED);
    }
    if out.failed {
        ExitCode::from(EXIT_CHECK_FAILED)
    } else {
        ExitCode::SUCCESS
    }
}

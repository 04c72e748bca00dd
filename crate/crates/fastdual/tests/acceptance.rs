//! Acceptance criteria, one PASS/FAIL line each.
//!
//! The run succeeds when the failing set equals `KNOWN_FAILURES`; a known failure
//! that starts passing also fails the run so the list stays accurate.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fastdual::code::{dual_product_check, sample_pair, Family};
use fastdual::distance::empirical_failure_rate;
use fastdual::emvp::offline_encrypt;
use fastdual::rng::{derive_seed, rng_from_seed, uniform_below};
use fastdual::spectral::{delta_from_grid, delta_m_solver, entropy_inverse, spectral_recursion, SpectralFamily};
use fastdual::transition::{brute_force_transition, markov_failure_bound, p_exact, KernelKind, WeightModel};
use fastdual::verify::{
    envelope_dominance, identity_suite, middle_weight_configs, middle_weight_oracle, prime_ratio,
    restricted_comparison,
};
use fastdual::{apply, BitVector, DenseMatrixF2, KernelOp};
use num_rational::BigRational;
use num_traits::One;

/// The ratio constant does not hold: `p/p′` grows like `√n` (about 3.78 at n = 200).
const KNOWN_FAILURES: &[u32] = &[5];

type Criterion = (u32, &'static str, fn() -> Outcome, u64);

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn kernel_identities() -> Outcome {
    const VECTORS: usize = 10_000;
    let mut bad = 0;
    for (i, n) in [5usize, 64, 1000, 1 << 16].into_iter().enumerate() {
        let mut rng = rng_from_seed(derive_seed(1, i as u64));
        for _ in 0..VECTORS {
            let x = BitVector::random(&mut rng, n);
            let y = BitVector::random(&mut rng, n);
            let ax = apply(&KernelOp::Accumulate, &x).unwrap();
            let ok = apply(&KernelOp::Derivative, &ax).unwrap() == x
                && apply(&KernelOp::Accumulate, &apply(&KernelOp::Derivative, &x).unwrap()).unwrap() == x
                && ax.dot(&y) == x.dot(&apply(&KernelOp::AccumulateT, &y).unwrap());
            bad += usize::from(!ok);
        }
    }
    outcome(bad == 0, format!("{} vectors per length, {bad} violations", VECTORS))
}

fn duality() -> Outcome {
    let mut rng = rng_from_seed(2);
    let mut bad = Vec::new();
    for i in 0..200u64 {
        let n = 2 * (2 + uniform_below(&mut rng, 255) as usize);
        let m = 1 + uniform_below(&mut rng, 4) as usize;
        if !dual_product_check(&sample_pair(n, m, derive_seed(2, i)).unwrap()).ok {
            bad.push((n, m, i));
        }
    }
    outcome(bad.is_empty(), format!("200 pairs, n in [4, 512], m in [1, 4]; failures {bad:?}"))
}

fn linear_time() -> Outcome {
    const ROUNDS: usize = 31;
    const WORK: usize = 1 << 21;
    let sizes: Vec<usize> = (14..=20).map(|log| 1usize << log).collect();
    let setups: Vec<_> = sizes
        .iter()
        .map(|&n| (sample_pair(n, 4, 3).unwrap(), BitVector::random(&mut rng_from_seed(3), n / 2)))
        .collect();
    // Sizes are interleaved within each round so background load hits all of them alike;
    // each sample encodes about WORK bits in total.
    let mut samples = vec![Vec::with_capacity(ROUNDS); sizes.len()];
    for _ in 0..ROUNDS {
        for (i, (pair, msg)) in setups.iter().enumerate() {
            let batch = (WORK / sizes[i]).max(1);
            let t = Instant::now();
            for _ in 0..batch {
                std::hint::black_box(pair.primal().encode(std::hint::black_box(msg)).unwrap());
            }
            samples[i].push(t.elapsed().as_secs_f64() / batch as f64);
        }
    }
    let medians: Vec<f64> = samples
        .into_iter()
        .map(|mut t| {
            t.sort_by(f64::total_cmp);
            t[ROUNDS / 2]
        })
        .collect();
    let ratios: Vec<f64> = medians.windows(2).map(|w| w[1] / w[0]).collect();
    let ok = ratios.iter().all(|r| (1.5..=3.0).contains(r));
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.2}")).collect();
    outcome(ok, format!("t(2n)/t(n) for n = 2^14..2^19: [{}], allowed [1.5, 3.0]", shown.join(", ")))
}

fn exact_probabilities() -> Outcome {
    let mut mismatches = 0;
    for n in 1..=14 {
        for a in 0..=n {
            for kind in [KernelKind::A, KernelKind::D] {
                let brute = brute_force_transition(n, a, kind).unwrap();
                mismatches += (0..=n).filter(|&b| p_exact(kind, n, a, b) != brute[b]).count();
            }
        }
    }
    let mut bad_rows = 0;
    for n in 1..=64 {
        for a in 0..=n {
            for kind in [KernelKind::A, KernelKind::D] {
                let sum: BigRational = (0..=n).map(|b| p_exact(kind, n, a, b)).sum();
                bad_rows += usize::from(!sum.is_one());
            }
        }
    }
    outcome(
        mismatches == 0 && bad_rows == 0,
        format!("{mismatches} entries differ from enumeration (n <= 14), {bad_rows} rows not summing to 1 (n <= 64)"),
    )
}

fn ratio_constant() -> Outcome {
    let reports = [KernelKind::A, KernelKind::D].map(|k| prime_ratio(k, 8, 200, 2.17));
    let detail: Vec<String> = reports
        .iter()
        .map(|r| format!("{}: observed {:.4} at (n, a, b) = {:?}", r.name, r.worst, r.at))
        .collect();
    outcome(reports.iter().all(|r| r.ok), detail.join("; "))
}

fn table_values() -> Outcome {
    const SOLVER_TOL: f64 = 1e-6;
    const GRID_TOL: f64 = 5e-3;
    const GRID_STEP: f64 = 2.5e-4;
    const GV: f64 = 0.1100278644;
    let mut ok = true;
    let mut parts = Vec::new();
    for (m, want) in [(2, 0.02859547585), (3, 0.1033989603), (4, 0.1099391081)] {
        let solved = delta_m_solver(m, 2, 1e-12).unwrap().delta;
        let table = spectral_recursion(SpectralFamily::A, m, 2, 0.0, GRID_STEP).unwrap();
        let grid = delta_from_grid(&table, fastdual::spectral::DEFAULT_GRID_TOL).delta;
        ok &= (solved - want).abs() <= SOLVER_TOL && (grid - want).abs() <= GRID_TOL;
        parts.push(format!("m={m}: solver {solved:.10}, grid {grid:.5} (want {want})"));
    }
    let gv = entropy_inverse(0.5).unwrap();
    ok &= (gv - GV).abs() <= 1e-9;
    parts.push(format!("h^-1(1/2) = {gv:.10}"));
    outcome(ok, parts.join("; "))
}

fn envelope_theorems() -> Outcome {
    let env = envelope_dominance(0.005);
    let restricted = restricted_comparison(4, &[0.001, 0.01], 1e-3).unwrap();
    let worst_env = env.iter().map(|r| r.worst).fold(f64::NEG_INFINITY, f64::max);
    let worst_res = restricted.iter().map(|r| r.worst).fold(f64::NEG_INFINITY, f64::max);
    let ok = env.iter().chain(&restricted).all(|r| r.ok);
    outcome(
        ok,
        format!("max f - g = {worst_env:.2e} (tol 1e-9); max r_DA/AD - r_A = {worst_res:.2e} over {} tables (tol 1e-6)", restricted.len()),
    )
}

fn identities() -> Outcome {
    let reports = identity_suite(1e-3);
    let failed: Vec<&str> = reports.iter().filter(|r| !r.ok).map(|r| r.name.as_str()).collect();
    outcome(failed.is_empty(), format!("{} checks, failed {failed:?}", reports.len()))
}

fn statistical_consistency() -> Outcome {
    const TRIALS: usize = 300;
    let model = WeightModel::new(Family::RDA, 32, 3);
    let (d, bound) = (1..=32)
        .map(|d| (d, markov_failure_bound(&model, d).unwrap()))
        .take_while(|&(_, b)| b < 0.5)
        .last()
        .unwrap();
    let est = empirical_failure_rate(Family::RDA, 32, 3, d, TRIALS, 9).unwrap();
    let sigma = (bound * (1.0 - bound) / TRIALS as f64).sqrt();
    outcome(
        est.p_hat <= bound + 3.0 * sigma,
        format!("d = {d}: empirical {:.4} ({} / {TRIALS}) vs bound {bound:.4} + 3 sigma {:.4}", est.p_hat, est.failures, 3.0 * sigma),
    )
}

fn maximizers() -> Outcome {
    let r = middle_weight_oracle(&middle_weight_configs(500, 50, 10)).unwrap();
    outcome(r.ok, format!("{} configurations, worst |b - predicted| = {} at {:?}", r.evaluated, r.worst, r.at))
}

fn emvp_roundtrip() -> Outcome {
    let pair = sample_pair(128, 3, 11).unwrap();
    let mut bad = 0;
    for t in 0..100u64 {
        let mut rng = rng_from_seed(derive_seed(11, t));
        let rows = 1 + uniform_below(&mut rng, 64) as usize;
        let matrix = DenseMatrixF2::from_rows(&(0..rows).map(|_| BitVector::random(&mut rng, 64)).collect::<Vec<_>>()).unwrap();
        let q = BitVector::random(&mut rng, 64);
        let inst = offline_encrypt(&matrix, &pair, t).unwrap();
        bad += usize::from(inst.roundtrip(&q, t).unwrap() != matrix.mul_vec(&q).unwrap());
    }
    outcome(bad == 0, format!("100 products at n = 128, m = 3; {bad} mismatches"))
}

fn determinism() -> Outcome {
    let cases: &[&[&str]] = &[
        &["sample", "--n", "64", "--m", "3", "--seed", "12"],
        &["distance", "--n", "32", "--m", "2", "--seed", "12"],
        &["iowef", "--n", "128", "--m", "3", "--d", "6"],
        &["failure-rate", "--n", "24", "--m", "2", "--d", "4", "--trials", "30"],
        &["delta", "--m", "3", "--method", "both", "--grid-step", "1e-3"],
        &["emvp-demo", "--n", "128", "--m", "3", "--seed", "12"],
    ];
    let mut bad = Vec::new();
    for args in cases {
        let run = || Command::new(env!("CARGO_BIN_EXE_fastdual")).args(*args).output().unwrap();
        let (a, b) = (run(), run());
        if !a.status.success() || a.stdout.is_empty() || a.stdout != b.stdout {
            bad.push(args[0]);
        }
    }
    outcome(bad.is_empty(), format!("{} commands run twice, differing {bad:?}", cases.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        (1, "inverse/transpose kernels", kernel_identities, 5),
        (2, "duality of sampled pairs", duality, 30),
        (3, "linear-time encoding", linear_time, 60),
        (4, "exact transition probabilities", exact_probabilities, 120),
        (5, "relaxed-probability ratio <= 2.17", ratio_constant, 300),
        (6, "distance thresholds", table_values, 600),
        (7, "envelope and restricted comparison", envelope_theorems, 600),
        (8, "identity suite", identities, 60),
        (9, "failure rate vs expected-count bound", statistical_consistency, 600),
        (10, "middle-weight maximizers", maximizers, 60),
        (11, "encrypted matrix-vector round trip", emvp_roundtrip, 10),
        (12, "CLI determinism", determinism, 120),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, run, limit) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let ok = out.ok && elapsed <= Duration::from_secs(limit);
        println!(
            "{} criterion {id:>2} {name}: {} [{:.2} s of {limit} s]",
            if ok { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
        if !ok {
            failed.push(id);
        }
    }
    let expected: Vec<u32> =
        KNOWN_FAILURES.iter().copied().filter(|id| only.is_empty() || only.contains(id)).collect();
    println!("failed {failed:?}; documented failures {expected:?}");
    if failed == expected {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

use fastdual::code::{sample_pair, CodeSpec, EncoderChain, Family};
use fastdual::distance::{exact_min_distance, weight_spectrum, wilson_interval, SpectrumMode};
use fastdual::BitVector;

/// Plain enumeration: encode every nonzero message.
fn naive(chain: &EncoderChain) -> (usize, Vec<u64>) {
    let k = chain.k();
    let mut best = usize::MAX;
    let mut hist = vec![0u64; chain.n() + 1];
    hist[0] = 1;
    for v in 1u64..1 << k {
        let w = chain.encode(&BitVector::from_u64(v, k)).unwrap().weight();
        hist[w] += 1;
        best = best.min(w);
    }
    (best, hist)
}

#[test]
fn gray_code_scan_matches_enumeration() {
    for seed in 0..12 {
        for (family, n) in [(Family::RDA, 24), (Family::RAD, 20), (Family::RA, 18)] {
            let chain = EncoderChain::from_spec(&CodeSpec::seeded(family, n, 1 + seed as usize % 3, seed)).unwrap();
            let (d, hist) = naive(&chain);
            let report = exact_min_distance(&chain).unwrap();
            assert_eq!(report.abs_distance, d, "{family} n={n} seed={seed}");
            assert_eq!(chain.encode(&report.argmin_message).unwrap().weight(), d);
            let spec = weight_spectrum(&chain, SpectrumMode::Exhaustive).unwrap();
            let counts: Vec<u64> = spec.counts.iter().map(|&c| c as u64).collect();
            assert_eq!(counts, hist);
        }
    }
}

#[test]
fn argmin_is_smallest_message() {
    let chain = sample_pair(20, 1, 4).unwrap().primal().clone();
    let report = exact_min_distance(&chain).unwrap();
    let value = |x: &BitVector| x.ones().map(|i| 1u64 << i).sum::<u64>();
    let first = (1u64..1 << 10)
        .find(|&v| chain.encode(&BitVector::from_u64(v, 10)).unwrap().weight() == report.abs_distance)
        .unwrap();
    assert_eq!(value(&report.argmin_message), first);
}

#[test]
fn results_do_not_depend_on_threads() {
    let chain = sample_pair(40, 2, 9).unwrap().primal().clone();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            let d = exact_min_distance(&chain).unwrap();
            let s = weight_spectrum(&chain, SpectrumMode::Sampled { samples: 5000, seed: 2 }).unwrap();
            serde_json::to_string(&(d, s)).unwrap()
        })
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn sampled_spectrum_is_unbiased() {
    let chain = sample_pair(24, 2, 5).unwrap().primal().clone();
    let exact = weight_spectrum(&chain, SpectrumMode::Exhaustive).unwrap();
    let samples = 200_000;
    let est = weight_spectrum(&chain, SpectrumMode::Sampled { samples, seed: 1 }).unwrap();
    let total = 4096.0;
    for (w, (&e, &s)) in exact.counts.iter().zip(&est.counts).enumerate() {
        let p = e / total;
        let sigma = total * (p * (1.0 - p) / samples as f64).sqrt();
        assert!((e - s).abs() <= 4.0 * sigma + 1e-9, "w={w}: {e} vs {s}");
    }
}

#[test]
fn wilson_interval_contains_estimate() {
    for (f, t) in [(0, 10), (3, 10), (10, 10), (50, 300)] {
        let (lo, hi) = wilson_interval(f, t);
        let p = f as f64 / t as f64;
        assert!(lo <= p && p <= hi && 0.0 <= lo && hi <= 1.0);
    }
}

#[test]
fn cap_is_enforced() {
    let chain = sample_pair(80, 1, 0).unwrap().primal().clone();
    assert!(matches!(exact_min_distance(&chain), Err(fastdual::Error::CapExceeded { .. })));
}

//! Exact and empirical minimum distance of sampled codes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::{sample_pair, CodeSpec, EncoderChain, Family};
use crate::error::{invalid, Error, Result};
use crate::gf2::BitVector;
use crate::rng::{derive_seed, rng_from_seed};

pub const DEFAULT_MAX_K: usize = 28;
pub const SPECTRUM_MAX_K: usize = 24;
pub const MAX_K_ENV: &str = "FASTDUAL_MAX_K";

/// Message-prefix bits fixed per shard; fixed so results never depend on threads.
const SHARD_BITS: usize = 8;

/// Exhaustive cap on `k`, overridable through `FASTDUAL_MAX_K`.
pub fn max_k() -> usize {
    std::env::var(MAX_K_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_MAX_K)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exhaustive,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub n: usize,
    pub k: usize,
    pub abs_distance: usize,
    pub rel_distance: f64,
    /// Among minimum-weight messages, the one with the smallest integer value
    /// (coordinate `i` carrying weight `2^i`).
    pub argmin_message: BitVector,
    pub method: Method,
    pub messages_scanned: u64,
}

/// Generator columns packed contiguously, `stride` words each.
struct Columns {
    words: Vec<u64>,
    stride: usize,
    k: usize,
}

impl Columns {
    fn new(chain: &EncoderChain) -> Result<Self> {
        let cols = chain.generator_columns()?;
        let stride = chain.n().div_ceil(64);
        let words = cols.iter().flat_map(|c| c.words().iter().copied()).collect();
        Ok(Self { words, stride, k: chain.k() })
    }

    fn col(&self, j: usize) -> &[u64] {
        &self.words[j * self.stride..(j + 1) * self.stride]
    }

    fn shard_bits(&self) -> usize {
        SHARD_BITS.min(self.k)
    }

    /// Visits every message whose top `shard_bits` bits equal `shard`, in Gray order,
    /// passing `(message, codeword weight)`.
    fn walk_shard(&self, shard: u64, mut visit: impl FnMut(u64, usize)) {
        let low = self.k - self.shard_bits();
        let mut cur = vec![0u64; self.stride];
        let mut msg = shard << low;
        for b in 0..self.shard_bits() {
            if (shard >> b) & 1 == 1 {
                for (c, s) in cur.iter_mut().zip(self.col(low + b)) {
                    *c ^= s;
                }
            }
        }
        let weight = |cur: &[u64]| cur.iter().map(|w| w.count_ones() as usize).sum::<usize>();
        visit(msg, weight(&cur));
        for i in 1u64..(1u64 << low) {
            let j = i.trailing_zeros() as usize;
            for (c, s) in cur.iter_mut().zip(self.col(j)) {
                *c ^= s;
            }
            msg ^= 1 << j;
            visit(msg, weight(&cur));
        }
    }
}

fn check_k(k: usize, cap: usize) -> Result<()> {
    if k > cap {
        return Err(Error::CapExceeded { what: "message length k", value: k, cap });
    }
    if k == 0 {
        return Err(invalid("message length must be positive"));
    }
    Ok(())
}

/// Scans all `2^k − 1` nonzero messages by Gray-code column updates.
pub fn exact_min_distance(chain: &EncoderChain) -> Result<DistanceReport> {
    check_k(chain.k(), max_k())?;
    let cols = Columns::new(chain)?;
    let shards = 1u64 << cols.shard_bits();
    let (weight, msg) = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut best = (usize::MAX, u64::MAX);
            cols.walk_shard(shard, |msg, w| {
                if msg != 0 && (w, msg) < best {
                    best = (w, msg);
                }
            });
            best
        })
        .min()
        .expect("at least one shard");
    Ok(DistanceReport {
        n: chain.n(),
        k: chain.k(),
        abs_distance: weight,
        rel_distance: weight as f64 / chain.n() as f64,
        argmin_message: BitVector::from_u64(msg, chain.k()),
        method: Method::Exhaustive,
        messages_scanned: (1u64 << chain.k()) - 1,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureEstimate {
    pub family: Family,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub seed: u64,
    pub trials: usize,
    pub failures: usize,
    pub p_hat: f64,
    pub wilson_interval: (f64, f64),
}

/// 95% Wilson score interval for `failures` successes in `trials` draws.
pub fn wilson_interval(failures: usize, trials: usize) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = failures as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if failures == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if failures == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Chain measured by failure-rate experiments: RDA is the primal of a sampled
/// pair, RAD its dual, RA a seeded RA^m chain with `r = 2`.
pub fn sampled_chain(family: Family, n: usize, m: usize, seed: u64) -> Result<EncoderChain> {
    match family {
        Family::RDA => Ok(sample_pair(n, m, seed)?.primal().clone()),
        Family::RAD => Ok(sample_pair(n, m, seed)?.dual().clone()),
        Family::RA => EncoderChain::from_spec(&CodeSpec::seeded(Family::RA, n, m, seed)),
    }
}

/// Fraction of `trials` independently sampled codes whose distance is below `d`.
pub fn empirical_failure_rate(
    family: Family,
    n: usize,
    m: usize,
    d: usize,
    trials: usize,
    seed: u64,
) -> Result<FailureEstimate> {
    check_k(n / 2, max_k())?;
    let distances = (0..trials)
        .into_par_iter()
        .map(|t| Ok(exact_min_distance(&sampled_chain(family, n, m, derive_seed(seed, t as u64))?)?.abs_distance))
        .collect::<Result<Vec<usize>>>()?;
    let failures = distances.iter().filter(|&&dist| dist < d).count();
    Ok(FailureEstimate {
        family,
        n,
        m,
        d,
        seed,
        trials,
        failures,
        p_hat: if trials == 0 { 0.0 } else { failures as f64 / trials as f64 },
        wilson_interval: wilson_interval(failures, trials),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumMode {
    Exhaustive,
    /// Uniform messages (zero included); bin `w` is estimated as `2^k · hits_w / samples`.
    Sampled { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpectrum {
    pub n: usize,
    pub k: usize,
    pub method: Method,
    pub samples: u64,
    /// Number of codewords (zero word included) of each absolute weight `0..=n`.
    pub counts: Vec<f64>,
}

pub fn weight_spectrum(chain: &EncoderChain, mode: SpectrumMode) -> Result<WeightSpectrum> {
    let n = chain.n();
    match mode {
        SpectrumMode::Exhaustive => {
            check_k(chain.k(), SPECTRUM_MAX_K)?;
            let cols = Columns::new(chain)?;
            let counts = (0..1u64 << cols.shard_bits())
                .into_par_iter()
                .map(|shard| {
                    let mut hist = vec![0u64; n + 1];
                    cols.walk_shard(shard, |_, w| hist[w] += 1);
                    hist
                })
                .reduce(|| vec![0u64; n + 1], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
            Ok(WeightSpectrum {
                n,
                k: chain.k(),
                method: Method::Exhaustive,
                samples: 1u64 << chain.k(),
                counts: counts.into_iter().map(|c| c as f64).collect(),
            })
        }
        SpectrumMode::Sampled { samples, seed } => {
            if samples == 0 {
                return Err(invalid("sampled spectrum needs at least one sample"));
            }
            let mut rng = rng_from_seed(seed);
            let mut hist = vec![0u64; n + 1];
            for _ in 0..samples {
                let msg = BitVector::random(&mut rng, chain.k());
                hist[chain.encode(&msg)?.weight()] += 1;
            }
            let scale = (chain.k() as f64).exp2() / samples as f64;
            Ok(WeightSpectrum {
                n,
                k: chain.k(),
                method: Method::Sampled,
                samples: samples as u64,
                counts: hist.into_iter().map(|h| h as f64 * scale).collect(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::{KernelOp, Permutation};
    use crate::code::DualPair;

    #[test]
    fn identity_pair_distance() {
        let pair = DualPair::from_permutations(4, vec![Permutation::identity(4); 2]).unwrap();
        let rep = exact_min_distance(pair.dual()).unwrap();
        assert_eq!(rep.abs_distance, 2);
        assert_eq!(rep.argmin_message.to_string(), "10");
        assert_eq!(rep.messages_scanned, 3);
    }

    #[test]
    fn repetition_only_distance() {
        let chain = EncoderChain::from_ops(vec![KernelOp::Repeat(2)], 3).unwrap();
        let rep = exact_min_distance(&chain).unwrap();
        assert_eq!(rep.abs_distance, 2);
        assert_eq!(rep.rel_distance, 2.0 / 6.0);
    }

    #[test]
    fn wilson_interval_reference() {
        // 10 of 100: interval (0.0552, 0.1744) to four places.
        let (lo, hi) = wilson_interval(10, 100);
        assert!((lo - 0.05523).abs() < 1e-4 && (hi - 0.17437).abs() < 1e-4, "{lo} {hi}");
        assert_eq!(wilson_interval(0, 50).0, 0.0);
    }

    #[test]
    fn d_one_never_fails() {
        let est = empirical_failure_rate(Family::RDA, 16, 2, 1, 40, 9).unwrap();
        assert_eq!(est.failures, 0);
    }

    #[test]
    fn spectrum_basics() {
        let pair = sample_pair(16, 2, 4).unwrap();
        let spec = weight_spectrum(pair.primal(), SpectrumMode::Exhaustive).unwrap();
        assert_eq!(spec.counts.iter().sum::<f64>(), 256.0);
        assert_eq!(spec.counts[0], 1.0);
        let mean: f64 = spec.counts.iter().enumerate().map(|(w, c)| w as f64 * c).sum::<f64>() / 256.0;
        assert!((mean - 8.0).abs() <= 0.8, "{mean}");
        let sampled =
            weight_spectrum(pair.primal(), SpectrumMode::Sampled { samples: 20_000, seed: 1 }).unwrap();
        assert!((sampled.counts.iter().sum::<f64>() - 256.0).abs() < 1e-9);
    }

    #[test]
    fn caps_are_enforced() {
        let pair = sample_pair(60, 1, 0).unwrap();
        assert!(matches!(
            weight_spectrum(pair.primal(), SpectrumMode::Exhaustive),
            Err(Error::CapExceeded { .. })
        ));
    }
}

//! Weight-transition probabilities of `A` and `D`, their relaxed half-integer
//! forms, and the expected weight enumerator of the three code families.
//!
//! `p_A(n, a, b)` is the probability that `A` maps a uniform weight-`a` vector
//! of length `n` to weight `b`; `p_D` likewise for `D`. Transposes share the
//! same distributions.

use std::f64::consts::LN_2;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::Family;
use crate::error::{invalid, Error, Result};

pub type ExactProb = BigRational;

pub const BRUTE_FORCE_MAX_N: usize = 20;
pub const IOWEF_MAX_N: usize = 4096;
pub const EXACT_KERNEL_MAX_N: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    A,
    D,
}

pub fn binomial_exact(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `(lo, hi)` with `p_A(n, a, b) > 0` exactly for `lo ≤ b ≤ hi` (`a ≥ 1`).
pub fn support_a(n: usize, a: usize) -> (usize, usize) {
    (a.div_ceil(2), n - a / 2)
}

/// `(lo, hi)` with `p_D(n, a, b) > 0` exactly for `lo ≤ a ≤ hi` (`b ≥ 1`).
pub fn support_d(n: usize, b: usize) -> (usize, usize) {
    (b.div_ceil(2), n - b / 2)
}

fn in_support_a(n: usize, a: usize, b: usize) -> bool {
    if a == 0 || b == 0 {
        return a == 0 && b == 0;
    }
    let (lo, hi) = support_a(n, a);
    a <= n && b <= n && lo <= b && b <= hi
}

fn in_support_d(n: usize, a: usize, b: usize) -> bool {
    if a == 0 || b == 0 {
        return a == 0 && b == 0;
    }
    let (lo, hi) = support_d(n, b);
    a <= n && b <= n && lo <= a && a <= hi
}

/// `C(n−b, ⌊a/2⌋)·C(b−1, ⌈a/2⌉−1) / C(n, a)`; exact zero off the support.
pub fn p_a_exact(n: usize, a: usize, b: usize) -> ExactProb {
    if !in_support_a(n, a, b) {
        return BigRational::zero();
    }
    if a == 0 {
        return BigRational::one();
    }
    let num = binomial_exact(n - b, a / 2) * binomial_exact(b - 1, a.div_ceil(2) - 1);
    BigRational::new(num, binomial_exact(n, a))
}

/// `C(n−a, ⌊b/2⌋)·C(a−1, ⌈b/2⌉−1) / C(n, a)`; exact zero off the support.
pub fn p_d_exact(n: usize, a: usize, b: usize) -> ExactProb {
    if !in_support_d(n, a, b) {
        return BigRational::zero();
    }
    if b == 0 {
        return BigRational::one();
    }
    let num = binomial_exact(n - a, b / 2) * binomial_exact(a - 1, b.div_ceil(2) - 1);
    BigRational::new(num, binomial_exact(n, a))
}

pub fn p_exact(kind: KernelKind, n: usize, a: usize, b: usize) -> ExactProb {
    match kind {
        KernelKind::A => p_a_exact(n, a, b),
        KernelKind::D => p_d_exact(n, a, b),
    }
}

/// Exact output-weight distribution of the kernel on all weight-`a` inputs.
pub fn brute_force_transition(n: usize, a: usize, kind: KernelKind) -> Result<Vec<ExactProb>> {
    if n == 0 || n > BRUTE_FORCE_MAX_N {
        return Err(Error::CapExceeded { what: "brute-force length n", value: n, cap: BRUTE_FORCE_MAX_N });
    }
    if a > n {
        return Err(invalid(format!("weight {a} exceeds length {n}")));
    }
    let mask = (1u32 << n) - 1;
    let mut counts = vec![0u64; n + 1];
    for x in (0..=mask).filter(|x| x.count_ones() as usize == a) {
        let y = match kind {
            KernelKind::A => {
                let mut parity = 0;
                let mut y = 0u32;
                for i in 0..n {
                    parity ^= (x >> i) & 1;
                    y |= parity << i;
                }
                y
            }
            KernelKind::D => (x ^ (x << 1)) & mask,
        };
        counts[y.count_ones() as usize] += 1;
    }
    let total = binomial_exact(n, a);
    Ok(counts.into_iter().map(|c| BigRational::new(BigInt::from(c), total.clone())).collect())
}

/// `ln x!` for real `x > −1`.
pub fn ln_factorial(x: f64) -> f64 {
    libm::lgamma(x + 1.0)
}

/// `ln C(top, bottom)` for integer or half-integer arguments; `−∞` when
/// `bottom < 0` or `top − bottom < 0`.
pub fn ln_half_binomial(top: f64, bottom: f64) -> f64 {
    if bottom < 0.0 || top - bottom < 0.0 {
        return f64::NEG_INFINITY;
    }
    ln_factorial(top) - ln_factorial(bottom) - ln_factorial(top - bottom)
}

/// Binomial coefficient extended to halves through `Γ`; exact for integers
/// whose value fits in 53 bits.
pub fn half_binomial(top: f64, bottom: f64) -> f64 {
    if bottom < 0.0 || top - bottom < 0.0 {
        return 0.0;
    }
    if top.fract() == 0.0 && bottom.fract() == 0.0 && top <= 1e6 {
        let (n, k) = (top as u64, bottom as u64);
        let k = k.min(n - k);
        let mut acc: u128 = 1;
        let mut exact = true;
        for i in 0..k {
            match acc.checked_mul(u128::from(n - i)) {
                Some(v) if v < 1 << 100 => acc = v / u128::from(i + 1),
                _ => {
                    exact = false;
                    break;
                }
            }
        }
        if exact && acc < 1 << 53 {
            return acc as f64;
        }
    }
    ln_half_binomial(top, bottom).exp()
}

/// `log2 p_A′(n, a, b) = log2 [C(n−b, a/2)·C(b, a/2) / C(n, a)]`.
pub fn log2_p_a_prime(n: usize, a: usize, b: usize) -> f64 {
    let (n, a, b) = (n as f64, a as f64, b as f64);
    if a > n || b > n {
        return f64::NEG_INFINITY;
    }
    (ln_half_binomial(n - b, a / 2.0) + ln_half_binomial(b, a / 2.0) - ln_half_binomial(n, a)) / LN_2
}

/// `log2 p_D′(n, a, b) = log2 [C(n−a, b/2)·C(a, b/2) / C(n, a)]`.
pub fn log2_p_d_prime(n: usize, a: usize, b: usize) -> f64 {
    let (n, a, b) = (n as f64, a as f64, b as f64);
    if a > n || b > n {
        return f64::NEG_INFINITY;
    }
    (ln_half_binomial(n - a, b / 2.0) + ln_half_binomial(a, b / 2.0) - ln_half_binomial(n, a)) / LN_2
}

pub fn p_a_prime(n: usize, a: usize, b: usize) -> f64 {
    log2_p_a_prime(n, a, b).exp2()
}

pub fn p_d_prime(n: usize, a: usize, b: usize) -> f64 {
    log2_p_d_prime(n, a, b).exp2()
}

/// Table of `ln k!` for `k ≤ n` and the natural-log transition probabilities built from it.
#[derive(Clone, Debug)]
pub struct LnTables {
    n: usize,
    ln_fact: Vec<f64>,
}

impl LnTables {
    pub fn new(n: usize) -> Self {
        Self { n, ln_fact: (0..=n).map(|k| ln_factorial(k as f64)).collect() }
    }

    #[inline]
    pub fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        if k > n {
            return f64::NEG_INFINITY;
        }
        self.ln_fact[n] - self.ln_fact[k] - self.ln_fact[n - k]
    }

    /// Natural log of `p_kind(n, a, b)`, `−∞` off the support.
    #[inline]
    pub fn ln_p(&self, kind: KernelKind, a: usize, b: usize) -> f64 {
        let n = self.n;
        match kind {
            KernelKind::A if in_support_a(n, a, b) => {
                if a == 0 {
                    return 0.0;
                }
                self.ln_binomial(n - b, a / 2) + self.ln_binomial(b - 1, a.div_ceil(2) - 1) - self.ln_binomial(n, a)
            }
            KernelKind::D if in_support_d(n, a, b) => {
                if b == 0 {
                    return 0.0;
                }
                self.ln_binomial(n - a, b / 2) + self.ln_binomial(a - 1, b.div_ceil(2) - 1) - self.ln_binomial(n, a)
            }
            _ => f64::NEG_INFINITY,
        }
    }
}

/// `(n+1) × (n+1)` matrix of `log2 p(a, b)`, row `a`, column `b`.
#[derive(Clone, Debug)]
pub struct TransitionKernel {
    pub n: usize,
    pub kind: KernelKind,
    log2: Vec<f64>,
}

impl TransitionKernel {
    pub fn new(n: usize, kind: KernelKind) -> Result<Self> {
        if n == 0 || n > IOWEF_MAX_N {
            return Err(Error::CapExceeded { what: "kernel length n", value: n, cap: IOWEF_MAX_N });
        }
        let t = LnTables::new(n);
        let log2 = (0..=n)
            .into_par_iter()
            .flat_map_iter(|a| (0..=n).map(move |b| (a, b)))
            .map(|(a, b)| t.ln_p(kind, a, b) / LN_2)
            .collect();
        Ok(Self { n, kind, log2 })
    }

    pub fn log2(&self, a: usize, b: usize) -> f64 {
        self.log2[a * (self.n + 1) + b]
    }

    pub fn prob(&self, a: usize, b: usize) -> f64 {
        self.log2(a, b).exp2()
    }

    /// Exact rational rows, available for `n ≤ 64`.
    pub fn exact_rows(&self) -> Result<Vec<Vec<ExactProb>>> {
        if self.n > EXACT_KERNEL_MAX_N {
            return Err(Error::CapExceeded { what: "exact kernel length n", value: self.n, cap: EXACT_KERNEL_MAX_N });
        }
        Ok((0..=self.n).map(|a| (0..=self.n).map(|b| p_exact(self.kind, self.n, a, b)).collect()).collect())
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

/// `ln Σ exp(x_i)` with max shifting; `−∞` for an empty or all-`−∞` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + compensated_sum(xs.iter().map(|&x| (x - max).exp())).ln()
}

/// Parameters of the expected-weight dynamic program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightModel {
    pub family: Family,
    pub n: usize,
    pub m: usize,
    pub r: usize,
}

impl WeightModel {
    pub fn new(family: Family, n: usize, m: usize) -> Self {
        Self { family, n, m, r: 2 }
    }

    fn validate(&self) -> Result<()> {
        if self.n > IOWEF_MAX_N {
            return Err(Error::CapExceeded { what: "block length n", value: self.n, cap: IOWEF_MAX_N });
        }
        if self.r == 0 || self.n == 0 || !self.n.is_multiple_of(self.r) {
            return Err(invalid(format!("n = {} must be a positive multiple of r = {}", self.n, self.r)));
        }
        if self.family != Family::RA && self.r != 2 {
            return Err(invalid("RAD and RDA need r = 2"));
        }
        if self.m == 0 {
            return Err(invalid("m must be at least 1"));
        }
        Ok(())
    }

    /// Kernels of one round in application order.
    fn round(&self) -> &'static [KernelKind] {
        match self.family {
            Family::RA => &[KernelKind::A],
            Family::RAD => &[KernelKind::A, KernelKind::D],
            Family::RDA => &[KernelKind::D, KernelKind::A],
        }
    }

    /// `ln` of the number of nonzero messages reaching each weight after the repetition.
    fn initial(&self, t: &LnTables) -> Vec<f64> {
        let k = self.n / self.r;
        let mut v = vec![f64::NEG_INFINITY; self.n + 1];
        for w in 1..=k {
            v[self.r * w] = t.ln_binomial(k, w);
        }
        v
    }
}

fn step(t: &LnTables, kind: KernelKind, v: &[f64]) -> Vec<f64> {
    let live: Vec<usize> = (0..v.len()).filter(|&a| v[a] > f64::NEG_INFINITY).collect();
    (0..v.len())
        .into_par_iter()
        .map(|b| {
            let terms: Vec<f64> = live
                .iter()
                .map(|&a| v[a] + t.ln_p(kind, a, b))
                .filter(|x| *x > f64::NEG_INFINITY)
                .collect();
            log_sum_exp(&terms)
        })
        .collect()
}

fn run_rounds(model: &WeightModel, t: &LnTables, mut v: Vec<f64>, rounds: usize) -> Vec<f64> {
    for _ in 0..rounds {
        for &kind in model.round() {
            v = step(t, kind, &v);
        }
    }
    v
}

/// `ln E[#codewords of weight w]` over uniformly random permutations, `w = 0..=n`,
/// counting nonzero messages only.
pub fn ln_expected_counts(model: &WeightModel) -> Result<Vec<f64>> {
    model.validate()?;
    let t = LnTables::new(model.n);
    let v = model.initial(&t);
    Ok(run_rounds(model, &t, v, model.m))
}

fn sum_below(ln_counts: &[f64], d: usize) -> f64 {
    let hi = d.min(ln_counts.len() - 1);
    if hi == 0 {
        return 0.0;
    }
    log_sum_exp(&ln_counts[1..=hi]).exp()
}

/// Markov bound on `Pr[∃ nonzero codeword of weight ≤ d]`.
pub fn markov_failure_bound(model: &WeightModel, d: usize) -> Result<f64> {
    Ok(sum_below(&ln_expected_counts(model)?, d))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSplit {
    pub h: usize,
    pub d: usize,
    /// Final-round input weight `w₁ ∈ [1, h) ∪ (n−h, n]`.
    pub star: f64,
    /// Final-round input weight `w₁ ∈ [h, n−h]`.
    pub starstar: f64,
}

/// Splits the expected count of weight-`≤ d` codewords by the weight entering
/// the last round. The two ranges partition `[1, n]`: the endpoints `h` and
/// `n − h` belong to the middle part, so `h = n/2` leaves only `w₁ = n/2` there.
pub fn weight_tail_expectation(model: &WeightModel, h: usize, d: usize) -> Result<TailSplit> {
    model.validate()?;
    let n = model.n;
    if h > n / 2 {
        return Err(invalid(format!("h = {h} exceeds n/2 = {}", n / 2)));
    }
    let t = LnTables::new(n);
    let before_last = run_rounds(model, &t, model.initial(&t), model.m - 1);
    let middle = |w: usize| h <= w && w <= n - h;
    let part = |keep_middle: bool| {
        let v: Vec<f64> = before_last
            .iter()
            .enumerate()
            .map(|(w, &x)| if middle(w) == keep_middle { x } else { f64::NEG_INFINITY })
            .collect();
        sum_below(&run_rounds(model, &t, v, 1), d)
    };
    Ok(TailSplit { h, d, star: part(false), starstar: part(true) })
}

/// Default boundary threshold `⌈log2(n)²⌉`, capped at `n/2`.
pub fn default_h(n: usize) -> usize {
    let l = (n as f64).log2();
    ((l * l).ceil() as usize).min(n / 2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IowefResult {
    pub n: usize,
    pub m: usize,
    pub family: Family,
    /// `log2` expected count per final weight `0..=n`; `null` where the count is zero.
    pub log2_counts: Vec<Option<f64>>,
    pub d: usize,
    /// `Σ_{1 ≤ w ≤ d}` expected counts.
    pub bound: f64,
    pub star: f64,
    pub starstar: f64,
    pub h: usize,
}

impl IowefResult {
    pub fn expected_count(&self, w: usize) -> f64 {
        self.log2_counts[w].map_or(0.0, f64::exp2)
    }
}

pub fn iowef_expected_count(model: &WeightModel, d: usize, h: Option<usize>) -> Result<IowefResult> {
    let ln = ln_expected_counts(model)?;
    let h = h.unwrap_or_else(|| default_h(model.n));
    let split = weight_tail_expectation(model, h, d)?;
    Ok(IowefResult {
        n: model.n,
        m: model.m,
        family: model.family,
        log2_counts: ln.iter().map(|&x| (x > f64::NEG_INFINITY).then_some(x / LN_2)).collect(),
        d,
        bound: sum_below(&ln, d),
        star: split.star,
        starstar: split.starstar,
        h,
    })
}

/// `argmax_b p_A′(n, a, b)·p_D′(n, b, c)` over integers `b`; among values within
/// `1e−9` (in `log2`) of the maximum the smallest `b` wins.
pub fn argmax_middle_weight(n: usize, a: usize, c: usize) -> Result<usize> {
    const TIE: f64 = 1e-9;
    let scores: Vec<(usize, f64)> = (0..=n)
        .map(|b| (b, log2_p_a_prime(n, a, b) + log2_p_d_prime(n, b, c)))
        .filter(|(_, s)| s.is_finite())
        .collect();
    let best = scores
        .iter()
        .map(|&(_, s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    scores
        .iter()
        .find(|&&(_, s)| s >= best - TIE)
        .map(|&(b, _)| b)
        .ok_or_else(|| invalid(format!("no feasible middle weight for n = {n}, a = {a}, c = {c}")))
}

/// Greatest common divisor helper used to assert reduced fractions in tests.
pub fn is_reduced(p: &ExactProb) -> bool {
    p.numer().gcd(p.denom()).is_one() || p.numer().is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> ExactProb {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn p_a_examples() {
        for b in 1..=10 {
            assert_eq!(p_a_exact(10, 1, b), q(1, 10));
        }
        assert_eq!(p_a_exact(10, 2, 3), q(7, 45));
        for a in 0..=10 {
            let s: ExactProb = (0..=10).map(|b| p_a_exact(10, a, b)).sum();
            assert_eq!(s, q(1, 1));
        }
    }

    #[test]
    fn p_d_examples() {
        for n in 1..12 {
            assert_eq!(p_d_exact(n, n, 1), q(1, 1));
        }
        assert_eq!(p_d_exact(6, 0, 0), q(1, 1));
        assert!(is_reduced(&p_d_exact(12, 5, 4)));
    }

    #[test]
    fn brute_force_small_cases() {
        let d = brute_force_transition(8, 8, KernelKind::D).unwrap();
        assert_eq!(d[1], q(1, 1));
        assert!(brute_force_transition(21, 1, KernelKind::A).is_err());
    }

    #[test]
    fn half_binomial_values() {
        assert_eq!(half_binomial(5.0, 2.0), 10.0);
        assert_eq!(half_binomial(50.0, 25.0), 126_410_606_437_752.0);
        let half_fact = ln_factorial(0.5).exp();
        assert!((half_fact - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(half_binomial(2.0, 3.0), 0.0);
        assert_eq!(half_binomial(2.0, -0.5), 0.0);
    }

    #[test]
    fn half_factorial_closed_form() {
        // (k − 1/2)! = (2k)! √π / (4^k k!)
        for k in 1..20u32 {
            let lhs = ln_factorial(f64::from(k) - 0.5);
            let rhs = ln_factorial(f64::from(2 * k)) + 0.5 * std::f64::consts::PI.ln()
                - f64::from(k) * 4f64.ln()
                - ln_factorial(f64::from(k));
            assert!((lhs - rhs).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn relaxed_symmetries() {
        let close = |x: f64, y: f64| x == y || (x - y).abs() < 1e-10;
        for (n, a, b) in [(40, 7, 13), (40, 10, 30), (101, 33, 60), (101, 60, 33)] {
            assert!(close(log2_p_a_prime(n, a, b), log2_p_a_prime(n, a, n - b)));
            assert!(close(log2_p_d_prime(n, a, b), log2_p_d_prime(n, n - a, b)));
        }
        assert_eq!(p_a_prime(10, 5, 2), 0.0);
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let xs = [0.5f64.ln(), 0.25f64.ln(), f64::NEG_INFINITY];
        assert!((log_sum_exp(&xs) - 0.75f64.ln()).abs() < 1e-15);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn iowef_conserves_message_count() {
        for family in [Family::RA, Family::RAD, Family::RDA] {
            let model = WeightModel::new(family, 40, 3);
            let ln = ln_expected_counts(&model).unwrap();
            let total = log_sum_exp(&ln);
            let want = (2f64.powi(20) - 1.0).ln();
            assert!(((total - want) / want).abs() < 1e-12, "{family}: {total} vs {want}");
        }
    }

    #[test]
    fn markov_bound_edge_cases() {
        let model = WeightModel::new(Family::RDA, 32, 2);
        assert_eq!(markov_failure_bound(&model, 0).unwrap(), 0.0);
        let b: Vec<f64> = (0..8).map(|d| markov_failure_bound(&model, d).unwrap()).collect();
        assert!(b.windows(2).all(|w| w[0] <= w[1]));
        assert!(markov_failure_bound(&WeightModel::new(Family::RDA, 4098, 1), 3).is_err());
    }

    #[test]
    fn tail_split_partitions() {
        let model = WeightModel::new(Family::RDA, 48, 3);
        let total = markov_failure_bound(&model, 10).unwrap();
        for h in [0, 5, 24] {
            let s = weight_tail_expectation(&model, h, 10).unwrap();
            assert!(((s.star + s.starstar) - total).abs() <= 1e-9 * total, "h = {h}");
        }
        assert_eq!(weight_tail_expectation(&model, 0, 10).unwrap().star, 0.0);
        assert!(weight_tail_expectation(&model, 25, 10).is_err());
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax_middle_weight(500, 12, 20).unwrap(), 10);
        assert_eq!(argmax_middle_weight(500, 490, 10).unwrap(), 250);
        for a in 1..10 {
            assert_eq!(argmax_middle_weight(500, a, a).unwrap(), a.div_ceil(2));
        }
    }

    #[test]
    fn kernel_rows_normalize() {
        let k = TransitionKernel::new(50, KernelKind::A).unwrap();
        for a in 1..=50 {
            let s: f64 = (0..=50).map(|b| k.prob(a, b)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(TransitionKernel::new(80, KernelKind::D).unwrap().exact_rows().is_err());
    }
}

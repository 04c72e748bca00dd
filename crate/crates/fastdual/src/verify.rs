//! Grid suites for the rate-function inequalities and finite-length ratio claims.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::{rng_from_seed, uniform_below};
use crate::spectral::{f_a, f_ad, f_da, g_envelope, h, spectral_recursion, SpectralFamily};
use crate::transition::{argmax_middle_weight, log2_p_a_prime, log2_p_d_prime, KernelKind, LnTables};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub ok: bool,
    /// Largest observed violation measure; `ok` iff it does not exceed `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    /// Arguments at which `worst` was attained.
    pub at: Vec<f64>,
    pub evaluated: u64,
}

impl CheckReport {
    fn new(name: &str, worst: (f64, Vec<f64>), tolerance: f64, evaluated: u64) -> Self {
        CheckReport { name: name.into(), ok: worst.0 <= tolerance, worst: worst.0, tolerance, at: worst.1, evaluated }
    }
}

fn grid(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round() as usize;
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

fn keep_max(best: &mut (f64, Vec<f64>), value: f64, at: impl FnOnce() -> Vec<f64>) {
    if value > best.0 {
        *best = (value, at());
    }
}

/// `max f_DA − g` and `max f_AD − g` over valid grid triples.
pub fn envelope_dominance(step: f64) -> [CheckReport; 2] {
    let pts = grid(step);
    let rows: Vec<_> = pts
        .par_iter()
        .map(|&a| {
            let mut da = (f64::NEG_INFINITY, vec![]);
            let mut ad = (f64::NEG_INFINITY, vec![]);
            let mut count = 0u64;
            for &c in &pts {
                let g = g_envelope(a, c);
                for &b in &pts {
                    if let Some(v) = f_da(a, b, c) {
                        keep_max(&mut da, v - g, || vec![a, b, c]);
                        count += 1;
                    }
                    if let Some(v) = f_ad(a, b, c) {
                        keep_max(&mut ad, v - g, || vec![a, b, c]);
                        count += 1;
                    }
                }
            }
            (da, ad, count)
        })
        .collect();
    let mut da = (f64::NEG_INFINITY, vec![]);
    let mut ad = (f64::NEG_INFINITY, vec![]);
    let mut count = 0;
    for (x, y, c) in rows {
        keep_max(&mut da, x.0, || x.1);
        keep_max(&mut ad, y.0, || y.1);
        count += c;
    }
    [
        CheckReport::new("f_DA <= g", da, 1e-9, count),
        CheckReport::new("f_AD <= g", ad, 1e-9, count),
    ]
}

/// `r̂_DA(τ, γ) − r̂_A(τ, γ)` and the `AD` analogue over `γ` with `τ ≤ min(2γ, 2(1−γ))`.
pub fn restricted_comparison(max_m: usize, taus: &[f64], step: f64) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    for &tau in taus {
        for m in 1..=max_m {
            let base = spectral_recursion(SpectralFamily::A, m, 2, tau, step)?;
            for family in [SpectralFamily::DA, SpectralFamily::AD] {
                let other = spectral_recursion(family, m, 2, tau, step)?;
                let mut worst = (f64::NEG_INFINITY, vec![]);
                let mut count = 0;
                for (j, (g, v)) in other.points().enumerate() {
                    if tau > 2.0 * g.min(1.0 - g) + 1e-12 || v == f64::NEG_INFINITY {
                        continue;
                    }
                    keep_max(&mut worst, v - base.values[j], || vec![g]);
                    count += 1;
                }
                out.push(CheckReport::new(&format!("r_{family}(tau={tau}) <= r_A, m={m}"), worst, 1e-6, count));
            }
        }
    }
    Ok(out)
}

/// Closed-form identities and maximizer locations of the rate functions.
pub fn identity_suite(step: f64) -> Vec<CheckReport> {
    let pts = grid(step);
    let mut split = (f64::NEG_INFINITY, vec![]);
    let mut root = (f64::NEG_INFINITY, vec![]);
    for &a in &pts {
        let s = 2.0 * a * (1.0 - a);
        if let Some(v) = f_a(s, a) {
            keep_max(&mut split, (h(s) + v - h(a)).abs(), || vec![a]);
        }
        if a > 0.0 && a <= 0.5 {
            let b = (1.0 - (1.0 - 2.0 * a).sqrt()) / 2.0;
            if let Some(v) = f_a(a, b) {
                keep_max(&mut root, (v - h(b) + h(a)).abs(), || vec![a]);
            }
        }
    }
    let argmax = |range: &dyn Fn(f64) -> bool, f: &dyn Fn(f64) -> Option<f64>| -> f64 {
        pts.iter()
            .copied()
            .filter(|&b| range(b))
            .filter_map(|b| f(b).map(|v| (b, v)))
            .fold((f64::NAN, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
            .0
    };
    let coarse = grid(0.01);
    let mut split_max = (f64::NEG_INFINITY, vec![]);
    let mut half_max = (f64::NEG_INFINITY, vec![]);
    let mut root_max = (f64::NEG_INFINITY, vec![]);
    for &g in coarse.iter().filter(|&&g| g > 0.0 && g < 1.0) {
        let cap = 2.0 * g.min(1.0 - g);
        let at = argmax(&|b| b > 0.0 && b <= cap, &|b| Some(h(b) + f_a(b, g)?));
        keep_max(&mut split_max, (at - 2.0 * g * (1.0 - g)).abs() / step, || vec![g]);
    }
    for &a in coarse.iter().filter(|&&a| a > 0.0 && a < 1.0) {
        if a >= 0.5 {
            let at = argmax(&|b| b >= a / 2.0 && b <= 1.0 - a / 2.0, &|b| Some(f_a(a, b)? - h(b)));
            keep_max(&mut half_max, (at - 0.5).abs() / step, || vec![a]);
        } else {
            let want = (1.0 - (1.0 - 2.0 * a).sqrt()) / 2.0;
            let at = argmax(&|b| b >= a / 2.0 && b <= 0.5, &|b| Some(f_a(a, b)? - h(b)));
            keep_max(&mut root_max, (at - want).abs() / step, || vec![a]);
        }
    }
    let n = pts.len() as u64;
    vec![
        CheckReport::new("h(2a(1-a)) + f_A(2a(1-a), a) = h(a)", split, 1e-12, n),
        CheckReport::new("f_A(a, b*) - h(b*) + h(a) = 0", root, 1e-10, n / 2),
        CheckReport::new("argmax_b h(b) + f_A(b, g) = 2g(1-g) [grid steps]", split_max, 1.0, 99),
        CheckReport::new("argmax_b f_A(a, b) - h(b) = 1/2, a >= 1/2 [grid steps]", half_max, 2.0, 50),
        CheckReport::new("argmax_b f_A(a, b) - h(b) = b*, a <= 1/2 [grid steps]", root_max, 2.0, 49),
    ]
}

/// `max p/p′` over `n ∈ [n_min, n_max]` and all `(a, b)` where both are positive.
pub fn prime_ratio(kind: KernelKind, n_min: usize, n_max: usize, constant: f64) -> CheckReport {
    let (best, count) = (n_min..=n_max)
        .into_par_iter()
        .map(|n| {
            let tables = LnTables::new(n);
            let mut best = (f64::NEG_INFINITY, vec![]);
            let mut count = 0u64;
            for a in 1..=n {
                for b in 1..=n {
                    let exact = tables.ln_p(kind, a, b) / std::f64::consts::LN_2;
                    let relaxed = match kind {
                        KernelKind::A => log2_p_a_prime(n, a, b),
                        KernelKind::D => log2_p_d_prime(n, a, b),
                    };
                    if exact.is_finite() && relaxed.is_finite() {
                        count += 1;
                        keep_max(&mut best, (exact - relaxed).exp2(), || vec![n as f64, a as f64, b as f64]);
                    }
                }
            }
            (best, count)
        })
        .reduce(
            || ((f64::NEG_INFINITY, vec![]), 0),
            |x, y| {
                let c = x.1 + y.1;
                let better = if y.0 .0 > x.0 .0 || (y.0 .0 == x.0 .0 && y.0 .1 < x.0 .1) { y.0 } else { x.0 };
                (better, c)
            },
        );
    let label = match kind {
        KernelKind::A => "p_A / p_A'",
        KernelKind::D => "p_D / p_D'",
    };
    CheckReport::new(&format!("max {label} <= {constant}"), best, constant, count)
}

/// Predicted maximizer of `p_A′(a, b)·p_D′(b, c)`: the smallest feasible `b`
/// when both weights are small, `n/2` when `a` is close to `n` and `c` small.
pub fn predicted_middle_weight(n: usize, a: usize, c: usize) -> usize {
    if a > n / 2 {
        n / 2
    } else {
        a.max(c).div_ceil(2)
    }
}

/// Configurations `(n, a, c)` drawn from the two regimes where the maximizer is
/// predicted: `max(a, c) ≤ ⌈log2 n⌉`, and `a ≥ n − 40, c ≤ 40`.
pub fn middle_weight_configs(n: usize, count: usize, seed: u64) -> Vec<(usize, usize, usize)> {
    let mut rng = rng_from_seed(seed);
    let small = (n as f64).log2().ceil() as u64;
    (0..count)
        .map(|i| {
            if i % 2 == 0 {
                let a = 1 + uniform_below(&mut rng, small) as usize;
                let c = 1 + uniform_below(&mut rng, small) as usize;
                (n, a, c)
            } else {
                let a = n - uniform_below(&mut rng, 41) as usize;
                let c = 1 + uniform_below(&mut rng, 40) as usize;
                (n, a, c)
            }
        })
        .collect()
}

pub fn middle_weight_oracle(configs: &[(usize, usize, usize)]) -> Result<CheckReport> {
    let mut worst = (0.0f64, vec![]);
    for &(n, a, c) in configs {
        let got = argmax_middle_weight(n, a, c)?;
        let want = predicted_middle_weight(n, a, c);
        keep_max(&mut worst, got.abs_diff(want) as f64, || vec![n as f64, a as f64, c as f64, got as f64, want as f64]);
    }
    Ok(CheckReport::new("argmax_middle_weight matches prediction", worst, 0.0, configs.len() as u64))
}

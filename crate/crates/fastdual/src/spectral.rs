//! Asymptotic rate functions, spectral-shape recursions and the `δ^(m)` solvers.
//!
//! All exponents are base 2 and per symbol. Out-of-domain evaluations return
//! `None` (or `-inf` inside grid tables), never zero.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Slack on domain boundaries of the rate functions.
pub const DOMAIN_SLACK: f64 = 1e-12;
/// A grid value counts as zero when it does not exceed this.
pub const DEFAULT_GRID_TOL: f64 = 1e-9;
pub const MAX_ROUNDS: usize = 8;

/// Binary entropy without domain checks; `0` outside `(0, 1)`.
pub fn h(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -(x * x.ln() + (1.0 - x) * (-x).ln_1p()) / LN_2
}

pub fn entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(format!("entropy argument {x} outside [0, 1]")));
    }
    Ok(h(x))
}

/// Preimage of `y` under `h` on the branch `[0, 1/2]`. Conditioning degrades
/// like `sqrt(1 − y)` as `y → 1`.
pub fn entropy_inverse(y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return Err(invalid(format!("entropy_inverse argument {y} outside [0, 1]")));
    }
    if y == 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn unit(x: f64) -> bool {
    (-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&x)
}

/// `α − h(β) + (1−α)·h((β − α/2)/(1−α))`, defined for `α ≤ min(2β, 2(1−β))`.
pub fn f_a(alpha: f64, beta: f64) -> Option<f64> {
    if !unit(alpha) || !unit(beta) || alpha > 2.0 * beta.min(1.0 - beta) + DOMAIN_SLACK {
        return None;
    }
    let (a, b) = (alpha.clamp(0.0, 1.0), beta.clamp(0.0, 1.0));
    let t = if a < 1.0 { ((b - a / 2.0) / (1.0 - a)).clamp(0.0, 1.0) } else { 0.5 };
    Some(a - h(b) + (1.0 - a) * h(t))
}

/// `(1−α)·h(β/(2(1−α))) + α·h(β/(2α)) − h(α)`, defined for `β ≤ min(2α, 2(1−α))`.
pub fn f_d(alpha: f64, beta: f64) -> Option<f64> {
    if !unit(alpha) || !unit(beta) || beta > 2.0 * alpha.min(1.0 - alpha) + DOMAIN_SLACK {
        return None;
    }
    let (a, b) = (alpha.clamp(0.0, 1.0), beta.clamp(0.0, 1.0));
    let left = if a < 1.0 { (1.0 - a) * h((b / (2.0 * (1.0 - a))).min(1.0)) } else { 0.0 };
    let right = if a > 0.0 { a * h((b / (2.0 * a)).min(1.0)) } else { 0.0 };
    Some(left + right - h(a))
}

pub fn f_ad(alpha: f64, beta: f64, gamma: f64) -> Option<f64> {
    Some(f_a(alpha, beta)? + f_d(beta, gamma)?)
}

pub fn f_da(alpha: f64, beta: f64, gamma: f64) -> Option<f64> {
    Some(f_d(alpha, beta)? + f_a(beta, gamma)?)
}

/// Piecewise upper envelope of `f_DA(α, ·, γ)` and `f_AD(α, ·, γ)`, split at
/// `α = 2γ(1−γ)` and `α = 1 − 2γ(1−γ)`.
pub fn g_envelope(alpha: f64, gamma: f64) -> f64 {
    let s = 2.0 * gamma * (1.0 - gamma);
    if alpha <= s {
        f_a(alpha, gamma).unwrap_or(f64::NEG_INFINITY)
    } else if alpha <= 1.0 - s {
        h(gamma) - h(alpha)
    } else {
        f_a(1.0 - alpha, gamma).unwrap_or(f64::NEG_INFINITY)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpectralFamily {
    A,
    AD,
    DA,
}

impl std::fmt::Display for SpectralFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SpectralFamily::A => "A",
            SpectralFamily::AD => "AD",
            SpectralFamily::DA => "DA",
        })
    }
}

impl std::str::FromStr for SpectralFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" | "RA" => Ok(SpectralFamily::A),
            "AD" | "RAD" => Ok(SpectralFamily::AD),
            "DA" | "RDA" => Ok(SpectralFamily::DA),
            _ => Err(Error::Parse(format!("unknown spectral family `{s}` (expected A, AD or DA)"))),
        }
    }
}

mod neg_inf_as_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        values.iter().map(|v| v.is_finite().then_some(*v)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw = Vec::<Option<f64>>::deserialize(d)?;
        Ok(raw.into_iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect())
    }
}

/// Spectral shape sampled at `γ_j = j·step`, `j = 0..=1/step`.
///
/// `m` counts rounds after the repetition: `m = 0` is `h(γ)/r`. Each round of
/// `AD`/`DA` applies both kernels. Unreachable weights hold `-inf` (`null` in JSON).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralTable {
    pub family: SpectralFamily,
    pub m: usize,
    pub r: usize,
    pub tau: f64,
    pub step: f64,
    #[serde(with = "neg_inf_as_null")]
    pub values: Vec<f64>,
}

impl SpectralTable {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn gamma(&self, j: usize) -> f64 {
        j as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().enumerate().map(|(j, &v)| (self.gamma(j), v))
    }

    /// `gamma,value` rows; unreachable weights are written as `-inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,value\n");
        for (g, v) in self.points() {
            out.push_str(&format!("{g},{v}\n"));
        }
        out
    }
}

/// Maximum of `y` with a parabolic correction when the argmax is interior and
/// the three-point curvature is negative.
fn refined_max(y: &[f64]) -> f64 {
    let Some((i, &best)) = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) else {
        return f64::NEG_INFINITY;
    };
    if i == 0 || i + 1 >= y.len() || !y[i - 1].is_finite() || !y[i + 1].is_finite() {
        return best;
    }
    let (y0, y1, y2) = (y[i - 1], best, y[i + 1]);
    let curv = y0 - 2.0 * y1 + y2;
    if curv < 0.0 {
        y1 - (y2 - y0) * (y2 - y0) / (8.0 * curv)
    } else {
        best
    }
}

/// One maximization `out(β) = max_{α ∈ [lo, hi]} prev(α) + f(α, β)` on the grid.
fn grid_round(prev: &[f64], step: f64, lo: f64, hi: f64, f: fn(f64, f64) -> Option<f64>) -> Vec<f64> {
    let n = prev.len();
    let first = ((lo / step) - 1e-9).ceil().max(0.0) as usize;
    let last = (((hi / step) + 1e-9).floor() as usize).min(n - 1);
    (0..n)
        .into_par_iter()
        .map(|j| {
            let beta = j as f64 * step;
            let mut ys = vec![f64::NEG_INFINITY; n];
            for i in first..=last {
                if prev[i].is_finite() {
                    if let Some(v) = f(i as f64 * step, beta) {
                        ys[i] = prev[i] + v;
                    }
                }
            }
            refined_max(&ys)
        })
        .collect()
}

/// Grid spectral shape of `family` after `m` rounds, with the first variable of
/// the final round confined to `[tau, 1 − tau]`.
pub fn spectral_recursion(family: SpectralFamily, m: usize, r: usize, tau: f64, grid_step: f64) -> Result<SpectralTable> {
    if !(1e-5..=1e-2).contains(&grid_step) {
        return Err(invalid(format!("grid step {grid_step} outside [1e-5, 1e-2]")));
    }
    if m > MAX_ROUNDS {
        return Err(Error::CapExceeded { what: "spectral rounds m", value: m, cap: MAX_ROUNDS });
    }
    if r == 0 {
        return Err(invalid("repetition factor must be positive"));
    }
    if !(0.0..0.5).contains(&tau) {
        return Err(invalid(format!("tau {tau} outside [0, 1/2)")));
    }
    let intervals = (1.0 / grid_step).round() as usize;
    let step = 1.0 / intervals as f64;
    let mut values: Vec<f64> = (0..=intervals).map(|j| h(j as f64 * step) / r as f64).collect();
    for round in 0..m {
        let (lo, hi) = if round + 1 == m { (tau, 1.0 - tau) } else { (0.0, 1.0) };
        values = match family {
            SpectralFamily::A => grid_round(&values, step, lo, hi, f_a),
            SpectralFamily::DA => grid_round(&grid_round(&values, step, lo, hi, f_d), step, 0.0, 1.0, f_a),
            SpectralFamily::AD => grid_round(&grid_round(&values, step, lo, hi, f_a), step, 0.0, 1.0, f_d),
        };
    }
    Ok(SpectralTable { family, m, r, tau, step, values })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMethod {
    Grid,
    CriticalPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// `first_positive` is the smallest grid weight whose value exceeds `tol`.
    Grid { step: f64, tol: f64, first_positive: Option<(f64, f64)> },
    /// The critical chain `(α_1, …, α_m, δ)` of smallest `δ` whose exponent is a
    /// positive local maximum, and how it was located.
    CriticalPoint { signs: Vec<i8>, chain: Vec<f64>, exponent: f64, located_by: Located, tol: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Located {
    /// Exponent crosses zero along the chain family.
    ExponentRoot,
    /// Limit `α_1 → 0`.
    Endpoint,
    /// Local minimum of `δ` along the chain family.
    InteriorMinimum,
    /// Best sampled chain.
    Sample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub m: usize,
    pub method: DeltaMethod,
    pub delta: f64,
    pub certificate: Certificate,
}

/// Largest grid weight below 1/2 up to which every value is at most `tol`.
pub fn delta_from_grid(table: &SpectralTable, tol: f64) -> DeltaEstimate {
    let half = table.values.len() / 2;
    let first = (1..=half).find(|&j| table.values[j] > tol);
    let delta = match first {
        Some(j) => table.gamma(j - 1),
        None => table.gamma(half),
    }
    .min(0.5 - table.step);
    DeltaEstimate {
        m: table.m,
        method: DeltaMethod::Grid,
        delta: delta.max(0.0),
        certificate: Certificate::Grid {
            step: table.step,
            tol,
            first_positive: first.map(|j| (table.gamma(j), table.values[j])),
        },
    }
}

/// Stationary chain `(α_1, …, α_{m+1})` of the exponent
/// `h(α_1)/r + Σ f_A(α_i, α_{i+1})`. `branches[i]` selects the root for
/// `α_{i+2}` (`true` = upper). `None` when a radicand is negative or an iterate
/// leaves `[0, 1]`.
pub fn critical_point_chain(alpha1: f64, r: usize, branches: &[bool]) -> Option<Vec<f64>> {
    if !(alpha1 > 0.0 && alpha1 < 1.0) || r == 0 {
        return None;
    }
    let next = |ai: f64, q2: f64, plus: bool| -> Option<f64> {
        if !(0.0..=1.0).contains(&q2) {
            return None;
        }
        let e = (-ai).ln_1p() + 0.5 * (-q2).ln_1p();
        Some(if plus { 0.5 * (1.0 + e.exp()) } else { -0.5 * e.exp_m1() })
    };
    let mut chain = Vec::with_capacity(branches.len() + 1);
    chain.push(alpha1);
    for (i, &plus) in branches.iter().enumerate() {
        let ai = chain[i];
        if !(ai > 0.0 && ai < 1.0) {
            return None;
        }
        let q2 = if i == 0 {
            (alpha1 / (1.0 - alpha1)).powf(2.0 / r as f64)
        } else {
            let prev = chain[i - 1];
            let den = 1.0 - ai - prev / 2.0;
            if den <= 0.0 {
                return None;
            }
            let q = (ai - prev / 2.0) / den * (1.0 - ai) / ai;
            q * q
        };
        chain.push(next(ai, q2, plus)?);
    }
    chain.iter().all(|v| (0.0..=1.0).contains(v)).then_some(chain)
}

/// `h(α_1)/r + Σ_i f_A(α_i, α_{i+1})` over a chain `(α_1, …, α_m, δ)`.
pub fn exponent(chain: &[f64], r: usize) -> Option<f64> {
    let mut total = h(*chain.first()?) / r as f64;
    for w in chain.windows(2) {
        total += f_a(w[0], w[1])?;
    }
    Some(total)
}

/// Negative definiteness of the exponent's Hessian in `(α_1, …, α_m)` with the
/// last entry held fixed. The Hessian is tridiagonal; checked via LDLᵀ pivots.
// NaN pivots must fail.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn is_local_max(chain: &[f64], r: usize) -> bool {
    let m = chain.len() - 1;
    let mut diag = vec![0.0; m];
    let mut off = vec![0.0; m.saturating_sub(1)];
    let a1 = chain[0];
    diag[0] -= 1.0 / (a1 * (1.0 - a1)) / r as f64;
    for i in 0..m {
        let (a, b) = (chain[i], chain[i + 1]);
        let (p, q) = (2.0 * b - a, 2.0 - 2.0 * b - a);
        if p <= 0.0 || q <= 0.0 || a >= 1.0 {
            return false;
        }
        diag[i] += -0.5 / p - 0.5 / q + 1.0 / (1.0 - a);
        if i + 1 < m {
            off[i] += 1.0 / p - 1.0 / q;
            diag[i + 1] += -1.0 / (1.0 - b - a / 2.0) - 1.0 / (b - a / 2.0) + 1.0 / b + 1.0 / (1.0 - b);
        }
    }
    let mut pivot = diag[0];
    if !(pivot < 0.0) {
        return false;
    }
    for i in 1..m {
        pivot = diag[i] - off[i - 1] * off[i - 1] / pivot;
        if !(pivot < 0.0) {
            return false;
        }
    }
    true
}

/// `α_1` sample points: dense near both ends of `(0, 1/2]`.
fn alpha1_samples() -> Vec<f64> {
    let logspace = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        (0..n).map(move |i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect()
    };
    let mut xs = logspace(-8.0, -1.0, 6000);
    xs.extend((1..40_000).map(|i| 0.1 + 0.4 * i as f64 / 40_000.0));
    xs.extend(logspace(-15.0, -1.0, 6000).into_iter().rev().map(|e| 0.5 - e));
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

#[derive(Clone, Copy)]
struct Probe {
    x: f64,
    delta: f64,
    exponent: f64,
    max: bool,
}

impl Probe {
    fn at(x: f64, r: usize, branches: &[bool]) -> Option<Self> {
        let chain = critical_point_chain(x, r, branches)?;
        let delta = *chain.last()?;
        if !(delta > 0.0 && delta < 0.5) {
            return None;
        }
        Some(Probe { x, delta, exponent: exponent(&chain, r)?, max: is_local_max(&chain, r) })
    }

    fn qualifies(&self) -> bool {
        self.exponent > 0.0 && self.max
    }
}

struct Candidate {
    x: f64,
    delta: f64,
    located_by: Located,
}

/// Smallest `δ` reached by a positive local maximum along one sign pattern.
fn pattern_candidate(r: usize, branches: &[bool], xs: &[f64], tol: f64) -> Option<Candidate> {
    let probes: Vec<Option<Probe>> = xs.iter().map(|&x| Probe::at(x, r, branches)).collect();
    let mut best: Option<Candidate> = None;
    let mut offer = |c: Candidate| {
        if best.as_ref().is_none_or(|b| c.delta < b.delta) {
            best = Some(c);
        }
    };
    for p in probes.iter().flatten().filter(|p| p.qualifies()) {
        offer(Candidate { x: p.x, delta: p.delta, located_by: Located::Sample });
    }
    // Limit α_1 → 0.
    if probes.iter().flatten().next().is_some_and(Probe::qualifies) {
        if let Some(p) = Probe::at(1e-12, r, branches).filter(Probe::qualifies) {
            offer(Candidate { x: p.x, delta: p.delta, located_by: Located::Endpoint });
        }
    }
    for w in probes.windows(2) {
        let (Some(a), Some(b)) = (w[0], w[1]) else { continue };
        if (a.exponent > 0.0) == (b.exponent > 0.0) || !(a.qualifies() || b.qualifies()) {
            continue;
        }
        let (mut lo, mut hi) = (a, b);
        let mut ok = true;
        for _ in 0..200 {
            let mid = 0.5 * (lo.x + hi.x);
            if mid <= lo.x || mid >= hi.x {
                break;
            }
            let Some(pm) = Probe::at(mid, r, branches) else {
                ok = false;
                break;
            };
            if (pm.exponent > 0.0) == (lo.exponent > 0.0) {
                lo = pm;
            } else {
                hi = pm;
            }
            if (lo.delta - hi.delta).abs() < tol * 1e-3 {
                break;
            }
        }
        let pos = if lo.exponent > 0.0 { lo } else { hi };
        if ok && pos.max {
            offer(Candidate { x: pos.x, delta: pos.delta, located_by: Located::ExponentRoot });
        }
    }
    for w in probes.windows(3) {
        let (Some(a), Some(b), Some(c)) = (w[0], w[1], w[2]) else { continue };
        if !(a.qualifies() && b.qualifies() && c.qualifies()) || b.delta > a.delta || b.delta > c.delta {
            continue;
        }
        let (mut lo, mut hi) = (a.x, c.x);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let eval = |x: f64| Probe::at(x, r, branches).filter(Probe::qualifies);
        for _ in 0..200 {
            let (x1, x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
            match (eval(x1), eval(x2)) {
                (Some(p1), Some(p2)) if p1.delta <= p2.delta => hi = x2,
                (Some(_), Some(_)) => lo = x1,
                _ => break,
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        if let Some(p) = eval(0.5 * (lo + hi)) {
            offer(Candidate { x: p.x, delta: p.delta, located_by: Located::InteriorMinimum });
        }
    }
    best
}

/// `δ^(m)` from stationary chains: the smallest `δ` at which the exponent has a
/// positive local maximum, minimized over all `2^m` branch patterns.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn delta_m_solver(m: usize, r: usize, tol: f64) -> Result<DeltaEstimate> {
    if !(2..=6).contains(&m) {
        return Err(invalid(format!("critical-point solver needs 2 <= m <= 6, got {m}")));
    }
    if r == 0 {
        return Err(invalid("repetition factor must be positive"));
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let xs = alpha1_samples();
    let patterns: Vec<Vec<bool>> = (0..1u32 << m).map(|s| (0..m).map(|i| (s >> i) & 1 == 1).collect()).collect();
    let best = patterns
        .par_iter()
        .filter_map(|br| pattern_candidate(r, br, &xs, tol).map(|c| (br.clone(), c)))
        .min_by(|a, b| a.1.delta.total_cmp(&b.1.delta).then_with(|| a.0.cmp(&b.0)))
        .ok_or_else(|| Error::NoConvergence(format!("no positive local maximum found for m = {m}, r = {r}")))?;
    let (branches, cand) = best;
    let chain = critical_point_chain(cand.x, r, &branches).expect("candidate chain is valid");
    Ok(DeltaEstimate {
        m,
        method: DeltaMethod::CriticalPoint,
        delta: cand.delta,
        certificate: Certificate::CriticalPoint {
            signs: branches.iter().map(|&p| if p { 1 } else { -1 }).collect(),
            exponent: exponent(&chain, r).unwrap_or(f64::NAN),
            chain,
            located_by: cand.located_by,
            tol,
        },
    })
}

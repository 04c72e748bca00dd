//! RA^m, R(AD)^m and R(DA)^m encoder chains and the primal/dual pairing.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gf2::{apply_chain, BitVector, KernelOp, Permutation};
use crate::matrix::DenseMatrixF2;
use crate::rng::{fisher_yates, rng_from_seed};

/// Default cap on the block length of materialized generators.
pub const MATERIALIZE_CAP: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    RA,
    /// Each round applies `A` first, then `D`.
    RAD,
    /// Each round applies `D` first, then `A`.
    RDA,
}

impl Family {
    /// Permutations consumed by `m` rounds.
    pub fn perm_count(self, m: usize) -> usize {
        match self {
            Family::RA => m,
            Family::RAD | Family::RDA => 2 * m,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::RA => "RA",
            Family::RAD => "RAD",
            Family::RDA => "RDA",
        })
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RA" => Ok(Family::RA),
            "RAD" => Ok(Family::RAD),
            "RDA" => Ok(Family::RDA),
            _ => Err(invalid(format!("unknown family {s:?} (expected RA, RAD or RDA)"))),
        }
    }
}

fn default_r() -> usize {
    2
}

/// Serializable description of one code: either a seed or explicit permutations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeSpec {
    pub family: Family,
    pub n: usize,
    pub m: usize,
    #[serde(default = "default_r")]
    pub r: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perms: Option<Vec<Permutation>>,
    #[serde(default)]
    pub transposed: bool,
}

impl CodeSpec {
    pub fn seeded(family: Family, n: usize, m: usize, seed: u64) -> Self {
        Self { family, n, m, r: 2, seed: Some(seed), perms: None, transposed: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.n == 0 || !self.n.is_multiple_of(self.r) {
            return Err(invalid(format!("n = {} must be a positive multiple of r = {}", self.n, self.r)));
        }
        if self.family != Family::RA && self.r != 2 {
            return Err(invalid(format!("{} codes need r = 2, got {}", self.family, self.r)));
        }
        if self.m == 0 {
            return Err(invalid("m must be at least 1"));
        }
        match (&self.seed, &self.perms) {
            (Some(_), None) => Ok(()),
            (None, Some(perms)) => {
                let want = self.family.perm_count(self.m);
                if perms.len() != want {
                    return Err(invalid(format!("{} perms given, {} needed", perms.len(), want)));
                }
                match perms.iter().find(|p| p.len() != self.n) {
                    Some(p) => Err(Error::DimensionMismatch { expected: self.n, got: p.len() }),
                    None => Ok(()),
                }
            }
            _ => Err(invalid("exactly one of `seed` and `perms` must be given")),
        }
    }

    /// Permutations `π_1, π_2, …` in order; seeded specs draw them from one stream.
    pub fn permutations(&self) -> Result<Vec<Arc<Permutation>>> {
        self.validate()?;
        if let Some(perms) = &self.perms {
            return Ok(perms.iter().cloned().map(Arc::new).collect());
        }
        let mut rng = rng_from_seed(self.seed.expect("validated"));
        Ok((0..self.family.perm_count(self.m)).map(|_| Arc::new(fisher_yates(&mut rng, self.n))).collect())
    }
}

/// Generator `G` as a product of kernels; `ops[0]` is the leftmost factor.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderChain {
    ops: Vec<KernelOp>,
    k: usize,
    n: usize,
}

impl EncoderChain {
    /// Checks that the rightmost factor is a repetition and that all shapes line up.
    pub fn from_ops(ops: Vec<KernelOp>, k: usize) -> Result<Self> {
        if !matches!(ops.last(), Some(KernelOp::Repeat(_))) {
            return Err(invalid("the rightmost factor of a chain must be a repetition"));
        }
        let mut len = k;
        for (idx, op) in ops.iter().enumerate().rev() {
            if idx + 1 != ops.len() && matches!(op, KernelOp::Repeat(_)) {
                return Err(invalid("a chain contains exactly one repetition, as its rightmost factor"));
            }
            len = op.output_len(len)?;
        }
        Ok(Self { ops, k, n: len })
    }

    /// Builds the chain of `family` over the given permutations.
    ///
    /// Round `i` uses `π_{2i−1}` before its first kernel and `π_{2i}` before its
    /// second (`π_i` once for RA). `transposed` swaps `A, D` for `Aᵀ, Dᵀ`.
    pub fn build(family: Family, n: usize, r: usize, perms: &[Arc<Permutation>], transposed: bool) -> Result<Self> {
        let (a, d) = if transposed {
            (KernelOp::AccumulateT, KernelOp::DerivativeT)
        } else {
            (KernelOp::Accumulate, KernelOp::Derivative)
        };
        let (first, second) = match family {
            Family::RA => (a.clone(), a),
            Family::RAD => (a, d),
            Family::RDA => (d, a),
        };
        let mut ops = Vec::with_capacity(2 * perms.len() + 1);
        match family {
            Family::RA => {
                for p in perms.iter().rev() {
                    ops.push(first.clone());
                    ops.push(KernelOp::Permute(p.clone()));
                }
            }
            Family::RAD | Family::RDA => {
                if !perms.len().is_multiple_of(2) {
                    return Err(invalid("alternating families need an even number of permutations"));
                }
                for pair in perms.chunks_exact(2).rev() {
                    ops.push(second.clone());
                    ops.push(KernelOp::Permute(pair[1].clone()));
                    ops.push(first.clone());
                    ops.push(KernelOp::Permute(pair[0].clone()));
                }
            }
        }
        ops.push(KernelOp::Repeat(r));
        if !n.is_multiple_of(r) {
            return Err(invalid(format!("n = {n} is not divisible by r = {r}")));
        }
        Self::from_ops(ops, n / r)
    }

    pub fn from_spec(spec: &CodeSpec) -> Result<Self> {
        let perms = spec.permutations()?;
        Self::build(spec.family, spec.n, spec.r, &perms, spec.transposed)
    }

    pub fn ops(&self) -> &[KernelOp] {
        &self.ops
    }

    /// Message length.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Block length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Kernel labels in product order, e.g. `["A", "M", "D", "M", "F_2"]`.
    pub fn labels(&self) -> Vec<String> {
        self.ops.iter().map(KernelOp::label).collect()
    }

    pub fn encode(&self, msg: &BitVector) -> Result<BitVector> {
        if msg.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: msg.len() });
        }
        apply_chain(&self.ops, msg)
    }

    /// `encode(e_j)` for every `j`.
    pub fn generator_columns(&self) -> Result<Vec<BitVector>> {
        (0..self.k).map(|j| self.encode(&BitVector::unit(self.k, j))).collect()
    }
}

/// Primal R(DA)^m chain `G` and dual R(AD)^m chain `H` (with `Aᵀ`, `Dᵀ`) over one
/// shared set of permutations, so that `HᵀG = F_2ᵀF_2 = 0`.
#[derive(Clone, Debug)]
pub struct DualPair {
    n: usize,
    m: usize,
    perms: Vec<Arc<Permutation>>,
    primal: EncoderChain,
    dual: EncoderChain,
}

impl DualPair {
    pub fn from_permutations(n: usize, perms: Vec<Permutation>) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(invalid(format!("block length must be even and at least 4, got {n}")));
        }
        if perms.is_empty() || !perms.len().is_multiple_of(2) {
            return Err(invalid(format!("need 2m ≥ 2 permutations, got {}", perms.len())));
        }
        if let Some(p) = perms.iter().find(|p| p.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: p.len() });
        }
        let perms: Vec<Arc<Permutation>> = perms.into_iter().map(Arc::new).collect();
        let primal = EncoderChain::build(Family::RDA, n, 2, &perms, false)?;
        let dual = EncoderChain::build(Family::RAD, n, 2, &perms, true)?;
        Ok(Self { n, m: perms.len() / 2, perms, primal, dual })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn permutations(&self) -> &[Arc<Permutation>] {
        &self.perms
    }

    pub fn primal(&self) -> &EncoderChain {
        &self.primal
    }

    pub fn dual(&self) -> &EncoderChain {
        &self.dual
    }

    /// Code spec reproducing the primal chain from explicit permutations.
    pub fn primal_spec(&self) -> CodeSpec {
        CodeSpec {
            family: Family::RDA,
            n: self.n,
            m: self.m,
            r: 2,
            seed: None,
            perms: Some(self.perms.iter().map(|p| (**p).clone()).collect()),
            transposed: false,
        }
    }
}

/// Draws `π_1, …, π_{2m}` by Fisher–Yates from the stream seeded with `seed`.
pub fn sample_pair(n: usize, m: usize, seed: u64) -> Result<DualPair> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(invalid(format!("block length must be even and at least 4, got {n}")));
    }
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    let perms = CodeSpec::seeded(Family::RDA, n, m, seed).permutations()?;
    DualPair::from_permutations(n, perms.into_iter().map(|p| (*p).clone()).collect())
}

pub fn materialize(chain: &EncoderChain) -> Result<DenseMatrixF2> {
    materialize_with_cap(chain, MATERIALIZE_CAP)
}

/// The `n × k` generator whose column `j` is `encode(e_j)`.
pub fn materialize_with_cap(chain: &EncoderChain, cap: usize) -> Result<DenseMatrixF2> {
    if chain.n() > cap {
        return Err(Error::CapExceeded { what: "block length", value: chain.n(), cap });
    }
    DenseMatrixF2::from_columns(chain.n(), &chain.generator_columns()?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualCheck {
    pub ok: bool,
    pub n: usize,
    pub k: usize,
    /// First nonzero entry `(i, j)` of `HᵀG` in row-major order, 0-indexed.
    pub first_violation: Option<(usize, usize)>,
}

/// Computes `HᵀG` entry by entry from the materialized columns.
pub fn orthogonality_check(primal: &EncoderChain, dual: &EncoderChain) -> Result<DualCheck> {
    if primal.n() != dual.n() {
        return Err(Error::DimensionMismatch { expected: primal.n(), got: dual.n() });
    }
    if primal.n() > MATERIALIZE_CAP {
        return Err(Error::CapExceeded { what: "block length", value: primal.n(), cap: MATERIALIZE_CAP });
    }
    let g = primal.generator_columns()?;
    let h = dual.generator_columns()?;
    let first_violation = h
        .iter()
        .enumerate()
        .find_map(|(i, hi)| g.iter().position(|gj| hi.dot(gj)).map(|j| (i, j)));
    Ok(DualCheck { ok: first_violation.is_none(), n: primal.n(), k: primal.k(), first_violation })
}

pub fn dual_product_check(pair: &DualPair) -> DualCheck {
    orthogonality_check(pair.primal(), pair.dual()).expect("pair chains share their shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::systematic_form;

    fn identity_pair(n: usize, m: usize) -> DualPair {
        DualPair::from_permutations(n, vec![Permutation::identity(n); 2 * m]).unwrap()
    }

    #[test]
    fn chain_shapes_match_the_pairing() {
        let pair = sample_pair(8, 1, 11).unwrap();
        assert_eq!(pair.primal().labels(), ["A", "M", "D", "M", "F_2"]);
        assert_eq!(pair.dual().labels(), ["D^T", "M", "A^T", "M", "F_2"]);
        let p = |c: &EncoderChain, i| match &c.ops()[i] {
            KernelOp::Permute(p) => p.clone(),
            _ => unreachable!(),
        };
        assert!(Arc::ptr_eq(&p(pair.primal(), 1), &pair.permutations()[1]));
        assert!(Arc::ptr_eq(&p(pair.dual(), 3), &pair.permutations()[0]));
        assert_eq!(pair.primal().k(), 4);
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_pair(64, 3, 99).unwrap();
        let b = sample_pair(64, 3, 99).unwrap();
        let c = sample_pair(64, 3, 100).unwrap();
        assert_eq!(a.permutations(), b.permutations());
        assert_ne!(a.permutations(), c.permutations());
    }

    #[test]
    fn sample_pair_rejects_bad_lengths() {
        assert!(sample_pair(7, 1, 0).is_err());
        assert!(sample_pair(2, 1, 0).is_err());
        assert!(sample_pair(8, 0, 0).is_err());
    }

    #[test]
    fn identity_pair_n4_is_orthogonal() {
        let pair = identity_pair(4, 1);
        let g = materialize(pair.primal()).unwrap();
        let h = materialize(pair.dual()).unwrap();
        assert!(h.transpose().mul(&g).unwrap().is_zero());
        assert!(dual_product_check(&pair).ok);
    }

    #[test]
    fn fused_chain_example() {
        let chain =
            EncoderChain::from_ops(vec![KernelOp::Accumulate, KernelOp::Derivative, KernelOp::Repeat(2)], 2).unwrap();
        assert_eq!(chain.encode(&"10".parse().unwrap()).unwrap().to_string(), "1100");
        assert!(chain.encode(&"00".parse().unwrap()).unwrap().is_zero());
        assert!(chain.encode(&"1".parse().unwrap()).is_err());
    }

    #[test]
    fn materialize_small_chains() {
        let f2 = EncoderChain::from_ops(vec![KernelOp::Repeat(2)], 2).unwrap();
        let m = materialize(&f2).unwrap();
        for i in 0..4 {
            for j in 0..2 {
                assert_eq!(m.get(i, j), i / 2 == j);
            }
        }
        let ra = EncoderChain::from_ops(vec![KernelOp::Accumulate, KernelOp::Repeat(2)], 2).unwrap();
        let m = materialize(&ra).unwrap();
        assert_eq!(m.column(0).to_string(), "1000");
        assert_eq!(m.column(1).to_string(), "0010");
    }

    #[test]
    fn materialize_respects_cap() {
        let pair = sample_pair(64, 1, 0).unwrap();
        assert!(matches!(materialize_with_cap(pair.primal(), 32), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn corrupted_dual_is_detected() {
        let pair = sample_pair(32, 2, 5).unwrap();
        let mut perms: Vec<Permutation> = pair.permutations().iter().map(|p| (**p).clone()).collect();
        let mut map: Vec<usize> = perms[1].clone().into();
        map.swap(0, 17);
        perms[1] = Permutation::new(map).unwrap();
        let arcs: Vec<_> = perms.into_iter().map(Arc::new).collect();
        let bad_dual = EncoderChain::build(Family::RAD, 32, 2, &arcs, true).unwrap();
        let check = orthogonality_check(pair.primal(), &bad_dual).unwrap();
        assert!(!check.ok);
        let (i, j) = check.first_violation.unwrap();
        let h = bad_dual.encode(&BitVector::unit(16, i)).unwrap();
        let g = pair.primal().encode(&BitVector::unit(16, j)).unwrap();
        assert!(h.dot(&g));
    }

    #[test]
    fn dual_systematic_form_spans_the_same_code() {
        let pair = sample_pair(32, 2, 8).unwrap();
        let h = materialize(pair.dual()).unwrap();
        let (s, pivots) = systematic_form(&h).unwrap();
        assert_eq!(pivots.len(), 16);
        for (j, &p) in pivots.iter().enumerate() {
            assert_eq!(s.row(p), BitVector::unit(16, j));
        }
        let mut both = h.columns();
        both.extend(s.columns());
        assert_eq!(DenseMatrixF2::from_columns(32, &both).unwrap().rank(), 16);
    }

    #[test]
    fn spec_json_round_trip() {
        let spec: CodeSpec = serde_json::from_str(r#"{"family":"RAD","n":16,"m":2,"r":2,"seed":3}"#).unwrap();
        assert_eq!(spec, CodeSpec::seeded(Family::RAD, 16, 2, 3));
        let chain = EncoderChain::from_spec(&spec).unwrap();
        assert_eq!(chain.labels(), ["D", "M", "A", "M", "D", "M", "A", "M", "F_2"]);

        let explicit = r#"{"family":"RA","n":4,"m":1,"perms":[[1,0,3,2]]}"#;
        let spec: CodeSpec = serde_json::from_str(explicit).unwrap();
        assert_eq!(EncoderChain::from_spec(&spec).unwrap().labels(), ["A", "M", "F_2"]);

        let bad = r#"{"family":"RA","n":4,"m":2,"perms":[[1,0,3,2]]}"#;
        let spec: CodeSpec = serde_json::from_str(bad).unwrap();
        assert!(EncoderChain::from_spec(&spec).is_err());
        let both = r#"{"family":"RA","n":4,"m":1,"seed":1,"perms":[[1,0,3,2]]}"#;
        assert!(serde_json::from_str::<CodeSpec>(both).unwrap().validate().is_err());
    }
}

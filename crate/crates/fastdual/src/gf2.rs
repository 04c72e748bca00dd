//! Packed GF(2) vectors and the elementary linear kernels.
//!
//! Coordinates are 0-indexed internally; coordinate `i` lives in bit `i % 64`
//! of word `i / 64`. Bits at positions `>= len` are always zero.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand_core::RngCore;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

const WORD: usize = 64;

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

#[inline]
fn tail_mask(len: usize) -> u64 {
    match len % WORD {
        0 => !0,
        r => (1u64 << r) - 1,
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    words: Vec<u64>,
    len: usize,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self { words: vec![0; words_for(len)], len }
    }

    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut words = Vec::new();
        let mut len = 0;
        for b in bits {
            if len % WORD == 0 {
                words.push(0);
            }
            if b {
                words[len / WORD] |= 1 << (len % WORD);
            }
            len += 1;
        }
        Self { words, len }
    }

    /// Takes ownership of packed words; bits beyond `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Result<Self> {
        if words.len() != words_for(len) {
            return Err(Error::DimensionMismatch { expected: words_for(len), got: words.len() });
        }
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(len);
        }
        Ok(Self { words, len })
    }

    /// Low `len` bits of `value`, bit `i` becoming coordinate `i`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= WORD);
        let mut v = Self::zeros(len);
        if len > 0 {
            v.words[0] = value & tail_mask(len);
        }
        v
    }

    pub fn random<R: RngCore>(rng: &mut R, len: usize) -> Self {
        let words = (0..words_for(len)).map(|_| rng.next_u64()).collect();
        Self::from_words(words, len).expect("word count matches")
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD);
        if bit {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len);
        self.words[i / WORD] ^= 1 << (i % WORD);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "xor of vectors with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVector) -> BitVector {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitVector) -> bool {
        assert_eq!(self.len, other.len, "dot of vectors with different lengths");
        let ones: u32 = self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones()).sum();
        ones & 1 == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * WORD + b)
            })
        })
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(|b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl FromStr for BitVector {
    type Err = Error;

    /// Text form: one character per coordinate, coordinate 1 first.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty bit string".into()));
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("unexpected character {other:?} in bit string"))),
            })
            .collect::<Result<Vec<bool>>>()
            .map(BitVector::from_bits)
    }
}

impl Serialize for BitVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Bijection of `[0, n)`. As a matrix, `(M_π)_{ij} = 1` iff `π(i) = j`,
/// so `M_π x` has coordinate `i` equal to `x_{π(i)}`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    map: Vec<u32>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        if n > u32::MAX as usize {
            return Err(invalid("permutation too long"));
        }
        let mut seen = vec![false; n];
        for &v in &map {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return Err(invalid(format!("not a permutation of 0..{n}: bad entry {v}")));
            }
        }
        Ok(Self { map: map.into_iter().map(|v| v as u32).collect() })
    }

    pub(crate) fn from_u32_unchecked(map: Vec<u32>) -> Self {
        debug_assert!(Self::new(map.iter().map(|&v| v as usize).collect()).is_ok());
        Self { map }
    }

    pub fn identity(n: usize) -> Self {
        Self { map: (0..n as u32).collect() }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    #[inline]
    pub fn image(&self, i: usize) -> usize {
        self.map[i] as usize
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0u32; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v as usize] = i as u32;
        }
        Self { map: inv }
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.map.into_iter().map(|v| v as usize).collect()
    }
}

/// Elementary factor of a generator matrix.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum KernelOp {
    /// `F_r`: every input bit is copied to `r` consecutive outputs.
    Repeat(usize),
    Permute(Arc<Permutation>),
    /// `A`: prefix XOR.
    Accumulate,
    /// `D`: `y_i = x_i ⊕ x_{i−1}` with `x_0 = 0`.
    Derivative,
    /// `Aᵀ`: suffix XOR.
    AccumulateT,
    /// `Dᵀ`: `y_i = x_i ⊕ x_{i+1}` with `x_{n+1} = 0`.
    DerivativeT,
}

impl KernelOp {
    pub fn output_len(&self, input_len: usize) -> Result<usize> {
        match self {
            KernelOp::Repeat(0) => Err(invalid("repetition factor must be positive")),
            KernelOp::Repeat(r) => Ok(input_len * r),
            KernelOp::Permute(p) if p.len() != input_len => {
                Err(Error::DimensionMismatch { expected: p.len(), got: input_len })
            }
            _ => Ok(input_len),
        }
    }

    pub fn label(&self) -> String {
        match self {
            KernelOp::Repeat(r) => format!("F_{r}"),
            KernelOp::Permute(_) => "M".into(),
            KernelOp::Accumulate => "A".into(),
            KernelOp::Derivative => "D".into(),
            KernelOp::AccumulateT => "A^T".into(),
            KernelOp::DerivativeT => "D^T".into(),
        }
    }
}

impl fmt::Display for KernelOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[inline]
fn prefix_xor_word(mut w: u64) -> u64 {
    w ^= w << 1;
    w ^= w << 2;
    w ^= w << 4;
    w ^= w << 8;
    w ^= w << 16;
    w ^= w << 32;
    w
}

#[inline]
fn suffix_xor_word(mut w: u64) -> u64 {
    w ^= w >> 1;
    w ^= w >> 2;
    w ^= w >> 4;
    w ^= w >> 8;
    w ^= w >> 16;
    w ^= w >> 32;
    w
}

/// Interleaves the low 32 bits of `x` with zeros: bit `i` moves to bit `2i`.
#[inline]
fn spread_bits(x: u64) -> u64 {
    let mut x = x & 0xFFFF_FFFF;
    x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    (x | (x << 1)) & 0x5555_5555_5555_5555
}

fn accumulate(x: &BitVector) -> BitVector {
    let mut out = Vec::with_capacity(x.words.len());
    let mut carry = 0u64;
    for &w in &x.words {
        let y = prefix_xor_word(w) ^ carry;
        carry = 0u64.wrapping_sub(y >> 63);
        out.push(y);
    }
    BitVector::from_words(out, x.len).expect("same shape")
}

fn accumulate_t(x: &BitVector) -> BitVector {
    let mut out = vec![0u64; x.words.len()];
    let mut carry = 0u64;
    for (o, &w) in out.iter_mut().zip(&x.words).rev() {
        let y = suffix_xor_word(w) ^ carry;
        carry = 0u64.wrapping_sub(y & 1);
        *o = y;
    }
    BitVector::from_words(out, x.len).expect("same shape")
}

fn derivative(x: &BitVector) -> BitVector {
    let mut out = Vec::with_capacity(x.words.len());
    let mut prev_top = 0u64;
    for &w in &x.words {
        out.push(w ^ (w << 1) ^ prev_top);
        prev_top = w >> 63;
    }
    BitVector::from_words(out, x.len).expect("same shape")
}

fn derivative_t(x: &BitVector) -> BitVector {
    let words = &x.words;
    let out = (0..words.len())
        .map(|i| {
            let next_low = words.get(i + 1).map_or(0, |n| n & 1);
            words[i] ^ (words[i] >> 1) ^ (next_low << 63)
        })
        .collect();
    BitVector::from_words(out, x.len).expect("same shape")
}

fn repeat(x: &BitVector, r: usize) -> BitVector {
    let len = x.len * r;
    if r == 2 {
        let mut out = Vec::with_capacity(2 * x.words.len());
        for &w in &x.words {
            let lo = spread_bits(w);
            let hi = spread_bits(w >> 32);
            out.push(lo | (lo << 1));
            out.push(hi | (hi << 1));
        }
        out.truncate(words_for(len));
        return BitVector::from_words(out, len).expect("same shape");
    }
    let mut y = BitVector::zeros(len);
    for i in x.ones() {
        for j in i * r..(i + 1) * r {
            y.set(j, true);
        }
    }
    y
}

fn permute(x: &BitVector, p: &Permutation) -> BitVector {
    let src = &x.words;
    let out = p
        .map
        .chunks(WORD)
        .map(|chunk| {
            let mut acc = 0u64;
            for (b, &s) in chunk.iter().enumerate() {
                let s = s as usize;
                acc |= ((src[s / WORD] >> (s % WORD)) & 1) << b;
            }
            acc
        })
        .collect();
    BitVector::from_words(out, x.len).expect("same shape")
}

/// Applies one kernel in `O(n / 64)` word operations (`O(n)` for `Permute`).
pub fn apply(op: &KernelOp, x: &BitVector) -> Result<BitVector> {
    op.output_len(x.len)?;
    Ok(match op {
        KernelOp::Repeat(r) => repeat(x, *r),
        KernelOp::Permute(p) => permute(x, p),
        KernelOp::Accumulate => accumulate(x),
        KernelOp::Derivative => derivative(x),
        KernelOp::AccumulateT => accumulate_t(x),
        KernelOp::DerivativeT => derivative_t(x),
    })
}

/// Computes `ops[0] · ops[1] ⋯ ops[last] · x`, so the last op acts first.
pub fn apply_chain(ops: &[KernelOp], x: &BitVector) -> Result<BitVector> {
    let mut cur = x.clone();
    for op in ops.iter().rev() {
        cur = apply(op, &cur)?;
    }
    Ok(cur)
}

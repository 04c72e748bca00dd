//! Noiseless encrypted matrix-vector product over a sampled dual pair.
//!
//! Correctness demonstration only; it carries no hiding guarantee.
//!
//! Offline: `M̂ = M·G*ᵀ ⊕ R`, where the `k` rows of `G*ᵀ` are a systematic basis of
//! the dual code (identity on the pivot coordinates `P`) and `R` is the client key.
//! Online: the query `q ∈ F_2^k` is placed on `P` and masked with a primal codeword
//! `c`; the server returns `M̂·q̂`, and the client removes `R·q̂`. The mask vanishes
//! because every dual codeword is orthogonal to `c`, and `G*ᵀ` restricted to `P`
//! is the identity, so `M·G*ᵀ·q̂ = M·q`.

use serde::{Deserialize, Serialize};

use crate::code::{materialize, DualPair};
use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::matrix::{systematic_form, DenseMatrixF2};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Clone, Debug)]
pub struct EmvpInstance {
    pair: DualPair,
    /// `k × n`; row `j` is the dual codeword with a single one at `pivots[j]` among the pivots.
    dual_basis: DenseMatrixF2,
    pivots: Vec<usize>,
    encrypted: DenseMatrixF2,
    key: DenseMatrixF2,
}

fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrixF2 {
    let mut rng = rng_from_seed(seed);
    let rows: Vec<BitVector> = (0..rows).map(|_| BitVector::random(&mut rng, cols)).collect();
    DenseMatrixF2::from_rows(&rows).unwrap_or_else(|_| DenseMatrixF2::zeros(0, cols))
}

/// `M̂ = M·G*ᵀ ⊕ R` with `R` drawn from `seed`.
pub fn offline_encrypt(matrix: &DenseMatrixF2, pair: &DualPair, seed: u64) -> Result<EmvpInstance> {
    let key = random_matrix(matrix.rows(), pair.n(), derive_seed(seed, 0));
    offline_encrypt_with_key(matrix, pair, key)
}

pub fn offline_encrypt_with_key(matrix: &DenseMatrixF2, pair: &DualPair, key: DenseMatrixF2) -> Result<EmvpInstance> {
    let k = pair.dual().k();
    if matrix.cols() != k {
        return Err(Error::DimensionMismatch { expected: k, got: matrix.cols() });
    }
    if key.rows() != matrix.rows() || key.cols() != pair.n() {
        return Err(Error::DimensionMismatch { expected: matrix.rows() * pair.n(), got: key.rows() * key.cols() });
    }
    let (generator, pivots) = systematic_form(&materialize(pair.dual())?)?;
    let dual_basis = generator.transpose();
    let mut encrypted = matrix.mul(&dual_basis)?;
    encrypted.xor_assign(&key)?;
    Ok(EmvpInstance { pair: pair.clone(), dual_basis, pivots, encrypted, key })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    /// `q̂ = embed(q) ⊕ encode(primal, mask_message)`.
    pub masked: BitVector,
    pub mask_message: BitVector,
}

impl EmvpInstance {
    pub fn pair(&self) -> &DualPair {
        &self.pair
    }

    pub fn encrypted(&self) -> &DenseMatrixF2 {
        &self.encrypted
    }

    pub fn key(&self) -> &DenseMatrixF2 {
        &self.key
    }

    pub fn dual_basis(&self) -> &DenseMatrixF2 {
        &self.dual_basis
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn message_len(&self) -> usize {
        self.pivots.len()
    }

    /// `q` written on the pivot coordinates of a length-`n` vector.
    pub fn embed(&self, q: &BitVector) -> Result<BitVector> {
        if q.len() != self.message_len() {
            return Err(Error::DimensionMismatch { expected: self.message_len(), got: q.len() });
        }
        let mut out = BitVector::zeros(self.pair.n());
        for j in q.ones() {
            out.set(self.pivots[j], true);
        }
        Ok(out)
    }

    pub fn query(&self, q: &BitVector, seed: u64) -> Result<Query> {
        let mut rng = rng_from_seed(seed);
        self.query_with_mask(q, BitVector::random(&mut rng, self.pair.primal().k()))
    }

    pub fn query_with_mask(&self, q: &BitVector, mask_message: BitVector) -> Result<Query> {
        let mut masked = self.embed(q)?;
        masked.xor_assign(&self.pair.primal().encode(&mask_message)?);
        Ok(Query { masked, mask_message })
    }

    /// Server side: `M̂·q̂`.
    pub fn respond(&self, masked: &BitVector) -> Result<BitVector> {
        self.encrypted.mul_vec(masked)
    }

    /// Client side: `M′ ⊕ R·q̂`.
    pub fn decode(&self, masked: &BitVector, response: &BitVector) -> Result<BitVector> {
        Ok(response.xor(&self.key.mul_vec(masked)?))
    }

    pub fn roundtrip(&self, q: &BitVector, seed: u64) -> Result<BitVector> {
        let query = self.query(q, seed)?;
        self.decode(&query.masked, &self.respond(&query.masked)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub q: BitVector,
    pub masked: BitVector,
    pub response: BitVector,
    pub output: BitVector,
    pub expected: BitVector,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmvpTranscript {
    pub n: usize,
    pub m: usize,
    pub rows: usize,
    pub seed: u64,
    pub pivots: Vec<usize>,
    pub queries: Vec<QueryRecord>,
    pub ok: bool,
}

/// Samples a pair, a random `rows × n/2` matrix and `queries` random queries
/// from `seed`, and checks each decoded product against `M·q`.
pub fn run_demo(n: usize, m: usize, rows: usize, queries: usize, seed: u64) -> Result<EmvpTranscript> {
    let pair = crate::code::sample_pair(n, m, derive_seed(seed, 1))?;
    let matrix = random_matrix(rows, pair.dual().k(), derive_seed(seed, 2));
    let inst = offline_encrypt(&matrix, &pair, derive_seed(seed, 3))?;
    let mut rng = rng_from_seed(derive_seed(seed, 4));
    let records = (0..queries)
        .map(|i| {
            let q = BitVector::random(&mut rng, inst.message_len());
            let query = inst.query(&q, derive_seed(seed, 1000 + i as u64))?;
            let response = inst.respond(&query.masked)?;
            let output = inst.decode(&query.masked, &response)?;
            let expected = matrix.mul_vec(&q)?;
            Ok(QueryRecord { ok: output == expected, q, masked: query.masked, response, output, expected })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EmvpTranscript {
        n,
        m,
        rows,
        seed,
        pivots: inst.pivots.clone(),
        ok: records.iter().all(|r| r.ok),
        queries: records,
    })
}

//! Dense GF(2) matrices with packed row-major storage.

use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};
use crate::gf2::BitVector;

/// Magic prefix of the packed binary export.
pub const PACKED_MAGIC: [u8; 8] = *b"FDUALGF2";
pub const PACKED_HEADER_LEN: usize = 16;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DenseMatrixF2 {
    rows: usize,
    cols: usize,
    row_words: usize,
    data: Vec<u64>,
}

impl DenseMatrixF2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let row_words = cols.div_ceil(64);
        Self { rows, cols, row_words, data: vec![0; rows * row_words] }
    }

    pub fn identity(k: usize) -> Self {
        let mut m = Self::zeros(k, k);
        for i in 0..k {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(rows: &[BitVector]) -> Result<Self> {
        let cols = rows.first().map_or(0, BitVector::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, got: r.len() });
            }
            m.row_slice_mut(i).copy_from_slice(r.words());
        }
        Ok(m)
    }

    pub fn from_columns(rows: usize, columns: &[BitVector]) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::DimensionMismatch { expected: rows, got: c.len() });
            }
            for i in c.ones() {
                m.set(i, j, true);
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn row_slice(&self, i: usize) -> &[u64] {
        &self.data[i * self.row_words..(i + 1) * self.row_words]
    }

    fn row_slice_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.row_words..(i + 1) * self.row_words]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(i < self.rows && j < self.cols);
        (self.data[i * self.row_words + j / 64] >> (j % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, bit: bool) {
        assert!(i < self.rows && j < self.cols);
        let w = &mut self.data[i * self.row_words + j / 64];
        if bit {
            *w |= 1 << (j % 64);
        } else {
            *w &= !(1 << (j % 64));
        }
    }

    pub fn row(&self, i: usize) -> BitVector {
        BitVector::from_words(self.row_slice(i).to_vec(), self.cols).expect("row shape")
    }

    pub fn column(&self, j: usize) -> BitVector {
        BitVector::from_bits((0..self.rows).map(|i| self.get(i, j)))
    }

    pub fn columns(&self) -> Vec<BitVector> {
        self.transpose().row_vectors()
    }

    pub fn row_vectors(&self) -> Vec<BitVector> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for (wi, &w) in self.row_slice(i).iter().enumerate() {
                let mut rest = w;
                while rest != 0 {
                    let j = wi * 64 + rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    t.set(j, i, true);
                }
            }
        }
        t
    }

    /// `self · v` for a column vector `v` of length `cols`.
    pub fn mul_vec(&self, v: &BitVector) -> Result<BitVector> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: v.len() });
        }
        Ok(BitVector::from_bits((0..self.rows).map(|i| {
            let ones: u32 =
                self.row_slice(i).iter().zip(v.words()).map(|(a, b)| (a & b).count_ones()).sum();
            ones & 1 == 1
        })))
    }

    pub fn mul(&self, other: &DenseMatrixF2) -> Result<DenseMatrixF2> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let row = self.row(i);
            for j in row.ones() {
                let src = other.row_slice(j).to_vec();
                for (o, s) in out.row_slice_mut(i).iter_mut().zip(src) {
                    *o ^= s;
                }
            }
        }
        Ok(out)
    }

    pub fn xor_assign(&mut self, other: &DenseMatrixF2) -> Result<()> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(invalid(format!(
                "shape {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a ^= b;
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    /// First nonzero entry in row-major order.
    pub fn first_nonzero(&self) -> Option<(usize, usize)> {
        (0..self.rows).find_map(|i| {
            self.row_slice(i)
                .iter()
                .enumerate()
                .find(|(_, &w)| w != 0)
                .map(|(wi, &w)| (i, wi * 64 + w.trailing_zeros() as usize))
        })
    }

    pub fn rank(&self) -> usize {
        let mut rows = self.row_vectors();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(p) = (rank..rows.len()).find(|&i| rows[i].get(col)) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot = rows[rank].clone();
            for (i, r) in rows.iter_mut().enumerate() {
                if i != rank && r.get(col) {
                    r.xor_assign(&pivot);
                }
            }
            rank += 1;
        }
        rank
    }

    /// One line per row, `0`/`1` characters, column 1 first.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.rows * (self.cols + 1));
        for i in 0..self.rows {
            let _ = writeln!(s, "{}", self.row(i));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<BitVector>>>()?;
        Self::from_rows(&rows)
    }

    /// Header: magic (8 bytes), rows `n` (u32 LE), cols `k` (u32 LE).
    /// Body: each row in `ceil(k/8)` bytes, column `j` at bit `j % 8` of byte `j / 8`.
    pub fn to_packed_bytes(&self) -> Vec<u8> {
        let row_bytes = self.cols.div_ceil(8);
        let mut out = Vec::with_capacity(PACKED_HEADER_LEN + self.rows * row_bytes);
        out.extend_from_slice(&PACKED_MAGIC);
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.cols as u32).to_le_bytes());
        for i in 0..self.rows {
            let bytes: Vec<u8> = self.row_slice(i).iter().flat_map(|w| w.to_le_bytes()).collect();
            out.extend_from_slice(&bytes[..row_bytes]);
        }
        out
    }

    pub fn from_packed_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < PACKED_HEADER_LEN || bytes[..8] != PACKED_MAGIC {
            return Err(Error::Parse("missing packed-matrix header".into()));
        }
        let rows = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let cols = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
        let row_bytes = cols.div_ceil(8);
        let body = &bytes[PACKED_HEADER_LEN..];
        if body.len() != rows * row_bytes {
            return Err(Error::Parse(format!(
                "body has {} bytes, expected {}",
                body.len(),
                rows * row_bytes
            )));
        }
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            let mut padded = body[i * row_bytes..(i + 1) * row_bytes].to_vec();
            padded.resize(m.row_words * 8, 0);
            let words: Vec<u64> = padded
                .chunks_exact(8)
                .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            let row = BitVector::from_words(words, cols)?;
            m.row_slice_mut(i).copy_from_slice(row.words());
        }
        Ok(m)
    }
}

/// Column-reduced echelon form of a full-column-rank generator.
///
/// Columns are processed in order; the pivot of column `j` is the first row
/// where it is nonzero after the earlier pivots were cleared. Returns the
/// reduced generator (identity on the pivot rows) and the pivot rows.
pub fn systematic_form(mat: &DenseMatrixF2) -> Result<(DenseMatrixF2, Vec<usize>)> {
    let mut cols = mat.columns();
    let mut pivots = Vec::with_capacity(cols.len());
    for j in 0..cols.len() {
        let Some(p) = cols[j].ones().next() else {
            return Err(Error::Internal(format!(
                "generator is rank deficient: column {j} reduces to zero"
            )));
        };
        let pivot_col = cols[j].clone();
        for (jj, c) in cols.iter_mut().enumerate() {
            if jj != j && c.get(p) {
                c.xor_assign(&pivot_col);
            }
        }
        pivots.push(p);
    }
    Ok((DenseMatrixF2::from_columns(mat.rows(), &cols)?, pivots))
}

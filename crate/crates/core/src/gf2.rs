//! Linear algebra over GF(2).
//!
//! Matrices are stored as one `u64` word per row with column 0 in the most
//! significant used bit, so a row word read as an integer is the row's bit
//! string read left to right. Bit vectors use the same alignment: position 0
//! is the most significant bit of the packed word. With that layout the
//! product `G ⊗ b` is one AND plus a parity per row.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

/// Widest row (or vector) representable in a single packed word.
pub const MAX_BITS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular over GF(2)")]
    SingularMatrix,
    #[error("malformed matrix encoding: {0}")]
    Parse(String),
}

fn mask(bits: usize) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// A binary vector of at most [`MAX_BITS`] entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector {
    len: usize,
    word: u64,
}

impl BitVector {
    pub fn zeros(len: usize) -> Result<Self, Gf2Error> {
        Self::from_word(len, 0)
    }

    /// Builds a vector from an integer whose most significant used bit is
    /// position 0.
    pub fn from_word(len: usize, word: u64) -> Result<Self, Gf2Error> {
        if len == 0 || len > MAX_BITS {
            return Err(Gf2Error::Dimension(format!(
                "vector length {len} outside 1..={MAX_BITS}"
            )));
        }
        if word & !mask(len) != 0 {
            return Err(Gf2Error::Dimension(format!(
                "word {word:#x} has bits beyond length {len}"
            )));
        }
        Ok(BitVector { len, word })
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self, Gf2Error> {
        let mut word = 0u64;
        for &b in bits {
            if b > 1 {
                return Err(Gf2Error::Dimension(format!("entry {b} is not a bit")));
            }
            word = (word << 1) | b as u64;
        }
        Self::from_word(bits.len(), word)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn word(&self) -> u64 {
        self.word
    }

    pub fn get(&self, pos: usize) -> u8 {
        assert!(pos < self.len, "bit {pos} out of range {}", self.len);
        ((self.word >> (self.len - 1 - pos)) & 1) as u8
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    /// Concatenation; `self` occupies the most significant positions.
    pub fn concat(&self, other: &BitVector) -> Result<BitVector, Gf2Error> {
        let len = self.len + other.len;
        if len > MAX_BITS {
            return Err(Gf2Error::Dimension(format!("concatenated length {len}")));
        }
        Ok(BitVector {
            len,
            word: (self.word << other.len) | other.word,
        })
    }

    /// Splits into consecutive fields of the given widths, first field taken
    /// from the most significant end.
    pub fn split(&self, widths: &[usize]) -> Result<Vec<BitVector>, Gf2Error> {
        let total: usize = widths.iter().sum();
        if total != self.len {
            return Err(Gf2Error::Dimension(format!(
                "field widths sum to {total}, vector has {}",
                self.len
            )));
        }
        let mut rest = self.len;
        widths
            .iter()
            .map(|&w| {
                rest -= w;
                BitVector::from_word(w, (self.word >> rest) & mask(w))
            })
            .collect()
    }
}

impl std::ops::BitXor for BitVector {
    type Output = BitVector;

    fn bitxor(self, rhs: BitVector) -> BitVector {
        assert_eq!(self.len, rhs.len, "xor of vectors with different lengths");
        BitVector {
            len: self.len,
            word: self.word ^ rhs.word,
        }
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", self.get(i))?;
        }
        Ok(())
    }
}

/// An `rows × cols` matrix over GF(2).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl BinaryMatrix {
    pub fn from_rows(cols: usize, rows: Vec<u64>) -> Result<Self, Gf2Error> {
        if rows.is_empty() || cols == 0 || cols > MAX_BITS {
            return Err(Gf2Error::Dimension(format!(
                "{}x{cols} matrix is not representable",
                rows.len()
            )));
        }
        if let Some(bad) = rows.iter().find(|r| **r & !mask(cols) != 0) {
            return Err(Gf2Error::Dimension(format!(
                "row {bad:#x} has bits beyond {cols} columns"
            )));
        }
        Ok(BinaryMatrix {
            rows: rows.len(),
            cols,
            data: rows,
        })
    }

    /// Parses nested 0/1 rows, mostly for tests.
    pub fn from_bit_rows(rows: &[&[u8]]) -> Result<Self, Gf2Error> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut words = Vec::with_capacity(rows.len());
        for r in rows {
            if r.len() != cols {
                return Err(Gf2Error::Dimension("ragged rows".into()));
            }
            words.push(BitVector::from_bits(r)?.word());
        }
        Self::from_rows(cols, words)
    }

    pub fn identity(n: usize) -> Result<Self, Gf2Error> {
        Self::from_rows(n, (0..n).map(|i| 1u64 << (n - 1 - i)).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self, Gf2Error> {
        Self::from_rows(cols, vec![0; rows])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row_words(&self) -> &[u64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        ((self.data[r] >> (self.cols - 1 - c)) & 1) as u8
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// `G ⊗ b` with the message packed as a word.
    #[inline]
    pub fn mul_word(&self, b: u64) -> u64 {
        self.data
            .iter()
            .fold(0u64, |acc, row| (acc << 1) | ((row & b).count_ones() & 1) as u64)
    }

    pub fn mat_mul(&self, b: &BitVector) -> Result<BitVector, Gf2Error> {
        if b.len() != self.cols {
            return Err(Gf2Error::Dimension(format!(
                "{}x{} matrix times length-{} vector",
                self.rows,
                self.cols,
                b.len()
            )));
        }
        BitVector::from_word(self.rows, self.mul_word(b.word()))
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &BinaryMatrix) -> Result<BinaryMatrix, Gf2Error> {
        if self.cols != other.rows {
            return Err(Gf2Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let rows = self
            .data
            .iter()
            .map(|&row| {
                (0..self.cols)
                    .filter(|&c| (row >> (self.cols - 1 - c)) & 1 == 1)
                    .fold(0u64, |acc, c| acc ^ other.data[c])
            })
            .collect();
        BinaryMatrix::from_rows(other.cols, rows)
    }

    pub fn rank(&self) -> usize {
        rank_of_words(&self.data)
    }

    pub fn is_full_row_rank(&self) -> bool {
        self.rank() == self.rows
    }

    pub fn invert(&self) -> Result<BinaryMatrix, Gf2Error> {
        if !self.is_square() {
            return Err(Gf2Error::Dimension(format!(
                "cannot invert a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut left = self.data.clone();
        let mut right: Vec<u64> = (0..n).map(|i| 1u64 << (n - 1 - i)).collect();
        for col in 0..n {
            let bit = 1u64 << (n - 1 - col);
            let pivot = (col..n).find(|&r| left[r] & bit != 0).ok_or(Gf2Error::SingularMatrix)?;
            left.swap(col, pivot);
            right.swap(col, pivot);
            for r in 0..n {
                if r != col && left[r] & bit != 0 {
                    left[r] ^= left[col];
                    right[r] ^= right[col];
                }
            }
        }
        BinaryMatrix::from_rows(n, right)
    }

    /// Row concatenation `[self; other]`.
    pub fn stack(&self, other: &BinaryMatrix) -> Result<BinaryMatrix, Gf2Error> {
        if self.cols != other.cols {
            return Err(Gf2Error::Dimension("stacking matrices of different widths".into()));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        BinaryMatrix::from_rows(self.cols, data)
    }

    /// Reduced row echelon form with zero rows dropped. Two matrices have the
    /// same row space iff their reduced forms are equal.
    pub fn rref(&self) -> BinaryMatrix {
        let rows = rref_words(&self.data, self.cols);
        if rows.is_empty() {
            return BinaryMatrix {
                rows: 1,
                cols: self.cols,
                data: vec![0],
            };
        }
        BinaryMatrix {
            rows: rows.len(),
            cols: self.cols,
            data: rows,
        }
    }

    /// Integer value of the row-major bit string when it fits in 128 bits.
    pub fn encoding(&self) -> Option<u128> {
        if self.rows * self.cols > 128 {
            return None;
        }
        Some(self.data.iter().fold(0u128, |acc, &r| (acc << self.cols) | r as u128))
    }

    /// `RxC:hex` where hex is the row-major bit string as a zero-padded
    /// big-endian hexadecimal number.
    pub fn to_hex(&self) -> String {
        let total = self.rows * self.cols;
        let digits = total.div_ceil(4);
        let pad = digits * 4 - total;
        let mut bits: Vec<u8> = vec![0; pad];
        for r in 0..self.rows {
            for c in 0..self.cols {
                bits.push(self.get(r, c));
            }
        }
        let hex: String = bits
            .chunks(4)
            .map(|nib| {
                let v = nib.iter().fold(0u32, |a, &b| (a << 1) | b as u32);
                char::from_digit(v, 16).unwrap()
            })
            .collect();
        format!("{}x{}:{}", self.rows, self.cols, hex)
    }

    pub fn from_hex(s: &str) -> Result<BinaryMatrix, Gf2Error> {
        let bad = || Gf2Error::Parse(s.to_string());
        let (dims, hex) = s.split_once(':').ok_or_else(bad)?;
        let (r, c) = dims.split_once('x').ok_or_else(bad)?;
        let rows: usize = r.parse().map_err(|_| bad())?;
        let cols: usize = c.parse().map_err(|_| bad())?;
        if rows == 0 || cols == 0 || cols > MAX_BITS {
            return Err(bad());
        }
        let total = rows * cols;
        let digits = total.div_ceil(4);
        if hex.len() != digits {
            return Err(bad());
        }
        let mut bits = Vec::with_capacity(digits * 4);
        for ch in hex.chars() {
            let v = ch.to_digit(16).ok_or_else(bad)?;
            bits.extend((0..4).rev().map(|i| ((v >> i) & 1) as u8));
        }
        let pad = digits * 4 - total;
        if bits[..pad].iter().any(|&b| b != 0) {
            return Err(bad());
        }
        let data = bits[pad..]
            .chunks(cols)
            .map(|row| row.iter().fold(0u64, |a, &b| (a << 1) | b as u64))
            .collect();
        BinaryMatrix::from_rows(cols, data)
    }
}

/// Ascending integer encoding for equal shapes; shapes compare by
/// `(rows, cols)` first.
impl Ord for BinaryMatrix {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.rows, self.cols)
            .cmp(&(other.rows, other.cols))
            .then_with(|| self.data.cmp(&other.data))
    }
}

impl PartialOrd for BinaryMatrix {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            if r > 0 {
                write!(f, ";")?;
            }
            for c in 0..self.cols {
                write!(f, "{}", self.get(r, c))?;
            }
        }
        Ok(())
    }
}

pub fn rank_of_words(rows: &[u64]) -> usize {
    let mut basis: Vec<u64> = Vec::with_capacity(rows.len());
    for &row in rows {
        let v = reduce_against(row, &basis);
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

/// Reduces `v` against an echelon basis sorted by descending leading bit.
#[inline]
pub fn reduce_against(mut v: u64, basis: &[u64]) -> u64 {
    for &b in basis {
        let lead = 63 - b.leading_zeros();
        if (v >> lead) & 1 == 1 {
            v ^= b;
        }
    }
    v
}

/// Reduced row echelon form of packed rows, zero rows removed.
pub fn rref_words(rows: &[u64], cols: usize) -> Vec<u64> {
    let mut m: Vec<u64> = rows.to_vec();
    let mut out = 0usize;
    for col in 0..cols {
        let bit = 1u64 << (cols - 1 - col);
        let Some(p) = (out..m.len()).find(|&r| m[r] & bit != 0) else {
            continue;
        };
        m.swap(out, p);
        for r in 0..m.len() {
            if r != out && m[r] & bit != 0 {
                m[r] ^= m[out];
            }
        }
        out += 1;
    }
    m.truncate(out);
    m
}

/// All vectors `y` in GF(2)^cols with `y · v = 0` for every `v` in `vectors`,
/// returned as a basis in reduced echelon form.
pub fn annihilator(vectors: &[u64], cols: usize) -> Vec<u64> {
    let echelon = rref_words(vectors, cols);
    let pivots: Vec<usize> = echelon
        .iter()
        .map(|&r| (cols - 1) - (63 - r.leading_zeros() as usize))
        .collect();
    let mut basis = Vec::new();
    for free in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut y = 1u64 << (cols - 1 - free);
        for (row, &p) in echelon.iter().zip(&pivots) {
            if (row >> (cols - 1 - free)) & 1 == 1 {
                y |= 1u64 << (cols - 1 - p);
            }
        }
        basis.push(y);
    }
    rref_words(&basis, cols)
}

/// Every `l × cols` binary matrix in ascending integer encoding, optionally
/// restricted to rank `l`. Limited to `l · cols ≤ 63`.
pub fn enumerate_matrices(
    l: usize,
    cols: usize,
    full_row_rank_only: bool,
) -> Result<impl Iterator<Item = BinaryMatrix>, Gf2Error> {
    if l == 0 || l > cols || cols > MAX_BITS {
        return Err(Gf2Error::Dimension(format!("cannot enumerate {l}x{cols}")));
    }
    let total = l * cols;
    if total > 63 {
        return Err(Gf2Error::Dimension(format!(
            "2^{total} matrices is beyond exhaustive enumeration"
        )));
    }
    let row_mask = mask(cols);
    Ok((0..(1u64 << total)).filter_map(move |code| {
        let data: Vec<u64> = (0..l).map(|r| (code >> ((l - 1 - r) * cols)) & row_mask).collect();
        if full_row_rank_only && rank_of_words(&data) != l {
            return None;
        }
        Some(BinaryMatrix { rows: l, cols, data })
    }))
}

/// Every `l`-dimensional subspace of `span(basis)`, each given once by its
/// reduced row echelon matrix, sorted by integer encoding.
pub fn subspaces_within(basis: &[u64], cols: usize, l: usize) -> Vec<BinaryMatrix> {
    let basis = rref_words(basis, cols);
    let k = basis.len();
    if l == 0 || l > k {
        return Vec::new();
    }
    let mut out = Vec::new();
    // RREF l×k coefficient matrices: choose pivot columns, fill free slots.
    let mut pivots: Vec<usize> = (0..l).collect();
    loop {
        let mut slots: Vec<(usize, usize)> = Vec::new();
        for (r, &p) in pivots.iter().enumerate() {
            for c in p + 1..k {
                if !pivots.contains(&c) {
                    slots.push((r, c));
                }
            }
        }
        for fill in 0..(1u64 << slots.len()) {
            let mut coeff: Vec<u64> = pivots.iter().map(|&p| 1u64 << (k - 1 - p)).collect();
            for (i, &(r, c)) in slots.iter().enumerate() {
                if (fill >> i) & 1 == 1 {
                    coeff[r] |= 1u64 << (k - 1 - c);
                }
            }
            let rows: Vec<u64> = coeff
                .iter()
                .map(|&cw| {
                    (0..k)
                        .filter(|&i| (cw >> (k - 1 - i)) & 1 == 1)
                        .fold(0u64, |acc, i| acc ^ basis[i])
                })
                .collect();
            out.push(BinaryMatrix {
                rows: l,
                cols,
                data: rref_words(&rows, cols),
            });
        }
        // next combination of pivot columns
        let mut i = l;
        loop {
            if i == 0 {
                out.sort();
                return out;
            }
            i -= 1;
            if pivots[i] < k - l + i {
                pivots[i] += 1;
                for j in i + 1..l {
                    pivots[j] = pivots[j - 1] + 1;
                }
                break;
            }
        }
    }
}

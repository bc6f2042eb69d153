//! Dense symbol matrices and bit-packed binary matrices.

use crate::error::{Error, Result};
use crate::metrics::SymbolString;

/// Row-major matrix of symbols in `{0, …, alphabet-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolMatrix {
    rows: usize,
    cols: usize,
    alphabet: usize,
    data: Vec<u8>,
}

impl SymbolMatrix {
    pub fn new(rows: usize, cols: usize, alphabet: usize, data: Vec<u8>) -> Result<Self> {
        if !(2..=256).contains(&alphabet) {
            return Err(Error::invalid(format!(
                "alphabet size must be in 2..=256, got {alphabet}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        if let Some(&s) = data.iter().find(|&&s| s as usize >= alphabet) {
            return Err(Error::SymbolOutOfRange {
                symbol: s as usize,
                alphabet,
            });
        }
        Ok(SymbolMatrix {
            rows,
            cols,
            alphabet,
            data,
        })
    }

    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R], alphabet: usize) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    left: cols,
                    right: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        SymbolMatrix::new(rows.len(), cols, alphabet, data)
    }

    pub fn from_strings(strings: &[SymbolString]) -> Result<Self> {
        let Some(first) = strings.first() else {
            return Err(Error::TooFewItems { needed: 1, got: 0 });
        };
        let alphabet = first.alphabet();
        if let Some(s) = strings.iter().find(|s| s.alphabet() != alphabet) {
            return Err(Error::AlphabetMismatch {
                left: alphabet,
                right: s.alphabet(),
            });
        }
        let rows: Vec<&[u8]> = strings.iter().map(|s| s.symbols()).collect();
        SymbolMatrix::from_rows(&rows, alphabet)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u8] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.data[r * self.cols + c]
    }

    pub fn column(&self, c: usize) -> Vec<u8> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn row_string(&self, r: usize) -> SymbolString {
        SymbolString::new(self.row(r).to_vec(), self.alphabet).expect("validated on construction")
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn transpose(&self) -> SymbolMatrix {
        let mut data = vec![0u8; self.data.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        SymbolMatrix {
            rows: self.cols,
            cols: self.rows,
            alphabet: self.alphabet,
            data,
        }
    }

    pub(crate) fn set(&mut self, r: usize, c: usize, v: u8) {
        debug_assert!((v as usize) < self.alphabet);
        self.data[r * self.cols + c] = v;
    }

    pub(crate) fn row_mut(&mut self, r: usize) -> &mut [u8] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Copy with every row repeated `times` times consecutively.
    pub fn repeat_rows(&self, times: usize) -> SymbolMatrix {
        let mut data = Vec::with_capacity(self.data.len() * times);
        for r in 0..self.rows {
            for _ in 0..times {
                data.extend_from_slice(self.row(r));
            }
        }
        SymbolMatrix {
            rows: self.rows * times,
            cols: self.cols,
            alphabet: self.alphabet,
            data,
        }
    }
}

/// Binary matrix with each row packed into 64-bit words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64);
        BitMatrix {
            rows,
            cols,
            words,
            data: vec![0; rows * words],
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.data[r * self.words + c / 64] >> (c % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, bit: bool) {
        let w = &mut self.data[r * self.words + c / 64];
        let mask = 1u64 << (c % 64);
        if bit {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    pub fn row_bits(&self, r: usize) -> Vec<u8> {
        (0..self.cols).map(|c| self.get(r, c) as u8).collect()
    }

    pub fn count_ones(&self, r: usize) -> usize {
        self.row_words(r)
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    #[inline]
    fn tail_mask(&self) -> u64 {
        match self.cols % 64 {
            0 => u64::MAX,
            k => (1u64 << k) - 1,
        }
    }

    /// Number of bit positions where rows `a` and `b` agree.
    #[inline]
    pub fn matches(&self, a: usize, b: usize) -> usize {
        self.cols - self.mismatches(a, b)
    }

    #[inline]
    pub fn mismatches(&self, a: usize, b: usize) -> usize {
        let (x, y) = (self.row_words(a), self.row_words(b));
        let mut total = 0usize;
        for (wx, wy) in x.iter().zip(y) {
            total += (wx ^ wy).count_ones() as usize;
        }
        total
    }

    /// Like [`matches`](Self::matches) but gives up once more than
    /// `cols - min_matches` mismatches have been seen.
    #[inline]
    pub fn matches_at_least(&self, a: usize, b: usize, min_matches: usize) -> Option<usize> {
        let budget = self.cols.checked_sub(min_matches)?;
        let (x, y) = (self.row_words(a), self.row_words(b));
        let mut mism = 0usize;
        for (chunk_x, chunk_y) in x.chunks(4).zip(y.chunks(4)) {
            for (wx, wy) in chunk_x.iter().zip(chunk_y) {
                mism += (wx ^ wy).count_ones() as usize;
            }
            if mism > budget {
                return None;
            }
        }
        Some(self.cols - mism)
    }

    /// Writes the bitwise complement of row `src` into row `dst`.
    pub fn write_complement(&mut self, src: usize, dst: usize) {
        let mask = self.tail_mask();
        let w = self.words;
        for k in 0..w {
            let mut v = !self.data[src * w + k];
            if k == w - 1 {
                v &= mask;
            }
            self.data[dst * w + k] = v;
        }
    }

    /// Copies `bits` (0/1 values) into row `r` starting at column `offset`.
    pub fn write_bits(&mut self, r: usize, offset: usize, bits: &[u8]) {
        for (k, &b) in bits.iter().enumerate() {
            self.set(r, offset + k, b != 0);
        }
    }
}

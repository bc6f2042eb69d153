//! Distance, match-count and correlation primitives.
//!
//! Euclidean distances are accumulated coordinate by coordinate in index
//! order, so the squared sum produced by the early-abandoning variant is
//! bit-for-bit the sum produced by the plain one. Engines compare squared
//! sums internally and only take a square root when reporting.

use crate::error::{Error, Result};

/// A collection of real points sharing one dimension, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("point dimension must be at least 1"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: coords.len() % dim,
            });
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                point: pos / dim,
                coord: pos % dim,
            });
        }
        Ok(PointSet { dim, coords })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(1);
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: row.len(),
                });
            }
            coords.extend_from_slice(row);
        }
        PointSet::from_flat(dim, coords)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }
}

/// Outcome of [`euclidean_distance_early_abandon`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EarlyAbandon {
    Distance(f64),
    Abandoned,
}

impl EarlyAbandon {
    pub fn distance(self) -> Option<f64> {
        match self {
            EarlyAbandon::Distance(d) => Some(d),
            EarlyAbandon::Abandoned => None,
        }
    }
}

fn check_dims(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(())
}

pub fn euclidean_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x, y)?;
    Ok(squared_distance(x, y).sqrt())
}

/// Euclidean distance that gives up once the running squared sum exceeds
/// `threshold²`.
///
/// A returned distance is always exact. `Abandoned` is only returned when
/// the true distance is strictly greater than `threshold`.
pub fn euclidean_distance_early_abandon(
    x: &[f64],
    y: &[f64],
    threshold: f64,
) -> Result<EarlyAbandon> {
    check_dims(x, y)?;
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::invalid(format!(
            "early-abandon threshold must be non-negative, got {threshold}"
        )));
    }
    Ok(
        match squared_distance_bounded(x, y, abandon_limit(threshold)) {
            Some(sq) => EarlyAbandon::Distance(sq.sqrt()),
            None => EarlyAbandon::Abandoned,
        },
    )
}

/// Squared-sum limit for a true-distance threshold. Rounding in `t * t`
/// could otherwise abandon a pair whose square root rounds back to `t`.
#[inline]
pub(crate) fn abandon_limit(threshold: f64) -> f64 {
    threshold * threshold * (1.0 + 4.0 * f64::EPSILON)
}

#[inline]
pub(crate) fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (a, b) in x.iter().zip(y) {
        let d = a - b;
        sum += d * d;
    }
    sum
}

/// Squared distance, or `None` once a partial sum exceeds `limit`.
///
/// Partial sums of non-negative terms never decrease, so checking every
/// eight coordinates abandons exactly the same pairs as checking each one.
#[inline]
pub(crate) fn squared_distance_bounded(x: &[f64], y: &[f64], limit: f64) -> Option<f64> {
    const STRIDE: usize = 8;
    let mut sum = 0.0;
    let mut xs = x.chunks_exact(STRIDE);
    let mut ys = y.chunks_exact(STRIDE);
    for (cx, cy) in (&mut xs).zip(&mut ys) {
        for k in 0..STRIDE {
            let d = cx[k] - cy[k];
            sum += d * d;
        }
        if sum > limit {
            return None;
        }
    }
    for (a, b) in xs.remainder().iter().zip(ys.remainder()) {
        let d = a - b;
        sum += d * d;
    }
    if sum > limit {
        None
    } else {
        Some(sum)
    }
}

/// A string of symbol indices over an alphabet `{0, …, σ-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolString {
    symbols: Vec<u8>,
    alphabet: usize,
}

impl SymbolString {
    pub fn new(symbols: Vec<u8>, alphabet: usize) -> Result<Self> {
        if !(2..=256).contains(&alphabet) {
            return Err(Error::invalid(format!(
                "alphabet size must be in 2..=256, got {alphabet}"
            )));
        }
        if let Some(&s) = symbols.iter().find(|&&s| s as usize >= alphabet) {
            return Err(Error::SymbolOutOfRange {
                symbol: s as usize,
                alphabet,
            });
        }
        Ok(SymbolString { symbols, alphabet })
    }

    /// Parses a string of decimal digits, e.g. `"10010"`.
    pub fn from_digits(digits: &str, alphabet: usize) -> Result<Self> {
        let symbols = digits
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::invalid(format!("not a digit: {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        SymbolString::new(symbols, alphabet)
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

fn check_strings(x: &SymbolString, y: &SymbolString) -> Result<()> {
    if x.alphabet != y.alphabet {
        return Err(Error::AlphabetMismatch {
            left: x.alphabet,
            right: y.alphabet,
        });
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(())
}

/// Number of positions at which two equal-length slices agree.
#[inline]
pub fn count_matches(x: &[u8], y: &[u8]) -> usize {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).filter(|(a, b)| a == b).count()
}

pub fn hamming_distance(x: &SymbolString, y: &SymbolString) -> Result<usize> {
    check_strings(x, y)?;
    Ok(x.len() - count_matches(&x.symbols, &y.symbols))
}

pub fn match_count(x: &SymbolString, y: &SymbolString) -> Result<usize> {
    check_strings(x, y)?;
    Ok(count_matches(&x.symbols, &y.symbols))
}

/// Hamming correlation `(n - d) / n`.
pub fn correlation(x: &SymbolString, y: &SymbolString) -> Result<f64> {
    check_strings(x, y)?;
    if x.is_empty() {
        return Err(Error::invalid("correlation of empty strings"));
    }
    Ok(count_matches(&x.symbols, &y.symbols) as f64 / x.len() as f64)
}

//! Synthetic datasets: random walks, uniform genotype ("NOISE") matrices,
//! and planted pairs with exactly known correlation.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::matrix::SymbolMatrix;
use crate::metrics::PointSet;
use crate::rng::{sample_prefix, seeded};

/// A real-valued sequence with an ℓ-mer (sliding window) view.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { point: i, coord: 0 });
        }
        Ok(TimeSeries { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn num_lmers(&self, len: usize) -> usize {
        if len == 0 || len > self.values.len() {
            0
        } else {
            self.values.len() - len + 1
        }
    }

    /// The window of length `len` starting at `i` (0-based).
    pub fn lmer(&self, i: usize, len: usize) -> &[f64] {
        &self.values[i..i + len]
    }

    /// All ℓ-mers as a point set; point `i` is the window starting at `i`.
    pub fn lmers(&self, len: usize) -> Result<PointSet> {
        let count = self.num_lmers(len);
        if count == 0 {
            return Err(Error::invalid(format!(
                "window length {len} invalid for a series of length {}",
                self.values.len()
            )));
        }
        let mut coords = Vec::with_capacity(count * len);
        for i in 0..count {
            coords.extend_from_slice(self.lmer(i, len));
        }
        PointSet::from_flat(len, coords)
    }
}

/// Random walk starting at 0 with independent Gaussian increments.
pub fn gen_random_walk(n: usize, seed: u64, step_stddev: f64) -> Result<TimeSeries> {
    if n < 2 {
        return Err(Error::TooFewItems { needed: 2, got: n });
    }
    if !(step_stddev > 0.0 && step_stddev.is_finite()) {
        return Err(Error::invalid(format!(
            "step standard deviation must be positive, got {step_stddev}"
        )));
    }
    let normal = Normal::new(0.0, step_stddev).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = seeded(seed);
    let mut values = Vec::with_capacity(n);
    let mut level = 0.0;
    values.push(level);
    for _ in 1..n {
        level += normal.sample(&mut rng);
        values.push(level);
    }
    TimeSeries::new(values)
}

/// `count` points in `dim` dimensions with standard normal coordinates.
pub fn gen_gaussian_points(count: usize, dim: usize, seed: u64) -> Result<PointSet> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = seeded(seed);
    let coords = (0..count * dim).map(|_| normal.sample(&mut rng)).collect();
    PointSet::from_flat(dim, coords)
}

/// Subjects × strings matrix of genotype symbols. Columns are the compared
/// objects (SNPs); rows are subjects.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenotypeMatrix {
    inner: SymbolMatrix,
}

impl GenotypeMatrix {
    pub fn new(inner: SymbolMatrix) -> Self {
        GenotypeMatrix { inner }
    }

    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R], alphabet: usize) -> Result<Self> {
        Ok(GenotypeMatrix {
            inner: SymbolMatrix::from_rows(rows, alphabet)?,
        })
    }

    pub fn subjects(&self) -> usize {
        self.inner.rows()
    }

    pub fn strings(&self) -> usize {
        self.inner.cols()
    }

    pub fn alphabet(&self) -> usize {
        self.inner.alphabet()
    }

    pub fn get(&self, subject: usize, string: usize) -> u8 {
        self.inner.get(subject, string)
    }

    pub fn column(&self, string: usize) -> Vec<u8> {
        self.inner.column(string)
    }

    /// Subject-major view.
    pub fn as_matrix(&self) -> &SymbolMatrix {
        &self.inner
    }

    /// Items-as-rows view: row `j` is column `j` of this matrix.
    pub fn to_items(&self) -> SymbolMatrix {
        self.inner.transpose()
    }

    fn check_col(&self, c: usize) -> Result<()> {
        if c >= self.strings() {
            return Err(Error::IndexOutOfRange {
                index: c,
                len: self.strings(),
            });
        }
        Ok(())
    }
}

/// Entries drawn independently and uniformly over the alphabet.
pub fn gen_binomial_matrix(
    subjects: usize,
    strings: usize,
    alphabet_size: usize,
    seed: u64,
) -> Result<GenotypeMatrix> {
    if subjects == 0 || strings == 0 {
        return Err(Error::invalid("matrix dimensions must be positive"));
    }
    if !(2..=256).contains(&alphabet_size) {
        return Err(Error::invalid(format!(
            "alphabet size must be in 2..=256, got {alphabet_size}"
        )));
    }
    let mut rng = seeded(seed);
    let data = (0..subjects * strings)
        .map(|_| rng.random_range(0..alphabet_size) as u8)
        .collect();
    Ok(GenotypeMatrix::new(SymbolMatrix::new(
        subjects,
        strings,
        alphabet_size,
        data,
    )?))
}

/// What [`inject_pair`] planted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Injection {
    pub col_a: usize,
    pub col_b: usize,
    /// Number of ones written into `col_b`.
    pub ones: usize,
    /// Exact correlation of the two columns, `ones / subjects`.
    pub correlation: f64,
}

/// Number of ones used to realise `target_correlation` over `subjects` rows.
pub fn injected_ones(target_correlation: f64, subjects: usize) -> Result<usize> {
    if !(target_correlation > 0.0 && target_correlation <= 1.0) {
        return Err(Error::invalid(format!(
            "target correlation must lie in (0, 1], got {target_correlation}"
        )));
    }
    Ok((target_correlation * subjects as f64).round() as usize)
}

/// Overwrites `col_a` with all ones and `col_b` with exactly
/// `round(target · subjects)` ones at seeded positions, so the pair's
/// correlation is known exactly.
pub fn inject_pair(
    matrix: &mut GenotypeMatrix,
    target_correlation: f64,
    col_a: usize,
    col_b: usize,
    seed: u64,
) -> Result<Injection> {
    let ones = injected_ones(target_correlation, matrix.subjects())?;
    inject_pair_with_ones(matrix, ones, col_a, col_b, seed)
}

pub fn inject_pair_with_ones(
    matrix: &mut GenotypeMatrix,
    ones: usize,
    col_a: usize,
    col_b: usize,
    seed: u64,
) -> Result<Injection> {
    if matrix.alphabet() != 2 {
        return Err(Error::invalid(format!(
            "pair injection needs a binary matrix, alphabet is {}",
            matrix.alphabet()
        )));
    }
    matrix.check_col(col_a)?;
    matrix.check_col(col_b)?;
    if col_a == col_b {
        return Err(Error::invalid("injected columns must differ"));
    }
    let k = matrix.subjects();
    if ones > k {
        return Err(Error::invalid(format!(
            "{ones} ones do not fit in {k} subjects"
        )));
    }
    let zeros = sample_prefix(&mut seeded(seed), k, k - ones);
    for r in 0..k {
        matrix.inner.set(r, col_a, 1);
        matrix.inner.set(r, col_b, 1);
    }
    for r in zeros {
        matrix.inner.set(r, col_b, 0);
    }
    Ok(Injection {
        col_a,
        col_b,
        ones,
        correlation: ones as f64 / k as f64,
    })
}

/// Makes row `target` agree with row `source` in exactly `matches`
/// positions; every other position gets a uniformly chosen different symbol.
pub fn plant_correlated_row(
    matrix: &mut SymbolMatrix,
    source: usize,
    target: usize,
    matches: usize,
    seed: u64,
) -> Result<()> {
    let (n, t, sigma) = (matrix.rows(), matrix.cols(), matrix.alphabet());
    for idx in [source, target] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, len: n });
        }
    }
    if source == target {
        return Err(Error::invalid("planted rows must differ"));
    }
    if matches > t {
        return Err(Error::invalid(format!(
            "{matches} matches exceed row length {t}"
        )));
    }
    let mut rng = seeded(seed);
    let src = matrix.row(source).to_vec();
    let differ = sample_prefix(&mut rng, t, t - matches);
    let row = matrix.row_mut(target);
    row.copy_from_slice(&src);
    for pos in differ {
        let shift = rng.random_range(1..sigma) as u8;
        row[pos] = ((src[pos] as usize + shift as usize) % sigma) as u8;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{correlation, count_matches, SymbolString};

    #[test]
    fn random_walk_is_deterministic() {
        let a = gen_random_walk(5, 7, 1.0).unwrap();
        let b = gen_random_walk(5, 7, 1.0).unwrap();
        assert_eq!(
            a.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_ne!(a, gen_random_walk(5, 8, 1.0).unwrap());
    }

    #[test]
    fn short_walk_starts_at_zero() {
        let w = gen_random_walk(2, 99, 1.0).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w.values()[0], 0.0);
        assert!(gen_random_walk(1, 0, 1.0).is_err());
        assert!(gen_random_walk(10, 0, 0.0).is_err());
    }

    #[test]
    fn random_walk_step_statistics() {
        let w = gen_random_walk(10_000, 1, 1.0).unwrap();
        let steps: Vec<f64> = w.values().windows(2).map(|p| p[1] - p[0]).collect();
        let n = steps.len() as f64;
        let mean = steps.iter().sum::<f64>() / n;
        let var = steps.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.1, "mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < 0.1, "stddev {}", var.sqrt());
    }

    #[test]
    fn lmer_view() {
        let ts = TimeSeries::new((0..10).map(f64::from).collect()).unwrap();
        assert_eq!(ts.num_lmers(4), 7);
        let pts = ts.lmers(4).unwrap();
        assert_eq!(pts.len(), 7);
        assert_eq!(pts.point(6), &[6.0, 7.0, 8.0, 9.0]);
        assert!(ts.lmers(11).is_err());
        assert!(ts.lmers(0).is_err());
    }

    #[test]
    fn binomial_matrix_is_deterministic_and_in_range() {
        let a = gen_binomial_matrix(2, 2, 2, 4).unwrap();
        assert_eq!(a, gen_binomial_matrix(2, 2, 2, 4).unwrap());
        let one = gen_binomial_matrix(1, 1, 2, 4).unwrap();
        assert!(one.get(0, 0) < 2);
        let tri = gen_binomial_matrix(50, 50, 3, 1).unwrap();
        assert!(tri.as_matrix().as_slice().iter().all(|&s| s < 3));
        assert!(gen_binomial_matrix(0, 3, 2, 0).is_err());
    }

    #[test]
    fn binomial_column_frequencies() {
        let m = gen_binomial_matrix(200, 10_000, 2, 3).unwrap();
        let items = m.to_items();
        for c in 0..items.rows() {
            let ones = items.row(c).iter().filter(|&&s| s == 1).count();
            let freq = ones as f64 / 200.0;
            assert!((freq - 0.5).abs() < 0.15, "column {c}: {freq}");
        }
    }

    fn col_string(m: &GenotypeMatrix, c: usize) -> SymbolString {
        SymbolString::new(m.column(c), 2).unwrap()
    }

    #[test]
    fn inject_exact_correlation() {
        let mut m = gen_binomial_matrix(10, 6, 2, 1).unwrap();
        let before = m.clone();
        let inj = inject_pair(&mut m, 0.6, 1, 4, 11).unwrap();
        assert_eq!(inj.ones, 6);
        assert!(m.column(1).iter().all(|&s| s == 1));
        assert_eq!(m.column(4).iter().filter(|&&s| s == 1).count(), 6);
        assert!((correlation(&col_string(&m, 1), &col_string(&m, 4)).unwrap() - 0.6).abs() < 1e-12);
        for c in [0, 2, 3, 5] {
            assert_eq!(m.column(c), before.column(c));
        }
    }

    #[test]
    fn inject_full_and_rounded() {
        let mut m = gen_binomial_matrix(10, 3, 2, 2).unwrap();
        let inj = inject_pair(&mut m, 1.0, 0, 2, 0).unwrap();
        assert_eq!(inj.correlation, 1.0);
        assert_eq!(
            correlation(&col_string(&m, 0), &col_string(&m, 2)).unwrap(),
            1.0
        );

        let mut m = gen_binomial_matrix(100, 3, 2, 2).unwrap();
        let inj = inject_pair(&mut m, 0.583, 0, 1, 5).unwrap();
        assert_eq!(inj.ones, 58);
        let c = correlation(&col_string(&m, 0), &col_string(&m, 1)).unwrap();
        assert!((c - 0.58).abs() < 1e-12);
    }

    #[test]
    fn inject_errors() {
        let mut tri = gen_binomial_matrix(10, 3, 3, 2).unwrap();
        assert!(inject_pair(&mut tri, 0.5, 0, 1, 0).is_err());
        let mut m = gen_binomial_matrix(10, 3, 2, 2).unwrap();
        assert!(matches!(
            inject_pair(&mut m, 0.5, 0, 3, 0),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));
        assert!(inject_pair(&mut m, 0.5, 1, 1, 0).is_err());
        assert!(inject_pair(&mut m, 0.0, 0, 1, 0).is_err());
        assert!(inject_pair(&mut m, 1.5, 0, 1, 0).is_err());
    }

    #[test]
    fn planted_rows_have_exact_matches() {
        let mut m = gen_binomial_matrix(50, 20, 4, 9).unwrap().to_items();
        plant_correlated_row(&mut m, 3, 7, 45, 1).unwrap();
        assert_eq!(count_matches(m.row(3), m.row(7)), 45);
        plant_correlated_row(&mut m, 3, 8, 0, 2).unwrap();
        assert_eq!(count_matches(m.row(3), m.row(8)), 0);
    }
}

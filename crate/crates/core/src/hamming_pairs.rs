//! Least and most correlated pairs of symbol strings.
//!
//! The least correlated pair is found with the same bucketing search as the
//! most correlated one by encoding every string in binary and comparing
//! each encoded string against the complements of the others. Under the
//! one-hot code, per position, equal symbols agree on all `σ` bits and
//! unequal symbols on `σ - 2`, so for strings of length `k` sharing `u`
//! symbols:
//!
//! * `M(A′_i, A′_j) = σ·u + (σ-2)(k-u)`
//! * `M(A′_i, Ā′_j) = 2(k-u)`
//!
//! The second count falls as `u` rises, so the encoded maximum across the
//! two groups is exactly the raw minimum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lightbulb::{
    brute_force_most_correlated, most_correlated_pair, Admissibility, LightbulbParams,
    LightbulbStats, ResolvedParams,
};
use crate::matrix::{BitMatrix, SymbolMatrix};
use crate::metrics::{count_matches, SymbolString};
use crate::rng::seeded;

use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EncodingKind {
    OneHot,
    /// Independent uniform bits per symbol, `code_length` bits each.
    Random {
        code_length: usize,
        seed: u64,
    },
}

/// Per-symbol binary codes, each stored as 0/1 bytes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryEncoding {
    kind: EncodingKind,
    alphabet: usize,
    code_length: usize,
    codes: Vec<u8>,
}

impl BinaryEncoding {
    /// Symbol `s` maps to a single 1 at position `σ-1-s`, so for `σ = 3`:
    /// `0 → 001`, `1 → 010`, `2 → 100`.
    pub fn one_hot(alphabet: usize) -> Result<Self> {
        check_alphabet(alphabet)?;
        let mut codes = vec![0u8; alphabet * alphabet];
        for s in 0..alphabet {
            codes[s * alphabet + (alphabet - 1 - s)] = 1;
        }
        Ok(BinaryEncoding {
            kind: EncodingKind::OneHot,
            alphabet,
            code_length: alphabet,
            codes,
        })
    }

    pub fn random(alphabet: usize, code_length: usize, seed: u64) -> Result<Self> {
        check_alphabet(alphabet)?;
        if code_length == 0 {
            return Err(Error::invalid("code length must be positive"));
        }
        let mut rng = seeded(seed);
        let codes = (0..alphabet * code_length)
            .map(|_| rng.random::<bool>() as u8)
            .collect();
        Ok(BinaryEncoding {
            kind: EncodingKind::Random { code_length, seed },
            alphabet,
            code_length,
            codes,
        })
    }

    pub fn new(kind: EncodingKind, alphabet: usize) -> Result<Self> {
        match kind {
            EncodingKind::OneHot => BinaryEncoding::one_hot(alphabet),
            EncodingKind::Random { code_length, seed } => {
                BinaryEncoding::random(alphabet, code_length, seed)
            }
        }
    }

    pub fn kind(&self) -> EncodingKind {
        self.kind
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn code_length(&self) -> usize {
        self.code_length
    }

    pub fn code(&self, symbol: u8) -> &[u8] {
        let s = symbol as usize;
        &self.codes[s * self.code_length..(s + 1) * self.code_length]
    }

    pub fn encode_symbols(&self, symbols: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(symbols.len() * self.code_length);
        for &s in symbols {
            out.extend_from_slice(self.code(s));
        }
        out
    }

    pub fn encode(&self, s: &SymbolString) -> Result<Vec<u8>> {
        if s.alphabet() != self.alphabet {
            return Err(Error::AlphabetMismatch {
                left: s.alphabet(),
                right: self.alphabet,
            });
        }
        Ok(self.encode_symbols(s.symbols()))
    }
}

fn check_alphabet(alphabet: usize) -> Result<()> {
    if !(2..=256).contains(&alphabet) {
        return Err(Error::invalid(format!(
            "alphabet size must be in 2..=256, got {alphabet}"
        )));
    }
    Ok(())
}

/// One-hot code of `s`: `σ·k` bits with exactly `k` ones.
pub fn one_hot_encode(s: &SymbolString) -> Vec<u8> {
    BinaryEncoding::one_hot(s.alphabet())
        .expect("alphabet validated by SymbolString")
        .encode_symbols(s.symbols())
}

pub fn complement(bits: &[u8]) -> Vec<u8> {
    bits.iter().map(|&b| 1 - b).collect()
}

/// Both encoded match counts next to their closed forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IdentityCheck {
    pub raw_matches: usize,
    pub encoded: usize,
    pub encoded_expected: usize,
    pub against_complement: usize,
    pub against_complement_expected: usize,
}

impl IdentityCheck {
    pub fn holds(&self) -> bool {
        self.encoded == self.encoded_expected
            && self.against_complement == self.against_complement_expected
    }
}

/// Counts `M(A′_i, A′_j)` and `M(A′_i, Ā′_j)` bit by bit under the one-hot
/// code and pairs them with `σu + (σ-2)(k-u)` and `2(k-u)`.
pub fn encoded_match_identity_check(x: &SymbolString, y: &SymbolString) -> Result<IdentityCheck> {
    if x.alphabet() != y.alphabet() {
        return Err(Error::AlphabetMismatch {
            left: x.alphabet(),
            right: y.alphabet(),
        });
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let sigma = x.alphabet();
    let k = x.len();
    let u = count_matches(x.symbols(), y.symbols());
    let ex = one_hot_encode(x);
    let ey = one_hot_encode(y);
    Ok(IdentityCheck {
        raw_matches: u,
        encoded: count_matches(&ex, &ey),
        encoded_expected: sigma * u + (sigma - 2) * (k - u),
        against_complement: count_matches(&ex, &complement(&ey)),
        against_complement_expected: 2 * (k - u),
    })
}

/// `2n` bit-packed items: encoded strings `0..n`, complements `n..2n`.
#[derive(Clone, Debug)]
pub struct EncodedMatrix {
    bits: BitMatrix,
    strings: usize,
    encoding: BinaryEncoding,
}

impl EncodedMatrix {
    pub fn build(strings: &SymbolMatrix, encoding: BinaryEncoding) -> Result<Self> {
        if strings.alphabet() != encoding.alphabet() {
            return Err(Error::AlphabetMismatch {
                left: strings.alphabet(),
                right: encoding.alphabet(),
            });
        }
        let n = strings.rows();
        let len = strings.cols() * encoding.code_length();
        let mut bits = BitMatrix::zeros(2 * n, len);
        for i in 0..n {
            bits.write_bits(i, 0, &encoding.encode_symbols(strings.row(i)));
            bits.write_complement(i, n + i);
        }
        Ok(EncodedMatrix {
            bits,
            strings: n,
            encoding,
        })
    }

    pub fn bits(&self) -> &BitMatrix {
        &self.bits
    }

    pub fn strings(&self) -> usize {
        self.strings
    }

    pub fn encoding(&self) -> &BinaryEncoding {
        &self.encoding
    }

    /// Encoded strings against complements, never a string against its own
    /// complement.
    pub fn admissibility(&self) -> Admissibility {
        Admissibility::CrossGroups {
            split: self.strings,
            exclude_mirror: true,
        }
    }

    /// Item `n+i` is the complement of item `i` for every `i`.
    pub fn complements_consistent(&self) -> bool {
        (0..self.strings).all(|i| self.bits.matches(i, self.strings + i) == 0)
    }
}

/// A pair of strings `i < j` and its exact raw correlation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StringPair {
    pub i: usize,
    pub j: usize,
    pub matches: usize,
    pub correlation: f64,
    /// Match count of the winning pair in the searched representation.
    pub search_matches: usize,
    pub params: Option<ResolvedParams>,
    pub stats: LightbulbStats,
}

fn check_strings(strings: &SymbolMatrix) -> Result<()> {
    if strings.rows() < 2 {
        return Err(Error::TooFewItems {
            needed: 2,
            got: strings.rows(),
        });
    }
    if strings.cols() == 0 {
        return Err(Error::invalid("strings must be non-empty"));
    }
    Ok(())
}

fn raw_pair(strings: &SymbolMatrix, a: usize, b: usize) -> (usize, usize, usize, f64) {
    let (i, j) = (a.min(b), a.max(b));
    let matches = count_matches(strings.row(i), strings.row(j));
    (i, j, matches, matches as f64 / strings.cols() as f64)
}

/// Least correlated pair among the rows of `strings` via the complement
/// construction. `params.admissibility` is replaced by the cross-group rule.
pub fn least_correlated_pair(
    strings: &SymbolMatrix,
    encoding: EncodingKind,
    params: &LightbulbParams,
) -> Result<StringPair> {
    check_strings(strings)?;
    let encoded =
        EncodedMatrix::build(strings, BinaryEncoding::new(encoding, strings.alphabet())?)?;
    let params = LightbulbParams {
        admissibility: encoded.admissibility(),
        ..params.clone()
    };
    let r = most_correlated_pair(encoded.bits(), &params)?;
    let n = encoded.strings();
    let (i, j, matches, correlation) = raw_pair(strings, r.best.a, r.best.b - n);
    Ok(StringPair {
        i,
        j,
        matches,
        correlation,
        search_matches: r.best.matches,
        params: r.params,
        stats: r.stats,
    })
}

/// Exhaustive minimum correlation; ties go to the smallest `(i, j)`.
pub fn brute_force_least_correlated(strings: &SymbolMatrix) -> Result<StringPair> {
    check_strings(strings)?;
    let n = strings.rows();
    let mut best: Option<(usize, usize, usize)> = None;
    let mut examined = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            examined += 1;
            let m = count_matches(strings.row(i), strings.row(j));
            if best.is_none_or(|(bm, _, _)| m < bm) {
                best = Some((m, i, j));
            }
        }
    }
    let (matches, i, j) = best.expect("at least one pair");
    Ok(StringPair {
        i,
        j,
        matches,
        correlation: matches as f64 / strings.cols() as f64,
        search_matches: matches,
        params: None,
        stats: LightbulbStats {
            pairs_examined: examined,
            fully_verified: examined,
            ..LightbulbStats::default()
        },
    })
}

/// Most correlated pair, searched directly on the raw symbols.
pub fn most_correlated_pair_strings(
    strings: &SymbolMatrix,
    params: &LightbulbParams,
) -> Result<StringPair> {
    check_strings(strings)?;
    let r = most_correlated_pair(strings, params)?;
    let (i, j, matches, correlation) = raw_pair(strings, r.best.a, r.best.b);
    Ok(StringPair {
        i,
        j,
        matches,
        correlation,
        search_matches: r.best.matches,
        params: r.params,
        stats: r.stats,
    })
}

/// Exhaustive maximum correlation on the raw symbols.
pub fn brute_force_most_correlated_strings(strings: &SymbolMatrix) -> Result<StringPair> {
    check_strings(strings)?;
    let r = brute_force_most_correlated(strings, &Admissibility::All)?;
    let (i, j, matches, correlation) = raw_pair(strings, r.best.a, r.best.b);
    Ok(StringPair {
        i,
        j,
        matches,
        correlation,
        search_matches: r.best.matches,
        params: None,
        stats: r.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::gen_binomial_matrix;
    use proptest::prelude::*;

    fn s(d: &str, sigma: usize) -> SymbolString {
        SymbolString::from_digits(d, sigma).unwrap()
    }

    #[test]
    fn one_hot_table() {
        assert_eq!(
            one_hot_encode(&s("012", 3)),
            vec![0, 0, 1, 0, 1, 0, 1, 0, 0]
        );
        assert_eq!(one_hot_encode(&s("0", 3)), vec![0, 0, 1]);
        let e = one_hot_encode(&s("3102", 4));
        assert_eq!(e.len(), 16);
        assert_eq!(e.iter().filter(|&&b| b == 1).count(), 4);
    }

    #[test]
    fn identity_examples() {
        let c = encoded_match_identity_check(&s("012", 3), &s("012", 3)).unwrap();
        assert_eq!((c.encoded, c.encoded_expected), (9, 9));
        assert_eq!(
            (c.against_complement, c.against_complement_expected),
            (0, 0)
        );
        assert!(encoded_match_identity_check(&s("01", 3), &s("012", 3)).is_err());
        assert!(encoded_match_identity_check(&s("01", 3), &s("01", 4)).is_err());
    }

    #[test]
    fn random_table_reproducible() {
        let a = BinaryEncoding::random(5, 7, 3).unwrap();
        assert_eq!(a, BinaryEncoding::random(5, 7, 3).unwrap());
        assert_ne!(a, BinaryEncoding::random(5, 7, 4).unwrap());
        assert_eq!(a.code(4).len(), 7);
    }

    #[test]
    fn random_code_expected_matches() {
        let sigma = 16;
        let (mut same, mut against, mut count) = (0usize, 0usize, 0usize);
        for seed in 0..1000 {
            let e = BinaryEncoding::random(sigma, sigma, seed).unwrap();
            for x in 0..sigma as u8 {
                for y in 0..sigma as u8 {
                    if x != y {
                        same += count_matches(e.code(x), e.code(y));
                        against += count_matches(e.code(x), &complement(e.code(y)));
                        count += 1;
                    }
                }
            }
        }
        let mean_same = same as f64 / count as f64;
        let mean_against = against as f64 / count as f64;
        assert!((mean_same - 8.0).abs() < 0.5, "{mean_same}");
        assert!((mean_against - 8.0).abs() < 0.5, "{mean_against}");
    }

    #[test]
    fn encoded_matrix_structure() {
        let m = gen_binomial_matrix(10, 6, 3, 1).unwrap().to_items();
        let e = EncodedMatrix::build(&m, BinaryEncoding::one_hot(3).unwrap()).unwrap();
        assert_eq!(e.bits().rows(), 12);
        assert_eq!(e.bits().cols(), 30);
        assert!(e.complements_consistent());
        for i in 0..6 {
            assert_eq!(e.bits().row_bits(i), one_hot_encode(&m.row_string(i)));
            assert_eq!(e.bits().count_ones(i), 10);
        }
    }

    #[test]
    fn disjoint_string_is_least_correlated() {
        let m =
            SymbolMatrix::from_rows(&[vec![0u8, 0, 0], vec![0, 0, 0], vec![1, 2, 1]], 3).unwrap();
        let r = least_correlated_pair(&m, EncodingKind::OneHot, &LightbulbParams::with_seed(0))
            .unwrap();
        assert!((r.i, r.j) == (0, 2) || (r.i, r.j) == (1, 2));
        assert_eq!(r.correlation, 0.0);
        let bf = brute_force_least_correlated(&m).unwrap();
        assert_eq!((bf.i, bf.j, bf.correlation), (0, 2, 0.0));
        assert_eq!(bf.stats.pairs_examined, 3);
    }

    #[test]
    fn identical_strings_tie_to_first_pair() {
        let m = SymbolMatrix::from_rows(&vec![vec![1u8, 2, 0]; 4], 3).unwrap();
        let bf = brute_force_least_correlated(&m).unwrap();
        assert_eq!((bf.i, bf.j, bf.correlation), (0, 1, 1.0));
        let r = most_correlated_pair_strings(&m, &LightbulbParams::with_seed(1)).unwrap();
        assert_eq!((r.i, r.j, r.correlation), (0, 1, 1.0));
    }

    #[test]
    fn two_strings() {
        let m = SymbolMatrix::from_rows(&[vec![1u8, 2, 0, 0], vec![1, 0, 0, 2]], 3).unwrap();
        let r = least_correlated_pair(&m, EncodingKind::OneHot, &LightbulbParams::with_seed(5))
            .unwrap();
        assert_eq!((r.i, r.j, r.matches), (0, 1, 2));
        let r = most_correlated_pair_strings(&m, &LightbulbParams::with_seed(5)).unwrap();
        assert_eq!((r.i, r.j, r.matches), (0, 1, 2));
        let one = SymbolMatrix::from_rows(&[vec![1u8]], 3).unwrap();
        assert!(brute_force_least_correlated(&one).is_err());
    }

    #[test]
    fn random_encoding_path_runs() {
        let m = gen_binomial_matrix(40, 30, 5, 2).unwrap().to_items();
        let kind = EncodingKind::Random {
            code_length: 5,
            seed: 9,
        };
        let r = least_correlated_pair(&m, kind, &LightbulbParams::with_seed(2)).unwrap();
        assert!(r.i < r.j && r.j < 30);
        assert_eq!(r.matches, count_matches(m.row(r.i), m.row(r.j)));
    }

    fn pair_strategy() -> impl Strategy<Value = (usize, Vec<u8>, Vec<u8>)> {
        (3usize..=8, 1usize..40).prop_flat_map(|(sigma, k)| {
            let sym = 0u8..sigma as u8;
            (
                Just(sigma),
                prop::collection::vec(sym.clone(), k),
                prop::collection::vec(sym, k),
            )
        })
    }

    proptest! {
        #[test]
        fn identities_hold((sigma, x, y) in pair_strategy()) {
            let c = encoded_match_identity_check(
                &SymbolString::new(x, sigma).unwrap(),
                &SymbolString::new(y, sigma).unwrap(),
            ).unwrap();
            prop_assert!(c.holds(), "{:?}", c);
        }

        #[test]
        fn complement_identity(bits in prop::collection::vec(0u8..2, 0..100), other in prop::collection::vec(0u8..2, 100)) {
            let y = &other[..bits.len()];
            prop_assert_eq!(count_matches(&bits, &complement(y)), bits.len() - count_matches(&bits, y));
        }

        #[test]
        fn encoded_order_is_raw_order(seed in 0u64..1000) {
            // sigma = 3 transformed correlations
            let m = gen_binomial_matrix(20, 4, 3, seed).unwrap().to_items();
            let e = EncodedMatrix::build(&m, BinaryEncoding::one_hot(3).unwrap()).unwrap();
            let k = 20.0;
            for i in 0..4 {
                for j in 0..4 {
                    if i == j { continue; }
                    let p = count_matches(m.row(i), m.row(j)) as f64 / k;
                    let same = e.bits().matches(i, j) as f64 / (3.0 * k);
                    let against = e.bits().matches(i, 4 + j) as f64 / (3.0 * k);
                    prop_assert!((same - (1.0 / 3.0 + 2.0 / 3.0 * p)).abs() < 1e-12);
                    prop_assert!((against - 2.0 / 3.0 * (1.0 - p)).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn agrees_with_brute_force_when_saturated(seed in 0u64..1000, n in 2usize..10) {
            let m = gen_binomial_matrix(8, n, 3, seed).unwrap().to_items();
            let p = LightbulbParams { sample_size: Some(1), iterations: Some(80), ..LightbulbParams::with_seed(seed) };
            let bf = brute_force_least_correlated(&m).unwrap();
            match least_correlated_pair(&m, EncodingKind::OneHot, &p) {
                Ok(r) if r.stats.pairs_examined == (n * (n - 1)) as u64 => {
                    prop_assert_eq!((r.i, r.j, r.matches), (bf.i, bf.j, bf.matches));
                }
                _ => {}
            }
        }
    }
}

use super::{Admissibility, MatchItems};
use crate::error::{Error, Result};
use crate::rng::{sample_prefix, seeded};

/// Items grouped by their projection onto the sampled positions.
pub(crate) struct Bucketing {
    /// Item indices, ascending within each bucket.
    members: Vec<u32>,
    /// Bucket `k` is `members[starts[k]..starts[k + 1]]`.
    starts: Vec<usize>,
}

impl Bucketing {
    pub fn buckets(&self) -> impl Iterator<Item = &[u32]> + '_ {
        self.starts
            .windows(2)
            .map(move |w| &self.members[w[0]..w[1]])
    }
}

pub(crate) fn sample_positions(positions: usize, sample_size: usize, seed: u64) -> Vec<usize> {
    let mut picked = sample_prefix(&mut seeded(seed), positions, sample_size);
    picked.sort_unstable();
    picked
}

pub(crate) fn check_sample_size<M: MatchItems + ?Sized>(
    items: &M,
    sample_size: usize,
) -> Result<()> {
    if sample_size == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    if sample_size > items.num_positions() {
        return Err(Error::invalid(format!(
            "sample size {sample_size} exceeds item length {}",
            items.num_positions()
        )));
    }
    Ok(())
}

/// Symbols stored position-major, so projecting every item onto one
/// position reads a contiguous row.
pub(crate) struct PositionMajor {
    items: usize,
    bits: u32,
    /// Position index of each stored row; `None` when all positions are
    /// stored in order.
    index: Option<Vec<usize>>,
    data: Vec<u8>,
}

impl PositionMajor {
    /// Every position of `items`.
    pub fn full<M: MatchItems + ?Sized>(items: &M) -> Self {
        let (n, t) = (items.num_items(), items.num_positions());
        let mut data = vec![0u8; n * t];
        for i in 0..n {
            for p in 0..t {
                data[p * n + i] = items.symbol(i, p);
            }
        }
        PositionMajor {
            items: n,
            bits: items.bits_per_symbol(),
            index: None,
            data,
        }
    }

    /// Only the listed positions.
    pub fn gather<M: MatchItems + ?Sized>(items: &M, positions: &[usize]) -> Self {
        let n = items.num_items();
        let mut data = Vec::with_capacity(n * positions.len());
        for &p in positions {
            data.extend((0..n).map(|i| items.symbol(i, p)));
        }
        PositionMajor {
            items: n,
            bits: items.bits_per_symbol(),
            index: Some(positions.to_vec()),
            data,
        }
    }

    fn row(&self, position: usize) -> &[u8] {
        let r = match &self.index {
            None => position,
            Some(idx) => idx
                .iter()
                .position(|&p| p == position)
                .expect("position was gathered"),
        };
        &self.data[r * self.items..(r + 1) * self.items]
    }
}

/// Sorts items by their projected strings and cuts at every change.
///
/// A projection of up to 32 bits is packed with the item index into one
/// `u64` (up to 96 bits into a `u128`), so the sort compares plain
/// integers and orders ties by index; longer projections fall back to
/// byte strings.
pub(crate) fn bucketize(symbols: &PositionMajor, positions: &[usize]) -> Bucketing {
    let n = symbols.items;
    let bits = symbols.bits;
    let key_bits = positions.len() as u32 * bits;
    let rows: Vec<&[u8]> = positions.iter().map(|&p| symbols.row(p)).collect();
    if key_bits <= 32 {
        let mut keys = vec![0u64; n];
        for row in &rows {
            for (k, &s) in keys.iter_mut().zip(row.iter()) {
                *k = (*k << bits) | s as u64;
            }
        }
        let mut packed: Vec<u64> = keys
            .iter()
            .enumerate()
            .map(|(i, &k)| (k << 32) | i as u64)
            .collect();
        packed.sort_unstable();
        cut_packed(&packed, |w| *w >> 32, |w| *w as u32)
    } else if key_bits <= 96 {
        let mut keys = vec![0u128; n];
        for row in &rows {
            for (k, &s) in keys.iter_mut().zip(row.iter()) {
                *k = (*k << bits) | s as u128;
            }
        }
        let mut packed: Vec<u128> = keys
            .iter()
            .enumerate()
            .map(|(i, &k)| (k << 32) | i as u128)
            .collect();
        packed.sort_unstable();
        cut_packed(&packed, |w| *w >> 32, |w| *w as u32)
    } else {
        let mut keyed: Vec<(Vec<u8>, u32)> = (0..n)
            .map(|i| (rows.iter().map(|r| r[i]).collect(), i as u32))
            .collect();
        keyed.sort_unstable();
        cut_packed(&keyed, |w| w.0.clone(), |w| w.1)
    }
}

fn cut_packed<W, K: PartialEq>(
    sorted: &[W],
    key: impl Fn(&W) -> K,
    index: impl Fn(&W) -> u32,
) -> Bucketing {
    let mut starts = Vec::new();
    let mut members = Vec::with_capacity(sorted.len());
    let mut prev: Option<K> = None;
    for (k, w) in sorted.iter().enumerate() {
        let current = key(w);
        if prev.as_ref() != Some(&current) {
            starts.push(k);
            prev = Some(current);
        }
        members.push(index(w));
    }
    starts.push(sorted.len());
    Bucketing { members, starts }
}

#[inline]
pub(crate) fn pack(a: usize, b: usize) -> u64 {
    ((a as u64) << 32) | b as u64
}

#[inline]
pub(crate) fn unpack(key: u64) -> (usize, usize) {
    ((key >> 32) as usize, (key & 0xffff_ffff) as usize)
}

/// Appends every admissible co-bucketed pair `(a, b)`, `a < b`.
pub(crate) fn emit_pairs(bucketing: &Bucketing, admissibility: &Admissibility, out: &mut Vec<u64>) {
    for bucket in bucketing.buckets() {
        if bucket.len() < 2 {
            continue;
        }
        match admissibility {
            Admissibility::CrossGroups { split, .. } => {
                let cut = bucket.partition_point(|&m| (m as usize) < *split);
                let (left, right) = bucket.split_at(cut);
                for &a in left {
                    for &b in right {
                        if admissibility.allows(a as usize, b as usize) {
                            out.push(pack(a as usize, b as usize));
                        }
                    }
                }
            }
            _ => {
                for (k, &a) in bucket.iter().enumerate() {
                    for &b in &bucket[k + 1..] {
                        if admissibility.allows(a as usize, b as usize) {
                            out.push(pack(a as usize, b as usize));
                        }
                    }
                }
            }
        }
    }
}

/// One bucketing round: samples `sample_size` distinct positions from
/// `iteration_seed` and groups items that agree on all of them.
///
/// The buckets partition `0..n`, are ordered by projected string, and list
/// their members in ascending order.
pub fn bucket_iteration<M: MatchItems + ?Sized>(
    items: &M,
    sample_size: usize,
    iteration_seed: u64,
) -> Result<Vec<Vec<usize>>> {
    check_sample_size(items, sample_size)?;
    if items.num_items() > u32::MAX as usize {
        return Err(Error::invalid("too many items for 32-bit indices"));
    }
    let positions = sample_positions(items.num_positions(), sample_size, iteration_seed);
    Ok(
        bucketize(&PositionMajor::gather(items, &positions), &positions)
            .buckets()
            .map(|b| b.iter().map(|&i| i as usize).collect())
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::gen_binomial_matrix;
    use crate::matrix::SymbolMatrix;
    use proptest::prelude::*;

    #[test]
    fn groups_identical_projections() {
        // AB, AB, BA over {A=0, B=1}
        let m = SymbolMatrix::from_rows(&[vec![0u8, 1], vec![0, 1], vec![1, 0]], 2).unwrap();
        let buckets = bucket_iteration(&m, 2, 0).unwrap();
        assert_eq!(buckets, vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn full_sample_groups_identical_rows() {
        let m = SymbolMatrix::from_rows(
            &[vec![0u8, 1, 2], vec![2, 1, 0], vec![0, 1, 2], vec![1, 1, 1]],
            3,
        )
        .unwrap();
        let mut buckets = bucket_iteration(&m, 3, 9).unwrap();
        buckets.sort();
        assert_eq!(buckets, vec![vec![0, 2], vec![1], vec![3]]);
    }

    #[test]
    fn distinct_rows_give_singletons_and_no_pairs() {
        let m = SymbolMatrix::from_rows(&[vec![0u8, 0], vec![0, 1], vec![1, 0], vec![1, 1]], 2)
            .unwrap();
        let buckets = bucket_iteration(&m, 2, 1).unwrap();
        assert!(buckets.iter().all(|b| b.len() == 1));
        let mut out = Vec::new();
        emit_pairs(
            &bucketize(&PositionMajor::full(&m), &[0, 1]),
            &Admissibility::All,
            &mut out,
        );
        assert!(out.is_empty());
    }

    #[test]
    fn oversized_sample_rejected() {
        let m = SymbolMatrix::from_rows(&[vec![0u8, 0], vec![0, 1]], 2).unwrap();
        assert!(bucket_iteration(&m, 3, 0).is_err());
        assert!(bucket_iteration(&m, 0, 0).is_err());
    }

    #[test]
    fn cross_group_emission() {
        let m = SymbolMatrix::from_rows(&[vec![0u8], vec![0], vec![0], vec![0]], 2).unwrap();
        let mut out = Vec::new();
        let adm = Admissibility::CrossGroups {
            split: 2,
            exclude_mirror: true,
        };
        emit_pairs(&bucketize(&PositionMajor::full(&m), &[0]), &adm, &mut out);
        let pairs: Vec<_> = out.into_iter().map(unpack).collect();
        assert_eq!(pairs, vec![(0, 3), (1, 2)]);
    }

    fn partition_oracle(m: &SymbolMatrix, positions: &[usize]) -> Vec<Vec<usize>> {
        let mut groups: std::collections::BTreeMap<Vec<u8>, Vec<usize>> = Default::default();
        for i in 0..m.rows() {
            let key = positions.iter().map(|&p| m.get(i, p)).collect();
            groups.entry(key).or_default().push(i);
        }
        groups.into_values().collect()
    }

    proptest! {
        #[test]
        fn matches_grouping_oracle(seed in 0u64..500, sigma in 2usize..7, s in 1usize..40) {
            // long samples exercise the byte-string fallback
            let m = gen_binomial_matrix(40, 30, sigma, seed).unwrap().to_items();
            let s = s.min(m.cols());
            let positions = sample_positions(m.cols(), s, seed);
            let got: Vec<Vec<usize>> = bucketize(&PositionMajor::full(&m), &positions)
                .buckets()
                .map(|b| b.iter().map(|&i| i as usize).collect())
                .collect();
            prop_assert_eq!(got, partition_oracle(&m, &positions));
        }
    }
}

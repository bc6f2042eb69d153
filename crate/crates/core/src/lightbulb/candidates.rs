use std::hash::{Hash, Hasher};

use rustc_hash::{FxHashMap, FxHashSet};

use super::bucket::unpack;
use crate::error::{Error, Result};

/// A pair index in the low 32 bits and its first-seen iteration in the
/// high 32; only the pair takes part in hashing and equality.
#[derive(Clone, Copy, Debug)]
struct Slot(u64);

impl Slot {
    fn pair(self) -> u32 {
        self.0 as u32
    }

    fn iteration(self) -> u32 {
        (self.0 >> 32) as u32
    }
}

impl PartialEq for Slot {
    fn eq(&self, other: &Self) -> bool {
        self.pair() == other.pair()
    }
}

impl Eq for Slot {}

impl Hash for Slot {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.pair().hash(state);
    }
}

#[derive(Clone, Debug)]
enum Store {
    /// `a·n + b` fits in 32 bits: 8 bytes per pair.
    Compact {
        items: u64,
        slots: FxHashSet<Slot>,
    },
    Wide(FxHashMap<u64, u32>),
}

/// Deduplicated co-bucketed pairs with the iteration each was first seen in.
#[derive(Clone, Debug)]
pub struct CandidateSet {
    store: Store,
    cap: usize,
}

impl CandidateSet {
    /// Empty set for pairs over `items` items.
    pub fn new(items: usize, cap: usize) -> Self {
        let items = items as u64;
        let store = if items.saturating_mul(items) <= 1 << 32 {
            Store::Compact {
                items,
                slots: FxHashSet::default(),
            }
        } else {
            Store::Wide(FxHashMap::default())
        };
        CandidateSet { store, cap }
    }

    pub fn len(&self) -> usize {
        match &self.store {
            Store::Compact { slots, .. } => slots.len(),
            Store::Wide(map) => map.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Records `(a, b)` (`a < b`). Returns whether the pair is new.
    pub fn insert(&mut self, a: usize, b: usize, iteration: usize) -> Result<bool> {
        debug_assert!(a < b);
        let full = self.len() >= self.cap;
        let fresh = match &mut self.store {
            Store::Compact { items, slots } => {
                let slot = Slot(((iteration as u64) << 32) | (a as u64 * *items + b as u64));
                if full {
                    if slots.contains(&slot) {
                        return Ok(false);
                    }
                    return Err(Error::CandidateOverflow { cap: self.cap });
                }
                slots.insert(slot)
            }
            Store::Wide(map) => {
                let key = ((a as u64) << 32) | b as u64;
                if full {
                    if map.contains_key(&key) {
                        return Ok(false);
                    }
                    return Err(Error::CandidateOverflow { cap: self.cap });
                }
                let mut fresh = false;
                map.entry(key).or_insert_with(|| {
                    fresh = true;
                    iteration as u32
                });
                fresh
            }
        };
        Ok(fresh)
    }

    pub(crate) fn insert_packed(&mut self, key: u64, iteration: usize) -> Result<bool> {
        let (a, b) = unpack(key);
        self.insert(a, b, iteration)
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.first_seen(a, b).is_some()
    }

    pub fn first_seen(&self, a: usize, b: usize) -> Option<usize> {
        let (a, b) = (a.min(b), a.max(b));
        match &self.store {
            Store::Compact { items, slots } => slots
                .get(&Slot(a as u64 * *items + b as u64))
                .map(|s| s.iteration() as usize),
            Store::Wide(map) => map
                .get(&(((a as u64) << 32) | b as u64))
                .map(|&it| it as usize),
        }
    }

    /// Pairs in unspecified order.
    pub fn iter(&self) -> Box<dyn Iterator<Item = (usize, usize)> + '_> {
        match &self.store {
            Store::Compact { items, slots } => {
                let n = *items;
                Box::new(slots.iter().map(move |s| {
                    let p = s.pair() as u64;
                    ((p / n) as usize, (p % n) as usize)
                }))
            }
            Store::Wide(map) => Box::new(map.keys().map(|&k| unpack(k))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exercise(mut c: CandidateSet) {
        assert!(c.insert(1, 4, 0).unwrap());
        assert!(!c.insert(1, 4, 3).unwrap());
        assert!(c.insert(0, 2, 3).unwrap());
        assert_eq!(c.len(), 2);
        assert_eq!(c.first_seen(4, 1), Some(0));
        assert_eq!(c.first_seen(0, 2), Some(3));
        assert!(c.contains(2, 0));
        assert!(!c.contains(0, 1));
        let mut pairs: Vec<_> = c.iter().collect();
        pairs.sort();
        assert_eq!(pairs, vec![(0, 2), (1, 4)]);
    }

    #[test]
    fn dedup_and_first_seen() {
        exercise(CandidateSet::new(10, 10));
        exercise(CandidateSet::new(1 << 20, 10));
    }

    #[test]
    fn compact_key_space_boundary() {
        let n = 1 << 16;
        let mut c = CandidateSet::new(n, 10);
        assert!(matches!(c.store, Store::Compact { .. }));
        c.insert(n - 2, n - 1, 7).unwrap();
        assert_eq!(c.first_seen(n - 2, n - 1), Some(7));
        assert_eq!(c.iter().collect::<Vec<_>>(), vec![(n - 2, n - 1)]);
    }

    #[test]
    fn overflow_is_an_error() {
        for items in [10, 1 << 20] {
            let mut c = CandidateSet::new(items, 1);
            c.insert(0, 1, 0).unwrap();
            assert!(!c.insert(0, 1, 1).unwrap());
            assert!(matches!(
                c.insert(0, 2, 1),
                Err(Error::CandidateOverflow { cap: 1 })
            ));
        }
    }
}

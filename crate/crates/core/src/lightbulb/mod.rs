//! Most-correlated pair by repeated random-position bucketing.
//!
//! Each iteration samples a few positions, groups items that agree on all
//! of them, and records every admissible pair sharing a group. Highly
//! correlated pairs agree on a random position with high probability, so
//! they collide far more often than typical pairs. Candidates are then
//! verified exactly and the best one is returned.
//!
//! Items are rows: a [`SymbolMatrix`] of `n × t` compares its `n` rows of
//! length `t`. Genotype matrices, stored subjects × SNPs, are transposed
//! with [`GenotypeMatrix::to_items`](crate::datagen::GenotypeMatrix::to_items).

mod bucket;
mod candidates;
mod search;

pub use bucket::bucket_iteration;
pub use candidates::CandidateSet;
pub use search::{
    brute_force_most_correlated, most_correlated_pair, LightbulbResult, LightbulbSearch,
    LightbulbStats, Match,
};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::matrix::{BitMatrix, SymbolMatrix};
use crate::refscan::Execution;

pub const DEFAULT_CANDIDATE_CAP: usize = 100_000_000;

/// `⌈log2 n⌉`, at least 1.
pub fn ceil_log2(n: usize) -> usize {
    (n.max(2) as f64).log2().ceil() as usize
}

pub fn default_sample_size(items: usize) -> usize {
    ceil_log2(items)
}

pub fn default_iterations(items: usize) -> usize {
    (5.0 * (items.max(2) as f64).log2()).ceil() as usize
}

/// Which index pairs may become candidates. Pairs are always passed with
/// `a < b`.
#[derive(Clone, Default)]
pub enum Admissibility {
    #[default]
    All,
    /// `a < split <= b`, optionally excluding `b == a + split`.
    CrossGroups {
        split: usize,
        exclude_mirror: bool,
    },
    Custom(Arc<dyn Fn(usize, usize) -> bool + Send + Sync>),
}

impl Admissibility {
    #[inline]
    pub fn allows(&self, a: usize, b: usize) -> bool {
        match self {
            Admissibility::All => a != b,
            Admissibility::CrossGroups {
                split,
                exclude_mirror,
            } => a < *split && b >= *split && !(*exclude_mirror && b == a + split),
            Admissibility::Custom(f) => a != b && f(a, b),
        }
    }

    /// Key used to break ties between equally good pairs.
    ///
    /// For cross-group pairs this is the unordered pair of group-local
    /// indices, so `(i, split + j)` and `(j, split + i)` rank together and
    /// ties resolve the same way as an exhaustive search over the
    /// original objects.
    #[inline]
    pub fn canonical(&self, a: usize, b: usize) -> (usize, usize) {
        match self {
            Admissibility::CrossGroups { split, .. } => {
                let (i, j) = (a, b - split);
                (i.min(j), i.max(j))
            }
            _ => (a, b),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Admissibility::All => "all".into(),
            Admissibility::CrossGroups {
                split,
                exclude_mirror,
            } => format!("cross-groups(split={split}, exclude_mirror={exclude_mirror})"),
            Admissibility::Custom(_) => "custom".into(),
        }
    }
}

impl fmt::Debug for Admissibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Clone, Debug)]
pub struct LightbulbParams {
    /// Iterations to run; with `auto_stop` this is an upper bound.
    /// `None` means `⌈5·log2 n⌉`.
    pub iterations: Option<usize>,
    /// Positions sampled per iteration; `None` means `⌈log2 n⌉` capped at
    /// the item length.
    pub sample_size: Option<usize>,
    pub seed: u64,
    /// Stop once the best pair has not changed for `⌈log2 n⌉` iterations.
    pub auto_stop: bool,
    pub admissibility: Admissibility,
    /// Largest candidate set allowed before failing with an overflow error.
    pub candidate_cap: usize,
    pub execution: Execution,
}

impl Default for LightbulbParams {
    fn default() -> Self {
        LightbulbParams {
            iterations: None,
            sample_size: None,
            seed: 0,
            auto_stop: false,
            admissibility: Admissibility::All,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
            execution: Execution::Sequential,
        }
    }
}

impl LightbulbParams {
    pub fn with_seed(seed: u64) -> Self {
        LightbulbParams {
            seed,
            ..LightbulbParams::default()
        }
    }

    pub fn resolved_iterations(&self, items: usize) -> usize {
        self.iterations.unwrap_or_else(|| default_iterations(items))
    }

    pub fn resolved_sample_size(&self, items: usize, positions: usize) -> usize {
        self.sample_size
            .unwrap_or_else(|| default_sample_size(items).min(positions))
    }
}

/// Serializable summary of the parameters actually used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    pub iterations: usize,
    pub sample_size: usize,
    pub seed: u64,
    pub auto_stop: bool,
    pub admissibility: String,
}

/// A collection of equal-length items that can be bucketed and compared.
pub trait MatchItems: Sync {
    fn num_items(&self) -> usize;
    fn num_positions(&self) -> usize;
    /// Bits needed to store one symbol.
    fn bits_per_symbol(&self) -> u32;
    fn symbol(&self, item: usize, position: usize) -> u8;
    fn matches(&self, a: usize, b: usize) -> usize;
    /// `Some(matches)` when `matches >= min_matches`, else `None`; may stop
    /// early.
    fn matches_at_least(&self, a: usize, b: usize, min_matches: usize) -> Option<usize>;
}

impl MatchItems for SymbolMatrix {
    fn num_items(&self) -> usize {
        self.rows()
    }

    fn num_positions(&self) -> usize {
        self.cols()
    }

    fn bits_per_symbol(&self) -> u32 {
        usize::BITS - (self.alphabet() - 1).leading_zeros()
    }

    #[inline]
    fn symbol(&self, item: usize, position: usize) -> u8 {
        self.get(item, position)
    }

    fn matches(&self, a: usize, b: usize) -> usize {
        crate::metrics::count_matches(self.row(a), self.row(b))
    }

    fn matches_at_least(&self, a: usize, b: usize, min_matches: usize) -> Option<usize> {
        let budget = self.cols().checked_sub(min_matches)?;
        let mut mismatches = 0;
        for (x, y) in self.row(a).chunks(64).zip(self.row(b).chunks(64)) {
            mismatches += x.iter().zip(y).filter(|(p, q)| p != q).count();
            if mismatches > budget {
                return None;
            }
        }
        Some(self.cols() - mismatches)
    }
}

impl MatchItems for BitMatrix {
    fn num_items(&self) -> usize {
        self.rows()
    }

    fn num_positions(&self) -> usize {
        self.cols()
    }

    fn bits_per_symbol(&self) -> u32 {
        1
    }

    #[inline]
    fn symbol(&self, item: usize, position: usize) -> u8 {
        self.get(item, position) as u8
    }

    fn matches(&self, a: usize, b: usize) -> usize {
        BitMatrix::matches(self, a, b)
    }

    fn matches_at_least(&self, a: usize, b: usize, min_matches: usize) -> Option<usize> {
        BitMatrix::matches_at_least(self, a, b, min_matches)
    }
}

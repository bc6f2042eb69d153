//! Quadratic reference implementations used to check the pruned scans.

use super::{admissible, PairResult, ScanStats};
use crate::error::{Error, Result};
use crate::metrics::{euclidean_distance, squared_distance, PointSet};

/// Closest admissible pair by exhaustive comparison.
pub fn brute_force_closest_pair(points: &PointSet, exclusion_zone: usize) -> Result<PairResult> {
    let n = points.len();
    if n < 2 {
        return Err(Error::TooFewItems { needed: 2, got: n });
    }
    let mut best: Option<(f64, usize, usize)> = None;
    let mut examined = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            if !admissible(i, j, exclusion_zone) {
                continue;
            }
            examined += 1;
            let sq = squared_distance(points.point(i), points.point(j));
            if best.is_none_or(|(b, _, _)| sq < b) {
                best = Some((sq, i, j));
            }
        }
    }
    let (sq, i, j) = best.ok_or(Error::NoAdmissiblePair)?;
    Ok(PairResult {
        index_i: i,
        index_j: j,
        distance: sq.sqrt(),
        stats: ScanStats {
            pairs_examined: examined,
            ..ScanStats::default()
        },
    })
}

/// Neighbour lists by exhaustive comparison, each ascending.
pub fn brute_force_neighbors(points: &PointSet, radius: f64) -> Result<Vec<Vec<usize>>> {
    let n = points.len();
    let mut out = vec![Vec::new(); n];
    for (i, list) in out.iter_mut().enumerate() {
        for j in 0..n {
            if i != j && euclidean_distance(points.point(i), points.point(j))? <= radius {
                list.push(j);
            }
        }
    }
    Ok(out)
}

/// Number of pairs `i < j < n` with `j - i >= exclusion_zone`.
pub fn lmer_admissible_pairs(n: usize, exclusion_zone: usize) -> u64 {
    let gap = exclusion_zone.max(1);
    if gap >= n {
        return 0;
    }
    let m = (n - gap) as u64;
    m * (m + 1) / 2
}

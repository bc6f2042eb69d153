use super::{build_reference_set, ReferenceParams, ScanStats, SortedLayout};
use crate::error::{Error, Result};
use crate::metrics::{abandon_limit, squared_distance_bounded, PointSet};

/// All neighbour lists for a fixed radius.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborResult {
    /// `neighbors[i]` holds every `j != i` with `d(i,j) <= radius`, ascending.
    pub neighbors: Vec<Vec<usize>>,
    pub stats: ScanStats,
}

impl NeighborResult {
    /// Number of unordered neighbour pairs.
    pub fn pair_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Fixed-radius near neighbours with the same reference pruning as the
/// closest-pair scan, using `radius` in place of the best-so-far distance.
pub fn fixed_radius_neighbors(
    points: &PointSet,
    radius: f64,
    params: &ReferenceParams,
) -> Result<NeighborResult> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!(
            "radius must be positive, got {radius}"
        )));
    }
    if points.is_empty() {
        return Err(Error::TooFewItems { needed: 1, got: 0 });
    }
    let refs = build_reference_set(points, params)?;
    let layout = SortedLayout::new(points, &refs);
    let limit = radius + layout.slack;
    let limit_sq = abandon_limit(radius);
    let n = layout.n;
    let mut neighbors = vec![Vec::new(); n];
    let mut stats = ScanStats::default();

    for a in 0..n {
        let ka = layout.keys[a];
        let pa = layout.point(a);
        for b in a + 1..n {
            if layout.keys[b] - ka > limit {
                stats.inner_loop_exits += 1;
                stats.pairs_skipped_by_exit += (n - b) as u64;
                break;
            }
            if layout.pruned_by_rest(a, b, limit) {
                stats.pairs_pruned_by_reference += 1;
                continue;
            }
            stats.pairs_examined += 1;
            if let Some(sq) = squared_distance_bounded(pa, layout.point(b), limit_sq) {
                if sq.sqrt() <= radius {
                    let (oa, ob) = (layout.orig[a], layout.orig[b]);
                    neighbors[oa].push(ob);
                    neighbors[ob].push(oa);
                }
            }
        }
    }
    for list in &mut neighbors {
        list.sort_unstable();
    }
    Ok(NeighborResult { neighbors, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::gen_gaussian_points;
    use crate::refscan::brute_force_neighbors;
    use proptest::prelude::*;

    fn params(count: usize, factor: f64, seed: u64) -> ReferenceParams {
        ReferenceParams {
            count,
            factor,
            seed,
        }
    }

    #[test]
    fn radius_is_inclusive() {
        let pts = PointSet::from_rows(&[vec![0.0, 0.0], vec![3.0, 4.0], vec![10.0, 0.0]]).unwrap();
        let r = fixed_radius_neighbors(&pts, 5.0, &params(1, 1.0, 0)).unwrap();
        assert_eq!(r.neighbors, vec![vec![1], vec![0], vec![]]);
        assert_eq!(r.pair_count(), 1);
        let r = fixed_radius_neighbors(&pts, 4.999, &params(1, 1.0, 0)).unwrap();
        assert_eq!(r.pair_count(), 0);
    }

    #[test]
    fn invalid_radius() {
        let pts = gen_gaussian_points(5, 2, 0).unwrap();
        assert!(fixed_radius_neighbors(&pts, 0.0, &params(1, 1.0, 0)).is_err());
        assert!(fixed_radius_neighbors(&pts, f64::NAN, &params(1, 1.0, 0)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn agrees_with_brute_force(
            seed in 0u64..1000,
            n in 1usize..60,
            dim in 1usize..5,
            q in 1usize..4,
            factor in prop::sample::select(vec![1.0, 10.0]),
            radius in 0.05f64..3.0,
        ) {
            prop_assume!(q <= n);
            let pts = gen_gaussian_points(n, dim, seed).unwrap();
            let r = fixed_radius_neighbors(&pts, radius, &params(q, factor, seed)).unwrap();
            prop_assert_eq!(&r.neighbors, &brute_force_neighbors(&pts, radius).unwrap());
            prop_assert_eq!(r.stats.accounted_pairs(), (n * (n - 1) / 2) as u64);
        }
    }
}

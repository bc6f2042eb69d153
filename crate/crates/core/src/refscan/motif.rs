use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use super::{
    admissible, build_reference_set, Execution, Incumbent, MotifParams, PairResult, ReferenceSet,
    ScanStats, SortedLayout,
};
use crate::error::{Error, Result};
use crate::metrics::{squared_distance_bounded, PointSet};

/// Exact closest admissible pair under reference-point pruning.
///
/// Ties on distance go to the lexicographically smallest `(i, j)`, so the
/// answer matches [`brute_force_closest_pair`](super::brute_force_closest_pair)
/// for every seed, factor and reference count.
pub fn closest_pair(points: &PointSet, params: &MotifParams) -> Result<PairResult> {
    check_input(points, params.exclusion_zone)?;
    let refs = build_reference_set(points, &params.references)?;
    scan(points, &refs, params.exclusion_zone, params.execution)
}

/// Same as [`closest_pair`] with a prebuilt reference set.
pub fn closest_pair_with_references(
    points: &PointSet,
    refs: &ReferenceSet,
    exclusion_zone: usize,
    execution: Execution,
) -> Result<PairResult> {
    check_input(points, exclusion_zone)?;
    if refs.num_points() != points.len() {
        return Err(Error::invalid(format!(
            "reference table covers {} points, input has {}",
            refs.num_points(),
            points.len()
        )));
    }
    scan(points, refs, exclusion_zone, execution)
}

fn check_input(points: &PointSet, exclusion_zone: usize) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::TooFewItems {
            needed: 2,
            got: points.len(),
        });
    }
    if points.len() - 1 < exclusion_zone {
        return Err(Error::NoAdmissiblePair);
    }
    Ok(())
}

fn scan(
    points: &PointSet,
    refs: &ReferenceSet,
    exclusion_zone: usize,
    execution: Execution,
) -> Result<PairResult> {
    let layout = SortedLayout::new(points, refs);
    let (best, stats) = match execution {
        Execution::Sequential => {
            let mut best = Incumbent::empty();
            let mut stats = ScanStats::default();
            for a in 0..layout.n {
                stats = stats.merge(scan_row(&layout, a, exclusion_zone, &mut best, None));
            }
            (best, stats)
        }
        Execution::Parallel => {
            let shared = AtomicU64::new(f64::INFINITY.to_bits());
            (0..layout.n)
                .into_par_iter()
                .map(|a| {
                    let mut best = Incumbent::empty();
                    let stats = scan_row(&layout, a, exclusion_zone, &mut best, Some(&shared));
                    (best, stats)
                })
                .reduce(
                    || (Incumbent::empty(), ScanStats::default()),
                    |(b1, s1), (b2, s2)| (if b2.beats(&b1) { b2 } else { b1 }, s1.merge(s2)),
                )
        }
    };
    if !best.is_set() {
        return Err(Error::NoAdmissiblePair);
    }
    Ok(PairResult {
        index_i: best.pair.0,
        index_j: best.pair.1,
        distance: best.sq.sqrt(),
        stats,
    })
}

/// Scans partners of sorted position `a` at positions `a+1..`.
///
/// With a shared bound, the row's own incumbent is merged into it after
/// each improvement and the tighter of the two drives pruning. Non-negative
/// floats order the same way as their bit patterns, so `fetch_min` works.
fn scan_row(
    layout: &SortedLayout,
    a: usize,
    exclusion_zone: usize,
    best: &mut Incumbent,
    shared: Option<&AtomicU64>,
) -> ScanStats {
    let mut stats = ScanStats::default();
    let n = layout.n;
    let oa = layout.orig[a];
    let pa = layout.point(a);
    let ka = layout.keys[a];
    let slack = layout.slack;

    let current_sq = |best: &Incumbent| match shared {
        Some(s) => best.sq.min(f64::from_bits(s.load(Ordering::Relaxed))),
        None => best.sq,
    };
    let mut limit_sq = current_sq(best);
    let mut limit = limit_sq.sqrt() + slack;

    for b in a + 1..n {
        if shared.is_some() {
            let sq = current_sq(best);
            if sq < limit_sq {
                limit_sq = sq;
                limit = sq.sqrt() + slack;
            }
        }
        if layout.keys[b] - ka > limit {
            stats.inner_loop_exits += 1;
            stats.pairs_skipped_by_exit += layout.admissible_from(a, b, exclusion_zone);
            break;
        }
        let ob = layout.orig[b];
        if !admissible(oa, ob, exclusion_zone) {
            continue;
        }
        if layout.pruned_by_rest(a, b, limit) {
            stats.pairs_pruned_by_reference += 1;
            continue;
        }
        stats.pairs_examined += 1;
        if let Some(sq) = squared_distance_bounded(pa, layout.point(b), limit_sq) {
            let candidate = Incumbent {
                sq,
                pair: (oa.min(ob), oa.max(ob)),
            };
            if candidate.beats(best) {
                *best = candidate;
                if let Some(s) = shared {
                    s.fetch_min(sq.to_bits(), Ordering::Relaxed);
                }
                if sq < limit_sq {
                    limit_sq = sq;
                    limit = sq.sqrt() + slack;
                }
            }
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_gaussian_points, gen_random_walk};
    use crate::refscan::{brute_force_closest_pair, lmer_admissible_pairs, ReferenceParams};
    use proptest::prelude::*;

    fn params(count: usize, factor: f64, seed: u64, ez: usize) -> MotifParams {
        MotifParams::new(
            ReferenceParams {
                count,
                factor,
                seed,
            },
            ez,
        )
    }

    #[test]
    fn small_example() {
        let pts = PointSet::from_rows(&[
            vec![0.0, 0.0],
            vec![5.0, 5.0],
            vec![0.3, 0.4],
            vec![9.0, 1.0],
        ])
        .unwrap();
        let r = closest_pair(&pts, &params(2, 10.0, 1, 0)).unwrap();
        assert_eq!((r.index_i, r.index_j), (0, 2));
        assert!((r.distance - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ties_resolve_to_smallest_pair() {
        let pts = PointSet::from_rows(&[vec![3.0], vec![0.0], vec![1.0], vec![4.0]]).unwrap();
        for seed in 0..20 {
            let r = closest_pair(&pts, &params(2, 1.0, seed, 0)).unwrap();
            assert_eq!((r.index_i, r.index_j), (0, 3), "seed {seed}");
        }
    }

    #[test]
    fn exclusion_zone_respected() {
        let walk = gen_random_walk(300, 2, 1.0).unwrap();
        let lmers = walk.lmers(16).unwrap();
        let r = closest_pair(&lmers, &params(5, 10.0, 3, 16)).unwrap();
        assert!(r.index_j - r.index_i >= 16);
        let bf = brute_force_closest_pair(&lmers, 16).unwrap();
        assert_eq!(
            (r.index_i, r.index_j, r.distance),
            (bf.index_i, bf.index_j, bf.distance)
        );
        assert_eq!(
            r.stats.accounted_pairs(),
            lmer_admissible_pairs(lmers.len(), 16)
        );
    }

    #[test]
    fn errors() {
        let one = PointSet::from_rows(&[vec![1.0]]).unwrap();
        assert!(matches!(
            closest_pair(&one, &params(1, 1.0, 0, 0)),
            Err(Error::TooFewItems { .. })
        ));
        let three = PointSet::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        assert!(matches!(
            closest_pair(&three, &params(1, 1.0, 0, 3)),
            Err(Error::NoAdmissiblePair)
        ));
        assert!(closest_pair(&three, &params(1, 1.0, 0, 2)).is_ok());
    }

    #[test]
    fn parallel_matches_sequential() {
        let pts = gen_gaussian_points(400, 6, 11).unwrap();
        let mut p = params(6, 10.0, 5, 0);
        let seq = closest_pair(&pts, &p).unwrap();
        p.execution = Execution::Parallel;
        let par = closest_pair(&pts, &p).unwrap();
        assert_eq!(
            (seq.index_i, seq.index_j, seq.distance),
            (par.index_i, par.index_j, par.distance)
        );
        assert_eq!(par.stats.accounted_pairs(), 400 * 399 / 2);
    }

    #[test]
    fn prebuilt_references_must_fit() {
        let pts = gen_gaussian_points(30, 2, 1).unwrap();
        let other = gen_gaussian_points(20, 2, 1).unwrap();
        let refs = build_reference_set(&other, &ReferenceParams::default()).unwrap();
        assert!(closest_pair_with_references(&pts, &refs, 0, Execution::Sequential).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn agrees_with_brute_force(
            seed in 0u64..1000,
            n in 2usize..60,
            dim in 1usize..6,
            q in 1usize..5,
            factor in prop::sample::select(vec![1.0, 2.0, 10.0, 100.0]),
            ez in 0usize..4,
        ) {
            prop_assume!(q <= n && ez < n);
            let pts = gen_gaussian_points(n, dim, seed).unwrap();
            let r = closest_pair(&pts, &params(q, factor, seed ^ 7, ez)).unwrap();
            let bf = brute_force_closest_pair(&pts, ez).unwrap();
            prop_assert_eq!((r.index_i, r.index_j), (bf.index_i, bf.index_j));
            prop_assert_eq!(r.distance, bf.distance);
            prop_assert_eq!(r.stats.accounted_pairs(), bf.stats.pairs_examined);
        }

        #[test]
        fn duplicated_points_found(seed in 0u64..500, n in 3usize..40) {
            // integer grid coordinates produce many exact ties
            let mut pts: Vec<Vec<f64>> = gen_gaussian_points(n, 2, seed)
                .unwrap()
                .iter()
                .map(|p| p.iter().map(|c| c.round()).collect())
                .collect();
            pts.push(pts[0].clone());
            let pts = PointSet::from_rows(&pts).unwrap();
            let r = closest_pair(&pts, &params(3, 10.0, seed, 0)).unwrap();
            let bf = brute_force_closest_pair(&pts, 0).unwrap();
            prop_assert_eq!(r.distance, 0.0);
            prop_assert_eq!((r.index_i, r.index_j), (bf.index_i, bf.index_j));
        }
    }
}

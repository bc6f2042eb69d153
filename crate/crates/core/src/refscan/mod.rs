//! Euclidean closest-pair and fixed-radius search with reference-point
//! pruning.
//!
//! Every point's distance to a handful of reference points is computed up
//! front. For any reference `r`, `|d(r,x) - d(r,y)| ≤ d(x,y)`, so a pair
//! whose reference gap already exceeds the best distance found so far can
//! be skipped without touching its coordinates. Points are visited in
//! ascending distance to the first reference, which lets the inner loop
//! stop as soon as that gap grows too large.
//!
//! With a projection factor of 1 the references are plain input points (the
//! MK configuration). Larger factors push the references away from the data
//! by scaling their coordinates, which tightens the bound for pairs lying
//! roughly on the line towards the reference.

mod frnn;
mod motif;
mod oracle;

pub use frnn::{fixed_radius_neighbors, NeighborResult};
pub use motif::{closest_pair, closest_pair_with_references};
pub use oracle::{brute_force_closest_pair, brute_force_neighbors, lmer_admissible_pairs};

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{euclidean_distance, squared_distance, PointSet};
use crate::rng::{sample_prefix, seeded};

pub const DEFAULT_REFERENCES: usize = 10;
pub const DEFAULT_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceParams {
    /// Number of reference points `q`.
    pub count: usize,
    /// Projection factor `f`; 1 reproduces unprojected references.
    pub factor: f64,
    pub seed: u64,
}

impl Default for ReferenceParams {
    fn default() -> Self {
        ReferenceParams {
            count: DEFAULT_REFERENCES,
            factor: DEFAULT_FACTOR,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Execution {
    #[default]
    Sequential,
    /// Outer loop split across the rayon pool with a shared best-so-far.
    /// The returned pair is identical to the sequential one; the pruning
    /// counters depend on scheduling.
    Parallel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotifParams {
    pub references: ReferenceParams,
    /// Pairs whose original indices differ by less than this are not
    /// compared. Use the window length for ℓ-mers of one series and 0 for
    /// independent points.
    pub exclusion_zone: usize,
    pub execution: Execution,
}

impl MotifParams {
    pub fn new(references: ReferenceParams, exclusion_zone: usize) -> Self {
        MotifParams {
            references,
            exclusion_zone,
            execution: Execution::Sequential,
        }
    }
}

/// Candidate-pair accounting for one scan.
///
/// `pairs_examined + pairs_pruned_by_reference + pairs_skipped_by_exit`
/// equals the number of admissible pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanStats {
    /// Pairs whose coordinates were compared (possibly early-abandoned).
    pub pairs_examined: u64,
    /// Pairs rejected by a reference other than the sort reference.
    pub pairs_pruned_by_reference: u64,
    /// Pairs never visited because the sorted inner loop stopped early.
    pub pairs_skipped_by_exit: u64,
    pub inner_loop_exits: u64,
}

impl ScanStats {
    pub fn accounted_pairs(&self) -> u64 {
        self.pairs_examined + self.pairs_pruned_by_reference + self.pairs_skipped_by_exit
    }

    fn merge(mut self, other: ScanStats) -> ScanStats {
        self.pairs_examined += other.pairs_examined;
        self.pairs_pruned_by_reference += other.pairs_pruned_by_reference;
        self.pairs_skipped_by_exit += other.pairs_skipped_by_exit;
        self.inner_loop_exits += other.inner_loop_exits;
        self
    }
}

/// Closest admissible pair, `index_i < index_j` in input order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub index_i: usize,
    pub index_j: usize,
    pub distance: f64,
    pub stats: ScanStats,
}

#[inline]
pub(crate) fn admissible(i: usize, j: usize, exclusion_zone: usize) -> bool {
    i != j && i.abs_diff(j) >= exclusion_zone
}

/// Projected reference points with their distance table.
#[derive(Clone, Debug)]
pub struct ReferenceSet {
    source: Vec<usize>,
    factor: f64,
    references: PointSet,
    /// `table[k * n + p]` is the distance from reference `k` to point `p`.
    table: Vec<f64>,
    n: usize,
    order: Vec<usize>,
}

pub fn build_reference_set(points: &PointSet, params: &ReferenceParams) -> Result<ReferenceSet> {
    let n = points.len();
    let q = params.count;
    if q == 0 {
        return Err(Error::invalid("at least one reference is required"));
    }
    if q > n {
        return Err(Error::invalid(format!(
            "{q} references requested from {n} points"
        )));
    }
    if !(params.factor > 0.0 && params.factor.is_finite()) {
        return Err(Error::invalid(format!(
            "projection factor must be positive, got {}",
            params.factor
        )));
    }
    let source = sample_prefix(&mut seeded(params.seed), n, q);
    let mut coords = Vec::with_capacity(q * points.dim());
    for &s in &source {
        coords.extend(points.point(s).iter().map(|c| c * params.factor));
    }
    let references = PointSet::from_flat(points.dim(), coords)?;

    let mut table = Vec::with_capacity(q * n);
    for r in references.iter() {
        table.extend(points.iter().map(|p| squared_distance(r, p).sqrt()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| table[a].total_cmp(&table[b]).then(a.cmp(&b)));

    Ok(ReferenceSet {
        source,
        factor: params.factor,
        references,
        table,
        n,
        order,
    })
}

impl ReferenceSet {
    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    /// Input indices the references were taken from.
    pub fn source_indices(&self) -> &[usize] {
        &self.source
    }

    pub fn reference(&self, k: usize) -> &[f64] {
        self.references.point(k)
    }

    pub fn distance(&self, k: usize, point: usize) -> f64 {
        self.table[k * self.n + point]
    }

    pub fn distances(&self, k: usize) -> &[f64] {
        &self.table[k * self.n..(k + 1) * self.n]
    }

    /// Input indices sorted by distance to the first reference, ties by index.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn num_points(&self) -> usize {
        self.n
    }

    fn max_distance(&self) -> f64 {
        self.table.iter().copied().fold(0.0, f64::max)
    }
}

/// How much farther `x` is from `r` than `y` is: `d(r,x) - d(r,y)`.
///
/// Its absolute value never exceeds `d(x,y)`.
pub fn reference_bound(r: &[f64], x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(euclidean_distance(r, x)? - euclidean_distance(r, y)?)
}

/// Reference bound for `A = (0,0)`, `B = (c,0)` and a reference at distance
/// `c·s` from `A` at angle `theta` (radians) from the segment `AB`.
pub fn scaled_reference_bound(c: f64, theta: f64, s: f64) -> f64 {
    let r = [c * s * theta.cos(), c * s * theta.sin()];
    reference_bound(&r, &[0.0, 0.0], &[c, 0.0]).expect("2-d points")
}

/// First-order expansion `c·cosθ - c/(2s)` of [`scaled_reference_bound`].
pub fn scaled_reference_bound_approx(c: f64, theta: f64, s: f64) -> f64 {
    c * theta.cos() - c / (2.0 * s)
}

/// Points re-laid out in first-reference order, shared by both scans.
pub(crate) struct SortedLayout {
    pub n: usize,
    pub dim: usize,
    /// Distance to the first reference, ascending.
    pub keys: Vec<f64>,
    /// Distances to references 2..q, `n × (q-1)` row-major.
    pub rest: Vec<f64>,
    pub q_rest: usize,
    pub orig: Vec<usize>,
    pub pos: Vec<usize>,
    pub coords: Vec<f64>,
    /// Absolute allowance for rounding in the reference bounds.
    pub slack: f64,
}

impl SortedLayout {
    pub fn new(points: &PointSet, refs: &ReferenceSet) -> Self {
        let n = points.len();
        let dim = points.dim();
        let q_rest = refs.len() - 1;
        let orig = refs.order().to_vec();
        let mut pos = vec![0; n];
        for (p, &o) in orig.iter().enumerate() {
            pos[o] = p;
        }
        let keys = orig.iter().map(|&o| refs.distance(0, o)).collect();
        let mut rest = Vec::with_capacity(n * q_rest);
        let mut coords = Vec::with_capacity(n * dim);
        for &o in &orig {
            rest.extend((1..refs.len()).map(|k| refs.distance(k, o)));
            coords.extend_from_slice(points.point(o));
        }
        // |computed - true| for a distance in `dim` coordinates stays below
        // (dim/2 + 1)·u·d; both sides of each comparison are covered.
        let slack = 4.0 * (dim as f64 + 2.0) * f64::EPSILON * refs.max_distance();
        SortedLayout {
            n,
            dim,
            keys,
            rest,
            q_rest,
            orig,
            pos,
            coords,
            slack,
        }
    }

    #[inline]
    pub fn point(&self, p: usize) -> &[f64] {
        &self.coords[p * self.dim..(p + 1) * self.dim]
    }

    #[inline]
    pub fn rest_row(&self, p: usize) -> &[f64] {
        &self.rest[p * self.q_rest..(p + 1) * self.q_rest]
    }

    /// True when some reference beyond the first proves `d > limit`.
    #[inline]
    pub fn pruned_by_rest(&self, a: usize, b: usize, limit: f64) -> bool {
        let (ra, rb) = (self.rest_row(a), self.rest_row(b));
        ra.iter().zip(rb).any(|(da, db)| (db - da).abs() > limit)
    }

    /// Admissible partners of position `a` among positions `from..n`.
    pub fn admissible_from(&self, a: usize, from: usize, exclusion_zone: usize) -> u64 {
        let mut count = (self.n - from) as u64;
        if exclusion_zone > 1 {
            let oa = self.orig[a];
            let lo = oa.saturating_sub(exclusion_zone - 1);
            let hi = (oa + exclusion_zone - 1).min(self.n - 1);
            for ob in lo..=hi {
                if ob != oa && self.pos[ob] >= from {
                    count -= 1;
                }
            }
        }
        count
    }
}

/// Best pair so far, ordered by squared distance then by index pair.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Incumbent {
    pub sq: f64,
    pub pair: (usize, usize),
}

impl Incumbent {
    pub fn empty() -> Self {
        Incumbent {
            sq: f64::INFINITY,
            pair: (usize::MAX, usize::MAX),
        }
    }

    pub fn is_set(&self) -> bool {
        self.pair.0 != usize::MAX
    }

    #[inline]
    pub fn beats(&self, other: &Incumbent) -> bool {
        match self.sq.total_cmp(&other.sq) {
            Ordering::Less => true,
            Ordering::Equal => self.pair < other.pair,
            Ordering::Greater => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn bound_examples() {
        let (x, y) = ([0.0, 0.0], [1.0, 0.0]);
        let b = reference_bound(&[1.0, 1.0], &x, &y).unwrap();
        assert!((b - 0.414).abs() < 1e-3);
        let deg = |a: f64| a.to_radians();
        let at = |angle: f64, dist: f64| [dist * deg(angle).cos(), dist * deg(angle).sin()];
        let b = reference_bound(&at(45.0, 10.0), &x, &y).unwrap();
        assert!((b - 0.6803).abs() < 1e-3, "{b}");
        let b = reference_bound(&at(30.0, SQRT_2), &x, &y).unwrap();
        assert!((b - 0.6722).abs() < 1e-3, "{b}");
        let b = reference_bound(&at(30.0, 10.0), &x, &y).unwrap();
        assert!((b - 0.8526).abs() < 1e-3, "{b}");
        assert!(reference_bound(&[0.0], &x, &y).is_err());
    }

    #[test]
    fn bisector_reference_gives_zero() {
        let b = reference_bound(&[0.5, 7.0], &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!(b.abs() < 1e-12);
    }

    #[test]
    fn scaled_bound_limit() {
        let b = scaled_reference_bound(1.0, 45f64.to_radians(), 1000.0);
        assert!((b - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3);
    }

    #[test]
    fn reference_set_identity_scaling() {
        let pts = PointSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let refs = build_reference_set(
            &pts,
            &ReferenceParams {
                count: 1,
                factor: 1.0,
                seed: 3,
            },
        )
        .unwrap();
        let src = refs.source_indices()[0];
        assert_eq!(refs.reference(0), pts.point(src));
        assert_eq!(refs.distance(0, src), 0.0);
    }

    #[test]
    fn reference_set_projection() {
        let pts = PointSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        // find a seed that picks the (1,1) point
        let seed = (0..100)
            .find(|&s| {
                build_reference_set(
                    &pts,
                    &ReferenceParams {
                        count: 1,
                        factor: 10.0,
                        seed: s,
                    },
                )
                .unwrap()
                .source_indices()[0]
                    == 2
            })
            .unwrap();
        let refs = build_reference_set(
            &pts,
            &ReferenceParams {
                count: 1,
                factor: 10.0,
                seed,
            },
        )
        .unwrap();
        assert_eq!(refs.reference(0), &[10.0, 10.0]);
    }

    #[test]
    fn reference_set_order_is_sorted() {
        let pts = crate::datagen::gen_gaussian_points(200, 5, 8).unwrap();
        let refs = build_reference_set(
            &pts,
            &ReferenceParams {
                count: 4,
                factor: 10.0,
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!(refs.len(), 4);
        let row = refs.distances(0);
        let min = row.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(row[refs.order()[0]], min);
        assert!(refs.order().windows(2).all(|w| row[w[0]] <= row[w[1]]));
        let mut src = refs.source_indices().to_vec();
        src.sort_unstable();
        src.dedup();
        assert_eq!(src.len(), 4);
    }

    #[test]
    fn reference_set_errors() {
        let pts = PointSet::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let p = |count, factor| ReferenceParams {
            count,
            factor,
            seed: 0,
        };
        assert!(build_reference_set(&pts, &p(3, 1.0)).is_err());
        assert!(build_reference_set(&pts, &p(0, 1.0)).is_err());
        assert!(build_reference_set(&pts, &p(1, 0.0)).is_err());
    }
}

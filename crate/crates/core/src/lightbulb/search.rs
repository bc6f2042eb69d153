use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bucket::{
    bucketize, check_sample_size, emit_pairs, sample_positions, unpack, PositionMajor,
};
use super::{ceil_log2, Admissibility, CandidateSet, LightbulbParams, MatchItems, ResolvedParams};
use crate::error::{Error, Result};
use crate::refscan::Execution;
use crate::rng::derive_seed;

/// A verified pair and its exact match count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Match {
    pub a: usize,
    pub b: usize,
    pub matches: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LightbulbStats {
    pub iterations: usize,
    pub sample_size: usize,
    /// Distinct candidate pairs, i.e. pairs handed to verification.
    pub pairs_examined: u64,
    /// Admissible co-bucketings counted with repetition.
    pub collisions: u64,
    /// Candidates whose comparison ran to completion.
    pub fully_verified: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LightbulbResult {
    pub best: Match,
    pub correlation: f64,
    pub params: Option<ResolvedParams>,
    pub stats: LightbulbStats,
}

/// Higher match count wins; ties go to the smaller canonical pair.
#[inline]
fn better(adm: &Admissibility, x: &Match, y: &Match) -> bool {
    if x.matches != y.matches {
        return x.matches > y.matches;
    }
    (adm.canonical(x.a, x.b), x.a, x.b) < (adm.canonical(y.a, y.b), y.a, y.b)
}

/// Iteration-by-iteration driver. Each new candidate is verified against
/// the current best as soon as it appears, so [`best`](Self::best) is
/// always the exact optimum over the candidates seen so far.
pub struct LightbulbSearch<'m, M: MatchItems + ?Sized> {
    items: &'m M,
    symbols: PositionMajor,
    params: LightbulbParams,
    sample_size: usize,
    max_iterations: usize,
    patience: usize,
    candidates: CandidateSet,
    best: Option<Match>,
    stable_for: usize,
    stats: LightbulbStats,
}

impl<'m, M: MatchItems + ?Sized> LightbulbSearch<'m, M> {
    pub fn new(items: &'m M, params: LightbulbParams) -> Result<Self> {
        let n = items.num_items();
        if n < 2 {
            return Err(Error::TooFewItems { needed: 2, got: n });
        }
        if n > u32::MAX as usize {
            return Err(Error::invalid("too many items for 32-bit indices"));
        }
        let sample_size = params.resolved_sample_size(n, items.num_positions());
        check_sample_size(items, sample_size)?;
        let max_iterations = params.resolved_iterations(n);
        if max_iterations == 0 {
            return Err(Error::invalid("iteration count must be positive"));
        }
        Ok(LightbulbSearch {
            items,
            symbols: PositionMajor::full(items),
            candidates: CandidateSet::new(items.num_items(), params.candidate_cap),
            params,
            sample_size,
            max_iterations,
            patience: ceil_log2(n),
            best: None,
            stable_for: 0,
            stats: LightbulbStats {
                sample_size,
                ..LightbulbStats::default()
            },
        })
    }

    pub fn iteration(&self) -> usize {
        self.stats.iterations
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn max_iterations(&self) -> usize {
        self.max_iterations
    }

    pub fn best(&self) -> Option<Match> {
        self.best
    }

    pub fn candidates(&self) -> &CandidateSet {
        &self.candidates
    }

    pub fn stats(&self) -> LightbulbStats {
        LightbulbStats {
            pairs_examined: self.candidates.len() as u64,
            ..self.stats
        }
    }

    pub fn resolved_params(&self) -> ResolvedParams {
        ResolvedParams {
            iterations: self.max_iterations,
            sample_size: self.sample_size,
            seed: self.params.seed,
            auto_stop: self.params.auto_stop,
            admissibility: self.params.admissibility.label(),
        }
    }

    /// Whether the configured budget or the stability rule says to stop.
    pub fn is_finished(&self) -> bool {
        self.stats.iterations >= self.max_iterations
            || (self.params.auto_stop && self.best.is_some() && self.stable_for >= self.patience)
    }

    /// Runs one more iteration regardless of the budget. Returns the number
    /// of new candidates.
    pub fn step(&mut self) -> Result<usize> {
        let pairs = self.collect(self.stats.iterations);
        self.absorb(&pairs)
    }

    fn collect(&self, iteration: usize) -> Vec<u64> {
        let seed = derive_seed(self.params.seed, iteration as u64, 0);
        let positions = sample_positions(self.items.num_positions(), self.sample_size, seed);
        let mut out = Vec::new();
        emit_pairs(
            &bucketize(&self.symbols, &positions),
            &self.params.admissibility,
            &mut out,
        );
        out
    }

    fn absorb(&mut self, pairs: &[u64]) -> Result<usize> {
        let iteration = self.stats.iterations;
        let before = self.best;
        let mut fresh = 0;
        self.stats.collisions += pairs.len() as u64;
        for &key in pairs {
            if self.candidates.insert_packed(key, iteration)? {
                fresh += 1;
                let (a, b) = unpack(key);
                self.verify(a, b);
            }
        }
        self.stats.iterations += 1;
        if self.best.is_some() && self.best == before {
            self.stable_for += 1;
        } else {
            self.stable_for = 0;
        }
        Ok(fresh)
    }

    fn verify(&mut self, a: usize, b: usize) {
        let floor = self.best.map_or(0, |m| m.matches);
        if let Some(matches) = self.items.matches_at_least(a, b, floor) {
            self.stats.fully_verified += 1;
            let cand = Match { a, b, matches };
            if self
                .best
                .is_none_or(|cur| better(&self.params.admissibility, &cand, &cur))
            {
                self.best = Some(cand);
            }
        }
    }

    /// Runs until [`is_finished`](Self::is_finished). Parallel execution
    /// buckets several iterations at once but merges them in order, so the
    /// outcome is the same as sequential execution.
    pub fn run(mut self) -> Result<LightbulbResult> {
        match self.params.execution {
            Execution::Sequential => {
                while !self.is_finished() {
                    self.step()?;
                }
            }
            Execution::Parallel => {
                let width = rayon::current_num_threads().max(1);
                while !self.is_finished() {
                    let start = self.stats.iterations;
                    let end = (start + width).min(self.max_iterations.max(start + 1));
                    let batches: Vec<Vec<u64>> = (start..end)
                        .into_par_iter()
                        .map(|it| self.collect(it))
                        .collect();
                    for pairs in &batches {
                        if self.is_finished() {
                            break;
                        }
                        self.absorb(pairs)?;
                    }
                }
            }
        }
        self.finish()
    }

    pub fn finish(&self) -> Result<LightbulbResult> {
        let best = self.best.ok_or(Error::NoCandidate {
            iterations: self.stats.iterations,
        })?;
        Ok(LightbulbResult {
            best,
            correlation: best.matches as f64 / self.items.num_positions() as f64,
            params: Some(self.resolved_params()),
            stats: self.stats(),
        })
    }
}

/// Most correlated admissible pair found by bucketing.
pub fn most_correlated_pair<M: MatchItems + ?Sized>(
    items: &M,
    params: &LightbulbParams,
) -> Result<LightbulbResult> {
    LightbulbSearch::new(items, params.clone())?.run()
}

/// Exhaustive maximum over all admissible pairs.
pub fn brute_force_most_correlated<M: MatchItems + ?Sized>(
    items: &M,
    admissibility: &Admissibility,
) -> Result<LightbulbResult> {
    let n = items.num_items();
    if n < 2 {
        return Err(Error::TooFewItems { needed: 2, got: n });
    }
    let mut best: Option<Match> = None;
    let mut examined = 0u64;
    for a in 0..n {
        for b in a + 1..n {
            if !admissibility.allows(a, b) {
                continue;
            }
            examined += 1;
            let cand = Match {
                a,
                b,
                matches: items.matches(a, b),
            };
            if best.is_none_or(|cur| better(admissibility, &cand, &cur)) {
                best = Some(cand);
            }
        }
    }
    let best = best.ok_or(Error::NoAdmissiblePair)?;
    Ok(LightbulbResult {
        best,
        correlation: best.matches as f64 / items.num_positions() as f64,
        params: None,
        stats: LightbulbStats {
            pairs_examined: examined,
            fully_verified: examined,
            ..LightbulbStats::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_binomial_matrix, plant_correlated_row};
    use crate::matrix::SymbolMatrix;
    use proptest::prelude::*;

    fn random_items(n: usize, t: usize, sigma: usize, seed: u64) -> SymbolMatrix {
        gen_binomial_matrix(t, n, sigma, seed).unwrap().to_items()
    }

    #[test]
    fn identical_rows_win_with_full_matches() {
        let mut m = random_items(60, 40, 4, 1);
        plant_correlated_row(&mut m, 10, 33, 40, 2).unwrap();
        let r = most_correlated_pair(&m, &LightbulbParams::with_seed(3)).unwrap();
        assert_eq!((r.best.a, r.best.b, r.best.matches), (10, 33, 40));
        assert_eq!(r.correlation, 1.0);
    }

    #[test]
    fn two_items_return_the_only_pair() {
        let m = SymbolMatrix::from_rows(&[vec![0u8, 1, 1], vec![0, 1, 1]], 2).unwrap();
        let r = most_correlated_pair(&m, &LightbulbParams::with_seed(0)).unwrap();
        assert_eq!((r.best.a, r.best.b, r.best.matches), (0, 1, 3));
        let bf = brute_force_most_correlated(&m, &Admissibility::All).unwrap();
        assert_eq!(bf.best, r.best);
    }

    #[test]
    fn no_collision_is_reported() {
        let m = SymbolMatrix::from_rows(&[vec![0u8, 0], vec![1, 1]], 2).unwrap();
        let p = LightbulbParams {
            sample_size: Some(2),
            iterations: Some(3),
            ..LightbulbParams::default()
        };
        assert!(matches!(
            most_correlated_pair(&m, &p),
            Err(Error::NoCandidate { iterations: 3 })
        ));
    }

    #[test]
    fn brute_force_counts_pairs() {
        let m = random_items(3, 10, 3, 4);
        let bf = brute_force_most_correlated(&m, &Admissibility::All).unwrap();
        assert_eq!(bf.stats.pairs_examined, 3);
        let one = random_items(1, 10, 3, 4);
        assert!(brute_force_most_correlated(&one, &Admissibility::All).is_err());
        assert!(most_correlated_pair(&one, &LightbulbParams::default()).is_err());
    }

    #[test]
    fn candidate_cap_enforced() {
        let m = SymbolMatrix::from_rows(&vec![vec![0u8; 8]; 10], 2).unwrap();
        let p = LightbulbParams {
            candidate_cap: 5,
            ..LightbulbParams::default()
        };
        assert!(matches!(
            most_correlated_pair(&m, &p),
            Err(Error::CandidateOverflow { cap: 5 })
        ));
    }

    #[test]
    fn candidates_grow_with_iterations() {
        let m = random_items(300, 64, 2, 5);
        let mut search = LightbulbSearch::new(&m, LightbulbParams::with_seed(8)).unwrap();
        let mut last = 0;
        for _ in 0..20 {
            search.step().unwrap();
            let now = search.candidates().len();
            assert!(now >= last);
            last = now;
        }
        assert_eq!(search.iteration(), 20);
        for (a, b) in search.candidates().iter() {
            assert!(a < b);
            assert!(search.candidates().first_seen(a, b).unwrap() < 20);
        }
    }

    #[test]
    fn auto_stop_halts_early() {
        let mut m = random_items(200, 100, 4, 6);
        plant_correlated_row(&mut m, 1, 2, 95, 7).unwrap();
        let p = LightbulbParams {
            iterations: Some(1000),
            auto_stop: true,
            ..LightbulbParams::with_seed(1)
        };
        let r = most_correlated_pair(&m, &p).unwrap();
        assert!(r.stats.iterations < 1000);
        assert_eq!((r.best.a, r.best.b), (1, 2));
    }

    #[test]
    fn parallel_is_identical() {
        let mut m = random_items(300, 80, 3, 9);
        plant_correlated_row(&mut m, 4, 200, 70, 1).unwrap();
        let seq = most_correlated_pair(&m, &LightbulbParams::with_seed(2)).unwrap();
        let par = most_correlated_pair(
            &m,
            &LightbulbParams {
                execution: Execution::Parallel,
                ..LightbulbParams::with_seed(2)
            },
        )
        .unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn deterministic_per_seed() {
        let m = random_items(200, 50, 2, 11);
        let a = most_correlated_pair(&m, &LightbulbParams::with_seed(4)).unwrap();
        let b = most_correlated_pair(&m, &LightbulbParams::with_seed(4)).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// Verification is exact over whatever was co-bucketed.
        #[test]
        fn best_is_exact_over_candidates(seed in 0u64..1000, n in 2usize..40, sigma in 2usize..5) {
            let m = random_items(n, 12, sigma, seed);
            let p = LightbulbParams { sample_size: Some(2), ..LightbulbParams::with_seed(seed) };
            let mut search = LightbulbSearch::new(&m, p).unwrap();
            while !search.is_finished() {
                search.step().unwrap();
            }
            let Some(best) = search.best() else { return Ok(()) };
            for (a, b) in search.candidates().iter() {
                let mm = MatchItems::matches(&m, a, b);
                prop_assert!(mm < best.matches || (mm == best.matches && (a, b) >= (best.a, best.b)));
            }
            prop_assert_eq!(best.matches, MatchItems::matches(&m, best.a, best.b));
        }

        /// With enough iterations on tiny inputs every pair is a candidate.
        #[test]
        fn saturated_search_equals_brute_force(seed in 0u64..1000, n in 2usize..12) {
            let m = random_items(n, 6, 2, seed);
            let p = LightbulbParams {
                sample_size: Some(1),
                iterations: Some(60),
                ..LightbulbParams::with_seed(seed)
            };
            let bf = brute_force_most_correlated(&m, &Admissibility::All).unwrap();
            if let Ok(r) = most_correlated_pair(&m, &p) {
                if r.stats.pairs_examined == (n * (n - 1) / 2) as u64 {
                    prop_assert_eq!(r.best, bf.best);
                }
            }
        }
    }
}

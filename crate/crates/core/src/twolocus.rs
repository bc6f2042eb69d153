//! Two-locus association: the SNP pair whose genotype correlation differs
//! most between cases and controls.
//!
//! Every SNP column is one-hot encoded (ternary genotypes, 3 bits per
//! subject). Item `i` of the search matrix stacks the case and control
//! encodings of SNP `i`; item `n+j` stacks the case encoding of SNP `j`
//! over the complement of its control encoding. With `L` subjects per
//! group,
//!
//! `matches(i, n+j) = 3L + 2(u^A_ij - u^B_ij)`
//!
//! out of `6L` bits, i.e. an encoded correlation of `1/2 + (P_A - P_B)/3`.
//! The cross-group most-correlated pair therefore maximises `P_A - P_B`;
//! swapping the groups maximises `P_B - P_A`.
//!
//! Unequal groups are brought to `L = lcm(m1, m2)` subjects by repeating
//! each case `L/m1` times and each control `L/m2` times, which scales both
//! correlations without changing them.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::datagen::{gen_binomial_matrix, inject_pair_with_ones, GenotypeMatrix};
use crate::error::{Error, Result};
use crate::hamming_pairs::BinaryEncoding;
use crate::lightbulb::{Admissibility, LightbulbParams, LightbulbSearch, LightbulbStats, Match};
use crate::matrix::{BitMatrix, SymbolMatrix};
use crate::rng::{derive_seed, sample_prefix, seeded};

/// Genotypes are encoded over `{0, 1, 2}` regardless of the declared
/// alphabet, so binary inputs obey the same identity.
pub const GENOTYPE_ALPHABET: usize = 3;
pub const DEFAULT_EQUALIZATION_CAP: usize = 10_000;

/// Cases and controls over the same SNPs.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseControl {
    cases: GenotypeMatrix,
    controls: GenotypeMatrix,
    /// Largest common subject count allowed when group sizes differ.
    equalization_cap: usize,
}

impl CaseControl {
    pub fn new(cases: GenotypeMatrix, controls: GenotypeMatrix) -> Result<Self> {
        if cases.strings() != controls.strings() {
            return Err(Error::DimensionMismatch {
                left: cases.strings(),
                right: controls.strings(),
            });
        }
        if cases.subjects() == 0 || controls.subjects() == 0 {
            return Err(Error::invalid("both groups need at least one subject"));
        }
        for g in [&cases, &controls] {
            if g.alphabet() > GENOTYPE_ALPHABET {
                return Err(Error::AlphabetMismatch {
                    left: g.alphabet(),
                    right: GENOTYPE_ALPHABET,
                });
            }
        }
        Ok(CaseControl {
            cases,
            controls,
            equalization_cap: DEFAULT_EQUALIZATION_CAP,
        })
    }

    pub fn with_equalization_cap(mut self, cap: usize) -> Self {
        self.equalization_cap = cap;
        self
    }

    pub fn cases(&self) -> &GenotypeMatrix {
        &self.cases
    }

    pub fn controls(&self) -> &GenotypeMatrix {
        &self.controls
    }

    pub fn snps(&self) -> usize {
        self.cases.strings()
    }

    /// Roles of the two groups exchanged.
    pub fn swapped(&self) -> CaseControl {
        CaseControl {
            cases: self.controls.clone(),
            controls: self.cases.clone(),
            equalization_cap: self.equalization_cap,
        }
    }

    /// Exact `P_A - P_B` for SNPs `i` and `j`.
    pub fn delta(&self, i: usize, j: usize) -> PairDelta {
        let (ca, cb) = (self.cases.as_matrix(), self.controls.as_matrix());
        let agree = |m: &SymbolMatrix| {
            (0..m.rows())
                .filter(|&r| m.get(r, i) == m.get(r, j))
                .count()
        };
        PairDelta {
            i: i.min(j),
            j: i.max(j),
            cases_matches: agree(ca),
            cases_subjects: ca.rows(),
            controls_matches: agree(cb),
            controls_subjects: cb.rows(),
        }
    }
}

/// Raw correlations of one SNP pair in both groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDelta {
    pub i: usize,
    pub j: usize,
    pub cases_matches: usize,
    pub cases_subjects: usize,
    pub controls_matches: usize,
    pub controls_subjects: usize,
}

impl PairDelta {
    pub fn p_cases(&self) -> f64 {
        self.cases_matches as f64 / self.cases_subjects as f64
    }

    pub fn p_controls(&self) -> f64 {
        self.controls_matches as f64 / self.controls_subjects as f64
    }

    /// `(P_A - P_B)·m1·m2`, exact.
    pub fn scaled(&self) -> i64 {
        self.cases_matches as i64 * self.controls_subjects as i64
            - self.controls_matches as i64 * self.cases_subjects as i64
    }

    fn common_denominator(&self) -> i64 {
        self.cases_subjects as i64 * self.controls_subjects as i64
    }

    pub fn signed(&self) -> f64 {
        self.scaled() as f64 / self.common_denominator() as f64
    }

    pub fn magnitude(&self) -> f64 {
        self.signed().abs()
    }

    /// Exact comparison of `|P_A - P_B|` across pairs of one dataset.
    pub fn magnitude_cmp(&self, other: &PairDelta) -> std::cmp::Ordering {
        let lhs = self.scaled().unsigned_abs() as u128 * other.common_denominator() as u128;
        let rhs = other.scaled().unsigned_abs() as u128 * self.common_denominator() as u128;
        lhs.cmp(&rhs)
    }

    pub fn direction(&self) -> Direction {
        if self.scaled() >= 0 {
            Direction::CasesOverControls
        } else {
            Direction::ControlsOverCases
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `P_A - P_B` is maximal.
    CasesOverControls,
    /// `P_B - P_A` is maximal.
    ControlsOverCases,
}

/// The search matrix: `2n` bit-packed items of `6L` bits.
#[derive(Clone, Debug)]
pub struct TwoLocusMatrix {
    bits: BitMatrix,
    snps: usize,
    subjects: usize,
    case_repeat: usize,
    control_repeat: usize,
}

fn encode_column(
    m: &SymbolMatrix,
    col: usize,
    repeat: usize,
    code: &BinaryEncoding,
    out: &mut Vec<u8>,
) {
    for r in 0..m.rows() {
        let c = code.code(m.get(r, col));
        for _ in 0..repeat {
            out.extend_from_slice(c);
        }
    }
}

pub fn build_two_locus_matrix(cc: &CaseControl) -> Result<TwoLocusMatrix> {
    let n = cc.snps();
    if n == 0 {
        return Err(Error::invalid("no SNPs"));
    }
    let (m1, m2) = (cc.cases.subjects(), cc.controls.subjects());
    let subjects = m1.lcm(&m2);
    if subjects > cc.equalization_cap {
        return Err(Error::invalid(format!(
            "equalizing {m1} cases and {m2} controls needs {subjects} subjects per group, \
             above the cap of {}; subsample one group",
            cc.equalization_cap
        )));
    }
    let (case_repeat, control_repeat) = (subjects / m1, subjects / m2);
    let code = BinaryEncoding::one_hot(GENOTYPE_ALPHABET)?;
    let half = GENOTYPE_ALPHABET * subjects;
    let mut bits = BitMatrix::zeros(2 * n, 2 * half);
    let mut buf = Vec::with_capacity(2 * half);
    for s in 0..n {
        buf.clear();
        encode_column(cc.cases.as_matrix(), s, case_repeat, &code, &mut buf);
        encode_column(cc.controls.as_matrix(), s, control_repeat, &code, &mut buf);
        bits.write_bits(s, 0, &buf);
        for b in &mut buf[half..] {
            *b = 1 - *b;
        }
        bits.write_bits(n + s, 0, &buf);
    }
    Ok(TwoLocusMatrix {
        bits,
        snps: n,
        subjects,
        case_repeat,
        control_repeat,
    })
}

impl TwoLocusMatrix {
    pub fn bits(&self) -> &BitMatrix {
        &self.bits
    }

    pub fn snps(&self) -> usize {
        self.snps
    }

    /// Common subject count `L` after equalization.
    pub fn subjects(&self) -> usize {
        self.subjects
    }

    pub fn repeats(&self) -> (usize, usize) {
        (self.case_repeat, self.control_repeat)
    }

    pub fn admissibility(&self) -> Admissibility {
        Admissibility::CrossGroups {
            split: self.snps,
            exclude_mirror: true,
        }
    }

    pub fn cross_matches(&self, i: usize, j: usize) -> usize {
        self.bits.matches(i, self.snps + j)
    }

    pub fn cross_correlation(&self, i: usize, j: usize) -> f64 {
        self.cross_matches(i, j) as f64 / self.bits.cols() as f64
    }

    /// The case halves of items `s` and `n+s` agree, and the control
    /// halves are complements, for every SNP.
    pub fn structure_holds(&self) -> bool {
        let half = GENOTYPE_ALPHABET * self.subjects;
        (0..self.snps).all(|s| {
            let (x, y) = (s, self.snps + s);
            (0..half).all(|c| self.bits.get(x, c) == self.bits.get(y, c))
                && (half..2 * half).all(|c| self.bits.get(x, c) != self.bits.get(y, c))
        })
    }
}

/// Closed form of [`TwoLocusMatrix::cross_matches`] for `L` subjects per
/// group and equalized agreement counts `u^A`, `u^B`.
pub fn expected_cross_matches(
    subjects: usize,
    cases_matches: usize,
    controls_matches: usize,
) -> i64 {
    3 * subjects as i64 + 2 * (cases_matches as i64 - controls_matches as i64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLocusResult {
    pub i: usize,
    pub j: usize,
    /// `|P_A - P_B|`.
    pub delta: f64,
    pub direction: Direction,
    pub pair: PairDelta,
    /// Candidate counts and iterations summed over both directions.
    pub stats: LightbulbStats,
    pub sample_size: usize,
    pub iterations_per_direction: usize,
}

fn best_by_delta(a: PairDelta, b: PairDelta) -> PairDelta {
    match a.magnitude_cmp(&b) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            if (b.i, b.j) < (a.i, a.j) {
                b
            } else {
                a
            }
        }
    }
}

fn add_stats(x: LightbulbStats, y: LightbulbStats) -> LightbulbStats {
    LightbulbStats {
        iterations: x.iterations + y.iterations,
        sample_size: x.sample_size.max(y.sample_size),
        pairs_examined: x.pairs_examined + y.pairs_examined,
        collisions: x.collisions + y.collisions,
        fully_verified: x.fully_verified + y.fully_verified,
    }
}

/// Runs the cross-group search for `P_A - P_B` and for `P_B - P_A`, then
/// keeps the pair with the larger exact `|P_A - P_B|`.
/// `params.admissibility` is replaced by the cross-group rule.
pub fn two_locus_scan(cc: &CaseControl, params: &LightbulbParams) -> Result<TwoLocusResult> {
    if cc.snps() < 2 {
        return Err(Error::TooFewItems {
            needed: 2,
            got: cc.snps(),
        });
    }
    let mut stats = LightbulbStats::default();
    let mut found: Option<PairDelta> = None;
    let mut sample_size = 0;
    let mut iterations = 0;
    for (k, group) in [cc.clone(), cc.swapped()].iter().enumerate() {
        let d = build_two_locus_matrix(group)?;
        let dir_params = LightbulbParams {
            admissibility: d.admissibility(),
            seed: derive_seed(params.seed, k as u64, 0x2_10c),
            ..params.clone()
        };
        let mut search = LightbulbSearch::new(d.bits(), dir_params)?;
        sample_size = search.sample_size();
        iterations = search.max_iterations();
        let result = search_to_end(&mut search)?;
        stats = add_stats(stats, search.stats());
        if let Some(m) = result {
            let pd = cc.delta(m.a, m.b - d.snps());
            found = Some(found.map_or(pd, |cur| best_by_delta(cur, pd)));
        }
    }
    let pair = found.ok_or(Error::NoCandidate {
        iterations: stats.iterations,
    })?;
    Ok(TwoLocusResult {
        i: pair.i,
        j: pair.j,
        delta: pair.magnitude(),
        direction: pair.direction(),
        pair,
        stats,
        sample_size,
        iterations_per_direction: iterations,
    })
}

fn search_to_end(search: &mut LightbulbSearch<'_, BitMatrix>) -> Result<Option<Match>> {
    while !search.is_finished() {
        search.step()?;
    }
    Ok(search.best())
}

/// Exhaustive `argmax |P_A - P_B|`, ties to the smallest `(i, j)`.
pub fn brute_force_two_locus(cc: &CaseControl) -> Result<PairDelta> {
    let n = cc.snps();
    if n < 2 {
        return Err(Error::TooFewItems { needed: 2, got: n });
    }
    // column-major copies make the inner comparison contiguous
    let ca = cc.cases.to_items();
    let cb = cc.controls.to_items();
    let mut best: Option<PairDelta> = None;
    for i in 0..n {
        for j in i + 1..n {
            let pd = PairDelta {
                i,
                j,
                cases_matches: crate::metrics::count_matches(ca.row(i), ca.row(j)),
                cases_subjects: ca.cols(),
                controls_matches: crate::metrics::count_matches(cb.row(i), cb.row(j)),
                controls_subjects: cb.cols(),
            };
            best = Some(match best {
                None => pd,
                Some(cur) if pd.magnitude_cmp(&cur) == std::cmp::Ordering::Greater => pd,
                Some(cur) => cur,
            });
        }
    }
    Ok(best.expect("n >= 2"))
}

/// Background and injected pair for [`injection_experiment`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectionSpec {
    pub snps: usize,
    /// Subjects in each group.
    pub subjects: usize,
    /// `P_A - P_B` of the planted pair.
    pub delta: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectionReport {
    pub spec: InjectionSpec,
    /// `None` when nothing was injected.
    pub injected: Option<PairDelta>,
    /// Encoded correlation of the injected pair, `1/2 + delta/3`.
    pub injected_correlation: Option<f64>,
    pub sample_size: usize,
    pub budget: usize,
    /// `None` for a zero delta: the pair is indistinguishable from noise.
    pub recovered: Option<bool>,
    /// 1-based iteration in which the injected pair first became a candidate.
    pub recovery_iteration: Option<usize>,
    /// Distinct candidates at the end of that iteration.
    pub recovery_candidates: Option<u64>,
    pub iterations_run: usize,
    /// The search stopped early because the candidate cap was reached; the
    /// pair counts as not recovered.
    pub candidate_overflow: bool,
    /// Best verified candidate when the search stopped.
    pub best_candidate: Option<PairDelta>,
    /// Whether the best candidate beats the injected delta.
    pub better_pair_found: Option<bool>,
    pub stats: LightbulbStats,
}

/// Case and control counts of ones for the planted pair:
/// `P_A = (1+δ)/2`, `P_B = (1-δ)/2`.
pub fn injection_ones(delta: f64, subjects: usize) -> Result<(usize, usize)> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::invalid(format!(
            "injected delta must lie in [0, 1], got {delta}"
        )));
    }
    let exact = |p: f64| {
        let v = p * subjects as f64;
        let r = v.round();
        ((v - r).abs() < 1e-9).then_some(r as usize)
    };
    match (exact((1.0 + delta) / 2.0), exact((1.0 - delta) / 2.0)) {
        (Some(a), Some(b)) if a >= 1 => Ok((a, b)),
        _ => Err(Error::invalid(format!(
            "delta {delta} is not achievable with {subjects} subjects per group: \
             (1 ± delta)·m/2 must be whole numbers"
        ))),
    }
}

/// Iteration budget from the known correlations: `⌈N^ρ · log2 N⌉` with
/// `ρ = ln p1 / ln p2`, `p1` the planted pair's encoded correlation and
/// `p2 = 1/2` the background's.
pub fn injection_budget(items: usize, injected_correlation: f64) -> usize {
    let n = items.max(2) as f64;
    let rho = injected_correlation.ln() / 0.5f64.ln();
    (n.powf(rho) * n.log2()).ceil() as usize
}

/// Binary background for both groups with one planted SNP pair.
pub fn injected_case_control(spec: &InjectionSpec) -> Result<(CaseControl, Option<PairDelta>)> {
    if spec.snps < 2 {
        return Err(Error::TooFewItems {
            needed: 2,
            got: spec.snps,
        });
    }
    let ones = injection_ones(spec.delta, spec.subjects)?;
    let mut cases = gen_binomial_matrix(spec.subjects, spec.snps, 2, derive_seed(spec.seed, 1, 0))?;
    let mut controls =
        gen_binomial_matrix(spec.subjects, spec.snps, 2, derive_seed(spec.seed, 2, 0))?;
    if spec.delta == 0.0 {
        return Ok((CaseControl::new(cases, controls)?, None));
    }
    let picked = sample_prefix(&mut seeded(derive_seed(spec.seed, 3, 0)), spec.snps, 2);
    let (a, b) = (picked[0].min(picked[1]), picked[0].max(picked[1]));
    inject_pair_with_ones(&mut cases, ones.0, a, b, derive_seed(spec.seed, 4, 0))?;
    inject_pair_with_ones(&mut controls, ones.1, a, b, derive_seed(spec.seed, 5, 0))?;
    let cc = CaseControl::new(cases, controls)?;
    let pd = cc.delta(a, b);
    Ok((cc, Some(pd)))
}

/// Plants a pair with known `P_A - P_B`, then runs the `P_A - P_B` search
/// one iteration at a time until the planted pair becomes a candidate or
/// the budget runs out.
///
/// The budget is `params.iterations` when set, otherwise
/// [`injection_budget`]. The sample size follows `params` as usual.
pub fn injection_experiment(
    spec: &InjectionSpec,
    params: &LightbulbParams,
) -> Result<InjectionReport> {
    let (cc, injected) = injected_case_control(spec)?;
    let d = build_two_locus_matrix(&cc)?;
    let items = 2 * d.snps();
    let Some(inj) = injected else {
        return Ok(InjectionReport {
            spec: *spec,
            injected: None,
            injected_correlation: None,
            sample_size: params.resolved_sample_size(items, d.bits().cols()),
            budget: 0,
            recovered: None,
            recovery_iteration: None,
            recovery_candidates: None,
            iterations_run: 0,
            candidate_overflow: false,
            best_candidate: None,
            better_pair_found: None,
            stats: LightbulbStats::default(),
        });
    };
    let correlation = d.cross_correlation(inj.i, inj.j);
    let budget = params
        .iterations
        .unwrap_or_else(|| injection_budget(items, correlation));
    let search_params = LightbulbParams {
        admissibility: d.admissibility(),
        iterations: Some(budget),
        auto_stop: false,
        ..params.clone()
    };
    let mut search = LightbulbSearch::new(d.bits(), search_params)?;
    let n = d.snps();
    let hit = |s: &LightbulbSearch<'_, BitMatrix>| {
        s.candidates().contains(inj.i, n + inj.j) || s.candidates().contains(inj.j, n + inj.i)
    };
    let mut recovery = None;
    let mut candidate_overflow = false;
    while search.iteration() < budget {
        match search.step() {
            Ok(_) => {}
            Err(Error::CandidateOverflow { .. }) => {
                candidate_overflow = true;
                break;
            }
            Err(e) => return Err(e),
        }
        if hit(&search) {
            recovery = Some((search.iteration(), search.candidates().len() as u64));
            break;
        }
    }
    let best_candidate = search.best().map(|m| cc.delta(m.a, m.b - n));
    let better_pair_found = recovery.map(|_| {
        best_candidate.is_some_and(|b| {
            (b.i, b.j) != (inj.i, inj.j)
                && b.scaled() * inj.common_denominator() > inj.scaled() * b.common_denominator()
        })
    });
    Ok(InjectionReport {
        spec: *spec,
        injected: Some(inj),
        injected_correlation: Some(correlation),
        sample_size: search.sample_size(),
        budget,
        recovered: Some(recovery.is_some()),
        recovery_iteration: recovery.map(|r| r.0),
        recovery_candidates: recovery.map(|r| r.1),
        iterations_run: search.iteration(),
        candidate_overflow,
        best_candidate,
        better_pair_found,
        stats: search.stats(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lightbulb::ceil_log2;
    use proptest::prelude::*;

    fn cc_from(a: &[Vec<u8>], b: &[Vec<u8>]) -> CaseControl {
        CaseControl::new(
            GenotypeMatrix::from_rows(a, 3).unwrap(),
            GenotypeMatrix::from_rows(b, 3).unwrap(),
        )
        .unwrap()
    }

    fn random_cc(m1: usize, m2: usize, n: usize, sigma: usize, seed: u64) -> CaseControl {
        CaseControl::new(
            gen_binomial_matrix(m1, n, sigma, derive_seed(seed, 0, 1)).unwrap(),
            gen_binomial_matrix(m2, n, sigma, derive_seed(seed, 0, 2)).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_subject_single_snp() {
        let d = build_two_locus_matrix(&cc_from(&[vec![0]], &[vec![0]])).unwrap();
        assert_eq!(d.bits().rows(), 2);
        assert_eq!(d.bits().cols(), 6);
        assert_eq!(d.bits().row_bits(1), vec![0, 0, 1, 1, 1, 0]);
        assert_eq!(d.bits().row_bits(0), vec![0, 0, 1, 0, 0, 1]);
        assert!(d.structure_holds());
    }

    #[test]
    fn identical_groups_give_half() {
        let g = gen_binomial_matrix(7, 6, 3, 4).unwrap();
        let cc = CaseControl::new(g.clone(), g).unwrap();
        let d = build_two_locus_matrix(&cc).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert_eq!(d.cross_matches(i, j), 3 * 7);
                    assert_eq!(d.cross_correlation(i, j), 0.5);
                }
            }
        }
        let r = two_locus_scan(&cc, &LightbulbParams::with_seed(1)).unwrap();
        assert_eq!(r.delta, 0.0);
        assert_eq!(brute_force_two_locus(&cc).unwrap().scaled(), 0);
    }

    #[test]
    fn extreme_pair_has_five_sixths() {
        // SNPs 0 and 1 always agree in cases and never in controls
        let cases: Vec<Vec<u8>> = (0..6)
            .map(|r| vec![(r % 3) as u8, (r % 3) as u8, 1])
            .collect();
        let controls: Vec<Vec<u8>> = (0..6)
            .map(|r| vec![(r % 3) as u8, ((r + 1) % 3) as u8, 1])
            .collect();
        let cc = cc_from(&cases, &controls);
        let d = build_two_locus_matrix(&cc).unwrap();
        assert_eq!(d.cross_correlation(0, 1), 5.0 / 6.0);
        let r = two_locus_scan(&cc, &LightbulbParams::with_seed(2)).unwrap();
        assert_eq!((r.i, r.j, r.delta), (0, 1, 1.0));
        assert_eq!(r.direction, Direction::CasesOverControls);
        let swapped = two_locus_scan(&cc.swapped(), &LightbulbParams::with_seed(2)).unwrap();
        assert_eq!((swapped.i, swapped.j, swapped.delta), (0, 1, 1.0));
        assert_eq!(swapped.direction, Direction::ControlsOverCases);
    }

    #[test]
    fn two_snps() {
        let cc = random_cc(5, 5, 2, 3, 3);
        let bf = brute_force_two_locus(&cc).unwrap();
        assert_eq!((bf.i, bf.j), (0, 1));
        let one = random_cc(5, 5, 1, 3, 3);
        assert!(brute_force_two_locus(&one).is_err());
        assert!(two_locus_scan(&one, &LightbulbParams::default()).is_err());
    }

    #[test]
    fn shape_errors() {
        let a = gen_binomial_matrix(3, 4, 3, 0).unwrap();
        let b = gen_binomial_matrix(3, 5, 3, 0).unwrap();
        assert!(CaseControl::new(a.clone(), b).is_err());
        let wide = gen_binomial_matrix(3, 4, 4, 0).unwrap();
        assert!(CaseControl::new(a.clone(), wide).is_err());
        let cc = CaseControl::new(a.clone(), gen_binomial_matrix(7, 4, 3, 0).unwrap())
            .unwrap()
            .with_equalization_cap(20);
        assert!(build_two_locus_matrix(&cc).is_err());
    }

    #[test]
    fn equalization_repeats_rows() {
        let cc = random_cc(4, 6, 5, 3, 8);
        let d = build_two_locus_matrix(&cc).unwrap();
        assert_eq!(d.subjects(), 12);
        assert_eq!(d.repeats(), (3, 2));
        assert!(d.structure_holds());
        for i in 0..5 {
            for j in 0..5 {
                if i == j {
                    continue;
                }
                let pd = cc.delta(i, j);
                let want =
                    expected_cross_matches(12, 3 * pd.cases_matches, 2 * pd.controls_matches);
                assert_eq!(d.cross_matches(i, j) as i64, want);
            }
        }
    }

    #[test]
    fn injection_counts() {
        assert_eq!(injection_ones(0.2, 200).unwrap(), (120, 80));
        assert_eq!(injection_ones(0.5, 20).unwrap(), (15, 5));
        assert!(injection_ones(0.2, 7).is_err());
        assert!(injection_ones(1.5, 10).is_err());
        let spec = InjectionSpec {
            snps: 30,
            subjects: 20,
            delta: 0.5,
            seed: 3,
        };
        let (cc, inj) = injected_case_control(&spec).unwrap();
        let inj = inj.unwrap();
        assert_eq!(inj.signed(), 0.5);
        assert_eq!((inj.p_cases(), inj.p_controls()), (0.75, 0.25));
        assert_eq!(cc.delta(inj.i, inj.j), inj);
    }

    #[test]
    fn zero_delta_is_undefined() {
        let spec = InjectionSpec {
            snps: 30,
            subjects: 20,
            delta: 0.0,
            seed: 3,
        };
        let r = injection_experiment(&spec, &LightbulbParams::with_seed(3)).unwrap();
        assert_eq!(r.recovered, None);
        assert_eq!(r.recovery_iteration, None);
    }

    #[test]
    fn injected_pair_is_recovered() {
        let spec = InjectionSpec {
            snps: 100,
            subjects: 40,
            delta: 0.5,
            seed: 11,
        };
        let r = injection_experiment(&spec, &LightbulbParams::with_seed(11)).unwrap();
        assert_eq!(r.recovered, Some(true));
        let it = r.recovery_iteration.unwrap();
        assert_eq!(it, r.iterations_run);
        assert!(r.recovery_candidates.unwrap() > 0);
        assert_eq!(r.injected_correlation, Some(0.5 + 0.5 / 3.0));
        assert_eq!(r.sample_size, ceil_log2(200));
    }

    #[test]
    fn budget_formula() {
        // p1 = 1 means a single-iteration exponent of zero
        assert_eq!(injection_budget(1024, 1.0), 10);
        assert_eq!(injection_budget(1024, 0.5), 1024 * 10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reduction_identity(seed in 0u64..10_000, m in 2usize..=10, n in 3usize..=8) {
            let cc = random_cc(m, m, n, 3, seed);
            let d = build_two_locus_matrix(&cc).unwrap();
            prop_assert!(d.structure_holds());
            for i in 0..n {
                for j in 0..n {
                    if i == j { continue; }
                    let pd = cc.delta(i, j);
                    let got = d.cross_matches(i, j) as i64;
                    prop_assert_eq!(got, expected_cross_matches(m, pd.cases_matches, pd.controls_matches));
                    // 6m·(1/2 + (P_A - P_B)/3) = 3m + 2(u_A - u_B)
                    prop_assert_eq!(6 * got * m as i64, 18 * (m * m) as i64 + 12 * pd.scaled());
                }
            }
        }

        #[test]
        fn saturated_scan_matches_oracle(seed in 0u64..10_000, m1 in 1usize..6, m2 in 1usize..6, n in 2usize..7) {
            let cc = random_cc(m1, m2, n, 3, seed);
            let p = LightbulbParams { sample_size: Some(1), iterations: Some(120), ..LightbulbParams::with_seed(seed) };
            let bf = brute_force_two_locus(&cc).unwrap();
            let r = two_locus_scan(&cc, &p).unwrap();
            let all = 2 * (n * (n - 1)) as u64;
            if r.stats.pairs_examined == all {
                prop_assert_eq!((r.i, r.j), (bf.i, bf.j));
                prop_assert_eq!(r.delta, bf.magnitude());
            }
        }
    }
}

//! Configured runs, parameter sweeps and report reproduction.
//!
//! A [`RunConfig`] names a command, a dataset (file or generator), an
//! engine and every algorithm parameter. [`run`] executes it and returns a
//! [`RunReport`] that embeds the config, so a report can be replayed with
//! [`reproduce`].
//!
//! Seeds: the config seed drives the algorithm. Generated datasets use
//! their own seed when given, otherwise `derive_seed(seed, 1, 0)`.
//! Injection trial `t` uses `derive_seed(seed, 2, t)` for its data and
//! `derive_seed(seed, 3, t)` for its search. Sweep cell `c`, repetition
//! `r` runs with seed `derive_seed(master, c, r)`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::datagen::{gen_binomial_matrix, gen_random_walk, TimeSeries};
use crate::error::{Error, Result};
use crate::hamming_pairs::{
    brute_force_least_correlated, brute_force_most_correlated_strings, least_correlated_pair,
    most_correlated_pair_strings, EncodingKind, StringPair,
};
use crate::io::{load_matrix, load_series};
use crate::lightbulb::{LightbulbParams, DEFAULT_CANDIDATE_CAP};
use crate::matrix::SymbolMatrix;
use crate::refscan::{
    brute_force_closest_pair, brute_force_neighbors, closest_pair, fixed_radius_neighbors,
    lmer_admissible_pairs, Execution, MotifParams, ReferenceParams, DEFAULT_FACTOR,
    DEFAULT_REFERENCES,
};
use crate::report::{csv_text, write_text, Record, RunReport, Verification, VERSION};
use crate::rng::derive_seed;
use crate::twolocus::{
    brute_force_two_locus, injection_experiment, two_locus_scan, CaseControl, InjectionSpec,
    PairDelta, GENOTYPE_ALPHABET,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Motif,
    Frnn,
    ClosestHamming,
    FarthestHamming,
    TwoLocus,
    TwoLocusInject,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Motif => "motif",
            Command::Frnn => "frnn",
            Command::ClosestHamming => "closest-hamming",
            Command::FarthestHamming => "farthest-hamming",
            Command::TwoLocus => "twolocus",
            Command::TwoLocusInject => "twolocus-inject",
        }
    }

    pub fn default_engine(self) -> Engine {
        match self {
            Command::Motif | Command::Frnn => Engine::Mpr,
            _ => Engine::Mlba,
        }
    }

    fn accepts(self, engine: Engine) -> bool {
        match self {
            Command::Motif | Command::Frnn => {
                matches!(engine, Engine::Mk | Engine::Mpr | Engine::Brute)
            }
            Command::TwoLocusInject => engine == Engine::Mlba,
            _ => matches!(engine, Engine::Mlba | Engine::Brute),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Reference pruning with unprojected references (factor 1).
    Mk,
    /// Reference pruning with projected references.
    Mpr,
    /// Bucketing on random position samples.
    Mlba,
    /// Exhaustive oracle.
    Brute,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Mk => "mk",
            Engine::Mpr => "mpr",
            Engine::Mlba => "mlba",
            Engine::Brute => "brute",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mk" => Ok(Engine::Mk),
            "mpr" => Ok(Engine::Mpr),
            "mlba" => Ok(Engine::Mlba),
            "brute" => Ok(Engine::Brute),
            _ => Err(Error::invalid(format!("unknown engine {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    #[default]
    OneHot,
    Random,
}

/// Where the input comes from. Generator seeds default to a value derived
/// from the run seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Dataset {
    SeriesFile {
        path: PathBuf,
    },
    RandomWalk {
        length: usize,
        step_stddev: f64,
        seed: Option<u64>,
    },
    /// Subjects × strings; the strings (columns) are the searched items.
    MatrixFile {
        path: PathBuf,
    },
    Binomial {
        subjects: usize,
        strings: usize,
        alphabet: usize,
        seed: Option<u64>,
    },
    CaseControlFiles {
        cases: PathBuf,
        controls: PathBuf,
    },
    /// Uniform genotypes in both groups.
    CaseControlBinomial {
        cases: usize,
        controls: usize,
        snps: usize,
        seed: Option<u64>,
    },
    /// Binary background with one planted SNP pair, fresh per trial.
    Injection {
        snps: usize,
        subjects: usize,
        delta: f64,
    },
}

impl Dataset {
    fn data_seed(seed: Option<u64>, run_seed: u64) -> u64 {
        seed.unwrap_or_else(|| derive_seed(run_seed, 1, 0))
    }

    pub fn label(&self, run_seed: u64) -> String {
        match self {
            Dataset::SeriesFile { path } | Dataset::MatrixFile { path } => {
                path.display().to_string()
            }
            Dataset::RandomWalk {
                length,
                step_stddev,
                seed,
            } => format!(
                "random-walk(length={length},step-stddev={step_stddev},seed={})",
                Self::data_seed(*seed, run_seed)
            ),
            Dataset::Binomial {
                subjects,
                strings,
                alphabet,
                seed,
            } => format!(
                "binomial(subjects={subjects},strings={strings},alphabet={alphabet},seed={})",
                Self::data_seed(*seed, run_seed)
            ),
            Dataset::CaseControlFiles { cases, controls } => {
                format!("cases={},controls={}", cases.display(), controls.display())
            }
            Dataset::CaseControlBinomial {
                cases,
                controls,
                snps,
                seed,
            } => format!(
                "binomial-case-control(cases={cases},controls={controls},snps={snps},seed={})",
                Self::data_seed(*seed, run_seed)
            ),
            Dataset::Injection {
                snps,
                subjects,
                delta,
            } => format!("injection(snps={snps},subjects={subjects},delta={delta})"),
        }
    }

    fn series(&self, run_seed: u64) -> Result<TimeSeries> {
        match self {
            Dataset::SeriesFile { path } => load_series(path),
            Dataset::RandomWalk {
                length,
                step_stddev,
                seed,
            } => gen_random_walk(*length, Self::data_seed(*seed, run_seed), *step_stddev),
            _ => Err(Error::invalid("this command needs a series dataset")),
        }
    }

    /// Items as rows.
    fn strings(&self, run_seed: u64) -> Result<SymbolMatrix> {
        match self {
            Dataset::MatrixFile { path } => Ok(load_matrix(path)?.to_items()),
            Dataset::Binomial {
                subjects,
                strings,
                alphabet,
                seed,
            } => Ok(gen_binomial_matrix(
                *subjects,
                *strings,
                *alphabet,
                Self::data_seed(*seed, run_seed),
            )?
            .to_items()),
            _ => Err(Error::invalid("this command needs a string matrix dataset")),
        }
    }

    fn case_control(&self, run_seed: u64) -> Result<CaseControl> {
        match self {
            Dataset::CaseControlFiles { cases, controls } => {
                CaseControl::new(load_matrix(cases)?, load_matrix(controls)?)
            }
            Dataset::CaseControlBinomial {
                cases,
                controls,
                snps,
                seed,
            } => {
                let s = Self::data_seed(*seed, run_seed);
                CaseControl::new(
                    gen_binomial_matrix(*cases, *snps, GENOTYPE_ALPHABET, derive_seed(s, 0, 1))?,
                    gen_binomial_matrix(*controls, *snps, GENOTYPE_ALPHABET, derive_seed(s, 0, 2))?,
                )
            }
            _ => Err(Error::invalid("this command needs a case/control dataset")),
        }
    }

    fn resize(&mut self, n: usize) -> Result<()> {
        match self {
            Dataset::RandomWalk { length, .. } => *length = n,
            Dataset::Binomial { strings, .. } => *strings = n,
            Dataset::CaseControlBinomial { snps, .. } | Dataset::Injection { snps, .. } => {
                *snps = n
            }
            _ => return Err(Error::invalid("`n` only applies to generated datasets")),
        }
        Ok(())
    }
}

/// Everything needed to repeat a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub dataset: Dataset,
    pub engine: Engine,
    /// ℓ-mer length for series datasets.
    pub window: Option<usize>,
    pub references: usize,
    /// Ignored by `mk`, which always uses 1.
    pub factor: f64,
    /// Minimum index gap between compared ℓ-mers; defaults to the window.
    pub exclusion: Option<usize>,
    pub radius: Option<f64>,
    pub iterations: Option<usize>,
    pub sample_size: Option<usize>,
    pub auto_stop: bool,
    pub candidate_cap: usize,
    pub encoding: Encoding,
    /// Code length for the random encoding; defaults to `2·⌈log2 σ⌉ + 8`.
    pub code_length: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Single-threaded engines and zero wall time, so reports are
    /// byte-identical across runs.
    pub deterministic: bool,
    /// Second engine to compare against on the same input.
    pub verify: Option<Engine>,
    /// Repetitions per sweep cell.
    pub repetitions: usize,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults for everything except the command and dataset.
    pub fn new(command: Command, dataset: Dataset) -> Self {
        RunConfig {
            command,
            dataset,
            engine: command.default_engine(),
            window: None,
            references: DEFAULT_REFERENCES,
            factor: DEFAULT_FACTOR,
            exclusion: None,
            radius: None,
            iterations: None,
            sample_size: None,
            auto_stop: false,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
            encoding: Encoding::OneHot,
            code_length: None,
            trials: 1,
            seed: 0,
            deterministic: false,
            verify: None,
            repetitions: 1,
            output: None,
        }
    }

    /// Sets one parameter by its flag name (`refs`, `factor`, `engine`,
    /// `n`, ...). Used by sweep grids.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::invalid(format!("bad value {value:?} for `{key}`")))
        }
        match key {
            "engine" => self.engine = Engine::parse(value)?,
            "verify" => self.verify = Some(Engine::parse(value)?),
            "len" | "window" => self.window = Some(num(key, value)?),
            "refs" | "references" => self.references = num(key, value)?,
            "factor" => self.factor = num(key, value)?,
            "exclusion" => self.exclusion = Some(num(key, value)?),
            "radius" => self.radius = Some(num(key, value)?),
            "iterations" => self.iterations = Some(num(key, value)?),
            "sample-size" => self.sample_size = Some(num(key, value)?),
            "auto-stop" => self.auto_stop = num(key, value)?,
            "candidate-cap" => self.candidate_cap = num(key, value)?,
            "code-length" => self.code_length = Some(num(key, value)?),
            "trials" => self.trials = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "deterministic" => self.deterministic = num(key, value)?,
            "reps" | "repetitions" => self.repetitions = num(key, value)?,
            "encoding" => {
                self.encoding = match value {
                    "one-hot" => Encoding::OneHot,
                    "random" => Encoding::Random,
                    _ => return Err(Error::invalid(format!("unknown encoding {value:?}"))),
                }
            }
            "n" => self.dataset.resize(num(key, value)?)?,
            "delta" => match &mut self.dataset {
                Dataset::Injection { delta, .. } => *delta = num(key, value)?,
                _ => return Err(Error::invalid("`delta` only applies to injection runs")),
            },
            _ => return Err(Error::invalid(format!("unknown parameter `{key}`"))),
        }
        Ok(())
    }

    fn execution(&self) -> Execution {
        if self.deterministic {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn check(&self) -> Result<()> {
        for engine in std::iter::once(self.engine).chain(self.verify) {
            if !self.command.accepts(engine) {
                return Err(Error::invalid(format!(
                    "engine `{}` is not available for `{}`",
                    engine.name(),
                    self.command.name()
                )));
            }
        }
        if self.verify.is_some() && self.command == Command::TwoLocusInject {
            return Err(Error::invalid("injection runs have no verification mode"));
        }
        if self.trials == 0 || self.repetitions == 0 {
            return Err(Error::invalid("trials and repetitions must be positive"));
        }
        Ok(())
    }

    fn window(&self) -> Result<usize> {
        self.window
            .ok_or_else(|| Error::invalid("series commands need a window length (`len`)"))
    }

    fn reference_params(&self, engine: Engine) -> ReferenceParams {
        ReferenceParams {
            count: self.references,
            factor: if engine == Engine::Mk {
                1.0
            } else {
                self.factor
            },
            seed: self.seed,
        }
    }

    fn lightbulb_params(&self, seed: u64) -> LightbulbParams {
        LightbulbParams {
            iterations: self.iterations,
            sample_size: self.sample_size,
            seed,
            auto_stop: self.auto_stop,
            candidate_cap: self.candidate_cap,
            execution: self.execution(),
            ..LightbulbParams::default()
        }
    }

    fn encoding_kind(&self, alphabet: usize) -> EncodingKind {
        match self.encoding {
            Encoding::OneHot => EncodingKind::OneHot,
            Encoding::Random => {
                let bits = crate::lightbulb::ceil_log2(alphabet);
                EncodingKind::Random {
                    code_length: self.code_length.unwrap_or(2 * bits + 8),
                    seed: derive_seed(self.seed, 4, 0),
                }
            }
        }
    }
}

/// The value an engine optimizes, used to compare two engines.
#[derive(Clone, Debug, PartialEq)]
enum Objective {
    Distance(f64),
    Matches(usize),
    Neighbors(Vec<Vec<usize>>),
    Delta(PairDelta),
    Recovery,
}

impl Objective {
    fn agrees(&self, other: &Objective) -> bool {
        match (self, other) {
            (Objective::Delta(a), Objective::Delta(b)) => a.magnitude_cmp(b).is_eq(),
            _ => self == other,
        }
    }
}

struct Outcome {
    record: Record,
    objective: Objective,
}

fn timed<T>(deterministic: bool, f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let value = f()?;
    let secs = if deterministic {
        0.0
    } else {
        start.elapsed().as_secs_f64()
    };
    Ok((value, secs))
}

fn base_record(cfg: &RunConfig, engine: Engine, params: Value) -> Record {
    Record {
        algorithm: format!("{}-{}", cfg.command.name(), engine.name()),
        params,
        dataset: cfg.dataset.label(cfg.seed),
        pair_index_1: None,
        pair_index_2: None,
        distance_or_matches: None,
        pairs_examined: 0,
        iterations: None,
        wall_seconds: 0.0,
        seed: cfg.seed,
        delta: None,
        direction: None,
        recovery_iteration: None,
        recovery_candidates: None,
        details: json!({}),
    }
}

fn execute(cfg: &RunConfig, engine: Engine) -> Result<Vec<Outcome>> {
    match cfg.command {
        Command::Motif => run_motif(cfg, engine).map(|o| vec![o]),
        Command::Frnn => run_frnn(cfg, engine).map(|o| vec![o]),
        Command::ClosestHamming | Command::FarthestHamming => {
            run_hamming(cfg, engine).map(|o| vec![o])
        }
        Command::TwoLocus => run_two_locus(cfg, engine).map(|o| vec![o]),
        Command::TwoLocusInject => run_injection(cfg),
    }
}

fn run_motif(cfg: &RunConfig, engine: Engine) -> Result<Outcome> {
    let window = cfg.window()?;
    let points = cfg.dataset.series(cfg.seed)?.lmers(window)?;
    let exclusion = cfg.exclusion.unwrap_or(window);
    let refs = cfg.reference_params(engine);
    let params = match engine {
        Engine::Brute => json!({ "window": window, "exclusion": exclusion }),
        _ => json!({
            "window": window,
            "exclusion": exclusion,
            "references": refs.count,
            "factor": refs.factor,
        }),
    };
    let (result, secs) = timed(cfg.deterministic, || match engine {
        Engine::Brute => brute_force_closest_pair(&points, exclusion),
        _ => closest_pair(
            &points,
            &MotifParams {
                references: refs,
                exclusion_zone: exclusion,
                execution: cfg.execution(),
            },
        ),
    })?;
    let mut record = base_record(cfg, engine, params);
    record.pair_index_1 = Some(result.index_i);
    record.pair_index_2 = Some(result.index_j);
    record.distance_or_matches = Some(result.distance);
    record.pairs_examined = result.stats.pairs_examined;
    record.wall_seconds = secs;
    record.details = json!({
        "points": points.len(),
        "admissible_pairs": lmer_admissible_pairs(points.len(), exclusion),
        "pairs_pruned_by_reference": result.stats.pairs_pruned_by_reference,
        "pairs_skipped_by_exit": result.stats.pairs_skipped_by_exit,
        "inner_loop_exits": result.stats.inner_loop_exits,
    });
    Ok(Outcome {
        record,
        objective: Objective::Distance(result.distance),
    })
}

fn run_frnn(cfg: &RunConfig, engine: Engine) -> Result<Outcome> {
    let window = cfg.window()?;
    let radius = cfg
        .radius
        .ok_or_else(|| Error::invalid("frnn needs a radius"))?;
    let points = cfg.dataset.series(cfg.seed)?.lmers(window)?;
    let refs = cfg.reference_params(engine);
    let params = match engine {
        Engine::Brute => json!({ "window": window, "radius": radius }),
        _ => json!({
            "window": window,
            "radius": radius,
            "references": refs.count,
            "factor": refs.factor,
        }),
    };
    let n = points.len() as u64;
    let ((neighbors, stats), secs) = timed(cfg.deterministic, || match engine {
        Engine::Brute => Ok((brute_force_neighbors(&points, radius)?, None)),
        _ => {
            let r = fixed_radius_neighbors(&points, radius, &refs)?;
            Ok((r.neighbors, Some(r.stats)))
        }
    })?;
    let pairs = neighbors.iter().map(Vec::len).sum::<usize>() / 2;
    let mut record = base_record(cfg, engine, params);
    record.pairs_examined = stats.map_or(n * n.saturating_sub(1) / 2, |s| s.pairs_examined);
    record.wall_seconds = secs;
    record.details = match stats {
        Some(s) => json!({
            "points": n,
            "neighbor_pairs": pairs,
            "pairs_pruned_by_reference": s.pairs_pruned_by_reference,
            "pairs_skipped_by_exit": s.pairs_skipped_by_exit,
            "inner_loop_exits": s.inner_loop_exits,
        }),
        None => json!({ "points": n, "neighbor_pairs": pairs }),
    };
    Ok(Outcome {
        record,
        objective: Objective::Neighbors(neighbors),
    })
}

fn string_pair_record(
    cfg: &RunConfig,
    engine: Engine,
    params: Value,
    pair: &StringPair,
    secs: f64,
) -> Record {
    let mut record = base_record(cfg, engine, params);
    record.pair_index_1 = Some(pair.i);
    record.pair_index_2 = Some(pair.j);
    record.distance_or_matches = Some(pair.matches as f64);
    record.pairs_examined = pair.stats.pairs_examined;
    record.iterations = (engine == Engine::Mlba).then_some(pair.stats.iterations as u64);
    record.wall_seconds = secs;
    record.details = json!({
        "correlation": pair.correlation,
        "search_matches": pair.search_matches,
        "collisions": pair.stats.collisions,
        "fully_verified": pair.stats.fully_verified,
    });
    record
}

fn run_hamming(cfg: &RunConfig, engine: Engine) -> Result<Outcome> {
    let strings = cfg.dataset.strings(cfg.seed)?;
    let farthest = cfg.command == Command::FarthestHamming;
    let kind = cfg.encoding_kind(strings.alphabet());
    let lb = cfg.lightbulb_params(cfg.seed);
    let (pair, secs) = timed(cfg.deterministic, || match (engine, farthest) {
        (Engine::Brute, true) => brute_force_least_correlated(&strings),
        (Engine::Brute, false) => brute_force_most_correlated_strings(&strings),
        (_, true) => least_correlated_pair(&strings, kind, &lb),
        (_, false) => most_correlated_pair_strings(&strings, &lb),
    })?;
    let mut params = match &pair.params {
        Some(p) => serde_json::to_value(p)?,
        None => json!({}),
    };
    if farthest && engine == Engine::Mlba {
        params["encoding"] = serde_json::to_value(kind)?;
    }
    let record = string_pair_record(cfg, engine, params, &pair, secs);
    Ok(Outcome {
        record,
        objective: Objective::Matches(pair.matches),
    })
}

fn run_two_locus(cfg: &RunConfig, engine: Engine) -> Result<Outcome> {
    let cc = cfg.dataset.case_control(cfg.seed)?;
    let lb = cfg.lightbulb_params(cfg.seed);
    let ((pair, params, stats), secs) = timed(cfg.deterministic, || match engine {
        Engine::Brute => {
            let pair = brute_force_two_locus(&cc)?;
            let n = cc.snps() as u64;
            Ok((
                pair,
                json!({}),
                json!({ "pairs_examined": n * (n - 1) / 2 }),
            ))
        }
        _ => {
            let r = two_locus_scan(&cc, &lb)?;
            let params = json!({
                "iterations_per_direction": r.iterations_per_direction,
                "sample_size": r.sample_size,
                "seed": cfg.seed,
                "auto_stop": cfg.auto_stop,
            });
            Ok((r.pair, params, serde_json::to_value(r.stats)?))
        }
    })?;
    let mut record = base_record(cfg, engine, params);
    record.pair_index_1 = Some(pair.i);
    record.pair_index_2 = Some(pair.j);
    record.pairs_examined = stats["pairs_examined"].as_u64().unwrap_or(0);
    record.iterations = stats["iterations"].as_u64();
    record.wall_seconds = secs;
    record.delta = Some(pair.magnitude());
    record.direction = Some(pair.direction());
    record.details = json!({
        "p_cases": pair.p_cases(),
        "p_controls": pair.p_controls(),
        "cases_matches": pair.cases_matches,
        "controls_matches": pair.controls_matches,
        "collisions": stats["collisions"],
    });
    Ok(Outcome {
        record,
        objective: Objective::Delta(pair),
    })
}

fn run_injection(cfg: &RunConfig) -> Result<Vec<Outcome>> {
    let Dataset::Injection {
        snps,
        subjects,
        delta,
    } = cfg.dataset
    else {
        return Err(Error::invalid("twolocus-inject needs an injection dataset"));
    };
    let trial = |t: usize| -> Result<Outcome> {
        let spec = InjectionSpec {
            snps,
            subjects,
            delta,
            seed: derive_seed(cfg.seed, 2, t as u64),
        };
        let lb = cfg.lightbulb_params(derive_seed(cfg.seed, 3, t as u64));
        let (r, secs) = timed(cfg.deterministic, || injection_experiment(&spec, &lb))?;
        let mut record = base_record(
            cfg,
            Engine::Mlba,
            json!({
                "budget": r.budget,
                "sample_size": r.sample_size,
                "seed": lb.seed,
                "trial": t,
            }),
        );
        record.seed = spec.seed;
        if let Some(inj) = r.injected {
            record.pair_index_1 = Some(inj.i);
            record.pair_index_2 = Some(inj.j);
            record.delta = Some(inj.magnitude());
            record.direction = Some(inj.direction());
        }
        record.pairs_examined = r.stats.pairs_examined;
        record.iterations = Some(r.iterations_run as u64);
        record.wall_seconds = secs;
        record.recovery_iteration = r.recovery_iteration.map(|v| v as u64);
        record.recovery_candidates = r.recovery_candidates;
        record.details = json!({
            "recovered": r.recovered,
            "injected_correlation": r.injected_correlation,
            "candidate_overflow": r.candidate_overflow,
            "better_pair_found": r.better_pair_found,
            "best_candidate": r.best_candidate.map(|b| json!({
                "i": b.i,
                "j": b.j,
                "delta": b.magnitude(),
            })),
        });
        Ok(Outcome {
            record,
            objective: Objective::Recovery,
        })
    };
    if cfg.deterministic {
        (0..cfg.trials).map(trial).collect()
    } else {
        (0..cfg.trials).into_par_iter().map(trial).collect()
    }
}

/// Runs the configured engine (and the verification engine, if any).
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.check()?;
    let outcomes = execute(cfg, cfg.engine)?;
    let verification = match cfg.verify {
        None => None,
        Some(other) => {
            let mine = &outcomes[0];
            let theirs = execute(cfg, other)?.remove(0);
            let pair = |r: &Record| r.pair_index_1.zip(r.pair_index_2);
            Some(Verification {
                engine: cfg.engine.name().to_string(),
                against: other.name().to_string(),
                engine_pair: pair(&mine.record),
                against_pair: pair(&theirs.record),
                engine_value: mine.record.distance_or_matches.or(mine.record.delta),
                against_value: theirs.record.distance_or_matches.or(theirs.record.delta),
                values_equal: mine.objective.agrees(&theirs.objective),
                pairs_equal: pair(&mine.record) == pair(&theirs.record),
            })
        }
    };
    Ok(RunReport {
        version: VERSION.to_string(),
        config: cfg.clone(),
        records: outcomes.into_iter().map(|o| o.record).collect(),
        verification,
    })
}

/// Result of replaying a report's embedded config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reproduction {
    pub records: usize,
    /// Records whose pair, objective and pair counts were reproduced.
    pub reproduced: usize,
    pub mismatches: Vec<String>,
}

impl Reproduction {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty() && self.records == self.reproduced
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Re-runs `report.config`. Deterministic reports must match record for
/// record; otherwise only pairs and objective values are compared, since
/// parallel pruning counters depend on scheduling.
pub fn reproduce(report: &RunReport) -> Result<Reproduction> {
    let fresh = run(&report.config)?;
    let mut mismatches = Vec::new();
    if fresh.records.len() != report.records.len() {
        mismatches.push(format!(
            "record count {} vs {}",
            report.records.len(),
            fresh.records.len()
        ));
    }
    let mut reproduced = 0;
    for (k, (old, new)) in report.records.iter().zip(&fresh.records).enumerate() {
        let same = if report.config.deterministic {
            old == new
        } else {
            (
                old.pair_index_1,
                old.pair_index_2,
                old.distance_or_matches,
                old.delta,
            ) == (
                new.pair_index_1,
                new.pair_index_2,
                new.distance_or_matches,
                new.delta,
            )
        };
        if same {
            reproduced += 1;
        } else {
            mismatches.push(format!(
                "record {k}: pairs_examined {} vs {}, pair {:?} vs {:?}",
                old.pairs_examined,
                new.pairs_examined,
                (old.pair_index_1, old.pair_index_2),
                (new.pair_index_1, new.pair_index_2)
            ));
        }
    }
    Ok(Reproduction {
        records: report.records.len(),
        reproduced,
        mismatches,
    })
}

/// One swept parameter and its values, in grid order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<String>,
}

impl GridAxis {
    /// Parses `key=v1,v2,...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (key, values) = spec
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("grid axis {spec:?} is not key=v1,v2,...")))?;
        let values: Vec<String> = values
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(String::from)
            .collect();
        if values.is_empty() {
            return Err(Error::invalid(format!("grid axis `{key}` has no values")));
        }
        Ok(GridAxis {
            key: key.trim().to_string(),
            values,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Template run; its seed is the master seed and its `repetitions`
    /// the repetitions per cell.
    pub base: RunConfig,
    pub grid: Vec<GridAxis>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub index: usize,
    pub settings: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    /// Per repetition, averaged over the run's records.
    pub pairs_examined: Vec<f64>,
    pub wall_seconds: Vec<f64>,
    pub mean_pairs_examined: f64,
    pub mean_wall_seconds: f64,
}

/// `mean pairs(mk) / mean pairs(mpr)` for cells that differ only in engine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineRatio {
    pub settings: BTreeMap<String, String>,
    pub numerator: String,
    pub denominator: String,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub version: String,
    pub config: SweepConfig,
    pub cells: Vec<SweepCell>,
    pub ratios: Vec<EngineRatio>,
}

/// Cartesian product of the axes, first axis slowest.
fn grid_cells(grid: &[GridAxis]) -> Vec<Vec<(String, String)>> {
    let mut cells = vec![Vec::new()];
    for axis in grid {
        cells = cells
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push((axis.key.clone(), v.clone()));
                    c
                })
            })
            .collect();
    }
    cells
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Runs every grid cell `base.repetitions` times with derived seeds.
pub fn sweep(config: &SweepConfig) -> Result<SweepReport> {
    let master = config.base.seed;
    let reps = config.base.repetitions;
    if reps == 0 {
        return Err(Error::invalid("repetitions must be positive"));
    }
    let mut configs = Vec::new();
    for (c, settings) in grid_cells(&config.grid).into_iter().enumerate() {
        let mut cfg = config.base.clone();
        cfg.output = None;
        for (k, v) in &settings {
            cfg.set(k, v)?;
        }
        cfg.check()?;
        configs.push((c, settings, cfg));
    }
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..reps).map(move |r| (c, r)))
        .collect();
    let job = |&(c, r): &(usize, usize)| -> Result<(u64, f64, f64)> {
        let mut cfg = configs[c].2.clone();
        cfg.seed = derive_seed(master, c as u64, r as u64);
        let report = run(&cfg)?;
        let pairs: Vec<f64> = report
            .records
            .iter()
            .map(|x| x.pairs_examined as f64)
            .collect();
        let wall: Vec<f64> = report.records.iter().map(|x| x.wall_seconds).collect();
        Ok((cfg.seed, mean(&pairs), wall.iter().sum()))
    };
    let results: Vec<(u64, f64, f64)> = if config.base.deterministic {
        jobs.iter().map(job).collect::<Result<_>>()?
    } else {
        jobs.par_iter().map(job).collect::<Result<_>>()?
    };
    let cells: Vec<SweepCell> = configs
        .iter()
        .map(|(c, settings, _)| {
            let runs = &results[c * reps..(c + 1) * reps];
            let pairs: Vec<f64> = runs.iter().map(|r| r.1).collect();
            let wall: Vec<f64> = runs.iter().map(|r| r.2).collect();
            SweepCell {
                index: *c,
                settings: settings.iter().cloned().collect(),
                seeds: runs.iter().map(|r| r.0).collect(),
                mean_pairs_examined: mean(&pairs),
                mean_wall_seconds: mean(&wall),
                pairs_examined: pairs,
                wall_seconds: wall,
            }
        })
        .collect();
    let ratios = engine_ratios(&cells, "mk", "mpr");
    Ok(SweepReport {
        version: VERSION.to_string(),
        config: config.clone(),
        cells,
        ratios,
    })
}

fn engine_ratios(cells: &[SweepCell], numerator: &str, denominator: &str) -> Vec<EngineRatio> {
    let without_engine = |c: &SweepCell| {
        let mut s = c.settings.clone();
        s.remove("engine");
        s
    };
    let mut out = Vec::new();
    for num in cells
        .iter()
        .filter(|c| c.settings.get("engine").map(String::as_str) == Some(numerator))
    {
        let key = without_engine(num);
        if let Some(den) = cells.iter().find(|c| {
            c.settings.get("engine").map(String::as_str) == Some(denominator)
                && without_engine(c) == key
        }) {
            out.push(EngineRatio {
                settings: key,
                numerator: numerator.to_string(),
                denominator: denominator.to_string(),
                ratio: num.mean_pairs_examined / den.mean_pairs_examined,
            });
        }
    }
    out
}

impl SweepReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One row per cell, in grid order.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let keys: Vec<&str> = self.config.grid.iter().map(|a| a.key.as_str()).collect();
        let mut header = vec!["cell"];
        header.extend(&keys);
        header.extend([
            "repetitions",
            "mean_pairs_examined",
            "mean_wall_seconds",
            "seeds",
            "pairs_examined",
        ]);
        w.write_record(&header)?;
        for cell in &self.cells {
            let mut row = vec![cell.index.to_string()];
            row.extend(keys.iter().map(|k| cell.settings[*k].clone()));
            row.push(cell.seeds.len().to_string());
            row.push(cell.mean_pairs_examined.to_string());
            row.push(cell.mean_wall_seconds.to_string());
            row.push(join(&cell.seeds));
            row.push(join(&cell.pairs_examined));
            w.write_record(&row)?;
        }
        csv_text(w)
    }
}

fn join<T: ToString>(values: &[T]) -> String {
    values
        .iter()
        .map(T::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

pub fn write_sweep(report: &SweepReport, path: &Path) -> Result<(PathBuf, PathBuf)> {
    let (json, csv) = crate::report::report_paths(path);
    write_text(&json, &report.to_json()?)?;
    write_text(&csv, &report.to_csv()?)?;
    Ok((json, csv))
}

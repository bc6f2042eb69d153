//! `closepair`: data generators, search engines, sweeps and report checks.

mod config_file;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use closepair::datagen::{gen_binomial_matrix, gen_random_walk, inject_pair};
use closepair::io::{load_matrix, save_matrix, save_series};
use closepair::report::{read_report, write_report, RunReport};
use closepair::runner::{
    self, Command, Dataset, Encoding, Engine, GridAxis, RunConfig, SweepConfig,
};

#[derive(Parser, Debug)]
#[command(
    name = "closepair",
    args_override_self = true,
    version,
    about = "Closest and farthest pair search with candidate-pair accounting",
    after_help = "Any command accepts `--config FILE`: one `key = value` per line, keys spelled \
                  like the long flags. Entries are expanded where --config appears, so later \
                  flags override them."
)]
struct Cli {
    #[command(subcommand)]
    command: Top,
}

#[derive(Subcommand, Debug)]
enum Top {
    /// Write a Gaussian random walk, one value per line.
    GenWalk(GenWalkArgs),
    /// Write a uniform genotype matrix (subjects × SNPs).
    GenSnp(GenSnpArgs),
    /// Plant a pair of columns with known correlation in a binary matrix.
    Inject(InjectArgs),
    #[command(flatten)]
    Run(RunCommand),
    /// Run a command over a parameter grid with repetitions.
    Sweep(SweepArgs),
    /// Re-run the config embedded in a report and compare the results.
    Verify(VerifyArgs),
}

#[derive(Subcommand, Debug)]
enum RunCommand {
    /// Closest pair of ℓ-mers of a series (time-series motif).
    Motif(MotifArgs),
    /// All ℓ-mer pairs within a fixed radius.
    Frnn(FrnnArgs),
    /// Most correlated pair of strings (columns of a matrix).
    ClosestHamming(HammingArgs),
    /// Least correlated pair of strings.
    FarthestHamming(FarthestArgs),
    /// SNP pair whose correlation differs most between cases and controls.
    Twolocus(TwoLocusArgs),
    /// Recovery of a planted SNP pair over binary noise.
    TwolocusInject(InjectRunArgs),
}

#[derive(Args, Debug)]
struct GenWalkArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    step_stddev: f64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct GenSnpArgs {
    #[arg(long)]
    subjects: usize,
    /// Number of SNPs (columns).
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    alphabet: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct InjectArgs {
    #[arg(long)]
    input: PathBuf,
    /// Target correlation; the planted count is round(correlation · subjects).
    #[arg(long)]
    correlation: f64,
    #[arg(long)]
    col_a: usize,
    #[arg(long)]
    col_b: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum EngineArg {
    Mk,
    Mpr,
    Mlba,
    Brute,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Mk => Engine::Mk,
            EngineArg::Mpr => Engine::Mpr,
            EngineArg::Mlba => Engine::Mlba,
            EngineArg::Brute => Engine::Brute,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum EncodingArg {
    OneHot,
    Random,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Single-threaded engines and zero wall time: byte-identical reports.
    #[arg(long)]
    deterministic: bool,
    /// Report path; `.json` and `.csv` are written side by side. Without it
    /// the JSON report goes to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Compare against a second engine on the same input.
    #[arg(long, value_enum)]
    verify: Option<EngineArg>,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct SeriesSource {
    /// Series file, one value per line.
    input: Option<PathBuf>,
    /// Generate a random walk of this length instead.
    #[arg(long)]
    gen_walk: Option<usize>,
}

#[derive(Args, Debug)]
struct SeriesArgs {
    #[command(flatten)]
    source: SeriesSource,
    #[arg(long, default_value_t = 1.0)]
    step_stddev: f64,
    /// Seed of the generated walk; derived from --seed when absent.
    #[arg(long)]
    data_seed: Option<u64>,
    /// ℓ-mer length.
    #[arg(long)]
    len: usize,
    /// Number of reference points.
    #[arg(long, default_value_t = 10)]
    refs: usize,
    /// Projection factor (mk always uses 1).
    #[arg(long, default_value_t = 10.0)]
    factor: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct MotifArgs {
    #[command(flatten)]
    series: SeriesArgs,
    /// Minimum start-index gap between compared ℓ-mers; defaults to --len.
    #[arg(long)]
    exclusion: Option<usize>,
    #[arg(long, value_enum, default_value_t = EngineArg::Mpr)]
    engine: EngineArg,
}

#[derive(Args, Debug)]
struct FrnnArgs {
    #[command(flatten)]
    series: SeriesArgs,
    #[arg(long)]
    radius: f64,
    #[arg(long, value_enum, default_value_t = EngineArg::Mpr)]
    engine: EngineArg,
}

#[derive(Args, Debug)]
struct LightbulbArgs {
    /// Bucketing iterations; default ⌈5·log2 n⌉.
    #[arg(long)]
    iterations: Option<usize>,
    /// Positions sampled per iteration; default ⌈log2 n⌉.
    #[arg(long)]
    sample_size: Option<usize>,
    /// Stop once the best pair is stable for ⌈log2 n⌉ iterations.
    #[arg(long)]
    auto_stop: bool,
    #[arg(long, default_value_t = closepair::lightbulb::DEFAULT_CANDIDATE_CAP)]
    candidate_cap: usize,
    #[arg(long, value_enum, default_value_t = EngineArg::Mlba)]
    engine: EngineArg,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct MatrixSource {
    /// Matrix file: one subject per line, strings are columns.
    input: Option<PathBuf>,
    /// Generate a uniform matrix with this many strings instead.
    #[arg(long)]
    gen_snp: Option<usize>,
}

#[derive(Args, Debug)]
struct HammingArgs {
    #[command(flatten)]
    source: MatrixSource,
    /// String length (subjects) of a generated matrix.
    #[arg(long, default_value_t = 100)]
    subjects: usize,
    #[arg(long, default_value_t = 3)]
    alphabet: usize,
    #[arg(long)]
    data_seed: Option<u64>,
    #[command(flatten)]
    lightbulb: LightbulbArgs,
}

#[derive(Args, Debug)]
struct FarthestArgs {
    #[command(flatten)]
    hamming: HammingArgs,
    #[arg(long, value_enum, default_value_t = EncodingArg::OneHot)]
    encoding: EncodingArg,
    /// Bits per symbol for the random encoding.
    #[arg(long)]
    code_length: Option<usize>,
}

#[derive(Args, Debug)]
struct TwoLocusArgs {
    #[arg(long, requires = "controls", conflicts_with = "gen_snp")]
    cases: Option<PathBuf>,
    #[arg(long, requires = "cases")]
    controls: Option<PathBuf>,
    /// Generate uniform genotypes for this many SNPs instead of reading files.
    #[arg(long, required_unless_present = "cases")]
    gen_snp: Option<usize>,
    /// Subjects per generated group.
    #[arg(long, default_value_t = 100)]
    subjects: usize,
    #[arg(long)]
    data_seed: Option<u64>,
    #[command(flatten)]
    lightbulb: LightbulbArgs,
}

#[derive(Args, Debug)]
struct InjectRunArgs {
    /// Number of SNPs.
    #[arg(long)]
    n: usize,
    /// Subjects per group.
    #[arg(long)]
    subjects: usize,
    /// Planted P_A - P_B.
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Iteration budget; default from the planted correlation.
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    sample_size: Option<usize>,
    #[arg(long, default_value_t = closepair::lightbulb::DEFAULT_CANDIDATE_CAP)]
    candidate_cap: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// `key=v1,v2,...` with keys spelled like the flags (refs, factor,
    /// engine, n, iterations, ...); repeat for more axes.
    #[arg(long, required = true)]
    grid: Vec<String>,
    /// Repetitions per cell.
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[command(subcommand)]
    run: RunCommand,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// JSON report written by a previous run.
    report: PathBuf,
}

fn apply_common(cfg: &mut RunConfig, common: &Common) {
    cfg.seed = common.seed;
    cfg.deterministic = common.deterministic;
    cfg.output = common.output.clone();
    cfg.verify = common.verify.map(Engine::from);
}

fn series_config(command: Command, a: &SeriesArgs) -> RunConfig {
    let dataset = match (&a.source.input, a.source.gen_walk) {
        (Some(path), _) => Dataset::SeriesFile { path: path.clone() },
        (None, Some(length)) => Dataset::RandomWalk {
            length,
            step_stddev: a.step_stddev,
            seed: a.data_seed,
        },
        (None, None) => unreachable!("clap requires a series source"),
    };
    let mut cfg = RunConfig::new(command, dataset);
    cfg.window = Some(a.len);
    cfg.references = a.refs;
    cfg.factor = a.factor;
    apply_common(&mut cfg, &a.common);
    cfg
}

fn apply_lightbulb(cfg: &mut RunConfig, a: &LightbulbArgs) {
    cfg.iterations = a.iterations;
    cfg.sample_size = a.sample_size;
    cfg.auto_stop = a.auto_stop;
    cfg.candidate_cap = a.candidate_cap;
    cfg.engine = a.engine.into();
    apply_common(cfg, &a.common);
}

fn hamming_config(command: Command, a: &HammingArgs) -> RunConfig {
    let dataset = match (&a.source.input, a.source.gen_snp) {
        (Some(path), _) => Dataset::MatrixFile { path: path.clone() },
        (None, Some(strings)) => Dataset::Binomial {
            subjects: a.subjects,
            strings,
            alphabet: a.alphabet,
            seed: a.data_seed,
        },
        (None, None) => unreachable!("clap requires a matrix source"),
    };
    let mut cfg = RunConfig::new(command, dataset);
    apply_lightbulb(&mut cfg, &a.lightbulb);
    cfg
}

fn to_config(cmd: &RunCommand) -> RunConfig {
    match cmd {
        RunCommand::Motif(a) => {
            let mut cfg = series_config(Command::Motif, &a.series);
            cfg.exclusion = a.exclusion;
            cfg.engine = a.engine.into();
            cfg
        }
        RunCommand::Frnn(a) => {
            let mut cfg = series_config(Command::Frnn, &a.series);
            cfg.radius = Some(a.radius);
            cfg.engine = a.engine.into();
            cfg
        }
        RunCommand::ClosestHamming(a) => hamming_config(Command::ClosestHamming, a),
        RunCommand::FarthestHamming(a) => {
            let mut cfg = hamming_config(Command::FarthestHamming, &a.hamming);
            cfg.encoding = match a.encoding {
                EncodingArg::OneHot => Encoding::OneHot,
                EncodingArg::Random => Encoding::Random,
            };
            cfg.code_length = a.code_length;
            cfg
        }
        RunCommand::Twolocus(a) => {
            let dataset = match (&a.cases, &a.controls, a.gen_snp) {
                (Some(cases), Some(controls), _) => Dataset::CaseControlFiles {
                    cases: cases.clone(),
                    controls: controls.clone(),
                },
                (_, _, Some(snps)) => Dataset::CaseControlBinomial {
                    cases: a.subjects,
                    controls: a.subjects,
                    snps,
                    seed: a.data_seed,
                },
                _ => unreachable!("clap requires a case/control source"),
            };
            let mut cfg = RunConfig::new(Command::TwoLocus, dataset);
            apply_lightbulb(&mut cfg, &a.lightbulb);
            cfg
        }
        RunCommand::TwolocusInject(a) => {
            let mut cfg = RunConfig::new(
                Command::TwoLocusInject,
                Dataset::Injection {
                    snps: a.n,
                    subjects: a.subjects,
                    delta: a.delta,
                },
            );
            cfg.trials = a.trials;
            cfg.iterations = a.iterations;
            cfg.sample_size = a.sample_size;
            cfg.candidate_cap = a.candidate_cap;
            apply_common(&mut cfg, &a.common);
            cfg
        }
    }
}

fn emit(report: &RunReport, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => {
            let (json, csv) = write_report(report, path)?;
            eprintln!("wrote {} and {}", json.display(), csv.display());
        }
        None => print!("{}", report.to_json()?),
    }
    Ok(())
}

fn execute(top: Top) -> Result<ExitCode> {
    match top {
        Top::GenWalk(a) => {
            let series = gen_random_walk(a.n, a.seed, a.step_stddev)?;
            save_series(&series, &a.output)?;
        }
        Top::GenSnp(a) => {
            let m = gen_binomial_matrix(a.subjects, a.n, a.alphabet, a.seed)?;
            save_matrix(&m, &a.output)?;
        }
        Top::Inject(a) => {
            let mut m = load_matrix(&a.input)?;
            let inj = inject_pair(&mut m, a.correlation, a.col_a, a.col_b, a.seed)?;
            save_matrix(&m, &a.output)?;
            eprintln!(
                "planted columns {} and {} with {} ones, correlation {}",
                inj.col_a, inj.col_b, inj.ones, inj.correlation
            );
        }
        Top::Run(cmd) => {
            let cfg = to_config(&cmd);
            let report = runner::run(&cfg)?;
            emit(&report, cfg.output.as_deref())?;
            if let Some(v) = &report.verification {
                if !v.values_equal {
                    eprintln!(
                        "verification failed: {} and {} disagree",
                        v.engine, v.against
                    );
                    return Ok(ExitCode::from(2));
                }
            }
        }
        Top::Sweep(a) => {
            let base = RunConfig {
                repetitions: a.reps,
                ..to_config(&a.run)
            };
            let grid = a
                .grid
                .iter()
                .map(|g| GridAxis::parse(g))
                .collect::<closepair::Result<Vec<_>>>()?;
            let output = base.output.clone();
            let report = runner::sweep(&SweepConfig { base, grid })?;
            match output {
                Some(path) => {
                    let (json, csv) = runner::write_sweep(&report, &path)?;
                    eprintln!("wrote {} and {}", json.display(), csv.display());
                }
                None => print!("{}", report.to_csv()?),
            }
        }
        Top::Verify(a) => {
            let report = read_report(&a.report)?;
            let outcome = runner::reproduce(&report)?;
            println!("{}", outcome.to_json()?);
            if !outcome.ok() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let args = match config_file::expand(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    match execute(cli.command).context("closepair failed") {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn motif_flags_map_to_config() {
        let cli = Cli::try_parse_from([
            "closepair",
            "motif",
            "--gen-walk",
            "500",
            "--len",
            "32",
            "--refs",
            "4",
            "--factor",
            "3",
            "--engine",
            "mk",
            "--seed",
            "9",
            "--deterministic",
        ])
        .unwrap();
        let Top::Run(cmd) = cli.command else {
            panic!("expected a run command")
        };
        let cfg = to_config(&cmd);
        assert_eq!(cfg.command, Command::Motif);
        assert_eq!(cfg.window, Some(32));
        assert_eq!(cfg.references, 4);
        assert_eq!(cfg.factor, 3.0);
        assert_eq!(cfg.engine, Engine::Mk);
        assert_eq!(cfg.seed, 9);
        assert!(cfg.deterministic);
        assert!(matches!(
            cfg.dataset,
            Dataset::RandomWalk { length: 500, .. }
        ));
    }

    #[test]
    fn series_source_is_required_and_exclusive() {
        assert!(Cli::try_parse_from(["closepair", "motif", "--len", "8"]).is_err());
        assert!(Cli::try_parse_from([
            "closepair",
            "motif",
            "f.txt",
            "--gen-walk",
            "9",
            "--len",
            "8"
        ])
        .is_err());
    }

    #[test]
    fn later_flags_override_earlier() {
        let cli = Cli::try_parse_from([
            "closepair",
            "motif",
            "--gen-walk",
            "500",
            "--len",
            "32",
            "--refs",
            "4",
            "--refs",
            "6",
        ])
        .unwrap();
        let Top::Run(cmd) = cli.command else {
            panic!("expected a run command")
        };
        assert_eq!(to_config(&cmd).references, 6);
    }

    #[test]
    fn sweep_wraps_a_run_command() {
        let cli = Cli::try_parse_from([
            "closepair",
            "sweep",
            "--grid",
            "refs=1,2",
            "--reps",
            "3",
            "motif",
            "--gen-walk",
            "300",
            "--len",
            "16",
        ])
        .unwrap();
        let Top::Sweep(a) = cli.command else {
            panic!("expected sweep")
        };
        assert_eq!(a.reps, 3);
        assert_eq!(a.grid, ["refs=1,2"]);
    }
}

//! Command-line entry point.
//!
//! Exit codes: 0 on success, 1 for usage, validation and schema errors, 2 for
//! I/O errors. Errors go to standard error; with `--format machine` reports
//! are printed to standard output as a single JSON document.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::dataset::DatasetBundle;
#[cfg(test)]
use crate::dataset::FORMAT_VERSION;
use crate::error::{Error, Result};
use crate::eval_harness::{
    random_scores, read_scores, score_runs, write_scores, Method, ScoreRecord,
};
use crate::factoids::load_vocab;
use crate::generator::{
    dataset_stats, FrequencyReport, GenConfig, Generator, Hops, PremiseStyle, SplitFractions,
};
use crate::unli_convert::{convert_file, ColumnMap, ConvertOptions};
use crate::wep_scale::WepScale;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (dataset format ", "1", ")");

#[derive(Debug, Parser)]
#[command(name = "wepkit", version = VERSION, about = "Estimative-probability benchmark toolkit", args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a compositional reasoning dataset.
    Generate(GenerateArgs),
    /// Convert premise/hypothesis/probability rows into a dataset.
    ConvertUnli(ConvertArgs),
    /// Measure label stability under perturbed base probabilities.
    Analyze(AnalyzeArgs),
    /// Report correct-answer WEP frequencies per split.
    Stats(StatsArgs),
    /// Compute accuracy from candidate score files.
    Score(ScoreArgs),
    /// Write a chance-level score file for a dataset.
    RandomScores(RandomScoresArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Machine,
}

#[derive(Debug, Args)]
struct Common {
    /// Output style: human-readable text or JSON.
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Tab-separated scale override file.
    #[arg(long)]
    scale: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenOptions {
    /// Reasoning steps per example: 1 or 2.
    #[arg(long)]
    hops: u32,
    /// Number of examples.
    #[arg(long, default_value_t = 5000)]
    n: usize,
    /// Run seed; equal seeds give byte-identical output.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Base facts per example (default 3 for one hop, 6 for two).
    #[arg(long)]
    base_facts: Option<usize>,
    /// base-only, or with-intermediate to also state the two-hop composites.
    #[arg(long, default_value = "base-only")]
    premise_style: String,
    /// Let two-hop composites share base facts.
    #[arg(long)]
    allow_shared_atoms: bool,
    /// Never combine a composite with itself in a two-hop hypothesis.
    #[arg(long)]
    distinct_composites: bool,
    /// Fraction of examples in the validation split.
    #[arg(long, default_value_t = 0.1)]
    validation_fraction: f64,
    /// Fraction of examples in the test split.
    #[arg(long, default_value_t = 0.1)]
    test_fraction: f64,
    /// Vocabulary file (built-in vocabulary when omitted).
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    gen: GenOptions,
    /// Output directory for the split files.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    gen: GenOptions,
    /// Maximum absolute shift applied to each base probability.
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    /// Perturbation trials per example.
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Dataset directory.
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    /// Delimited input file with a header row.
    #[arg(long = "in")]
    input: PathBuf,
    /// Column holding the premise.
    #[arg(long)]
    premise_col: String,
    /// Column holding the hypothesis.
    #[arg(long)]
    hypothesis_col: String,
    /// Column holding the hypothesis probability.
    #[arg(long)]
    prob_col: String,
    /// Column naming each row's split (one output file when omitted).
    #[arg(long)]
    split_col: Option<String>,
    /// Seed for tie-breaking and distractor choice.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Field delimiter (a single ASCII character; `\t` for tab).
    #[arg(long, default_value = ",")]
    delimiter: String,
    /// Probabilities are percentages in [0, 100].
    #[arg(long)]
    percent: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// Dataset directory the scores refer to.
    #[arg(long)]
    dataset: PathBuf,
    /// One file per run; each becomes a group in the report.
    #[arg(long, num_args = 1..)]
    scores: Vec<PathBuf>,
    /// Take gold labels from the dataset records (the only label source).
    #[arg(long)]
    labels_from_dataset: bool,
    /// auto, raw, per-token or calibrated.
    #[arg(long, default_value = "auto")]
    method: String,
    /// Split evaluated for the final report.
    #[arg(long, default_value = "test")]
    eval_split: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct RandomScoresArgs {
    /// Dataset directory to score.
    #[arg(long)]
    dataset: PathBuf,
    /// Seed for the random scores.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output score file (JSONL).
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

/// Expand `--config FILE` into flags placed right after the subcommand, so
/// that explicit flags given later override the file.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut out = Vec::with_capacity(argv.len());
    let mut config: Option<PathBuf> = None;
    let mut it = argv.into_iter();
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy().into_owned();
        if s == "--config" {
            let path = it
                .next()
                .ok_or_else(|| Error::Validation("--config requires a file path".into()))?;
            config = Some(PathBuf::from(path));
        } else if let Some(p) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else {
            out.push(arg);
        }
    }
    let Some(path) = config else { return Ok(out) };
    let flags = read_config(&path)?;
    // argv[0] is the program; the subcommand is the first non-flag argument.
    let at = out
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map_or(out.len(), |i| i + 2);
    out.splice(at..at, flags);
    Ok(out)
}

fn read_config(path: &Path) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut flags = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::parse(
                format!("{}:{}", path.display(), idx + 1),
                "expected key = value",
            )
        })?;
        let (key, value) = (key.trim(), value.trim());
        let flag = format!("--{}", key.trim_start_matches("--"));
        match value {
            "true" => flags.push(flag.into()),
            "false" => {}
            v => {
                flags.push(flag.into());
                flags.push(v.into());
            }
        }
    }
    Ok(flags)
}

/// Run the tool with `argv` (including the program name) and return the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`dispatch`] with explicit output streams.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn load_scale(common: &Common) -> Result<WepScale> {
    match &common.scale {
        Some(p) => WepScale::load(p),
        None => Ok(WepScale::default()),
    }
}

fn build_generator(gen: &GenOptions, common: &Common) -> Result<Generator> {
    let hops = Hops::from_count(gen.hops)
        .map_err(|_| Error::Validation(format!("--hops must be 1 or 2, got {}", gen.hops)))?;
    let mut cfg = GenConfig::new(hops, gen.n, gen.seed);
    if let Some(k) = gen.base_facts {
        cfg.base_fact_count = k;
    }
    cfg.premise_style = gen.premise_style.parse::<PremiseStyle>()?;
    cfg.allow_shared_round2_atoms = gen.allow_shared_atoms;
    cfg.distinct_composites = gen.distinct_composites;
    cfg.splits = SplitFractions {
        train: 1.0 - gen.validation_fraction - gen.test_fraction,
        validation: gen.validation_fraction,
        test: gen.test_fraction,
    };
    let vocab = load_vocab(gen.vocab.as_deref())?;
    Generator::new(cfg, load_scale(common)?, vocab)
}

fn emit(
    out: &mut dyn Write,
    format: Format,
    machine: &impl Serialize,
    human: impl FnOnce() -> String,
) -> Result<()> {
    let text = match format {
        Format::Machine => serde_json::to_string_pretty(machine).expect("reports serialize"),
        Format::Human => human(),
    };
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

fn print_seed(err: &mut dyn Write, seed: Option<u64>) {
    let _ = match seed {
        Some(s) => writeln!(err, "seed: {s}"),
        None => writeln!(err, "seed: none"),
    };
}

fn frequency_text(report: &FrequencyReport) -> String {
    let mut s = String::new();
    for split in &report.splits {
        s.push_str(&format!("[{}] {} records\n", split.split, split.total));
        for e in &split.entries {
            s.push_str(&format!("  {:<20} {:>5.1}\n", e.wep, e.percent));
        }
    }
    s.trim_end().to_owned()
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::Generate(a) => {
            print_seed(err, Some(a.gen.seed));
            let g = build_generator(&a.gen, &a.common)?;
            let bundle = g.generate_dataset()?;
            bundle.write_dir(&a.out)?;
            let report = dataset_stats(&bundle);
            let sizes: BTreeMap<&str, usize> = bundle
                .splits
                .iter()
                .map(|s| (s.name.as_str(), s.records.len()))
                .collect();
            let machine = json!({
                "config": g.config(),
                "out": a.out,
                "splits": sizes,
                "frequencies": report,
            });
            emit(out, a.common.format, &machine, || {
                let sizes: Vec<String> = bundle
                    .splits
                    .iter()
                    .map(|s| format!("{}={}", s.name, s.records.len()))
                    .collect();
                format!(
                    "wrote {} records to {} ({})",
                    bundle.len(),
                    a.out.display(),
                    sizes.join(", ")
                )
            })
        }
        Command::Analyze(a) => {
            print_seed(err, Some(a.gen.seed));
            let g = build_generator(&a.gen, &a.common)?;
            let report = g.perturbation_analysis(a.delta, a.trials)?;
            emit(out, a.common.format, &report, || {
                format!(
                    "{} examples, delta {}, {} trial(s): {:.1}% stable (|dp| < {})",
                    report.n_examples,
                    report.delta,
                    report.trials_per_example,
                    100.0 * report.fraction_stable,
                    report.threshold
                )
            })
        }
        Command::Stats(a) => {
            print_seed(err, None);
            let bundle = DatasetBundle::read_dir(&a.input)?;
            let report = dataset_stats(&bundle);
            emit(out, a.common.format, &report, || frequency_text(&report))
        }
        Command::ConvertUnli(a) => {
            print_seed(err, Some(a.seed));
            let delimiter = match a.delimiter.as_str() {
                "\\t" | "\t" | "tab" => b'\t',
                d if d.len() == 1 && d.is_ascii() => d.as_bytes()[0],
                d => {
                    return Err(Error::Validation(format!(
                        "--delimiter must be one ASCII character, got {d:?}"
                    )))
                }
            };
            let columns = ColumnMap {
                premise: a.premise_col,
                hypothesis: a.hypothesis_col,
                probability: a.prob_col,
                split: a.split_col,
            };
            let mut opts = ConvertOptions::new(columns, a.seed);
            opts.delimiter = delimiter;
            opts.percent = a.percent;
            let bundle = convert_file(&load_scale(&a.common)?, &a.input, &opts)?;
            bundle.write_dir(&a.out)?;
            let sizes: BTreeMap<&str, usize> = bundle
                .splits
                .iter()
                .map(|s| (s.name.as_str(), s.records.len()))
                .collect();
            emit(
                out,
                a.common.format,
                &json!({ "out": a.out, "splits": sizes }),
                || format!("wrote {} records to {}", bundle.len(), a.out.display()),
            )
        }
        Command::Score(a) => {
            print_seed(err, None);
            score(a, out)
        }
        Command::RandomScores(a) => {
            print_seed(err, Some(a.seed));
            let bundle = DatasetBundle::read_dir(&a.dataset)?;
            let scores = random_scores(&bundle, a.seed);
            write_scores(&a.out, &scores)?;
            emit(
                out,
                a.common.format,
                &json!({ "out": a.out, "records": scores.len() }),
                || {
                    format!(
                        "wrote {} score records to {}",
                        scores.len(),
                        a.out.display()
                    )
                },
            )
        }
    }
}

fn score(a: ScoreArgs, out: &mut dyn Write) -> Result<()> {
    let bundle = DatasetBundle::read_dir(&a.dataset)?;
    if a.scores.is_empty() {
        return Err(Error::Validation(
            "--scores requires at least one file".into(),
        ));
    }
    let runs: Vec<(String, Vec<ScoreRecord>)> = a
        .scores
        .iter()
        .map(|p| Ok((p.display().to_string(), read_scores(p)?)))
        .collect::<Result<_>>()?;
    let method = match a.method.as_str() {
        "auto" => None,
        m => Some(m.parse::<Method>()?),
    };
    let report = score_runs(&bundle, &runs, method, &a.eval_split)?;
    emit(out, a.common.format, &report, || report.to_string())
}

/// Tool and dataset-format version, as printed by `--version`.
pub fn version() -> &'static str {
    VERSION
}

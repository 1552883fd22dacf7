//! `letz-forge`: ingest a dictionary, build and split LETZ-style datasets,
//! validate them, and run zero-shot evaluation.
//!
//! Exit codes: 0 success, 1 data/validation error, 2 usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use letz_core::config::PipelineConfig;
use letz_core::dataset::{
    dataset_stats, read_dataset, read_metadata, split_dataset, write_dataset, write_histogram_csv, write_splits,
    DatasetMetadata,
};
use letz_core::eval::{
    evaluate, score_matrix, EntailmentScorer, EvalDataset, HypothesisTemplate, LabelMap, LexicalScorer, OracleScorer,
    RemoteScorer,
};
use letz_core::generate::{build_dataset, GenerationMode};
use letz_core::lexicon::{
    build_noun_vocabulary, filter_nouns, parse_dictionary, write_dictionary, DictionaryEntry, PosMap,
};
use letz_core::validate::validate_samples;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "letz-forge",
    version,
    about = "Build and evaluate entailment-based topic classification datasets"
)]
pub struct Cli {
    /// Pipeline config file (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for generation and splitting; overrides the config file
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; outputs do not depend on this
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, default_value = "info")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a lexicon into the canonical line-delimited format
    Ingest(IngestArgs),
    /// Generate positive and negative samples from a lexicon
    Build(BuildArgs),
    /// Split a dataset into train/dev/test
    Split(SplitArgs),
    /// Print dataset statistics
    Stats(StatsArgs),
    /// Re-check construction invariants on a dataset
    Validate(ValidateArgs),
    /// Zero-shot evaluation through the entailment approach
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    /// JSON object mapping source POS tags to NOUN|VERB|ADJ|ADV|OTHER
    #[arg(long)]
    pos_map: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Syn,
    Wot,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    output: PathBuf,
}

fn parse_ratios(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    let arr: [f64; 3] = parts
        .try_into()
        .map_err(|_| "expected three comma-separated ratios".to_string())?;
    let sum: f64 = arr.iter().sum();
    if arr.iter().any(|r| !(r.is_finite() && *r > 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(format!("ratios must be positive and sum to 1, got {s}"));
    }
    Ok(arr)
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_ratios)]
    ratios: Option<[f64; 3]>,
    #[arg(long)]
    group_by_headword: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    histogram_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Lexicon to resolve sample provenance against
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScorerArg {
    Oracle,
    Lexical,
    Remote,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Line-delimited {text, gold_class} records
    #[arg(long)]
    dataset: PathBuf,
    /// Label-map file, or one of the bundled maps: `luxnews`, `sib200`
    #[arg(long)]
    labels: String,
    #[arg(long)]
    template: Option<String>,
    #[arg(long, value_enum, default_value = "lexical")]
    scorer: ScorerArg,
    #[arg(long)]
    report: PathBuf,
}

/// Parses `args` (including the program name) and runs the selected command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .try_init();

    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_DATA
        }
    }
}

fn effective_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.generation.seed = seed;
        cfg.split.seed = seed;
    }
    match &cli.command {
        Command::Build(args) => {
            if let Some(mode) = args.mode {
                cfg.generation.mode = match mode {
                    ModeArg::Syn => GenerationMode::Synonym,
                    ModeArg::Wot => GenerationMode::Translation,
                };
            }
        }
        Command::Split(args) => {
            if let Some(r) = args.ratios {
                cfg.split.ratios = r;
            }
            if args.group_by_headword {
                cfg.split.group_by_headword = true;
            }
        }
        Command::Evaluate(args) => {
            if let Some(t) = &args.template {
                cfg.evaluation.template = t.clone();
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<i32> {
    let cfg = effective_config(cli)?;
    let hash = cfg.hash();
    info!(
        "config hash {hash}, generation seed {}, split seed {}",
        cfg.generation.seed, cfg.split.seed
    );

    let mut threads = cli.jobs.unwrap_or(0);
    if let Command::Evaluate(EvaluateArgs {
        scorer: ScorerArg::Remote,
        ..
    }) = &cli.command
    {
        let cap = cfg.scorer.max_in_flight;
        threads = if threads == 0 { cap } else { threads.min(cap) };
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building worker pool")?;

    pool.install(|| match &cli.command {
        Command::Ingest(a) => ingest(a, &cfg),
        Command::Build(a) => build(a, &cfg, &hash),
        Command::Split(a) => split(a, &cfg, &hash),
        Command::Stats(a) => stats(a),
        Command::Validate(a) => validate(a, &cfg),
        Command::Evaluate(a) => evaluate_cmd(a, &cfg, &hash),
    })
}

fn load_lexicon(path: &Path, pos_map: &PosMap, cfg: &PipelineConfig) -> Result<Vec<DictionaryEntry>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_dictionary(BufReader::new(file), pos_map, cfg.ingest_options())
        .with_context(|| format!("parsing {}", path.display()))
}

fn ingest(args: &IngestArgs, cfg: &PipelineConfig) -> Result<i32> {
    let pos_map = match &args.pos_map {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            PosMap::from_json(&text)?
        }
        None => PosMap::default(),
    };
    let entries = load_lexicon(&args.input, &pos_map, cfg)?;
    let out = File::create(&args.output).with_context(|| format!("creating {}", args.output.display()))?;
    write_dictionary(BufWriter::new(out), &entries)?;
    let nouns = entries
        .iter()
        .filter(|e| e.pos == letz_core::lexicon::Pos::Noun)
        .count();
    info!(
        "ingested {} entries ({nouns} nouns) into {}",
        entries.len(),
        args.output.display()
    );
    Ok(EXIT_OK)
}

fn build(args: &BuildArgs, cfg: &PipelineConfig, hash: &str) -> Result<i32> {
    let entries = load_lexicon(&args.lexicon, &PosMap::default(), cfg)?;
    let nouns = filter_nouns(&entries);
    let vocab = build_noun_vocabulary(&nouns);
    let gen = cfg.generation_config();
    let out = build_dataset(&nouns, &vocab, &gen)?;

    let mut meta = DatasetMetadata::for_samples(&out.samples);
    meta.seed = Some(gen.seed);
    meta.config_hash = Some(hash.to_owned());
    meta.config_snapshot = Some(serde_json::to_string(cfg)?);
    meta.duplicates_removed = Some(out.duplicates_removed);
    if gen.dedup_positives {
        meta.notes
            .push("identical (text, label) positives collapsed to one".into());
    }
    write_dataset(&args.output, &out.samples, &meta)?;
    info!(
        "{} nouns, vocabulary {}, {} positives, {} samples -> {}",
        nouns.len(),
        vocab.len(),
        out.positives,
        out.samples.len(),
        args.output.display()
    );
    Ok(EXIT_OK)
}

fn split(args: &SplitArgs, cfg: &PipelineConfig, hash: &str) -> Result<i32> {
    let samples = read_dataset(&args.input)?;
    let s = &cfg.split;
    let splits = split_dataset(&samples, s.ratios, s.seed, s.group_by_headword)?;
    let mut base = DatasetMetadata {
        config_hash: Some(hash.to_owned()),
        ..DatasetMetadata::default()
    };
    if let Some(source) = read_metadata(&args.input).and_then(|m| m.config_hash) {
        base.notes.push(format!("source dataset config hash {source}"));
    }
    write_splits(&args.out_dir, &splits, &base)?;
    let [tr, dv, te] = splits.sizes();
    info!("split {} samples into {tr}/{dv}/{te}", samples.len());
    println!("train\t{tr}\ndev\t{dv}\ntest\t{te}");
    Ok(EXIT_OK)
}

fn stats(args: &StatsArgs) -> Result<i32> {
    let samples = read_dataset(&args.input)?;
    let st = dataset_stats(&samples);
    println!("{}", serde_json::to_string_pretty(&st)?);
    if let Some(path) = &args.histogram_csv {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_histogram_csv(BufWriter::new(f), &st)?;
    }
    Ok(EXIT_OK)
}

fn validate(args: &ValidateArgs, cfg: &PipelineConfig) -> Result<i32> {
    let samples = read_dataset(&args.input)?;
    let lexicon = match &args.lexicon {
        Some(p) => Some(load_lexicon(p, &PosMap::default(), cfg)?),
        None => None,
    };
    let report = validate_samples(&samples, &cfg.generation_config(), lexicon.as_deref());
    let grouped = read_metadata(&args.input).and_then(|m| m.group_by_headword);
    let policy = match grouped {
        Some(true) => "grouped by headword",
        _ => "unknown policy",
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(
        out,
        "checked {} samples ({} positive, {} negative)",
        report.checked, report.positives, report.negatives
    )?;
    writeln!(out, "headword disjointness across splits: {policy}")?;
    for v in &report.violations {
        writeln!(out, "violation: {v}")?;
    }
    if report.is_ok() {
        writeln!(out, "ok")?;
        Ok(EXIT_OK)
    } else {
        writeln!(out, "{} violation(s)", report.violations.len())?;
        Ok(EXIT_DATA)
    }
}

fn load_labels(spec: &str) -> Result<LabelMap> {
    Ok(match spec {
        "luxnews" => LabelMap::luxnews(),
        "sib200" => LabelMap::sib200(),
        path => LabelMap::load(Path::new(path))?,
    })
}

fn evaluate_cmd(args: &EvaluateArgs, cfg: &PipelineConfig, hash: &str) -> Result<i32> {
    let labels = load_labels(&args.labels)?;
    let dataset = EvalDataset::load(&args.dataset, labels)?;
    let template = HypothesisTemplate::new(cfg.evaluation.template.clone())?;
    let scorer: Box<dyn EntailmentScorer> = match args.scorer {
        ScorerArg::Oracle => Box::new(OracleScorer::from_dataset(&dataset)),
        ScorerArg::Lexical => Box::new(LexicalScorer::new(cfg.similarity.clone())),
        ScorerArg::Remote => Box::new(RemoteScorer::new(cfg.scorer.clone())?),
    };
    if dataset.is_empty() {
        bail!("{} has no examples", args.dataset.display());
    }
    let matrix = score_matrix(&dataset, &template, scorer.as_ref())?;
    let report = evaluate(&dataset, &matrix)?;

    let doc = serde_json::json!({
        "report": report,
        "scorer": scorer.name(),
        "template": template.as_str(),
        "label_map": dataset.label_map.name,
        "config_hash": hash,
    });
    std::fs::write(&args.report, serde_json::to_string_pretty(&doc)? + "\n")
        .with_context(|| format!("writing {}", args.report.display()))?;
    println!(
        "{}: accuracy {:.4}, macro-F1 {:.4} over {} examples",
        dataset.name, report.accuracy, report.macro_f1, report.total
    );
    Ok(EXIT_OK)
}

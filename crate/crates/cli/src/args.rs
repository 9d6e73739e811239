use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "igt", version, about = "Interlinear glossed text corpus toolkit")]
#[command(args_override_self = true)]
pub struct Cli {
    /// TOML file with default option values; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a canonical corpus from source files.
    Ingest(IngestArgs),
    /// Per-language and per-family record counts.
    Stats(StatsArgs),
    /// Grammatical gloss inventory and top-k coverage.
    GlossDist(GlossDistArgs),
    /// Rewrite gloss labels with a normalization map.
    Normalize(NormalizeArgs),
    /// Train the top-choice baseline lexicon.
    Train(TrainArgs),
    /// Gloss a corpus with a trained lexicon.
    Predict(PredictArgs),
    /// Score predictions against a gold corpus.
    Eval(EvalArgs),
    /// In- and out-of-vocabulary statistics.
    Oov(OovArgs),
    /// Write model prompts with their target gloss lines.
    ExportPrompts(ExportArgs),
    /// Gloss exported prompts with a hosted model.
    RemotePredict(RemoteArgs),
    /// Grambank coverage of a corpus.
    Typology(TypologyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Sigmorphon,
    Canonical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    Yes,
    No,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    WordCharacters,
    Interior,
}

/// Which records of a corpus a command works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    /// Segmented records that were not derived by stripping.
    Segmented,
    /// Records not marked segmented, including derived ones.
    Unsegmented,
    #[default]
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelArg {
    Morpheme,
    Word,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LangDisplayArg {
    Name,
    Code,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ImputerArg {
    Mode,
    Knn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinarizationArg {
    Pairs,
    OneHot,
}

#[derive(Debug, Args, Serialize)]
pub struct Output {
    /// Output file; a manifest is written next to it.
    #[arg(short, long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    /// Source files, all sharing the metadata flags below.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Format,
    /// Source name and id prefix; defaults to each file's stem.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub glottocode: Option<String>,
    #[arg(long)]
    pub language_name: Option<String>,
    /// Translation language code, e.g. eng.
    #[arg(long)]
    pub metalang: Option<String>,
    /// Segmentation flag declared by the source.
    #[arg(long, value_enum)]
    pub segmented: Option<Flag>,
    /// Do not add unsegmented copies of segmented records.
    #[arg(long)]
    pub no_duplicate: bool,
    /// Leave undeclared segmentation as unknown instead of detecting it.
    #[arg(long)]
    pub no_detect: bool,
    #[arg(long, value_enum, default_value = "word-characters")]
    pub boundary_rule: Boundary,
    #[arg(long)]
    pub no_nfc: bool,
    /// Glottocode/name/family TSV used to fill language names.
    #[arg(long, value_name = "FILE")]
    pub languages: Option<PathBuf>,
    /// Directory of `<lang>.txt` seed texts; enables translation checks.
    #[arg(long, value_name = "DIR")]
    pub langid_seeds: Option<PathBuf>,
    /// Exit with status 2 when more than this fraction of records is skipped.
    #[arg(long, default_value_t = 0.05)]
    pub skip_threshold: f64,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    pub corpus: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub languages: Option<PathBuf>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct GlossDistArgs {
    pub corpus: PathBuf,
    #[arg(short, default_value_t = 200)]
    pub k: usize,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct NormalizeArgs {
    pub corpus: PathBuf,
    /// source<TAB>target map; the bundled starter map when omitted.
    #[arg(long, value_name = "FILE")]
    pub map: Option<PathBuf>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value = "morpheme")]
    pub level: LevelArg,
    #[arg(long, value_enum, default_value = "all")]
    pub subset: Subset,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    pub corpus: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub lexicon: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub subset: Subset,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Gold corpus.
    pub gold: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub predictions: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub subset: Subset,
    /// Score zero for lines whose unit count differs from gold.
    #[arg(long)]
    pub strict_length: bool,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct OovArgs {
    #[arg(long, value_name = "FILE")]
    pub train: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub test: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub predictions: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub subset: Subset,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct ExportArgs {
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub subset: Subset,
    /// Show languages by name (falling back to code) or by code.
    #[arg(long, value_enum, default_value = "name")]
    pub lang_display: LangDisplayArg,
    /// Use this language string in every prompt.
    #[arg(long)]
    pub lang: Option<String>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct RemoteArgs {
    /// Prompt file written by export-prompts.
    pub prompts: PathBuf,
    #[arg(long)]
    pub endpoint: String,
    /// Seconds per request.
    #[arg(long, default_value_t = 30.0)]
    pub timeout: f64,
    #[arg(long, default_value_t = 3)]
    pub retries: usize,
    #[arg(long, default_value_t = 1024)]
    pub max_new_tokens: usize,
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
    /// First retry delay in milliseconds.
    #[arg(long, default_value_t = 500)]
    pub backoff_ms: u64,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct TypologyArgs {
    /// Grambank value table.
    #[arg(long, value_name = "FILE")]
    pub values: PathBuf,
    /// Corpus providing per-language instance weights.
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Multistate feature ids.
    #[arg(long, value_name = "FILE")]
    pub multistate: Option<PathBuf>,
    /// Dialect-to-language table (Grambank languages file).
    #[arg(long, value_name = "FILE")]
    pub dialects: Option<PathBuf>,
    #[arg(long, default_value_t = 0.36)]
    pub lang_missing_max: f64,
    #[arg(long, default_value_t = 0.36)]
    pub feat_missing_max: f64,
    /// Minimum share of corpus weight observing a feature.
    #[arg(long, default_value_t = 0.64)]
    pub coverage: f64,
    #[arg(long, value_enum, default_value = "pairs")]
    pub binarization: BinarizationArg,
    #[arg(long, value_enum, default_value = "knn")]
    pub imputer: ImputerArg,
    /// Neighbours for the knn imputer.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Number of underrepresented features to report.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    #[command(flatten)]
    pub out: Output,
}

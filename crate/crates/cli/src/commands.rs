use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use igt_core::eval::{self, EvalOptions, LengthPolicy, Prediction};
use igt_core::glosser::{self, GlossLexicon, LangDisplay, Level, PromptOptions, PromptRecord};
use igt_core::igt::{BoundaryRule, IgtExample, Segmented};
use igt_core::ingest::{self, BuildOptions, Corpus, LanguageTable, Source, SourceFormat, SourceMeta};
use igt_core::langid::{profiles_from_seed, LanguageIdentifier, RankClassifier};
use igt_core::normalize::{self, NormalizationMap};
use igt_core::remote::{RemoteClient, RemoteConfig};
use igt_core::typology::{self, Binarization, Imputer, PrepareOptions};
use log::{info, warn};
use serde::Serialize;

use crate::args::*;
use crate::manifest;

pub const EXIT_OPERATIONAL: u8 = 1;
pub const EXIT_PARTIAL: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

/// Why a command stopped, with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn operational(message: impl ToString) -> Self {
        Failure { code: EXIT_OPERATIONAL, message: message.to_string() }
    }

    pub fn usage(message: impl ToString) -> Self {
        Failure { code: EXIT_USAGE, message: message.to_string() }
    }
}

type Outcome = Result<Option<String>, Failure>;

/// Runs a command. `Ok(Some(reason))` means the outputs were written but the
/// run was only partly successful.
pub fn run(command: &Command) -> Outcome {
    match command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Stats(a) => cmd_stats(a),
        Command::GlossDist(a) => cmd_gloss_dist(a),
        Command::Normalize(a) => cmd_normalize(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Oov(a) => cmd_oov(a),
        Command::ExportPrompts(a) => cmd_export_prompts(a),
        Command::RemotePredict(a) => cmd_remote_predict(a),
        Command::Typology(a) => cmd_typology(a),
    }
}

fn check_inputs(paths: &[&Path], output: &Path) -> Result<(), Failure> {
    for path in paths {
        if !path.is_file() {
            return Err(Failure::operational(format!("{}: no such file", path.display())));
        }
    }
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        if !parent.is_dir() {
            return Err(Failure::operational(format!("{}: output directory does not exist", parent.display())));
        }
    }
    Ok(())
}

fn write_output<C: Serialize>(name: &str, config: &C, inputs: &[&Path], output: &Path, content: &str) -> Result<(), Failure> {
    std::fs::write(output, content).map_err(|e| Failure::operational(format!("{}: {e}", output.display())))?;
    let manifest = manifest::write(name, config, inputs, &[output]).map_err(|e| Failure::operational(format!("manifest: {e}")))?;
    info!("wrote {} and {}", output.display(), manifest.display());
    Ok(())
}

fn load(path: &Path) -> Result<Corpus, Failure> {
    ingest::read_canonical(path).map_err(Failure::operational)
}

fn select(corpus: &Corpus, subset: Subset) -> Vec<IgtExample> {
    corpus
        .examples
        .iter()
        .filter(|e| match subset {
            Subset::Segmented => e.segmented == Segmented::Yes && !e.derived_unsegmented,
            Subset::Unsegmented => e.segmented != Segmented::Yes,
            Subset::All => true,
        })
        .cloned()
        .collect()
}

fn canonical_text(examples: &[IgtExample]) -> String {
    examples.iter().map(|e| ingest::to_canonical_line(e) + "\n").collect()
}

fn json_lines<T: Serialize>(items: &[T]) -> String {
    items.iter().map(|x| serde_json::to_string(x).expect("record serializes") + "\n").collect()
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

fn read_seeds(dir: &Path) -> Result<BTreeMap<String, String>, Failure> {
    let mut seeds = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Failure::operational(format!("{}: {e}", dir.display())))?;
    for entry in entries.flatten() {
        let path = entry.path();
        if path.extension().is_some_and(|x| x == "txt") {
            let lang = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let text = std::fs::read_to_string(&path).map_err(|e| Failure::operational(format!("{}: {e}", path.display())))?;
            seeds.insert(lang, text);
        }
    }
    if seeds.is_empty() {
        return Err(Failure::operational(format!("{}: no <lang>.txt seed files", dir.display())));
    }
    Ok(seeds)
}

fn cmd_ingest(a: &IngestArgs) -> Outcome {
    let mut inputs: Vec<&Path> = a.inputs.iter().map(PathBuf::as_path).collect();
    inputs.extend(a.languages.as_deref());
    check_inputs(&inputs, &a.out.output)?;
    if !(0.0..=1.0).contains(&a.skip_threshold) {
        return Err(Failure::usage("--skip-threshold must be within [0, 1]"));
    }
    let format = match a.format {
        Format::Sigmorphon => SourceFormat::Sigmorphon,
        Format::Canonical => SourceFormat::Canonical,
    };
    let segmented = a.segmented.map(|f| match f {
        Flag::Yes => Segmented::Yes,
        Flag::No => Segmented::No,
        Flag::Unknown => Segmented::Unknown,
    });
    let sources: Vec<Source> = a
        .inputs
        .iter()
        .map(|path| {
            let name = a.name.clone().unwrap_or_else(|| path.file_stem().unwrap_or_default().to_string_lossy().into_owned());
            let meta = SourceMeta {
                name,
                glottocode: a.glottocode.clone(),
                language_name: a.language_name.clone(),
                metalang: a.metalang.clone(),
                segmented,
            };
            Source::file(path, format, meta)
        })
        .collect();
    let options = BuildOptions {
        duplicate_unsegmented: !a.no_duplicate,
        detect_segmentation: !a.no_detect,
        boundary_rule: match a.boundary_rule {
            Boundary::WordCharacters => BoundaryRule::WordCharacters,
            Boundary::Interior => BoundaryRule::Interior,
        },
        nfc: !a.no_nfc,
    };
    let languages = a.languages.as_deref().map(LanguageTable::read).transpose().map_err(Failure::operational)?;
    let classifier = match &a.langid_seeds {
        Some(dir) => Some(RankClassifier::new(profiles_from_seed(&read_seeds(dir)?)).map_err(Failure::operational)?),
        None => None,
    };
    let identifier = classifier.as_ref().map(|c| c as &dyn LanguageIdentifier);
    let built = ingest::build_corpus(&sources, &options, identifier, languages.as_ref()).map_err(Failure::operational)?;

    println!("source\tread\tskipped\tderived\tkept");
    for s in &built.report.sources {
        println!("{}\t{}\t{}\t{}\t{}", s.source, s.read, s.skipped, s.derived, s.kept);
    }
    for skip in &built.report.skipped {
        eprintln!("skipped {}:{}: {}", skip.source, skip.id.as_deref().unwrap_or("?"), skip.reason);
    }
    for w in &built.report.warnings {
        warn!("{}:{}: {}", w.source, w.id.as_deref().unwrap_or("?"), w.reason);
    }
    println!(
        "{} records written, {} skipped, {} re-keyed, {} translations blanked",
        built.corpus.len(),
        built.report.skipped.len(),
        built.report.rekeyed.len(),
        built.report.translations_blanked
    );
    write_output("ingest", a, &inputs, &a.out.output, &canonical_text(&built.corpus.examples))?;
    let fraction = built.report.skip_fraction();
    Ok((fraction > a.skip_threshold).then(|| {
        format!("{:.1}% of records skipped, above the {:.1}% threshold", 100.0 * fraction, 100.0 * a.skip_threshold)
    }))
}

fn cmd_stats(a: &StatsArgs) -> Outcome {
    let mut inputs = vec![a.corpus.as_path()];
    inputs.extend(a.languages.as_deref());
    check_inputs(&inputs, &a.out.output)?;
    let corpus = load(&a.corpus)?;
    let languages = a.languages.as_deref().map(LanguageTable::read).transpose().map_err(Failure::operational)?;
    let stats = ingest::corpus_stats(&corpus, languages.as_ref());
    println!("glottocode\tname\tfamily\tcount");
    for l in &stats.languages {
        println!("{}\t{}\t{}\t{}", l.glottocode, l.name.as_deref().unwrap_or("-"), l.family.as_deref().unwrap_or("-"), l.count);
    }
    println!(
        "{} records, {} languages, quartiles {:.1}/{:.1}/{:.1}",
        stats.total,
        stats.languages.len(),
        stats.quantiles[0],
        stats.quantiles[1],
        stats.quantiles[2]
    );
    write_output("stats", a, &inputs, &a.out.output, &pretty(&stats))?;
    Ok(None)
}

fn cmd_gloss_dist(a: &GlossDistArgs) -> Outcome {
    check_inputs(&[&a.corpus], &a.out.output)?;
    let corpus = load(&a.corpus)?;
    let extraction = normalize::extract_inventory(&corpus.examples);
    for (id, e) in &extraction.skipped {
        warn!("{id}: {e}");
    }
    let report = normalize::coverage_report(&extraction.inventory, a.k).map_err(Failure::operational)?;
    let mut out = String::new();
    writeln!(out, "# unique\t{}", report.unique_count).unwrap();
    writeln!(out, "# total\t{}", report.total).unwrap();
    writeln!(out, "# top_{}_coverage\t{:.4}", report.k, report.topk_fraction).unwrap();
    out.push_str("rank\tlabel\tcount\tcumulative\n");
    let mut cumulative = 0;
    for (rank, (label, count)) in report.ranked.iter().enumerate() {
        cumulative += count;
        writeln!(out, "{}\t{label}\t{count}\t{:.4}", rank + 1, cumulative as f64 / report.total as f64).unwrap();
    }
    println!(
        "{} unique grammatical glosses; the top {} cover {:.1}% of {}",
        report.unique_count,
        report.k,
        100.0 * report.topk_fraction,
        report.total
    );
    write_output("gloss-dist", a, &[&a.corpus], &a.out.output, &out)?;
    Ok(None)
}

fn cmd_normalize(a: &NormalizeArgs) -> Outcome {
    let mut inputs = vec![a.corpus.as_path()];
    inputs.extend(a.map.as_deref());
    check_inputs(&inputs, &a.out.output)?;
    let corpus = load(&a.corpus)?;
    let map = match &a.map {
        Some(path) => NormalizationMap::read(path).map_err(Failure::operational)?,
        None => NormalizationMap::starter(),
    };
    let normalized = map.apply_to_corpus(&corpus);
    let changed = corpus.examples.iter().zip(&normalized.examples).filter(|(a, b)| a.gloss_text != b.gloss_text).count();
    println!("{changed} of {} records rewritten with {} map entries", corpus.len(), map.len());
    write_output("normalize", a, &inputs, &a.out.output, &canonical_text(&normalized.examples))?;
    Ok(None)
}

fn level(l: LevelArg) -> Level {
    match l {
        LevelArg::Morpheme => Level::Morpheme,
        LevelArg::Word => Level::Word,
    }
}

fn cmd_train(a: &TrainArgs) -> Outcome {
    check_inputs(&[&a.corpus], &a.out.output)?;
    let examples = select(&load(&a.corpus)?, a.subset);
    let trained = glosser::train_top_choice(&examples, level(a.level)).map_err(Failure::operational)?;
    let s = &trained.stats;
    println!(
        "{} forms from {} examples ({} pairs; skipped {} unsegmented, {} unparseable, {} words)",
        trained.lexicon.counts.len(),
        s.examples_used,
        s.pairs,
        s.skipped_unsegmented,
        s.skipped_unparseable,
        s.skipped_words
    );
    write_output("train", a, &[&a.corpus], &a.out.output, &trained.lexicon.to_tsv())?;
    Ok(None)
}

fn cmd_predict(a: &PredictArgs) -> Outcome {
    check_inputs(&[&a.corpus, &a.lexicon], &a.out.output)?;
    let lexicon_text = std::fs::read_to_string(&a.lexicon).map_err(|e| Failure::operational(format!("{}: {e}", a.lexicon.display())))?;
    let lexicon = GlossLexicon::from_tsv(&lexicon_text).map_err(Failure::operational)?;
    let examples = select(&load(&a.corpus)?, a.subset);
    let mut predictions = Vec::with_capacity(examples.len());
    for e in &examples {
        let prediction = lexicon.predict(e).map_err(|err| Failure::operational(format!("{}: {err}", e.id)))?;
        predictions.push(Prediction { example_id: e.id.clone(), prediction });
    }
    println!("{} predictions", predictions.len());
    write_output("predict", a, &[&a.corpus, &a.lexicon], &a.out.output, &eval::to_prediction_lines(&predictions))?;
    Ok(None)
}

fn cmd_eval(a: &EvalArgs) -> Outcome {
    check_inputs(&[&a.gold, &a.predictions], &a.out.output)?;
    if a.beta.is_nan() || a.beta <= 0.0 {
        return Err(Failure::usage("--beta must be positive"));
    }
    let gold = select(&load(&a.gold)?, a.subset);
    let predictions = eval::read_predictions(&a.predictions).map_err(Failure::operational)?;
    let options = EvalOptions {
        chrf: eval::ChrfParams { beta: a.beta, ..Default::default() },
        length_policy: if a.strict_length { LengthPolicy::Strict } else { LengthPolicy::Gold },
    };
    let evaluation = eval::evaluate(&gold, &predictions, &options).map_err(Failure::operational)?;
    print!("{}", eval::format_report(&evaluation));
    if evaluation.overall.missing_predictions > 0 {
        warn!("{} gold examples had no prediction and were scored as empty", evaluation.overall.missing_predictions);
    }
    write_output("eval", a, &[&a.gold, &a.predictions], &a.out.output, &pretty(&evaluation))?;
    Ok(None)
}

fn cmd_oov(a: &OovArgs) -> Outcome {
    check_inputs(&[&a.train, &a.test, &a.predictions], &a.out.output)?;
    let train = select(&load(&a.train)?, a.subset);
    let test = select(&load(&a.test)?, a.subset);
    let predictions = eval::read_predictions(&a.predictions).map_err(Failure::operational)?;
    let report = eval::oov_analysis(&train, &test, &predictions);
    let show = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.1}"));
    println!("%OOV words\tIV acc\tOOV acc\t%OOV morphemes\tOOV token recall");
    println!(
        "{:.1}\t{}\t{}\t{}\t{}",
        report.pct_oov_words,
        show(report.iv_word_accuracy),
        show(report.oov_word_accuracy),
        show(report.pct_oov_morphemes),
        show(report.oov_token_recall)
    );
    write_output("oov", a, &[&a.train, &a.test, &a.predictions], &a.out.output, &pretty(&report))?;
    Ok(None)
}

fn cmd_export_prompts(a: &ExportArgs) -> Outcome {
    check_inputs(&[&a.corpus], &a.out.output)?;
    let examples = select(&load(&a.corpus)?, a.subset);
    let options = PromptOptions {
        lang_display: match a.lang_display {
            LangDisplayArg::Name => LangDisplay::Name,
            LangDisplayArg::Code => LangDisplay::Code,
        },
        lang_override: a.lang.clone(),
    };
    let prompts = glosser::export_prompts(&examples, &options);
    println!("{} prompts", prompts.len());
    write_output("export-prompts", a, &[&a.corpus], &a.out.output, &json_lines(&prompts))?;
    Ok(None)
}

/// Environment variable holding the bearer token for remote endpoints.
pub const AUTH_TOKEN_VAR: &str = "IGT_AUTH_TOKEN";

fn cmd_remote_predict(a: &RemoteArgs) -> Outcome {
    check_inputs(&[&a.prompts], &a.out.output)?;
    if a.timeout.is_nan() || a.timeout <= 0.0 || a.concurrency == 0 {
        return Err(Failure::usage("--timeout and --concurrency must be positive"));
    }
    let text = std::fs::read_to_string(&a.prompts).map_err(|e| Failure::operational(format!("{}: {e}", a.prompts.display())))?;
    let mut prompts: Vec<PromptRecord> = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let record = serde_json::from_str(line)
            .map_err(|e| Failure::operational(format!("{} line {}: {e}", a.prompts.display(), i + 1)))?;
        prompts.push(record);
    }
    let config = RemoteConfig {
        endpoint: a.endpoint.clone(),
        timeout: Duration::from_secs_f64(a.timeout),
        retries: a.retries,
        max_new_tokens: a.max_new_tokens,
        auth_token: std::env::var(AUTH_TOKEN_VAR).ok().filter(|t| !t.is_empty()),
        backoff: Duration::from_millis(a.backoff_ms),
        concurrency: a.concurrency,
    };
    let client = RemoteClient::new(config).map_err(Failure::operational)?;
    let mut predictions = Vec::new();
    let mut failed = Vec::new();
    for (id, result) in client.gloss_all(&prompts) {
        match result {
            Ok(prediction) => predictions.push(Prediction { example_id: id, prediction }),
            Err(e) => {
                eprintln!("{id}: {e}");
                failed.push(id);
            }
        }
    }
    println!("{} predictions, {} failed", predictions.len(), failed.len());
    if !prompts.is_empty() && predictions.is_empty() {
        return Err(Failure::operational("every request failed"));
    }
    write_output("remote-predict", a, &[&a.prompts], &a.out.output, &eval::to_prediction_lines(&predictions))?;
    Ok((!failed.is_empty()).then(|| format!("{} of {} requests failed", failed.len(), prompts.len())))
}

fn cmd_typology(a: &TypologyArgs) -> Outcome {
    let mut inputs = vec![a.values.as_path(), a.corpus.as_path()];
    inputs.extend(a.multistate.as_deref());
    inputs.extend(a.dialects.as_deref());
    check_inputs(&inputs, &a.out.output)?;
    for (name, v) in [("--lang-missing-max", a.lang_missing_max), ("--feat-missing-max", a.feat_missing_max), ("--coverage", a.coverage)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Failure::usage(format!("{name} must be within [0, 1]")));
        }
    }
    let weights = typology::corpus_weights(&load(&a.corpus)?);
    let raw = typology::read_values(&a.values).map_err(Failure::operational)?;
    let options = PrepareOptions {
        lang_missing_max: a.lang_missing_max,
        feat_missing_max: a.feat_missing_max,
        binarization: match a.binarization {
            BinarizationArg::Pairs => Binarization::GrambankPairs,
            BinarizationArg::OneHot => Binarization::OneHot,
        },
        multistate: a.multistate.as_deref().map(typology::read_multistate).transpose().map_err(Failure::operational)?.unwrap_or_default(),
        dialects: a.dialects.as_deref().map(typology::read_dialects).transpose().map_err(Failure::operational)?.unwrap_or_default(),
    };
    let (matrix, prepared) = typology::prepare_matrix(&raw, &options).map_err(Failure::operational)?;
    let matrix = typology::coverage_filter(&matrix, &weights, a.coverage).map_err(Failure::operational)?;
    let imputer = match a.imputer {
        ImputerArg::Mode => Imputer::Mode,
        ImputerArg::Knn => Imputer::Knn(a.k),
    };
    let matrix = typology::impute(&matrix, imputer).map_err(Failure::operational)?;
    let dataset = typology::weighted_average(&matrix, &weights).map_err(Failure::operational)?;
    let global = typology::uniform_average(&matrix).map_err(Failure::operational)?;
    let cosine = typology::cosine(&dataset, &global).map_err(Failure::operational)?;
    let top = typology::underrepresented(&dataset, &global, a.top).map_err(Failure::operational)?;

    let mut out = String::new();
    writeln!(out, "# languages\t{}", matrix.languages.len()).unwrap();
    writeln!(out, "# features\t{}", matrix.features.len()).unwrap();
    writeln!(out, "# dropped_languages\t{}", prepared.dropped_languages.len()).unwrap();
    writeln!(out, "# dropped_dialects\t{}", prepared.dropped_dialects.len()).unwrap();
    writeln!(out, "# imputed_fraction\t{:.4}", matrix.imputed_fraction()).unwrap();
    writeln!(out, "# weight_total\t{}", dataset.weight_total).unwrap();
    writeln!(out, "# excluded_weight\t{}", dataset.excluded_weight).unwrap();
    writeln!(out, "# cosine\t{cosine:.4}").unwrap();
    out.push_str(&typology::deltas_tsv(&top));
    println!(
        "{} languages x {} features, {:.1}% imputed, cosine {cosine:.3}",
        matrix.languages.len(),
        matrix.features.len(),
        100.0 * matrix.imputed_fraction()
    );
    print!("{}", typology::deltas_tsv(&top));
    write_output("typology", a, &inputs, &a.out.output, &out)?;
    Ok(None)
}

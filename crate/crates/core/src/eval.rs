//! Scoring predicted gloss lines against gold IGT.
//!
//! Accuracies are positional: morpheme `i` of the prediction is compared
//! with morpheme `i` of the gold line, so an insertion or deletion shifts
//! every later unit out of place. chrF++ follows the sacrebleu definition.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::glosser::{for_each_unit, Level, UNKNOWN_GLOSS};
use crate::igt::{align, is_punctuation_token, parse_gloss_line, AlignOptions, GlossKind, IgtExample, Segmented};
use crate::ingest::{Corpus, IngestError, UNKNOWN_LANGUAGE};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold gloss line has no units")]
    EmptyGold,
    #[error("prediction for unknown example id {0:?}")]
    UnknownPredictionId(String),
    #[error("duplicate prediction for example id {0:?}")]
    DuplicatePrediction(String),
    #[error("predictions line {line}: {reason}")]
    MalformedPrediction { line: usize, reason: String },
    #[error("gold corpus has no scorable examples")]
    NoExamples,
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Removes whitespace tokens made only of punctuation. Punctuation inside a
/// token is left alone, and so is the unseen-unit marker `???`.
pub fn strip_eval_punctuation(line: &str) -> String {
    line.split_whitespace()
        .filter(|t| *t == UNKNOWN_GLOSS || !is_punctuation_token(t))
        .collect::<Vec<_>>()
        .join(" ")
}

fn morphemes(line: &str) -> Vec<&str> {
    line.split_whitespace().flat_map(|w| w.split('-')).filter(|m| !m.is_empty()).collect()
}

/// Correct and total unit counts; totals always refer to the gold side.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    pub fn fraction(self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    pub fn add(&mut self, other: Tally) {
        self.correct += other.correct;
        self.total += other.total;
    }
}

/// How surplus or missing predicted units are treated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LengthPolicy {
    /// Compare over the shorter length, divide by the gold length.
    #[default]
    Gold,
    /// A line whose unit count differs from gold scores zero.
    Strict,
}

fn positional(gold: &[&str], pred: &[&str], policy: LengthPolicy) -> Result<Tally, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let correct = if policy == LengthPolicy::Strict && gold.len() != pred.len() {
        0
    } else {
        gold.iter().zip(pred).filter(|(g, p)| g == p).count()
    };
    Ok(Tally { correct, total: gold.len() })
}

/// Morpheme tally for two already stripped lines.
pub fn morpheme_tally(gold: &str, pred: &str, policy: LengthPolicy) -> Result<Tally, EvalError> {
    positional(&morphemes(gold), &morphemes(pred), policy)
}

/// Word tally for two already stripped lines.
pub fn word_tally(gold: &str, pred: &str, policy: LengthPolicy) -> Result<Tally, EvalError> {
    let gold: Vec<&str> = gold.split_whitespace().collect();
    let pred: Vec<&str> = pred.split_whitespace().collect();
    positional(&gold, &pred, policy)
}

pub fn morpheme_accuracy(gold: &str, pred: &str) -> Result<f64, EvalError> {
    morpheme_tally(&strip_eval_punctuation(gold), &strip_eval_punctuation(pred), LengthPolicy::Gold).map(Tally::fraction)
}

pub fn word_accuracy(gold: &str, pred: &str) -> Result<f64, EvalError> {
    word_tally(&strip_eval_punctuation(gold), &strip_eval_punctuation(pred), LengthPolicy::Gold).map(Tally::fraction)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChrfParams {
    pub char_order: usize,
    pub word_order: usize,
    pub beta: f64,
}

impl Default for ChrfParams {
    fn default() -> Self {
        ChrfParams { char_order: 6, word_order: 2, beta: 2.0 }
    }
}

/// Hypothesis, reference and matched n-gram counts for one order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramStats {
    pub hyp: usize,
    pub reference: usize,
    pub matched: usize,
}

/// Sufficient statistics for chrF++: character orders first, then word orders.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChrfStats {
    pub orders: Vec<NgramStats>,
}

const SACREBLEU_PUNCT: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

fn word_tokens(text: &str) -> Vec<String> {
    let punct = |c: char| SACREBLEU_PUNCT.contains(c);
    let mut out = Vec::new();
    for token in text.split_whitespace() {
        let mut chars = token.chars();
        let first = chars.next();
        let last = token.chars().next_back();
        let long = token.chars().nth(1).is_some();
        match (first, last) {
            (_, Some(l)) if long && punct(l) => {
                out.push(token[..token.len() - l.len_utf8()].to_string());
                out.push(l.to_string());
            }
            (Some(f), _) if long && punct(f) => {
                out.push(f.to_string());
                out.push(token[f.len_utf8()..].to_string());
            }
            _ => out.push(token.to_string()),
        }
    }
    out
}

fn count<T: std::hash::Hash + Eq + Clone>(items: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n > 0 && items.len() >= n {
        for w in items.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

fn order_stats<T: std::hash::Hash + Eq + Clone>(hyp: &[T], reference: &[T], n: usize) -> NgramStats {
    let h = count(hyp, n);
    let r = count(reference, n);
    let matched = h.iter().map(|(g, c)| (*c).min(r.get(g).copied().unwrap_or(0))).sum();
    NgramStats { hyp: h.values().sum(), reference: r.values().sum(), matched }
}

impl ChrfStats {
    pub fn sentence(gold: &str, pred: &str, params: ChrfParams) -> Self {
        let hyp_chars: Vec<char> = pred.chars().filter(|c| !c.is_whitespace()).collect();
        let ref_chars: Vec<char> = gold.chars().filter(|c| !c.is_whitespace()).collect();
        let hyp_words = word_tokens(pred);
        let ref_words = word_tokens(gold);
        let mut orders: Vec<NgramStats> =
            (1..=params.char_order).map(|n| order_stats(&hyp_chars, &ref_chars, n)).collect();
        orders.extend((1..=params.word_order).map(|n| order_stats(&hyp_words, &ref_words, n)));
        ChrfStats { orders }
    }

    pub fn add(&mut self, other: &ChrfStats) {
        if self.orders.is_empty() {
            self.orders = vec![NgramStats::default(); other.orders.len()];
        }
        for (a, b) in self.orders.iter_mut().zip(&other.orders) {
            a.hyp += b.hyp;
            a.reference += b.reference;
            a.matched += b.matched;
        }
    }

    /// Averages precision and recall over the orders where both sides have
    /// n-grams, then combines them into F-beta on a 0 to 100 scale.
    pub fn score(&self, beta: f64) -> f64 {
        let hyp_empty = self.orders.iter().all(|o| o.hyp == 0);
        let ref_empty = self.orders.iter().all(|o| o.reference == 0);
        if hyp_empty && ref_empty {
            return 100.0;
        }
        let (mut precision, mut recall, mut effective) = (0.0, 0.0, 0usize);
        for o in self.orders.iter().filter(|o| o.hyp > 0 && o.reference > 0) {
            precision += o.matched as f64 / o.hyp as f64;
            recall += o.matched as f64 / o.reference as f64;
            effective += 1;
        }
        if effective == 0 {
            return 0.0;
        }
        precision /= effective as f64;
        recall /= effective as f64;
        if precision + recall == 0.0 {
            return 0.0;
        }
        let b2 = beta * beta;
        100.0 * (1.0 + b2) * precision * recall / (b2 * precision + recall)
    }
}

pub fn chrf(gold: &str, pred: &str, params: ChrfParams) -> f64 {
    ChrfStats::sentence(gold, pred, params).score(params.beta)
}

/// Corpus chrF++: statistics are summed over all pairs before scoring.
pub fn corpus_chrf<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>, params: ChrfParams) -> f64 {
    let mut total = ChrfStats::default();
    for (gold, pred) in pairs {
        total.add(&ChrfStats::sentence(gold, pred, params));
    }
    total.score(params.beta)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub example_id: String,
    pub prediction: String,
}

pub fn parse_predictions(text: &str) -> Result<BTreeMap<String, String>, EvalError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let p: Prediction = serde_json::from_str(line)
            .map_err(|e| EvalError::MalformedPrediction { line: i + 1, reason: e.to_string() })?;
        if out.insert(p.example_id.clone(), p.prediction).is_some() {
            return Err(EvalError::DuplicatePrediction(p.example_id));
        }
    }
    Ok(out)
}

pub fn read_predictions(path: &Path) -> Result<BTreeMap<String, String>, EvalError> {
    let file = std::fs::File::open(path)
        .map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    let mut text = String::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| EvalError::MalformedPrediction { line: i + 1, reason: e.to_string() })?;
        text.push_str(&line);
        text.push('\n');
    }
    parse_predictions(&text)
}

pub fn to_prediction_lines(predictions: &[Prediction]) -> String {
    predictions
        .iter()
        .map(|p| serde_json::to_string(p).expect("prediction serializes") + "\n")
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub chrf: ChrfParams,
    pub length_policy: LengthPolicy,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { chrf: ChrfParams::default(), length_policy: LengthPolicy::Gold }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub morpheme_accuracy: f64,
    pub word_accuracy: f64,
    pub chrf: f64,
    pub n_examples: usize,
    pub morphemes: Tally,
    pub words: Tally,
    /// Gold examples without a prediction, scored as empty output.
    pub missing_predictions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub overall: MetricReport,
    /// Keyed by glottocode; empty unless the gold set spans several languages.
    pub by_language: BTreeMap<String, MetricReport>,
    /// Gold examples whose stripped gloss line is empty.
    pub skipped_empty_gold: Vec<String>,
}

#[derive(Default)]
struct Accumulator {
    morphemes: Tally,
    words: Tally,
    chrf: ChrfStats,
    n: usize,
    missing: usize,
}

impl Accumulator {
    fn report(&self, params: ChrfParams) -> MetricReport {
        MetricReport {
            morpheme_accuracy: self.morphemes.fraction(),
            word_accuracy: self.words.fraction(),
            chrf: self.chrf.score(params.beta),
            n_examples: self.n,
            morphemes: self.morphemes,
            words: self.words,
            missing_predictions: self.missing,
        }
    }
}

/// Scores `predictions` (example id to gloss line) against `gold`.
pub fn evaluate(
    gold: &[IgtExample],
    predictions: &BTreeMap<String, String>,
    options: &EvalOptions,
) -> Result<Evaluation, EvalError> {
    let ids: BTreeSet<&str> = gold.iter().map(|e| e.id.as_str()).collect();
    if let Some(unknown) = predictions.keys().find(|k| !ids.contains(k.as_str())) {
        return Err(EvalError::UnknownPredictionId(unknown.clone()));
    }
    let mut overall = Accumulator::default();
    let mut by_language: BTreeMap<String, Accumulator> = BTreeMap::new();
    let mut skipped_empty_gold = Vec::new();
    for example in gold {
        let g = strip_eval_punctuation(&example.gloss_text);
        if g.is_empty() {
            skipped_empty_gold.push(example.id.clone());
            continue;
        }
        let raw = predictions.get(&example.id);
        let p = raw.map(|p| strip_eval_punctuation(p)).unwrap_or_default();
        let m = morpheme_tally(&g, &p, options.length_policy)?;
        let w = word_tally(&g, &p, options.length_policy)?;
        let c = ChrfStats::sentence(&g, &p, options.chrf);
        let lang = example.glottocode.clone().unwrap_or_else(|| UNKNOWN_LANGUAGE.to_string());
        for acc in [&mut overall, by_language.entry(lang).or_default()] {
            acc.morphemes.add(m);
            acc.words.add(w);
            acc.chrf.add(&c);
            acc.n += 1;
            acc.missing += usize::from(raw.is_none());
        }
    }
    if overall.n == 0 {
        return Err(EvalError::NoExamples);
    }
    let by_language = if by_language.len() > 1 {
        by_language.into_iter().map(|(k, a)| (k, a.report(options.chrf))).collect()
    } else {
        BTreeMap::new()
    };
    Ok(Evaluation { overall: overall.report(options.chrf), by_language, skipped_empty_gold })
}

pub fn evaluate_corpus(
    gold: &Corpus,
    predictions: &BTreeMap<String, String>,
    options: &EvalOptions,
) -> Result<Evaluation, EvalError> {
    evaluate(&gold.examples, predictions, options)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OovReport {
    pub pct_oov_words: f64,
    /// `None` when the test set has no in-vocabulary words.
    pub iv_word_accuracy: Option<f64>,
    /// `None` when the test set has no out-of-vocabulary words.
    pub oov_word_accuracy: Option<f64>,
    /// `None` when no segmented test words align morpheme by morpheme.
    pub pct_oov_morphemes: Option<f64>,
    /// `None` when no test example has a translation.
    pub oov_token_recall: Option<f64>,
    pub words: usize,
    pub oov_words: usize,
    pub morphemes: usize,
    pub oov_morphemes: usize,
    pub lexical_glosses: usize,
    pub recalled_glosses: usize,
    /// Test examples left out because their gold lines do not align.
    pub misaligned: Vec<String>,
}

fn percent(part: usize, whole: usize) -> Option<f64> {
    (whole > 0).then(|| 100.0 * part as f64 / whole as f64)
}

fn unit_pairs(examples: &[IgtExample], level: Level) -> HashSet<(String, String)> {
    let mut pairs = HashSet::new();
    for e in examples.iter().filter(|e| level == Level::Word || e.segmented == Segmented::Yes) {
        for_each_unit(e, level, |form, gloss| {
            pairs.insert((form.to_string(), gloss));
        });
    }
    pairs
}

/// Vocabulary statistics of a test set relative to its training set.
///
/// A test word is in-vocabulary when the pair of its form and its gold word
/// gloss occurs in training. OOV token recall is the share of gold lexical
/// sub-glosses that occur, ignoring case, as substrings of the translation.
pub fn oov_analysis(
    train: &[IgtExample],
    test: &[IgtExample],
    predictions: &BTreeMap<String, String>,
) -> OovReport {
    let word_pairs = unit_pairs(train, Level::Word);
    let morpheme_pairs = unit_pairs(train, Level::Morpheme);
    let options = AlignOptions { ignore_punctuation: true, ..AlignOptions::default() };
    let (mut iv, mut iv_correct, mut oov, mut oov_correct) = (0, 0, 0, 0);
    let (mut morphemes, mut oov_morphemes) = (0, 0);
    let (mut lexical, mut recalled) = (0, 0);
    let mut misaligned = Vec::new();
    for example in test {
        let Ok(gloss) = parse_gloss_line(&example.gloss_text) else {
            misaligned.push(example.id.clone());
            continue;
        };
        if let Some(translation) = example.translation_text() {
            let translation = translation.to_lowercase();
            for sub in gloss.subglosses() {
                if sub.kind == GlossKind::Lexical && sub.text.chars().any(char::is_alphabetic) {
                    lexical += 1;
                    recalled += usize::from(translation.contains(&sub.text.to_lowercase()));
                }
            }
        }
        let alignment = align(&example.transcription, example.segmented, &gloss, options);
        if !alignment.report.words_aligned {
            misaligned.push(example.id.clone());
            continue;
        }
        let pred = predictions.get(&example.id).map(|p| strip_eval_punctuation(p)).unwrap_or_default();
        let pred: Vec<&str> = pred.split_whitespace().collect();
        for word in &alignment.words {
            let gold = word.gloss.to_string();
            let correct = pred.get(word.position) == Some(&gold.as_str());
            if word_pairs.contains(&(word.form.to_string(), gold)) {
                iv += 1;
                iv_correct += usize::from(correct);
            } else {
                oov += 1;
                oov_correct += usize::from(correct);
            }
            if example.segmented == Segmented::Yes {
                if let Some(forms) = &word.morphemes {
                    for (form, g) in forms.iter().zip(&word.gloss.morphemes) {
                        morphemes += 1;
                        oov_morphemes += usize::from(!morpheme_pairs.contains(&(form.to_string(), g.to_string())));
                    }
                }
            }
        }
    }
    OovReport {
        pct_oov_words: percent(oov, iv + oov).unwrap_or(0.0),
        iv_word_accuracy: percent(iv_correct, iv),
        oov_word_accuracy: percent(oov_correct, oov),
        pct_oov_morphemes: percent(oov_morphemes, morphemes),
        oov_token_recall: percent(recalled, lexical),
        words: iv + oov,
        oov_words: oov,
        morphemes,
        oov_morphemes,
        lexical_glosses: lexical,
        recalled_glosses: recalled,
        misaligned,
    }
}

/// Plain-text table for a metric report.
pub fn format_report(evaluation: &Evaluation) -> String {
    let mut out = String::from("scope\texamples\tmorpheme_acc\tword_acc\tchrf\n");
    let row = |name: &str, r: &MetricReport| {
        format!(
            "{name}\t{}\t{:.1}\t{:.1}\t{:.1}\n",
            r.n_examples,
            100.0 * r.morpheme_accuracy,
            100.0 * r.word_accuracy,
            r.chrf
        )
    };
    out.push_str(&row("all", &evaluation.overall));
    for (lang, r) in &evaluation.by_language {
        out.push_str(&row(lang, r));
    }
    out
}

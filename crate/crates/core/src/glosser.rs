//! The Top-choice baseline and the prompt exporter.
//!
//! Top-choice memorizes, for every morpheme (or word) form seen in training,
//! how often each gloss was assigned to it, and predicts the most frequent
//! one. Unseen forms get [`UNKNOWN_GLOSS`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::igt::{align, is_punctuation_token, normalize_spacing, parse_gloss_line, AlignOptions, IgtExample, ParseOptions, Segmented, SegmentedWord};
use crate::ingest::metalang_name;

pub const UNKNOWN_GLOSS: &str = "???";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GlossError {
    #[error("no training example produced an aligned unit")]
    NoUsableExamples,
    #[error("lexicon level {lexicon} does not match {found}")]
    LevelMismatch { lexicon: Level, found: String },
    #[error("line {line}: {reason}")]
    BadLexicon { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Morpheme,
    Word,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Morpheme => "morpheme",
            Level::Word => "word",
        })
    }
}

impl std::str::FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "morpheme" => Ok(Level::Morpheme),
            "word" => Ok(Level::Word),
            other => Err(format!("unknown level {other:?}")),
        }
    }
}

/// Order-independent digest of a set of training examples: the wrapping sum
/// of per-example hashes, so shard digests add up to the whole-corpus digest.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint(pub u64);

impl Fingerprint {
    pub fn of_example(example: &IgtExample) -> Self {
        let mut h = Sha256::new();
        for field in [&example.id, &example.transcription, &example.gloss_text] {
            h.update(field.as_bytes());
            h.update([0u8]);
        }
        let digest = h.finalize();
        let mut first = [0u8; 8];
        first.copy_from_slice(&digest[..8]);
        Fingerprint(u64::from_be_bytes(first))
    }

    pub fn combine(self, other: Fingerprint) -> Self {
        Fingerprint(self.0.wrapping_add(other.0))
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlossLexicon {
    pub level: Level,
    pub counts: BTreeMap<String, BTreeMap<String, u64>>,
    pub trained_on: Fingerprint,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainStats {
    pub examples_used: usize,
    pub skipped_unsegmented: usize,
    pub skipped_unparseable: usize,
    pub skipped_words: usize,
    pub pairs: u64,
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub lexicon: GlossLexicon,
    pub stats: TrainStats,
}

const TRAIN_ALIGN: AlignOptions = AlignOptions {
    parse: ParseOptions { clitic_boundary: true },
    ignore_punctuation: true,
};

/// Calls `f(form, gloss)` for every aligned unit of `example`. Returns the
/// number of words that could not be aligned, or `None` if the gloss line
/// does not parse.
pub(crate) fn for_each_unit(example: &IgtExample, level: Level, mut f: impl FnMut(&str, String)) -> Option<usize> {
    let gloss = parse_gloss_line(&example.gloss_text).ok()?;
    let alignment = align(&example.transcription, example.segmented, &gloss, TRAIN_ALIGN);
    let words = alignment.report.word_count_transcription.max(alignment.report.word_count_gloss);
    if !alignment.report.words_aligned {
        return Some(words);
    }
    let mut skipped = 0;
    for word in &alignment.words {
        match level {
            Level::Word => f(word.form, word.gloss.to_string()),
            Level::Morpheme => match &word.morphemes {
                Some(forms) => {
                    for (form, gloss) in forms.iter().zip(&word.gloss.morphemes) {
                        f(form, gloss.to_string());
                    }
                }
                None => skipped += 1,
            },
        }
    }
    Some(skipped)
}

impl GlossLexicon {
    pub fn empty(level: Level) -> Self {
        GlossLexicon { level, counts: BTreeMap::new(), trained_on: Fingerprint::default() }
    }

    /// Most frequent gloss for `form`, ties going to the lexicographically
    /// smallest label.
    pub fn best(&self, form: &str) -> Option<&str> {
        let glosses = self.counts.get(form)?;
        let mut best: Option<(&str, u64)> = None;
        for (label, &n) in glosses {
            if best.is_none_or(|(_, m)| n > m) {
                best = Some((label, n));
            }
        }
        best.map(|(l, _)| l)
    }

    fn gloss_unit(&self, form: &str) -> &str {
        self.best(form).unwrap_or(UNKNOWN_GLOSS)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("#level\t{}\n#trained_on\t{}\n", self.level, self.trained_on);
        for (form, glosses) in &self.counts {
            for (label, n) in glosses {
                out.push_str(&format!("{form}\t{label}\t{n}\n"));
            }
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, GlossError> {
        let mut level = None;
        let mut trained_on = Fingerprint::default();
        let mut counts: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let bad = |reason: &str| GlossError::BadLexicon { line: i + 1, reason: reason.to_string() };
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            match cols.as_slice() {
                ["#level", l] => level = Some(l.parse::<Level>().map_err(|e| bad(&e))?),
                ["#trained_on", h] => {
                    trained_on = Fingerprint(u64::from_str_radix(h, 16).map_err(|_| bad("bad fingerprint"))?)
                }
                [c, ..] if c.starts_with('#') => {}
                [form, label, n] if !form.is_empty() => {
                    let n: u64 = n.parse().map_err(|_| bad("count is not a number"))?;
                    if n == 0 {
                        return Err(bad("count must be positive"));
                    }
                    *counts.entry(form.to_string()).or_default().entry(label.to_string()).or_default() += n;
                }
                _ => return Err(bad("expected form<TAB>label<TAB>count")),
            }
        }
        let level = level.ok_or(GlossError::BadLexicon { line: 1, reason: "missing #level header".into() })?;
        Ok(GlossLexicon { level, counts, trained_on })
    }

    pub fn predict(&self, example: &IgtExample) -> Result<String, GlossError> {
        if self.level == Level::Morpheme && example.segmented != Segmented::Yes {
            return Err(GlossError::LevelMismatch {
                lexicon: self.level,
                found: format!("{} transcription of {}", example.segmented, example.id),
            });
        }
        let words: Vec<String> = example
            .transcription
            .split_whitespace()
            .map(|token| {
                if is_punctuation_token(token) {
                    return token.to_string();
                }
                match self.level {
                    Level::Word => self.gloss_unit(token).to_string(),
                    Level::Morpheme => {
                        let split = SegmentedWord::split(token, ParseOptions::default());
                        if split.morphemes.is_empty() {
                            return token.to_string();
                        }
                        let glosses: Vec<&str> = split.morphemes.iter().map(|m| self.gloss_unit(m)).collect();
                        split.render(&glosses)
                    }
                }
            })
            .collect();
        Ok(words.join(" "))
    }
}

pub fn train_top_choice(examples: &[IgtExample], level: Level) -> Result<Trained, GlossError> {
    let mut lexicon = GlossLexicon::empty(level);
    let mut stats = TrainStats::default();
    for example in examples {
        lexicon.trained_on = lexicon.trained_on.combine(Fingerprint::of_example(example));
        if level == Level::Morpheme && example.segmented != Segmented::Yes {
            stats.skipped_unsegmented += 1;
            continue;
        }
        let mut pairs = 0;
        let skipped = for_each_unit(example, level, |form, gloss| {
            *lexicon.counts.entry(form.to_string()).or_default().entry(gloss).or_default() += 1;
            pairs += 1;
        });
        match skipped {
            None => stats.skipped_unparseable += 1,
            Some(words) => {
                stats.skipped_words += words;
                if pairs > 0 {
                    stats.examples_used += 1;
                }
            }
        }
        stats.pairs += pairs;
    }
    if stats.pairs == 0 {
        return Err(GlossError::NoUsableExamples);
    }
    Ok(Trained { lexicon, stats })
}

pub fn merge_lexicons(a: &GlossLexicon, b: &GlossLexicon) -> Result<GlossLexicon, GlossError> {
    if a.level != b.level {
        return Err(GlossError::LevelMismatch { lexicon: a.level, found: format!("{} lexicon", b.level) });
    }
    let mut out = a.clone();
    for (form, glosses) in &b.counts {
        let entry = out.counts.entry(form.clone()).or_default();
        for (label, n) in glosses {
            *entry.entry(label.clone()).or_default() += n;
        }
    }
    out.trained_on = a.trained_on.combine(b.trained_on);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub example_id: String,
    pub prompt: String,
    pub target: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LangDisplay {
    /// Language name, falling back to the glottocode.
    #[default]
    Name,
    /// Glottocode, falling back to the name.
    Code,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptOptions {
    pub lang_display: LangDisplay,
    /// Use this string for `<lang>` on every record.
    pub lang_override: Option<String>,
}

fn lang_label<'a>(example: &'a IgtExample, options: &'a PromptOptions) -> &'a str {
    if let Some(lang) = &options.lang_override {
        return lang;
    }
    let name = example.language_name.as_deref().filter(|s| !s.is_empty());
    let code = example.glottocode.as_deref().filter(|s| !s.is_empty());
    let pick = match options.lang_display {
        LangDisplay::Name => name.or(code),
        LangDisplay::Code => code.or(name),
    };
    pick.unwrap_or("unknown")
}

pub fn build_prompt(example: &IgtExample, options: &PromptOptions) -> String {
    let lang = lang_label(example, options);
    let mut prompt = format!(
        "Provide the glosses for the following transcription in {lang}.\n\nTranscription in {lang}: {}\nTranscription segmented: {}\n",
        example.transcription, example.segmented
    );
    if let Some(translation) = example.translation_text() {
        let metalang = example.metalang.as_deref().map_or("unknown", metalang_name);
        prompt.push_str(&format!("Translation in {metalang}: {translation}\n"));
    }
    prompt.push_str("Glosses: ");
    prompt
}

pub fn export_prompts(examples: &[IgtExample], options: &PromptOptions) -> Vec<PromptRecord> {
    examples
        .iter()
        .map(|ex| PromptRecord {
            example_id: ex.id.clone(),
            prompt: build_prompt(ex, options),
            target: normalize_spacing(&ex.gloss_text),
        })
        .collect()
}

//! IGT records and the parsing of transcription and gloss lines.
//!
//! A gloss line is a whitespace-separated list of word glosses. Each word
//! gloss is a list of morpheme glosses joined by `-` (and `=` for clitics,
//! unless disabled), and each morpheme gloss is a list of sub-glosses joined
//! by `.` for fusional morphemes:
//!
//! ```
//! use igt_core::igt::{parse_gloss_line, GlossKind};
//!
//! let line = parse_gloss_line("this when.PAST-speak-3PL").unwrap();
//! let when_past = &line.words[1].morphemes[0];
//! assert_eq!(when_past.subglosses[1].text, "PAST");
//! assert_eq!(when_past.subglosses[1].kind, GlossKind::Grammatical);
//! assert_eq!(line.to_string(), "this when.PAST-speak-3PL");
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Suffix appended to the id of a record derived by [`strip_segmentation`].
pub const UNSEGMENTED_ID_SUFFIX: &str = "_unseg";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("gloss line is empty")]
    EmptyGlossLine,
    #[error("word {position} ({token:?}) contains only separators")]
    DegenerateToken { position: usize, token: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SegmentationError {
    #[error("record {id:?} is not segmented")]
    NotSegmented { id: String },
}

/// Whether a transcription is split into morphemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segmented {
    Yes,
    No,
    Unknown,
}

impl Segmented {
    pub fn as_str(self) -> &'static str {
        match self {
            Segmented::Yes => "yes",
            Segmented::No => "no",
            Segmented::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Segmented {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Segmented {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "yes" => Ok(Segmented::Yes),
            "no" => Ok(Segmented::No),
            "unknown" => Ok(Segmented::Unknown),
            other => Err(format!("expected yes, no or unknown, got {other:?}")),
        }
    }
}

/// One interlinear glossed example.
///
/// Fields not known to this version are kept in `extra` and written back
/// unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IgtExample {
    pub id: String,
    pub glottocode: Option<String>,
    pub language_name: Option<String>,
    pub metalang: Option<String>,
    pub source: String,
    pub transcription: String,
    pub segmented: Segmented,
    pub derived_unsegmented: bool,
    pub gloss_text: String,
    pub translation: Option<String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl IgtExample {
    pub fn new(id: impl Into<String>, transcription: impl Into<String>, gloss_text: impl Into<String>) -> Self {
        IgtExample {
            id: id.into(),
            glottocode: None,
            language_name: None,
            metalang: None,
            source: String::new(),
            transcription: transcription.into(),
            segmented: Segmented::Unknown,
            derived_unsegmented: false,
            gloss_text: gloss_text.into(),
            translation: None,
            extra: BTreeMap::new(),
        }
    }

    pub fn with_segmented(mut self, segmented: Segmented) -> Self {
        self.segmented = segmented;
        self
    }

    pub fn with_translation(mut self, translation: impl Into<String>) -> Self {
        self.translation = Some(translation.into());
        self
    }

    /// The translation, treating an empty string as absent.
    pub fn translation_text(&self) -> Option<&str> {
        self.translation.as_deref().filter(|t| !t.trim().is_empty())
    }

    /// Checks the record-level invariants, naming the first violated field.
    pub fn violation(&self) -> Option<&'static str> {
        if self.transcription.split_whitespace().next().is_none() {
            return Some("transcription");
        }
        if self.derived_unsegmented && self.segmented != Segmented::No {
            return Some("derived_unsegmented");
        }
        None
    }
}

/// Grammatical (all-caps function labels) or lexical (stem translations).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlossKind {
    Grammatical,
    Lexical,
}

/// A token is grammatical when it has no lowercase letter and at least one
/// uppercase letter or digit, so `PAST`, `3PL`, `E3S` and `0S` qualify.
pub fn classify_subgloss(token: &str) -> GlossKind {
    let mut marked = false;
    for c in token.chars() {
        if c.is_lowercase() {
            return GlossKind::Lexical;
        }
        if c.is_uppercase() || c.is_numeric() {
            marked = true;
        }
    }
    if marked {
        GlossKind::Grammatical
    } else {
        GlossKind::Lexical
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubGloss {
    pub text: String,
    pub kind: GlossKind,
}

impl SubGloss {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let kind = classify_subgloss(&text);
        SubGloss { text, kind }
    }
}

/// Separator runs around and between the parts of a token. Keeping the
/// literal runs lets `a..b` or a citation form like `tih-` serialize back
/// exactly.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
struct Joints {
    lead: String,
    between: Vec<String>,
    trail: String,
}

impl Joints {
    fn uniform(parts: usize, sep: &str) -> Self {
        Joints {
            lead: String::new(),
            between: vec![sep.to_string(); parts.saturating_sub(1)],
            trail: String::new(),
        }
    }

    fn write<T: fmt::Display>(&self, f: &mut fmt::Formatter<'_>, parts: &[T]) -> fmt::Result {
        f.write_str(&self.lead)?;
        for (i, part) in parts.iter().enumerate() {
            if i > 0 {
                f.write_str(self.between.get(i - 1).map(String::as_str).unwrap_or(""))?;
            }
            write!(f, "{part}")?;
        }
        f.write_str(&self.trail)
    }
}

/// Splits `token` into maximal runs of non-separator characters, recording
/// the separator runs. Returns no parts when the token is all separators.
fn split_runs(token: &str, is_sep: impl Fn(char) -> bool) -> (Vec<&str>, Joints) {
    let mut parts = Vec::new();
    let mut joints = Joints::default();
    let mut pending_sep = String::new();
    let mut start = None;
    for (i, c) in token.char_indices() {
        if is_sep(c) {
            if let Some(s) = start.take() {
                parts.push(&token[s..i]);
            }
            pending_sep.push(c);
        } else if start.is_none() {
            if parts.is_empty() {
                joints.lead = std::mem::take(&mut pending_sep);
            } else {
                joints.between.push(std::mem::take(&mut pending_sep));
            }
            start = Some(i);
        }
    }
    if let Some(s) = start {
        parts.push(&token[s..]);
    }
    if parts.is_empty() {
        joints.lead = pending_sep;
    } else {
        joints.trail = pending_sep;
    }
    (parts, joints)
}

/// The gloss of one morpheme: one or more `.`-joined sub-glosses.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MorphemeGloss {
    pub subglosses: Vec<SubGloss>,
    joints: Joints,
}

impl MorphemeGloss {
    pub fn new(subglosses: Vec<SubGloss>) -> Self {
        let joints = Joints::uniform(subglosses.len(), ".");
        MorphemeGloss { subglosses, joints }
    }

    fn parse(text: &str) -> Self {
        let (parts, joints) = split_runs(text, |c| c == '.');
        MorphemeGloss {
            subglosses: parts.into_iter().map(SubGloss::new).collect(),
            joints,
        }
    }
}

impl fmt::Display for MorphemeGloss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let texts: Vec<&str> = self.subglosses.iter().map(|s| s.text.as_str()).collect();
        self.joints.write(f, &texts)
    }
}

/// The gloss of one word: morpheme glosses joined by `-` or `=`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GlossWord {
    pub morphemes: Vec<MorphemeGloss>,
    joints: Joints,
}

impl GlossWord {
    pub fn new(morphemes: Vec<MorphemeGloss>) -> Self {
        let joints = Joints::uniform(morphemes.len(), "-");
        GlossWord { morphemes, joints }
    }

    pub fn subglosses(&self) -> impl Iterator<Item = &SubGloss> {
        self.morphemes.iter().flat_map(|m| m.subglosses.iter())
    }

    pub(crate) fn subglosses_mut(&mut self) -> impl Iterator<Item = &mut SubGloss> {
        self.morphemes.iter_mut().flat_map(|m| m.subglosses.iter_mut())
    }
}

impl fmt::Display for GlossWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.joints.write(f, &self.morphemes)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GlossLine {
    pub words: Vec<GlossWord>,
}

impl GlossLine {
    pub fn subglosses(&self) -> impl Iterator<Item = &SubGloss> {
        self.words.iter().flat_map(GlossWord::subglosses)
    }
}

impl fmt::Display for GlossLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, word) in self.words.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{word}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseOptions {
    /// Treat the clitic boundary `=` as a morpheme separator.
    pub clitic_boundary: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { clitic_boundary: true }
    }
}

impl ParseOptions {
    pub fn is_morpheme_separator(&self, c: char) -> bool {
        c == '-' || (self.clitic_boundary && c == '=')
    }
}

pub fn parse_gloss_line(text: &str) -> Result<GlossLine, ParseError> {
    parse_gloss_line_with(text, ParseOptions::default())
}

pub fn parse_gloss_line_with(text: &str, options: ParseOptions) -> Result<GlossLine, ParseError> {
    let mut words = Vec::new();
    for (position, token) in text.split_whitespace().enumerate() {
        let (parts, joints) = split_runs(token, |c| options.is_morpheme_separator(c));
        let morphemes: Vec<MorphemeGloss> = parts.into_iter().map(MorphemeGloss::parse).collect();
        // A lone sub-gloss separator run like ".." leaves a morpheme with no
        // sub-glosses.
        if morphemes.is_empty() || morphemes.iter().all(|m| m.subglosses.is_empty()) {
            return Err(ParseError::DegenerateToken { position, token: token.to_string() });
        }
        words.push(GlossWord { morphemes, joints });
    }
    if words.is_empty() {
        return Err(ParseError::EmptyGlossLine);
    }
    Ok(GlossLine { words })
}

/// Splits a transcription word into its morphemes, keeping the separators so
/// that predictions can mirror the input structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentedWord<'a> {
    pub morphemes: Vec<&'a str>,
    joints: Joints,
}

impl<'a> SegmentedWord<'a> {
    pub fn split(word: &'a str, options: ParseOptions) -> Self {
        let (morphemes, joints) = split_runs(word, |c| options.is_morpheme_separator(c));
        SegmentedWord { morphemes, joints }
    }

    /// Renders `glosses` (one per morpheme) with this word's separators.
    pub fn render<T: fmt::Display>(&self, glosses: &[T]) -> String {
        struct Render<'b, T>(&'b Joints, &'b [T]);
        impl<T: fmt::Display> fmt::Display for Render<'_, T> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.write(f, self.1)
            }
        }
        Render(&self.joints, glosses).to_string()
    }
}

/// Which dashes count as morpheme boundaries when no flag was declared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryRule {
    /// A dash between two word characters (letters, digits, apostrophes).
    #[default]
    WordCharacters,
    /// Any dash with a non-space, non-dash character on both sides.
    Interior,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '\'' | '’' | 'ʼ' | 'ʻ' | 'ˀ')
}

pub fn detect_segmentation(transcription: &str) -> Segmented {
    detect_segmentation_with(transcription, BoundaryRule::default())
}

pub fn detect_segmentation_with(transcription: &str, rule: BoundaryRule) -> Segmented {
    let chars: Vec<char> = transcription.chars().collect();
    let boundary = chars.windows(3).any(|w| {
        w[1] == '-'
            && match rule {
                BoundaryRule::WordCharacters => is_word_char(w[0]) && is_word_char(w[2]),
                BoundaryRule::Interior => {
                    !w[0].is_whitespace() && !w[2].is_whitespace() && w[0] != '-' && w[2] != '-'
                }
            }
    });
    if boundary {
        Segmented::Yes
    } else {
        Segmented::No
    }
}

/// Builds the unsegmented sibling of a segmented record by deleting every
/// `-` from the transcription.
pub fn strip_segmentation(example: &IgtExample) -> Result<IgtExample, SegmentationError> {
    if example.segmented != Segmented::Yes || example.derived_unsegmented {
        return Err(SegmentationError::NotSegmented { id: example.id.clone() });
    }
    let transcription = example
        .transcription
        .split_whitespace()
        .map(|w| w.replace('-', ""))
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    Ok(IgtExample {
        id: unsegmented_id(&example.id),
        transcription,
        segmented: Segmented::No,
        derived_unsegmented: true,
        ..example.clone()
    })
}

pub fn unsegmented_id(id: &str) -> String {
    format!("{id}{UNSEGMENTED_ID_SUFFIX}")
}

/// Sentence punctuation that is split off the edges of tokens.
pub fn is_sentence_punctuation(c: char) -> bool {
    matches!(
        c,
        ',' | '.' | '!' | '?' | '"' | ';' | ':' | '¿' | '¡' | '“' | '”' | '„' | '«' | '»' | '…'
    )
}

/// Pads token-edge punctuation with spaces and collapses whitespace.
///
/// Punctuation inside a token (`when.PAST-speak`) is kept. Runs of the same
/// character stay together, so `...` is one token.
pub fn normalize_spacing(text: &str) -> String {
    let mut out: Vec<&str> = Vec::new();
    for token in text.split_whitespace() {
        let first_inner = token.char_indices().find(|&(_, c)| !is_sentence_punctuation(c));
        let Some((start, _)) = first_inner else {
            push_punct_runs(token, &mut out);
            continue;
        };
        let end = token
            .char_indices()
            .rev()
            .find(|&(_, c)| !is_sentence_punctuation(c))
            .map(|(i, c)| i + c.len_utf8())
            .unwrap_or(token.len());
        push_punct_runs(&token[..start], &mut out);
        out.push(&token[start..end]);
        push_punct_runs(&token[end..], &mut out);
    }
    out.join(" ")
}

fn push_punct_runs<'a>(s: &'a str, out: &mut Vec<&'a str>) {
    let mut start = 0;
    let mut prev: Option<char> = None;
    for (i, c) in s.char_indices() {
        if prev.is_some_and(|p| p != c) {
            out.push(&s[start..i]);
            start = i;
        }
        prev = Some(c);
    }
    if start < s.len() {
        out.push(&s[start..]);
    }
}

pub fn is_punctuation_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| c.is_ascii_punctuation() || is_sentence_punctuation(c))
        && token.chars().any(|c| c != '-' && c != '=')
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub word_count_transcription: usize,
    pub word_count_gloss: usize,
    pub words_aligned: bool,
    pub morphemes_aligned: Option<bool>,
    pub mismatch_positions: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AlignOptions {
    pub parse: ParseOptions,
    /// Drop tokens that consist only of punctuation from both lines first.
    pub ignore_punctuation: bool,
}

/// A transcription word paired with its gloss word.
#[derive(Debug, Clone)]
pub struct AlignedWord<'a> {
    pub position: usize,
    pub form: &'a str,
    pub gloss: &'a GlossWord,
    /// Morpheme forms, present when the word's morpheme counts agree.
    pub morphemes: Option<Vec<&'a str>>,
}

/// Word-level alignment of a transcription with its parsed gloss line.
#[derive(Debug, Clone)]
pub struct Alignment<'a> {
    pub report: AlignmentReport,
    pub words: Vec<AlignedWord<'a>>,
}

pub fn align<'a>(
    transcription: &'a str,
    segmented: Segmented,
    gloss: &'a GlossLine,
    options: AlignOptions,
) -> Alignment<'a> {
    let keep = |t: &str| !(options.ignore_punctuation && is_punctuation_token(t));
    let forms: Vec<&str> = transcription.split_whitespace().filter(|t| keep(t)).collect();
    let glosses: Vec<&GlossWord> = gloss
        .words
        .iter()
        .filter(|w| !options.ignore_punctuation || !is_punctuation_token(&w.to_string()))
        .collect();
    let common = forms.len().min(glosses.len());
    let mut mismatch_positions = Vec::new();
    let mut words = Vec::with_capacity(common);
    let check_morphemes = segmented == Segmented::Yes;
    let mut morphemes_ok = true;
    for position in 0..common {
        let split = SegmentedWord::split(forms[position], options.parse);
        let same = split.morphemes.len() == glosses[position].morphemes.len();
        if check_morphemes && !same {
            morphemes_ok = false;
            mismatch_positions.push(position);
        }
        words.push(AlignedWord {
            position,
            form: forms[position],
            gloss: glosses[position],
            morphemes: same.then_some(split.morphemes),
        });
    }
    mismatch_positions.extend(common..forms.len().max(glosses.len()));
    let words_aligned = forms.len() == glosses.len();
    Alignment {
        report: AlignmentReport {
            word_count_transcription: forms.len(),
            word_count_gloss: glosses.len(),
            words_aligned,
            morphemes_aligned: check_morphemes.then_some(morphemes_ok && words_aligned),
            mismatch_positions,
        },
        words,
    }
}

pub fn check_alignment(example: &IgtExample) -> Result<AlignmentReport, ParseError> {
    check_alignment_with(example, AlignOptions::default())
}

pub fn check_alignment_with(example: &IgtExample, options: AlignOptions) -> Result<AlignmentReport, ParseError> {
    let gloss = parse_gloss_line_with(&example.gloss_text, options.parse)?;
    Ok(align(&example.transcription, example.segmented, &gloss, options).report)
}

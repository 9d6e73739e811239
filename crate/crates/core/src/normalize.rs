//! Grammatical gloss inventory, coverage, and label normalization maps.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::igt::{parse_gloss_line, GlossKind, GlossLine, IgtExample, ParseError, SubGloss};
use crate::ingest::{read_utf8, Corpus, IngestError};

/// Target sentinel meaning "reviewed, leave as is".
pub const KEEP: &str = "*KEEP";

const STARTER_MAP: &str = include_str!("../data/unimorph_starter.tsv");

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlossInventory {
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
}

impl GlossInventory {
    pub fn add_line(&mut self, line: &GlossLine) {
        for sub in line.subglosses().filter(|s| s.kind == GlossKind::Grammatical) {
            *self.counts.entry(sub.text.clone()).or_default() += 1;
            self.total += 1;
        }
    }

    /// Pointwise sum, for combining shards.
    pub fn merge(mut self, other: &GlossInventory) -> Self {
        for (label, n) in &other.counts {
            *self.counts.entry(label.clone()).or_default() += n;
        }
        self.total += other.total;
        self
    }

    pub fn unique(&self) -> usize {
        self.counts.len()
    }

    /// Labels by count descending, ties in lexicographic order.
    pub fn ranked(&self) -> Vec<(String, u64)> {
        let mut ranked: Vec<(String, u64)> = self.counts.iter().map(|(l, n)| (l.clone(), *n)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked
    }
}

#[derive(Debug, Clone, Default)]
pub struct Extraction {
    pub inventory: GlossInventory,
    pub skipped: Vec<(String, ParseError)>,
}

/// Counts grammatical sub-glosses over the corpus. Derived unsegmented
/// siblings are left out so that each sentence counts once.
pub fn extract_inventory(examples: &[IgtExample]) -> Extraction {
    let mut out = Extraction::default();
    for ex in examples.iter().filter(|e| !e.derived_unsegmented) {
        match parse_gloss_line(&ex.gloss_text) {
            Ok(line) => out.inventory.add_line(&line),
            Err(e) => out.skipped.push((ex.id.clone(), e)),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoverageError {
    #[error("the gloss inventory is empty")]
    EmptyInventory,
    #[error("k must be at least 1")]
    ZeroK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub unique_count: usize,
    pub total: u64,
    pub k: usize,
    pub topk_fraction: f64,
    pub ranked: Vec<(String, u64)>,
}

pub fn coverage_report(inventory: &GlossInventory, k: usize) -> Result<CoverageReport, CoverageError> {
    if k == 0 {
        return Err(CoverageError::ZeroK);
    }
    if inventory.total == 0 {
        return Err(CoverageError::EmptyInventory);
    }
    let ranked = inventory.ranked();
    let top: u64 = ranked.iter().take(k).map(|(_, n)| n).sum();
    Ok(CoverageReport {
        unique_count: ranked.len(),
        total: inventory.total,
        k,
        topk_fraction: top as f64 / inventory.total as f64,
        ranked,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("line {line}: expected source<TAB>target")]
    Malformed { line: usize },
    #[error("line {line}: label {label:?} is not a single sub-gloss")]
    InvalidLabel { line: usize, label: String },
    #[error("line {line}: {label:?} is mapped more than once")]
    DuplicateSource { line: usize, label: String },
    #[error("{label:?} maps to {via:?}, which maps on to {target:?}")]
    ChainDetected { label: String, via: String, target: String },
    #[error("labels {labels:?} map in a cycle")]
    CycleDetected { labels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapEntry {
    pub target: String,
    /// Written as `*KEEP` rather than an explicit identity row.
    pub kept: bool,
    pub note: Option<String>,
}

/// Label rewrite table whose targets are all fixed points.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NormalizationMap {
    entries: BTreeMap<String, MapEntry>,
}

fn valid_label(label: &str) -> bool {
    !label.is_empty() && !label.chars().any(|c| c.is_whitespace() || c == '-' || c == '.' || c == '=')
}

impl NormalizationMap {
    /// Builds and validates a map from (source, target) pairs.
    pub fn from_pairs<S: AsRef<str>, T: AsRef<str>>(pairs: &[(S, T)]) -> Result<Self, MapError> {
        let rows: String = pairs
            .iter()
            .map(|(s, t)| format!("{}\t{}\n", s.as_ref(), t.as_ref()))
            .collect();
        Self::parse(&rows)
    }

    pub fn parse(text: &str) -> Result<Self, MapError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
            if cols.len() < 2 {
                return Err(MapError::Malformed { line });
            }
            let (source, target) = (cols[0], cols[1]);
            for label in [source, target] {
                if !valid_label(label) && label != KEEP {
                    return Err(MapError::InvalidLabel { line, label: label.to_string() });
                }
            }
            if source == KEEP {
                return Err(MapError::InvalidLabel { line, label: source.to_string() });
            }
            let kept = target == KEEP;
            let entry = MapEntry {
                target: if kept { source.to_string() } else { target.to_string() },
                kept,
                note: cols.get(2).filter(|n| !n.is_empty()).map(|n| n.to_string()),
            };
            if entries.insert(source.to_string(), entry).is_some() {
                return Err(MapError::DuplicateSource { line, label: source.to_string() });
            }
        }
        let map = NormalizationMap { entries };
        map.validate()?;
        Ok(map)
    }

    fn validate(&self) -> Result<(), MapError> {
        for (source, entry) in &self.entries {
            let via = &entry.target;
            if via == source {
                continue;
            }
            let Some(next) = self.entries.get(via).map(|e| &e.target) else {
                continue;
            };
            if next == via {
                continue;
            }
            let mut labels = vec![source.clone(), via.clone()];
            let mut cur = next.clone();
            loop {
                if cur == *source {
                    return Err(MapError::CycleDetected { labels });
                }
                match self.entries.get(&cur) {
                    Some(e) if e.target != cur && !labels.contains(&cur) => {
                        labels.push(cur.clone());
                        cur = e.target.clone();
                    }
                    _ => break,
                }
            }
            return Err(MapError::ChainDetected { label: source.clone(), via: via.clone(), target: next.clone() });
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, NormalizeFileError> {
        Ok(Self::parse(&read_utf8(path)?)?)
    }

    /// The bundled mapping covering common unambiguous labels.
    pub fn starter() -> Self {
        Self::parse(STARTER_MAP).expect("bundled map is valid")
    }

    pub fn get(&self, label: &str) -> Option<&str> {
        self.entries.get(label).map(|e| e.target.as_str())
    }

    pub fn entry(&self, label: &str) -> Option<&MapEntry> {
        self.entries.get(label)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn rewrite(&self, sub: &mut SubGloss) {
        if sub.kind != GlossKind::Grammatical {
            return;
        }
        if let Some(target) = self.get(&sub.text) {
            if target != sub.text {
                *sub = SubGloss::new(target);
            }
        }
    }

    pub fn apply_to_line(&self, line: &GlossLine) -> GlossLine {
        let mut out = line.clone();
        for word in &mut out.words {
            for sub in word.subglosses_mut() {
                self.rewrite(sub);
            }
        }
        out
    }

    /// Rewrites a raw gloss string token by token, so whitespace and
    /// separators come back byte for byte.
    pub fn apply_to_text(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len());
        let mut rest = text;
        while !rest.is_empty() {
            let ws = rest.find(|c: char| !c.is_whitespace()).unwrap_or(rest.len());
            out.push_str(&rest[..ws]);
            rest = &rest[ws..];
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            let token = &rest[..end];
            match parse_gloss_line(token) {
                Ok(line) => out.push_str(&self.apply_to_line(&line).to_string()),
                Err(_) => out.push_str(token),
            }
            rest = &rest[end..];
        }
        out
    }

    pub fn apply_to_example(&self, example: &IgtExample) -> IgtExample {
        IgtExample { gloss_text: self.apply_to_text(&example.gloss_text), ..example.clone() }
    }

    pub fn apply_to_corpus(&self, corpus: &Corpus) -> Corpus {
        Corpus::new(corpus.examples.iter().map(|e| self.apply_to_example(e)).collect())
    }
}

#[derive(Debug, Error)]
pub enum NormalizeFileError {
    #[error(transparent)]
    Read(#[from] IngestError),
    #[error(transparent)]
    Map(#[from] MapError),
}

//! Reading source corpora into canonical records and the preprocessing
//! pipeline that turns them into a [`Corpus`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::igt::{
    detect_segmentation_with, normalize_spacing, parse_gloss_line, strip_segmentation, unsegmented_id, BoundaryRule,
    IgtExample, ParseError, Segmented,
};
use crate::langid::LanguageIdentifier;

/// Glottocode bucket for records without one.
pub const UNKNOWN_LANGUAGE: &str = "unknown";

/// Extra field recording the language a rejected translation was detected as.
pub const TRANSLATION_LANGID_FIELD: &str = "translation_langid";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: invalid UTF-8 at byte offset {offset}")]
    Encoding { path: PathBuf, offset: usize },
    #[error("line {line}: malformed record ({reason})")]
    MalformedRecord { line: usize, reason: String },
    #[error("line {line}: record {id:?} violates the schema at field `{field}`")]
    SchemaViolation { line: usize, id: String, field: String },
    #[error("cannot parse language table line {line}")]
    LanguageTable { line: usize },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io { path: path.to_path_buf(), source }
}

pub(crate) fn read_utf8(path: &Path) -> Result<String, IngestError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    String::from_utf8(bytes).map_err(|e| IngestError::Encoding {
        path: path.to_path_buf(),
        offset: e.utf8_error().valid_up_to(),
    })
}

/// Metadata supplied by the caller for a whole source file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceMeta {
    /// Corpus of origin, also used as the id prefix.
    pub name: String,
    pub glottocode: Option<String>,
    pub language_name: Option<String>,
    pub metalang: Option<String>,
    /// Segmentation flag declared by the source, overriding detection.
    pub segmented: Option<Segmented>,
}

impl SourceMeta {
    pub fn named(name: impl Into<String>) -> Self {
        SourceMeta { name: name.into(), ..Default::default() }
    }

    fn example(&self, id: String, transcription: &str, gloss: &str, translation: Option<&str>) -> IgtExample {
        IgtExample {
            id,
            glottocode: self.glottocode.clone(),
            language_name: self.language_name.clone(),
            metalang: self.metalang.clone(),
            source: self.name.clone(),
            transcription: transcription.to_string(),
            segmented: self.segmented.unwrap_or(Segmented::Unknown),
            derived_unsegmented: false,
            gloss_text: gloss.to_string(),
            translation: translation.map(str::to_string),
            extra: BTreeMap::new(),
        }
    }
}

/// Parses the shared-task format record by record. Each entry holds either
/// the canonical records for one source record or the reason it was rejected.
pub fn parse_sigmorphon(text: &str, meta: &SourceMeta) -> Vec<Result<Vec<IgtExample>, IngestError>> {
    let mut out = Vec::new();
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    let mut start_line = 0;
    let mut count = 0;
    let mut flush = |fields: &mut BTreeMap<&str, &str>, start_line: usize, out: &mut Vec<_>| {
        if fields.is_empty() {
            return;
        }
        count += 1;
        out.push(sigmorphon_record(fields, start_line, count, meta));
        fields.clear();
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut fields, start_line, &mut out);
            continue;
        }
        if fields.is_empty() {
            start_line = i + 1;
        }
        if let Some(rest) = line.strip_prefix('\\') {
            let (tag, value) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
            if matches!(tag, "t" | "m" | "g" | "l") {
                fields.insert(tag, value.trim());
            }
        }
    }
    flush(&mut fields, start_line, &mut out);
    out
}

fn sigmorphon_record(
    fields: &BTreeMap<&str, &str>,
    line: usize,
    index: usize,
    meta: &SourceMeta,
) -> Result<Vec<IgtExample>, IngestError> {
    let missing = |tag: &str| IngestError::MalformedRecord { line, reason: format!("missing \\{tag} line") };
    let transcription = fields.get("t").copied().filter(|t| !t.is_empty()).ok_or_else(|| missing("t"))?;
    let gloss = fields.get("g").copied().filter(|g| !g.is_empty()).ok_or_else(|| missing("g"))?;
    let translation = fields.get("l").copied().filter(|l| !l.is_empty());
    let id = format!("{}-{index}", meta.name);
    match fields.get("m").copied().filter(|m| !m.is_empty()) {
        Some(segmentation) => {
            let mut segmented = meta.example(id.clone(), segmentation, gloss, translation);
            segmented.segmented = Segmented::Yes;
            let mut raw = meta.example(unsegmented_id(&id), transcription, gloss, translation);
            raw.segmented = Segmented::No;
            raw.derived_unsegmented = true;
            Ok(vec![segmented, raw])
        }
        None => Ok(vec![meta.example(id, transcription, gloss, translation)]),
    }
}

pub fn read_sigmorphon(path: &Path, meta: &SourceMeta) -> Result<Vec<IgtExample>, IngestError> {
    let text = read_utf8(path)?;
    let mut examples = Vec::new();
    for record in parse_sigmorphon(&text, meta) {
        examples.extend(record?);
    }
    Ok(examples)
}

/// An ordered collection of records with a per-language index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub examples: Vec<IgtExample>,
    /// Glottocode (or [`UNKNOWN_LANGUAGE`]) to example ids.
    pub index: BTreeMap<String, Vec<String>>,
    /// Record count per source, in order of first appearance.
    pub provenance: Vec<(String, usize)>,
}

impl Corpus {
    pub fn new(examples: Vec<IgtExample>) -> Self {
        let mut index: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut provenance: Vec<(String, usize)> = Vec::new();
        for ex in &examples {
            let lang = ex.glottocode.clone().unwrap_or_else(|| UNKNOWN_LANGUAGE.to_string());
            index.entry(lang).or_default().push(ex.id.clone());
            match provenance.iter_mut().find(|(s, _)| *s == ex.source) {
                Some((_, n)) => *n += 1,
                None => provenance.push((ex.source.clone(), 1)),
            }
        }
        Corpus { examples, index, provenance }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&IgtExample> {
        self.examples.iter().find(|e| e.id == id)
    }
}

const REQUIRED_STRINGS: [&str; 4] = ["id", "source", "transcription", "gloss_text"];
const NULLABLE_STRINGS: [&str; 4] = ["glottocode", "language_name", "metalang", "translation"];

/// Parses one canonical line, naming the first field that breaks the schema.
pub fn parse_canonical_line(line: &str, line_no: usize) -> Result<IgtExample, IngestError> {
    let value: Value = serde_json::from_str(line).map_err(|e| IngestError::MalformedRecord {
        line: line_no,
        reason: e.to_string(),
    })?;
    let Value::Object(map) = value else {
        return Err(IngestError::MalformedRecord { line: line_no, reason: "not a JSON object".into() });
    };
    let id = map.get("id").and_then(Value::as_str).unwrap_or_default().to_string();
    let violation = |field: &str| IngestError::SchemaViolation { line: line_no, id: id.clone(), field: field.into() };
    for field in REQUIRED_STRINGS {
        if !map.get(field).is_some_and(Value::is_string) {
            return Err(violation(field));
        }
    }
    for field in NULLABLE_STRINGS {
        if !map.get(field).is_none_or(|v| v.is_string() || v.is_null()) {
            return Err(violation(field));
        }
    }
    if !map.get("segmented").and_then(Value::as_str).is_some_and(|s| s.parse::<Segmented>().is_ok()) {
        return Err(violation("segmented"));
    }
    if !map.get("derived_unsegmented").is_some_and(Value::is_boolean) {
        return Err(violation("derived_unsegmented"));
    }
    let example: IgtExample =
        serde_json::from_value(Value::Object(map)).map_err(|e| IngestError::MalformedRecord {
            line: line_no,
            reason: e.to_string(),
        })?;
    if let Some(field) = example.violation() {
        return Err(violation(field));
    }
    Ok(example)
}

pub fn parse_canonical(text: &str) -> Result<Corpus, IngestError> {
    let mut examples = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let example = parse_canonical_line(line, i + 1)?;
        if !seen.insert(example.id.clone()) {
            return Err(IngestError::SchemaViolation { line: i + 1, id: example.id, field: "id".into() });
        }
        examples.push(example);
    }
    Ok(Corpus::new(examples))
}

pub fn read_canonical(path: &Path) -> Result<Corpus, IngestError> {
    parse_canonical(&read_utf8(path)?)
}

pub fn to_canonical_line(example: &IgtExample) -> String {
    serde_json::to_string(example).expect("records serialize")
}

pub fn write_canonical(corpus: &Corpus, path: &Path) -> Result<(), IngestError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for example in &corpus.examples {
        writeln!(out, "{}", to_canonical_line(example)).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

/// Glottocode to language name and family, read from a three-column TSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LanguageTable {
    entries: BTreeMap<String, (String, Option<String>)>,
}

impl LanguageTable {
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() < 2 || cols[0].is_empty() {
                return Err(IngestError::LanguageTable { line: i + 1 });
            }
            let family = cols.get(2).filter(|f| !f.is_empty()).map(|f| f.to_string());
            entries.insert(cols[0].to_string(), (cols[1].to_string(), family));
        }
        Ok(LanguageTable { entries })
    }

    pub fn read(path: &Path) -> Result<Self, IngestError> {
        Self::parse(&read_utf8(path)?)
    }

    pub fn name(&self, glottocode: &str) -> Option<&str> {
        self.entries.get(glottocode).map(|(n, _)| n.as_str())
    }

    pub fn family(&self, glottocode: &str) -> Option<&str> {
        self.entries.get(glottocode).and_then(|(_, f)| f.as_deref())
    }
}

const METALANGUAGES: [(&str, &str); 12] = [
    ("deu", "German"),
    ("eng", "English"),
    ("fra", "French"),
    ("ind", "Indonesian"),
    ("ita", "Italian"),
    ("jpn", "Japanese"),
    ("nld", "Dutch"),
    ("por", "Portuguese"),
    ("rus", "Russian"),
    ("spa", "Spanish"),
    ("tur", "Turkish"),
    ("zho", "Chinese"),
];

/// Display name of a metalanguage code, or the input when it is not a known code.
pub fn metalang_name(code: &str) -> &str {
    METALANGUAGES.iter().find(|(c, _)| *c == code).map_or(code, |(_, n)| n)
}

/// The three-letter code for a metalanguage given as a code or a name.
pub fn metalang_code(lang: &str) -> &str {
    METALANGUAGES
        .iter()
        .find(|(c, n)| *c == lang || n.eq_ignore_ascii_case(lang))
        .map_or(lang, |(c, _)| c)
}

/// Blanks the translation when the identifier confidently names a language
/// other than the declared metalanguage.
pub fn verify_translation(example: &IgtExample, identifier: &dyn LanguageIdentifier) -> IgtExample {
    let mut out = example.clone();
    let (Some(translation), Some(metalang)) = (example.translation_text(), example.metalang.as_deref()) else {
        return out;
    };
    if let Some(detected) = identifier.identify(translation).lang() {
        if detected != metalang_code(metalang) {
            debug!("{}: translation detected as {detected}, declared {metalang}", example.id);
            out.translation = None;
            out.extra.insert(TRANSLATION_LANGID_FIELD.into(), Value::String(detected.to_string()));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Sigmorphon,
    Canonical,
}

#[derive(Debug, Clone)]
pub enum SourceData {
    File { path: PathBuf, format: SourceFormat },
    Records(Vec<IgtExample>),
}

#[derive(Debug, Clone)]
pub struct Source {
    pub meta: SourceMeta,
    pub data: SourceData,
}

impl Source {
    pub fn file(path: impl Into<PathBuf>, format: SourceFormat, meta: SourceMeta) -> Self {
        Source { meta, data: SourceData::File { path: path.into(), format } }
    }

    pub fn records(meta: SourceMeta, records: Vec<IgtExample>) -> Self {
        Source { meta, data: SourceData::Records(records) }
    }

    fn load(&self) -> Result<Vec<Result<IgtExample, IngestError>>, IngestError> {
        match &self.data {
            SourceData::Records(records) => Ok(records.iter().cloned().map(Ok).collect()),
            SourceData::File { path, format: SourceFormat::Sigmorphon } => {
                let text = read_utf8(path)?;
                Ok(parse_sigmorphon(&text, &self.meta)
                    .into_iter()
                    .flat_map(|r| match r {
                        Ok(records) => records.into_iter().map(Ok).collect::<Vec<_>>(),
                        Err(e) => vec![Err(e)],
                    })
                    .collect())
            }
            SourceData::File { path, format: SourceFormat::Canonical } => {
                let text = read_utf8(path)?;
                Ok(text
                    .lines()
                    .enumerate()
                    .filter(|(_, l)| !l.trim().is_empty())
                    .map(|(i, l)| parse_canonical_line(l, i + 1))
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildOptions {
    pub duplicate_unsegmented: bool,
    /// Run the dash heuristic on records whose source declared no flag.
    pub detect_segmentation: bool,
    pub boundary_rule: BoundaryRule,
    pub nfc: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            duplicate_unsegmented: true,
            detect_segmentation: true,
            boundary_rule: BoundaryRule::default(),
            nfc: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceCount {
    pub source: String,
    pub read: usize,
    pub skipped: usize,
    pub derived: usize,
    pub kept: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skip {
    pub source: String,
    pub id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub sources: Vec<SourceCount>,
    pub skipped: Vec<Skip>,
    /// Gloss lines kept despite separator-only tokens.
    pub warnings: Vec<Skip>,
    /// (original id, new id) for records whose id was already taken.
    pub rekeyed: Vec<(String, String)>,
    pub translations_blanked: usize,
}

impl BuildReport {
    pub fn read_total(&self) -> usize {
        self.sources.iter().map(|s| s.read).sum()
    }

    pub fn skip_fraction(&self) -> f64 {
        let read = self.read_total();
        if read == 0 {
            0.0
        } else {
            self.skipped.len() as f64 / read as f64
        }
    }
}

fn nfc(s: &str) -> String {
    s.nfc().collect()
}

fn prepare(mut ex: IgtExample, meta: &SourceMeta, options: &BuildOptions) -> IgtExample {
    if options.nfc {
        ex.transcription = nfc(&ex.transcription);
        ex.gloss_text = nfc(&ex.gloss_text);
        ex.translation = ex.translation.as_deref().map(nfc);
    }
    ex.transcription = normalize_spacing(&ex.transcription);
    ex.gloss_text = normalize_spacing(&ex.gloss_text);
    ex.translation = ex.translation.as_deref().map(normalize_spacing).filter(|t| !t.is_empty());
    if ex.source.is_empty() {
        ex.source = meta.name.clone();
    }
    ex.glottocode = ex.glottocode.or_else(|| meta.glottocode.clone());
    ex.language_name = ex.language_name.or_else(|| meta.language_name.clone());
    ex.metalang = ex.metalang.or_else(|| meta.metalang.clone());
    if let Some(flag) = meta.segmented {
        if ex.segmented == Segmented::Unknown {
            ex.segmented = flag;
        }
    }
    if ex.segmented == Segmented::Unknown && options.detect_segmentation {
        ex.segmented = detect_segmentation_with(&ex.transcription, options.boundary_rule);
    }
    ex
}

#[derive(Debug, Clone)]
pub struct Built {
    pub corpus: Corpus,
    pub report: BuildReport,
}

/// Runs the preprocessing pipeline over all sources: Unicode NFC, spacing
/// normalization, segmentation flags, translation verification, unsegmented
/// duplication, id assignment and indexing. Bad records are skipped and
/// reported; only an unreadable source is an error.
pub fn build_corpus(
    sources: &[Source],
    options: &BuildOptions,
    identifier: Option<&dyn LanguageIdentifier>,
    languages: Option<&LanguageTable>,
) -> Result<Built, IngestError> {
    let mut report = BuildReport::default();
    let mut batches = Vec::with_capacity(sources.len());
    for source in sources {
        batches.push(source.load()?);
    }

    let mut staged: Vec<(usize, IgtExample)> = Vec::new();
    for (si, (source, batch)) in sources.iter().zip(batches).enumerate() {
        let mut count = SourceCount { source: source.meta.name.clone(), ..Default::default() };
        for record in batch {
            count.read += 1;
            let ex = match record {
                Ok(ex) => prepare(ex, &source.meta, options),
                Err(e) => {
                    warn!("{}: skipping record: {e}", source.meta.name);
                    count.skipped += 1;
                    report.skipped.push(Skip { source: source.meta.name.clone(), id: None, reason: e.to_string() });
                    continue;
                }
            };
            let problem = match (ex.violation(), parse_gloss_line(&ex.gloss_text)) {
                (Some(field), _) => Some(format!("invalid {field}")),
                (None, Err(ParseError::EmptyGlossLine)) => Some("empty gloss line".to_string()),
                (None, Err(e @ ParseError::DegenerateToken { .. })) => {
                    report.warnings.push(Skip {
                        source: source.meta.name.clone(),
                        id: Some(ex.id.clone()),
                        reason: e.to_string(),
                    });
                    None
                }
                (None, Ok(_)) => None,
            };
            if let Some(reason) = problem {
                warn!("{}: skipping {}: {reason}", source.meta.name, ex.id);
                count.skipped += 1;
                report.skipped.push(Skip { source: source.meta.name.clone(), id: Some(ex.id.clone()), reason });
                continue;
            }
            let mut ex = match identifier {
                Some(identifier) => verify_translation(&ex, identifier),
                None => ex,
            };
            if ex.extra.contains_key(TRANSLATION_LANGID_FIELD) && ex.translation.is_none() {
                report.translations_blanked += 1;
            }
            if let (Some(table), None) = (languages, &ex.language_name) {
                ex.language_name = ex.glottocode.as_deref().and_then(|g| table.name(g)).map(str::to_string);
            }
            staged.push((si, ex));
        }
        report.sources.push(count);
    }

    if options.duplicate_unsegmented {
        let ids: HashSet<String> = staged.iter().map(|(_, e)| e.id.clone()).collect();
        let mut with_siblings = Vec::with_capacity(staged.len());
        for (si, ex) in staged {
            let sibling = (ex.segmented == Segmented::Yes && !ex.id.is_empty() && !ids.contains(&unsegmented_id(&ex.id)))
                .then(|| strip_segmentation(&ex).ok())
                .flatten();
            with_siblings.push((si, ex));
            if let Some(sibling) = sibling {
                report.sources[si].derived += 1;
                with_siblings.push((si, sibling));
            }
        }
        staged = with_siblings;
    }

    let mut taken: HashMap<String, usize> = HashMap::new();
    let mut examples = Vec::with_capacity(staged.len());
    for (position, (si, mut ex)) in staged.into_iter().enumerate() {
        if ex.id.is_empty() {
            ex.id = format!("{}-r{position}", sources[si].meta.name);
        }
        let seen = taken.entry(ex.id.clone()).or_insert(0);
        *seen += 1;
        if *seen > 1 {
            let mut n = *seen;
            let mut candidate = format!("{}~{n}", ex.id);
            while taken.contains_key(&candidate) {
                n += 1;
                candidate = format!("{}~{n}", ex.id);
            }
            warn!("duplicate id {:?} re-keyed as {candidate:?}", ex.id);
            report.rekeyed.push((ex.id.clone(), candidate.clone()));
            taken.insert(candidate.clone(), 1);
            ex.id = candidate;
        }
        report.sources[si].kept += 1;
        examples.push(ex);
    }
    Ok(Built { corpus: Corpus::new(examples), report })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageCount {
    pub glottocode: String,
    pub name: Option<String>,
    pub family: Option<String>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyCount {
    pub family: String,
    pub languages: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total: usize,
    /// Records without a glottocode.
    pub unknown: usize,
    /// Sorted by count descending, then glottocode.
    pub languages: Vec<LanguageCount>,
    pub families: Vec<FamilyCount>,
    /// 25th, 50th and 75th percentiles of records per known language.
    pub quantiles: [f64; 3],
}

/// Linear-interpolation quantile of sorted values.
fn quantile(sorted: &[usize], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] as f64 + (sorted[hi] as f64 - sorted[lo] as f64) * frac
}

pub fn corpus_stats(corpus: &Corpus, languages: Option<&LanguageTable>) -> CorpusStats {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut unknown = 0;
    for ex in &corpus.examples {
        match ex.glottocode.as_deref() {
            Some(code) if !code.is_empty() => *counts.entry(code).or_default() += 1,
            _ => unknown += 1,
        }
    }
    let mut rows: Vec<LanguageCount> = counts
        .iter()
        .map(|(&code, &count)| LanguageCount {
            glottocode: code.to_string(),
            name: languages.and_then(|t| t.name(code)).map(str::to_string),
            family: languages.and_then(|t| t.family(code)).map(str::to_string),
            count,
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.glottocode.cmp(&b.glottocode)));

    let mut families: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for row in &rows {
        let key = row.family.clone().unwrap_or_else(|| "None".to_string());
        let entry = families.entry(key).or_default();
        entry.0 += 1;
        entry.1 += row.count;
    }
    if unknown > 0 {
        rows.push(LanguageCount { glottocode: UNKNOWN_LANGUAGE.into(), name: None, family: None, count: unknown });
    }
    let mut families: Vec<FamilyCount> = families
        .into_iter()
        .map(|(family, (languages, count))| FamilyCount { family, languages, count })
        .collect();
    families.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.family.cmp(&b.family)));

    let mut sorted: Vec<usize> = counts.values().copied().collect();
    sorted.sort_unstable();
    CorpusStats {
        total: corpus.len(),
        unknown,
        languages: rows,
        families,
        quantiles: [quantile(&sorted, 0.25), quantile(&sorted, 0.5), quantile(&sorted, 0.75)],
    }
}

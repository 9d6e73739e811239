//! Grambank feature matrices and corpus coverage analysis.
//!
//! The pipeline is: load raw multistate values, [`prepare_matrix`] (filter,
//! binarize, one dialect per language), [`impute`], then compare a
//! corpus-weighted [`weighted_average`] with the uniform one.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Corpus;

#[derive(Debug, Error)]
pub enum TypologyError {
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: missing column {column}")]
    MissingColumn { path: String, column: &'static str },
    #[error("{path} line {line}: value {value:?} is not a small non-negative integer")]
    BadValue { path: String, line: u64, value: String },
    #[error("conflicting values for {language}/{feature}")]
    ConflictingValue { language: String, feature: String },
    #[error("nothing left after filtering")]
    EmptyAfterFiltering,
    #[error("feature {0} has no observed values")]
    AllMissingFeature(String),
    #[error("matrix still has missing cells")]
    Incomplete,
    #[error("total weight of matrix languages is zero")]
    ZeroTotalWeight,
    #[error("vector has zero norm")]
    ZeroNorm,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

type Result<T> = std::result::Result<T, TypologyError>;

/// Multistate values as read from the value table; `None` is missing.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawMatrix {
    pub languages: Vec<String>,
    pub features: Vec<String>,
    pub values: Vec<Vec<Option<u8>>>,
}

impl RawMatrix {
    /// Builds a matrix from (language, feature, value) triples. Languages and
    /// features are sorted, so row order in the input does not matter.
    pub fn from_triples<I, L, F>(triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (L, F, Option<u8>)>,
        L: Into<String>,
        F: Into<String>,
    {
        let mut cells: BTreeMap<(String, String), Option<u8>> = BTreeMap::new();
        for (l, f, v) in triples {
            let key = (l.into(), f.into());
            match cells.get(&key) {
                Some(prev) if prev.is_some() && v.is_some() && *prev != v => {
                    return Err(TypologyError::ConflictingValue { language: key.0, feature: key.1 });
                }
                Some(Some(_)) => {}
                _ => {
                    cells.insert(key, v);
                }
            }
        }
        let languages: Vec<String> = cells.keys().map(|(l, _)| l.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        let features: Vec<String> = cells.keys().map(|(_, f)| f.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        let fi: BTreeMap<&str, usize> = features.iter().enumerate().map(|(i, f)| (f.as_str(), i)).collect();
        let li: BTreeMap<&str, usize> = languages.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let mut values = vec![vec![None; features.len()]; languages.len()];
        for ((l, f), v) in &cells {
            values[li[l.as_str()]][fi[f.as_str()]] = *v;
        }
        Ok(RawMatrix { languages, features, values })
    }
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let text_head = std::fs::read_to_string(path)
        .map_err(|e| TypologyError::Csv { path: path.display().to_string(), source: e.into() })?;
    let first = text_head.lines().next().unwrap_or("");
    let delimiter = if first.contains('\t') { b'\t' } else { b',' };
    csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_path(path)
        .map_err(|source| TypologyError::Csv { path: path.display().to_string(), source })
}

fn column(headers: &csv::StringRecord, names: &[&str], path: &Path, label: &'static str) -> Result<usize> {
    headers
        .iter()
        .position(|h| names.iter().any(|n| h.trim().eq_ignore_ascii_case(n)))
        .ok_or(TypologyError::MissingColumn { path: path.display().to_string(), column: label })
}

/// Reads a Grambank-style value table (CSV or TSV with a header row).
/// `?` and empty values are missing.
pub fn read_values(path: &Path) -> Result<RawMatrix> {
    let mut rdr = reader(path)?;
    let csv_err = |source| TypologyError::Csv { path: path.display().to_string(), source };
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let lc = column(&headers, &["Language_ID", "language", "glottocode"], path, "Language_ID")?;
    let fc = column(&headers, &["Parameter_ID", "feature"], path, "Parameter_ID")?;
    let vc = column(&headers, &["Value", "value"], path, "Value")?;
    let mut triples = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let raw = record.get(vc).unwrap_or("").trim();
        let value = match raw {
            "" | "?" => None,
            v => Some(v.parse::<u8>().map_err(|_| TypologyError::BadValue {
                path: path.display().to_string(),
                line,
                value: v.to_string(),
            })?),
        };
        triples.push((record.get(lc).unwrap_or("").trim().to_string(), record.get(fc).unwrap_or("").trim().to_string(), value));
    }
    RawMatrix::from_triples(triples)
}

/// Reads multistate feature ids: one per line, or a table with an `ID` column.
pub fn read_multistate(path: &Path) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| TypologyError::Csv { path: path.display().to_string(), source: e.into() })?;
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let Some(first) = lines.next() else { return Ok(BTreeSet::new()) };
    if first.contains(',') || first.contains('\t') {
        let mut rdr = reader(path)?;
        let csv_err = |source| TypologyError::Csv { path: path.display().to_string(), source };
        let headers = rdr.headers().map_err(csv_err)?.clone();
        let ic = column(&headers, &["ID", "Parameter_ID", "feature"], path, "ID")?;
        let mut ids = BTreeSet::new();
        for record in rdr.records() {
            ids.insert(record.map_err(csv_err)?.get(ic).unwrap_or("").trim().to_string());
        }
        ids.remove("");
        return Ok(ids);
    }
    let mut ids: BTreeSet<String> = lines.map(str::to_string).collect();
    if !first.eq_ignore_ascii_case("id") {
        ids.insert(first.to_string());
    }
    Ok(ids)
}

/// Reads a dialect-to-language table with columns `ID` and
/// `Language_level_ID` (as in Grambank's languages file).
pub fn read_dialects(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut rdr = reader(path)?;
    let csv_err = |source| TypologyError::Csv { path: path.display().to_string(), source };
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let ic = column(&headers, &["ID", "dialect", "glottocode"], path, "ID")?;
    let pc = column(&headers, &["Language_level_ID", "language"], path, "Language_level_ID")?;
    let mut map = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let id = record.get(ic).unwrap_or("").trim();
        let parent = record.get(pc).unwrap_or("").trim();
        if !id.is_empty() && !parent.is_empty() {
            map.insert(id.to_string(), parent.to_string());
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cell {
    Missing,
    Observed(u8),
    Imputed(u8),
}

impl Cell {
    pub fn value(self) -> Option<u8> {
        match self {
            Cell::Missing => None,
            Cell::Observed(v) | Cell::Imputed(v) => Some(v),
        }
    }

    pub fn observed(self) -> Option<u8> {
        match self {
            Cell::Observed(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub languages: Vec<String>,
    pub features: Vec<String>,
    pub cells: Vec<Vec<Cell>>,
}

impl FeatureMatrix {
    pub fn missing_count(&self) -> usize {
        self.cells.iter().flatten().filter(|c| **c == Cell::Missing).count()
    }

    pub fn imputed_count(&self) -> usize {
        self.cells.iter().flatten().filter(|c| matches!(c, Cell::Imputed(_))).count()
    }

    pub fn imputed_fraction(&self) -> f64 {
        let n = self.languages.len() * self.features.len();
        if n == 0 {
            0.0
        } else {
            self.imputed_count() as f64 / n as f64
        }
    }

    fn column(&self, f: usize) -> impl Iterator<Item = Cell> + '_ {
        self.cells.iter().map(move |row| row[f])
    }

    fn select_features(&self, keep: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            languages: self.languages.clone(),
            features: keep.iter().map(|&f| self.features[f].clone()).collect(),
            cells: self.cells.iter().map(|row| keep.iter().map(|&f| row[f]).collect()).collect(),
        }
    }
}

/// How multistate features become binary columns.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Binarization {
    /// Grambank's convention: `Xa` is set for values 1 and 3, `Xb` for 2 and 3.
    #[default]
    GrambankPairs,
    /// One column `X_v` per observed value `v`.
    OneHot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareOptions {
    pub lang_missing_max: f64,
    pub feat_missing_max: f64,
    pub binarization: Binarization,
    /// Features treated as multistate in addition to any with values above 1.
    pub multistate: BTreeSet<String>,
    /// Dialect glottocode to language-level glottocode.
    pub dialects: BTreeMap<String, String>,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        PrepareOptions {
            lang_missing_max: 0.36,
            feat_missing_max: 0.36,
            binarization: Binarization::GrambankPairs,
            multistate: BTreeSet::new(),
            dialects: BTreeMap::new(),
        }
    }
}

/// Counts of what [`prepare_matrix`] removed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepareReport {
    pub dropped_languages: Vec<String>,
    pub dropped_features: Vec<String>,
    pub dropped_dialects: Vec<String>,
}

/// Maps a raw feature value onto one derived binary column.
type Recode = Box<dyn Fn(u8) -> u8>;

fn binary_columns(feature: &str, observed: &BTreeSet<u8>, multistate: bool, mode: Binarization) -> Vec<(String, Recode)> {
    if !multistate {
        return vec![(feature.to_string(), Box::new(|v: u8| u8::from(v > 0)))];
    }
    match mode {
        Binarization::GrambankPairs => vec![
            (format!("{feature}a"), Box::new(|v: u8| u8::from(v == 1 || v == 3))),
            (format!("{feature}b"), Box::new(|v: u8| u8::from(v == 2 || v == 3))),
        ],
        Binarization::OneHot => observed
            .iter()
            .map(|&value| (format!("{feature}_{value}"), Box::new(move |v: u8| u8::from(v == value)) as Recode))
            .collect(),
    }
}

/// Drops sparse languages, then sparse features, binarizes multistate
/// features and keeps one dialect per language.
pub fn prepare_matrix(raw: &RawMatrix, options: &PrepareOptions) -> Result<(FeatureMatrix, PrepareReport)> {
    let mut report = PrepareReport::default();
    let nf = raw.features.len();
    let mut rows: Vec<usize> = Vec::new();
    for (l, row) in raw.values.iter().enumerate() {
        let missing = row.iter().filter(|v| v.is_none()).count();
        if nf > 0 && missing as f64 / nf as f64 <= options.lang_missing_max {
            rows.push(l);
        } else {
            report.dropped_languages.push(raw.languages[l].clone());
        }
    }
    let mut cols: Vec<usize> = Vec::new();
    for f in 0..nf {
        let missing = rows.iter().filter(|&&l| raw.values[l][f].is_none()).count();
        if !rows.is_empty() && missing as f64 / rows.len() as f64 <= options.feat_missing_max {
            cols.push(f);
        } else {
            report.dropped_features.push(raw.features[f].clone());
        }
    }
    if rows.is_empty() || cols.is_empty() {
        return Err(TypologyError::EmptyAfterFiltering);
    }

    let mut features = Vec::new();
    let mut column_cells: Vec<Vec<Cell>> = Vec::new();
    for &f in &cols {
        let observed: BTreeSet<u8> = rows.iter().filter_map(|&l| raw.values[l][f]).collect();
        let multistate = options.multistate.contains(&raw.features[f]) || observed.iter().any(|&v| v > 1);
        for (name, map) in binary_columns(&raw.features[f], &observed, multistate, options.binarization) {
            features.push(name);
            column_cells.push(rows.iter().map(|&l| raw.values[l][f].map_or(Cell::Missing, |v| Cell::Observed(map(v)))).collect());
        }
    }

    // One row per language-level code, taken from its lexicographically first member.
    let mut groups: BTreeMap<String, usize> = BTreeMap::new();
    for (i, &l) in rows.iter().enumerate() {
        let code = &raw.languages[l];
        let parent = options.dialects.get(code).cloned().unwrap_or_else(|| code.clone());
        match groups.get(&parent) {
            Some(&j) if raw.languages[rows[j]] <= *code => report.dropped_dialects.push(code.clone()),
            Some(&j) => {
                report.dropped_dialects.push(raw.languages[rows[j]].clone());
                groups.insert(parent, i);
            }
            None => {
                groups.insert(parent, i);
            }
        }
    }
    report.dropped_dialects.sort();

    // Sort the binary features canonically as well.
    let mut order: Vec<usize> = (0..features.len()).collect();
    order.sort_by(|&a, &b| features[a].cmp(&features[b]));
    let matrix = FeatureMatrix {
        languages: groups.keys().cloned().collect(),
        features: order.iter().map(|&c| features[c].clone()).collect(),
        cells: groups.values().map(|&i| order.iter().map(|&c| column_cells[c][i]).collect()).collect(),
    };
    Ok((matrix, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Imputer {
    /// Feature-wise majority value, ties going to 0.
    Mode,
    /// Majority among the `k` nearest languages that observe the feature.
    Knn(usize),
}

fn majority(values: impl Iterator<Item = u8>) -> u8 {
    let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    counts.iter().find(|(_, c)| **c == best).map_or(0, |(v, _)| *v)
}

/// Mismatch rate over features both languages observe, or 1 when none.
fn hamming(a: &[Cell], b: &[Cell]) -> f64 {
    let (mut shared, mut differ) = (0usize, 0usize);
    for (x, y) in a.iter().zip(b) {
        if let (Some(x), Some(y)) = (x.observed(), y.observed()) {
            shared += 1;
            differ += usize::from(x != y);
        }
    }
    if shared == 0 {
        1.0
    } else {
        differ as f64 / shared as f64
    }
}

/// Fills every missing cell. Observed cells are never changed.
pub fn impute(matrix: &FeatureMatrix, imputer: Imputer) -> Result<FeatureMatrix> {
    for (f, name) in matrix.features.iter().enumerate() {
        if matrix.column(f).all(|c| c.observed().is_none()) {
            return Err(TypologyError::AllMissingFeature(name.clone()));
        }
    }
    let mut out = matrix.clone();
    match imputer {
        Imputer::Mode => {
            for f in 0..matrix.features.len() {
                let fill = majority(matrix.column(f).filter_map(Cell::observed));
                for row in &mut out.cells {
                    if row[f] == Cell::Missing {
                        row[f] = Cell::Imputed(fill);
                    }
                }
            }
        }
        Imputer::Knn(k) => {
            let k = k.max(1);
            for (l, row) in matrix.cells.iter().enumerate() {
                if !row.contains(&Cell::Missing) {
                    continue;
                }
                let mut neighbours: Vec<(f64, usize)> = (0..matrix.languages.len())
                    .filter(|&o| o != l)
                    .map(|o| (hamming(row, &matrix.cells[o]), o))
                    .collect();
                neighbours.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                for (f, cell) in row.iter().enumerate() {
                    if *cell != Cell::Missing {
                        continue;
                    }
                    let votes = neighbours.iter().filter_map(|&(_, o)| matrix.cells[o][f].observed()).take(k);
                    out.cells[l][f] = Cell::Imputed(majority(votes));
                }
            }
        }
    }
    Ok(out)
}

/// Languages' instance counts in a corpus, ignoring derived duplicates and
/// records without a glottocode.
pub fn corpus_weights(corpus: &Corpus) -> BTreeMap<String, u64> {
    let mut weights = BTreeMap::new();
    for e in corpus.examples.iter().filter(|e| !e.derived_unsegmented) {
        if let Some(code) = &e.glottocode {
            *weights.entry(code.clone()).or_default() += 1;
        }
    }
    weights
}

/// Keeps features observed (before imputation) for at least `min_coverage`
/// of the weight carried by the matrix languages.
pub fn coverage_filter(matrix: &FeatureMatrix, weights: &BTreeMap<String, u64>, min_coverage: f64) -> Result<FeatureMatrix> {
    let w: Vec<u64> = matrix.languages.iter().map(|l| weights.get(l).copied().unwrap_or(0)).collect();
    let total: u64 = w.iter().sum();
    if total == 0 {
        return Err(TypologyError::ZeroTotalWeight);
    }
    let keep: Vec<usize> = (0..matrix.features.len())
        .filter(|&f| {
            let covered: u64 = matrix.column(f).zip(&w).filter(|(c, _)| c.observed().is_some()).map(|(_, w)| *w).sum();
            covered as f64 / total as f64 >= min_coverage
        })
        .collect();
    if keep.is_empty() {
        return Err(TypologyError::EmptyAfterFiltering);
    }
    Ok(matrix.select_features(&keep))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedVector {
    pub features: Vec<String>,
    pub values: Vec<f64>,
    /// Weight of the matrix languages that entered the average.
    pub weight_total: u64,
    /// Weight of languages that are not in the matrix and were left out.
    pub excluded_weight: u64,
}

pub fn weighted_average(matrix: &FeatureMatrix, weights: &BTreeMap<String, u64>) -> Result<WeightedVector> {
    if matrix.missing_count() > 0 {
        return Err(TypologyError::Incomplete);
    }
    let in_matrix: BTreeSet<&str> = matrix.languages.iter().map(String::as_str).collect();
    let excluded_weight = weights.iter().filter(|(l, _)| !in_matrix.contains(l.as_str())).map(|(_, w)| *w).sum();
    let w: Vec<u64> = matrix.languages.iter().map(|l| weights.get(l).copied().unwrap_or(0)).collect();
    let weight_total: u64 = w.iter().sum();
    if weight_total == 0 {
        return Err(TypologyError::ZeroTotalWeight);
    }
    let values = (0..matrix.features.len())
        .map(|f| {
            let sum: f64 = matrix.column(f).zip(&w).map(|(c, w)| f64::from(c.value().unwrap_or(0)) * *w as f64).sum();
            sum / weight_total as f64
        })
        .collect();
    Ok(WeightedVector { features: matrix.features.clone(), values, weight_total, excluded_weight })
}

/// Every matrix language with weight 1: the global reference vector.
pub fn uniform_average(matrix: &FeatureMatrix) -> Result<WeightedVector> {
    let weights = matrix.languages.iter().map(|l| (l.clone(), 1)).collect();
    weighted_average(matrix, &weights)
}

pub fn cosine(a: &WeightedVector, b: &WeightedVector) -> Result<f64> {
    if a.values.len() != b.values.len() {
        return Err(TypologyError::DimensionMismatch(a.values.len(), b.values.len()));
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    let na = a.values.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(TypologyError::ZeroNorm);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDelta {
    pub feature: String,
    pub dataset: f64,
    pub global: f64,
    /// `dataset - global`.
    pub delta: f64,
}

/// Features ranked by absolute difference between the two vectors, largest
/// first, ties by feature id. At most `n` are returned.
pub fn underrepresented(dataset: &WeightedVector, global: &WeightedVector, n: usize) -> Result<Vec<FeatureDelta>> {
    if dataset.values.len() != global.values.len() {
        return Err(TypologyError::DimensionMismatch(dataset.values.len(), global.values.len()));
    }
    let mut deltas: Vec<FeatureDelta> = dataset
        .features
        .iter()
        .zip(dataset.values.iter().zip(&global.values))
        .map(|(f, (&d, &g))| FeatureDelta { feature: f.clone(), dataset: d, global: g, delta: d - g })
        .collect();
    deltas.sort_by(|a, b| b.delta.abs().total_cmp(&a.delta.abs()).then_with(|| a.feature.cmp(&b.feature)));
    deltas.truncate(n);
    Ok(deltas)
}

pub fn vector_tsv(dataset: &WeightedVector, global: &WeightedVector) -> String {
    let mut out = String::from("feature\tdataset\tglobal\n");
    for ((f, d), g) in dataset.features.iter().zip(&dataset.values).zip(&global.values) {
        out.push_str(&format!("{f}\t{d:.6}\t{g:.6}\n"));
    }
    out
}

pub fn deltas_tsv(deltas: &[FeatureDelta]) -> String {
    let mut out = String::from("feature\tdataset\tglobal\tdelta\n");
    for d in deltas {
        out.push_str(&format!("{}\t{:.6}\t{:.6}\t{:.6}\n", d.feature, d.dataset, d.global, d.delta));
    }
    out
}

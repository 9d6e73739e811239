//! Acceptance criteria, one summary line each.
//!
//! Criteria that need external corpora read their locations from the
//! environment:
//!
//! * `IGT_SIGMORPHON_DIR`: shared-task files named `<code>-train-track2-uncovered`
//!   and `<code>-test-track2-uncovered`, searched recursively.
//! * `IGT_CORPUS`: the full corpus as canonical JSONL.
//! * `IGT_GRAMBANK_DIR`: Grambank CLDF `values.csv` and `languages.csv`, with
//!   an optional `multistate.txt`; weights come from `IGT_CORPUS`.
//!
//! Without them those criteria report NOT RUN. The `#[ignore]`d tests at the
//! bottom run only those criteria and fail when the data is absent.

mod support {
    pub mod gen;
    pub mod mock_server;
}

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use igt_core::eval::{
    chrf, corpus_chrf, evaluate, morpheme_tally, strip_eval_punctuation, to_prediction_lines, parse_predictions,
    word_tally, ChrfParams, EvalOptions, LengthPolicy, Prediction,
};
use igt_core::glosser::{build_prompt, export_prompts, merge_lexicons, train_top_choice, GlossLexicon, Level, PromptOptions};
use igt_core::igt::{detect_segmentation, parse_gloss_line, strip_segmentation, IgtExample, Segmented};
use igt_core::ingest::{build_corpus, read_canonical, read_sigmorphon, BuildOptions, Source, SourceMeta};
use igt_core::normalize::{coverage_report, extract_inventory, NormalizationMap};
use igt_core::remote::{RemoteClient, RemoteConfig};
use igt_core::typology;
use proptest::prelude::*;
use support::gen::{self, Sampler};
use support::mock_server::{MockServer, Reply};

const METRIC_PAIRS: usize = 1_000;
const METRIC_TIME_LIMIT: Duration = Duration::from_secs(5);
const CHRF_PAIRS: usize = 200;
const CHRF_TOLERANCE: f64 = 1e-6;
const TOP_CHOICE_TOLERANCE: f64 = 2.0;
const TOP_CHOICE_TIME_LIMIT: Duration = Duration::from_secs(120);
/// (code, morpheme accuracy, word accuracy) in percent.
const TOP_CHOICE_TABLE: &[(&str, f64, f64)] = &[
    ("arp", 83.2, 74.0),
    ("ddo", 78.5, 64.4),
    ("usp", 79.7, 72.9),
    ("git", 51.1, 29.7),
    ("lez", 62.2, 54.4),
    ("ntu", 78.4, 68.1),
    ("nyb", 72.5, 63.8),
];
const UNIQUE_GLOSSES: f64 = 11_493.0;
const UNIQUE_GLOSSES_REL_TOLERANCE: f64 = 0.05;
const TOP200_COVERAGE: f64 = 82.7;
const TOP200_TOLERANCE: f64 = 1.5;
/// PL, 3SG and PAST must all rank within this many labels.
const TOP_LABEL_RANK: usize = 5;
const GRAMBANK_COSINE: f64 = 0.92;
const GRAMBANK_COSINE_TOLERANCE: f64 = 0.05;
const UNDERREPRESENTED_TOP: usize = 5;
const DATASET_COVERAGE: f64 = 0.64;
const KNN_NEIGHBOURS: usize = 5;
const ROUND_TRIP_LINES: usize = 10_000;
const NORMALIZE_LINES: usize = 1_000;
const SHARD_CORPORA: usize = 100;
const SEGMENTATION_CASES: usize = 1_000;

enum Status {
    Pass(String),
    Fail(String),
    NotRun(String),
}

type Check = Result<String, String>;

fn status(check: Check) -> Status {
    match check {
        Ok(detail) => Status::Pass(detail),
        Err(detail) => Status::Fail(detail),
    }
}

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

// ---------------------------------------------------------------------------
// Criterion 1: positional accuracy against a brute-force comparator.

const LABELS: [&str; 5] = ["A", "B", "C", "D", "E"];

fn metric_line() -> impl Strategy<Value = String> {
    let morpheme = prop::sample::select(&LABELS[..]).prop_map(str::to_string);
    let word = prop_oneof![
        4 => prop::collection::vec(morpheme, 1..4).prop_map(|m| m.join("-")),
        1 => prop::sample::select(&[".", ","][..]).prop_map(str::to_string),
    ];
    prop::collection::vec(word, 0..9).prop_map(|w| w.join(" "))
}

/// Word and morpheme units of a generated line, found by scanning characters.
fn oracle_units(line: &str) -> (Vec<String>, Vec<String>) {
    let mut words = Vec::new();
    let mut current = String::new();
    for c in line.chars().chain(std::iter::once(' ')) {
        if c == ' ' {
            if !current.is_empty() && current != "." && current != "," {
                words.push(current.clone());
            }
            current.clear();
        } else {
            current.push(c);
        }
    }
    let mut morphemes = Vec::new();
    for w in &words {
        let mut m = String::new();
        for c in w.chars().chain(std::iter::once('-')) {
            if c == '-' {
                morphemes.push(std::mem::take(&mut m));
            } else {
                m.push(c);
            }
        }
    }
    (words, morphemes)
}

fn oracle_positional(gold: &[String], pred: &[String]) -> (usize, usize) {
    let mut correct = 0;
    for i in 0..gold.len() {
        if i < pred.len() && pred[i] == gold[i] {
            correct += 1;
        }
    }
    (correct, gold.len())
}

fn criterion_1() -> Check {
    let started = Instant::now();
    let mut sampler = Sampler::new();
    let strategy = metric_line();
    let mut gold_examples = Vec::new();
    let mut predictions = BTreeMap::new();
    let (mut pooled_m, mut pooled_w) = ((0, 0), (0, 0));
    let mut pairs = 0;
    while pairs < METRIC_PAIRS {
        let gold = sampler.sample(&strategy);
        let pred = sampler.sample(&strategy);
        let (gw, gm) = oracle_units(&gold);
        if gw.is_empty() {
            continue;
        }
        let (pw, pm) = oracle_units(&pred);
        let om = oracle_positional(&gm, &pm);
        let ow = oracle_positional(&gw, &pw);
        let (g, p) = (strip_eval_punctuation(&gold), strip_eval_punctuation(&pred));
        let m = morpheme_tally(&g, &p, LengthPolicy::Gold).map_err(|e| e.to_string())?;
        let w = word_tally(&g, &p, LengthPolicy::Gold).map_err(|e| e.to_string())?;
        ensure((m.correct, m.total) == om, || format!("morphemes {gold:?} vs {pred:?}: {m:?} != {om:?}"))?;
        ensure((w.correct, w.total) == ow, || format!("words {gold:?} vs {pred:?}: {w:?} != {ow:?}"))?;
        pooled_m = (pooled_m.0 + om.0, pooled_m.1 + om.1);
        pooled_w = (pooled_w.0 + ow.0, pooled_w.1 + ow.1);
        let id = format!("p{pairs}");
        gold_examples.push(IgtExample::new(id.clone(), "x", gold));
        predictions.insert(id, pred);
        pairs += 1;
    }
    let report = evaluate(&gold_examples, &predictions, &EvalOptions::default()).map_err(|e| e.to_string())?.overall;
    ensure((report.morphemes.correct, report.morphemes.total) == pooled_m, || {
        format!("pooled morphemes {:?} != {pooled_m:?}", report.morphemes)
    })?;
    ensure((report.words.correct, report.words.total) == pooled_w, || format!("pooled words {:?} != {pooled_w:?}", report.words))?;
    ensure(report.morpheme_accuracy == pooled_m.0 as f64 / pooled_m.1 as f64, || "micro-average differs".into())?;
    let elapsed = started.elapsed();
    ensure(elapsed < METRIC_TIME_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("{pairs} pairs exact, micro-average exact, {:.2}s", elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------------------
// Criterion 2: chrF++ against exhaustive n-gram enumeration.

const ORACLE_PUNCT: [char; 32] = [
    '!', '"', '#', '$', '%', '&', '\'', '(', ')', '*', '+', ',', '-', '.', '/', ':', ';', '<', '=', '>', '?', '@',
    '[', '\\', ']', '^', '_', '`', '{', '|', '}', '~',
];

fn oracle_words(text: &str) -> Vec<Vec<char>> {
    let mut out = Vec::new();
    for token in text.split_whitespace() {
        let cs: Vec<char> = token.chars().collect();
        let n = cs.len();
        if n > 1 && ORACLE_PUNCT.contains(&cs[n - 1]) {
            out.push(cs[..n - 1].to_vec());
            out.push(vec![cs[n - 1]]);
        } else if n > 1 && ORACLE_PUNCT.contains(&cs[0]) {
            out.push(vec![cs[0]]);
            out.push(cs[1..].to_vec());
        } else {
            out.push(cs);
        }
    }
    out
}

fn occurrences<T: PartialEq>(seq: &[T], gram: &[T]) -> usize {
    if gram.len() > seq.len() {
        return 0;
    }
    (0..=seq.len() - gram.len()).filter(|&i| &seq[i..i + gram.len()] == gram).count()
}

/// (hyp n-grams, ref n-grams, matches) by enumerating every n-gram.
fn oracle_order<T: PartialEq + Clone>(hyp: &[T], reference: &[T], n: usize) -> (usize, usize, usize) {
    let total = |s: &[T]| if s.len() >= n { s.len() - n + 1 } else { 0 };
    let mut seen: Vec<Vec<T>> = Vec::new();
    let mut matched = 0;
    for i in 0..total(hyp) {
        let gram = hyp[i..i + n].to_vec();
        if seen.contains(&gram) {
            continue;
        }
        matched += occurrences(hyp, &gram).min(occurrences(reference, &gram));
        seen.push(gram);
    }
    (total(hyp), total(reference), matched)
}

fn oracle_stats(gold: &str, pred: &str) -> Vec<(usize, usize, usize)> {
    let hc: Vec<char> = pred.chars().filter(|c| !c.is_whitespace()).collect();
    let rc: Vec<char> = gold.chars().filter(|c| !c.is_whitespace()).collect();
    let hw = oracle_words(pred);
    let rw = oracle_words(gold);
    let mut stats: Vec<_> = (1..=6).map(|n| oracle_order(&hc, &rc, n)).collect();
    stats.extend((1..=2).map(|n| oracle_order(&hw, &rw, n)));
    stats
}

fn oracle_score(stats: &[(usize, usize, usize)]) -> f64 {
    if stats.iter().all(|s| s.0 == 0 && s.1 == 0) {
        return 100.0;
    }
    let effective: Vec<_> = stats.iter().filter(|s| s.0 > 0 && s.1 > 0).collect();
    if effective.is_empty() {
        return 0.0;
    }
    let p = effective.iter().map(|s| s.2 as f64 / s.0 as f64).sum::<f64>() / effective.len() as f64;
    let r = effective.iter().map(|s| s.2 as f64 / s.1 as f64).sum::<f64>() / effective.len() as f64;
    if p + r == 0.0 {
        0.0
    } else {
        100.0 * 5.0 * p * r / (4.0 * p + r)
    }
}

fn criterion_2() -> Check {
    let params = ChrfParams::default();
    ensure(chrf("", "", params) == 100.0, || "empty/empty is not 100".into())?;
    ensure(chrf("abc", "", params) == 0.0, || "nonempty gold, empty prediction is not 0".into())?;
    ensure(chrf("", "abc", params) == 0.0, || "empty gold, nonempty prediction is not 0".into())?;
    let abcd = chrf("abcd", "abce", params);
    let abcd_oracle = oracle_score(&oracle_stats("abcd", "abce"));
    ensure((abcd - abcd_oracle).abs() < CHRF_TOLERANCE, || format!("abcd/abce {abcd} vs {abcd_oracle}"))?;

    let mut sampler = Sampler::new();
    let strategy = ("[ab c.,-]{0,14}", "[ab c.,-]{0,14}");
    let mut pairs = Vec::new();
    let mut pooled = vec![(0, 0, 0); 8];
    let mut worst: f64 = 0.0;
    for _ in 0..CHRF_PAIRS {
        let (gold, pred): (String, String) = sampler.sample(&strategy);
        let stats = oracle_stats(&gold, &pred);
        for (acc, s) in pooled.iter_mut().zip(&stats) {
            *acc = (acc.0 + s.0, acc.1 + s.1, acc.2 + s.2);
        }
        let expected = oracle_score(&stats);
        let got = chrf(&gold, &pred, params);
        worst = worst.max((got - expected).abs());
        ensure((got - expected).abs() < CHRF_TOLERANCE, || format!("{gold:?} vs {pred:?}: {got} != {expected}"))?;
        pairs.push((gold, pred));
    }
    let corpus = corpus_chrf(pairs.iter().map(|(g, p)| (g.as_str(), p.as_str())), params);
    let expected = oracle_score(&pooled);
    ensure((corpus - expected).abs() < CHRF_TOLERANCE, || format!("corpus {corpus} != {expected}"))?;
    Ok(format!("{CHRF_PAIRS} pairs, max deviation {worst:.1e}, corpus mode and boundaries exact"))
}

// ---------------------------------------------------------------------------
// Criterion 3: Top-choice on the SIGMORPHON shared-task languages.

fn find_file(dir: &Path, name: &str) -> Option<PathBuf> {
    for entry in std::fs::read_dir(dir).ok()?.flatten() {
        let path = entry.path();
        if path.is_dir() {
            if let Some(found) = find_file(&path, name) {
                return Some(found);
            }
        } else if path.file_name().is_some_and(|n| n == name) {
            return Some(path);
        }
    }
    None
}

fn top_choice_language(dir: &Path, code: &str) -> Result<(f64, f64), String> {
    let train = find_file(dir, &format!("{code}-train-track2-uncovered")).ok_or(format!("{code}: no train file"))?;
    let test = find_file(dir, &format!("{code}-test-track2-uncovered")).ok_or(format!("{code}: no test file"))?;
    let segmented = |path: &Path| -> Result<Vec<IgtExample>, String> {
        let meta = SourceMeta { segmented: Some(Segmented::Yes), ..SourceMeta::named(code) };
        let records = read_sigmorphon(path, &meta).map_err(|e| e.to_string())?;
        Ok(records.into_iter().filter(|e| e.segmented == Segmented::Yes && !e.derived_unsegmented).collect())
    };
    let (train, test) = (segmented(&train)?, segmented(&test)?);
    let lexicon = train_top_choice(&train, Level::Morpheme).map_err(|e| e.to_string())?.lexicon;
    let mut predictions = BTreeMap::new();
    for e in &test {
        predictions.insert(e.id.clone(), lexicon.predict(e).map_err(|e| e.to_string())?);
    }
    let r = evaluate(&test, &predictions, &EvalOptions::default()).map_err(|e| e.to_string())?.overall;
    Ok((100.0 * r.morpheme_accuracy, 100.0 * r.word_accuracy))
}

fn criterion_3() -> Option<Check> {
    let dir = PathBuf::from(std::env::var_os("IGT_SIGMORPHON_DIR")?);
    let run = || -> Check {
        let mut parts = Vec::new();
        let mut failures = Vec::new();
        for &(code, m_ref, w_ref) in TOP_CHOICE_TABLE {
            let started = Instant::now();
            let (m, w) = top_choice_language(&dir, code)?;
            let elapsed = started.elapsed();
            parts.push(format!("{code} {m:.1}/{w:.1}"));
            if (m - m_ref).abs() > TOP_CHOICE_TOLERANCE || (w - w_ref).abs() > TOP_CHOICE_TOLERANCE {
                failures.push(format!("{code} {m:.1}/{w:.1} vs {m_ref}/{w_ref}"));
            }
            if elapsed > TOP_CHOICE_TIME_LIMIT {
                failures.push(format!("{code} took {elapsed:?}"));
            }
        }
        if failures.is_empty() {
            Ok(parts.join(", "))
        } else {
            Err(failures.join("; "))
        }
    };
    Some(run())
}

// ---------------------------------------------------------------------------
// Criterion 4: gloss inventory of the full corpus.

fn criterion_4() -> Option<Check> {
    let path = PathBuf::from(std::env::var_os("IGT_CORPUS")?);
    let run = || -> Check {
        let corpus = read_canonical(&path).map_err(|e| e.to_string())?;
        let inventory = extract_inventory(&corpus.examples).inventory;
        let report = coverage_report(&inventory, 200).map_err(|e| e.to_string())?;
        let unique = report.unique_count as f64;
        let coverage = 100.0 * report.topk_fraction;
        ensure((unique - UNIQUE_GLOSSES).abs() <= UNIQUE_GLOSSES_REL_TOLERANCE * UNIQUE_GLOSSES, || {
            format!("{unique} unique glosses")
        })?;
        ensure((coverage - TOP200_COVERAGE).abs() <= TOP200_TOLERANCE, || format!("top-200 coverage {coverage:.1}%"))?;
        let top: Vec<&str> = report.ranked.iter().take(TOP_LABEL_RANK).map(|(l, _)| l.as_str()).collect();
        for label in ["PL", "3SG", "PAST"] {
            ensure(top.contains(&label), || format!("{label} not in top {TOP_LABEL_RANK}: {top:?}"))?;
        }
        Ok(format!("{unique} unique, top-200 {coverage:.1}%, top labels {top:?}"))
    };
    Some(run())
}

// ---------------------------------------------------------------------------
// Criterion 5: Grambank coverage.

fn criterion_5() -> Option<Check> {
    let dir = PathBuf::from(std::env::var_os("IGT_GRAMBANK_DIR")?);
    let corpus_path = std::env::var_os("IGT_CORPUS").map(PathBuf::from);
    let run = || -> Check {
        let corpus_path = corpus_path.ok_or("IGT_CORPUS is needed for corpus weights")?;
        let corpus = read_canonical(&corpus_path).map_err(|e| e.to_string())?;
        let weights = typology::corpus_weights(&corpus);
        let raw = typology::read_values(&dir.join("values.csv")).map_err(|e| e.to_string())?;
        let mut options = typology::PrepareOptions::default();
        let multistate = dir.join("multistate.txt");
        if multistate.exists() {
            options.multistate = typology::read_multistate(&multistate).map_err(|e| e.to_string())?;
        }
        let languages = dir.join("languages.csv");
        if languages.exists() {
            options.dialects = typology::read_dialects(&languages).map_err(|e| e.to_string())?;
        }
        let (matrix, _) = typology::prepare_matrix(&raw, &options).map_err(|e| e.to_string())?;
        let matrix = typology::coverage_filter(&matrix, &weights, DATASET_COVERAGE).map_err(|e| e.to_string())?;
        let matrix = typology::impute(&matrix, typology::Imputer::Knn(KNN_NEIGHBOURS)).map_err(|e| e.to_string())?;
        let dataset = typology::weighted_average(&matrix, &weights).map_err(|e| e.to_string())?;
        let global = typology::uniform_average(&matrix).map_err(|e| e.to_string())?;
        let cos = typology::cosine(&dataset, &global).map_err(|e| e.to_string())?;
        let top = typology::underrepresented(&dataset, &global, UNDERREPRESENTED_TOP).map_err(|e| e.to_string())?;
        let names: Vec<&str> = top.iter().map(|d| d.feature.as_str()).collect();
        ensure((cos - GRAMBANK_COSINE).abs() <= GRAMBANK_COSINE_TOLERANCE, || format!("cosine {cos:.3}"))?;
        ensure(names.contains(&"GB024b"), || format!("GB024b not in {names:?}"))?;
        Ok(format!("{} features, cosine {cos:.3}, top {names:?}", matrix.features.len()))
    };
    Some(run())
}

// ---------------------------------------------------------------------------
// Criterion 6: property suites without external data.

fn arapaho() -> IgtExample {
    let mut e = IgtExample::new("arp-1", "nuhu' tih-'eeneti-3i' heneenei3oobei-3i'", "this when.PAST-speak-3PL IC.tell.the.truth-3PL")
        .with_segmented(Segmented::Yes)
        .with_translation("When they speak, they tell the truth.");
    e.language_name = Some("Arapaho".into());
    e.glottocode = Some("arap1274".into());
    e.metalang = Some("eng".into());
    e
}

fn uspanteko() -> IgtExample {
    let mut e = IgtExample::new("usp-1", "o sey xtok rixoqiil", "o sea COM-buscar E3S-esposa").with_segmented(Segmented::No);
    e.language_name = Some("Uspanteko".into());
    e.glottocode = Some("uspa1245".into());
    e
}

fn gitksan() -> IgtExample {
    let mut e = IgtExample::new("git-1", "ii hahla'lsdi'y", "CCNJ work-1SG.II")
        .with_segmented(Segmented::Unknown)
        .with_translation("and I worked");
    e.glottocode = Some("gitx1241".into());
    e.metalang = Some("eng".into());
    e
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn criterion_6() -> Check {
    let mut sampler = Sampler::new();

    let line = gen::gloss_line();
    for _ in 0..ROUND_TRIP_LINES {
        let text = sampler.sample(&line);
        let parsed = parse_gloss_line(&text).map_err(|e| format!("{text:?}: {e}"))?;
        ensure(parsed.to_string() == text, || format!("round trip changed {text:?}"))?;
    }

    let map = NormalizationMap::starter();
    let mut rewritten = 0;
    for _ in 0..NORMALIZE_LINES {
        let text = sampler.sample(&line);
        let once = map.apply_to_text(&text);
        ensure(map.apply_to_text(&once) == once, || format!("not idempotent on {text:?}"))?;
        let (a, b) = (parse_gloss_line(&text).unwrap(), parse_gloss_line(&once).unwrap());
        let shape = |l: &igt_core::GlossLine| -> Vec<Vec<usize>> {
            l.words.iter().map(|w| w.morphemes.iter().map(|m| m.subglosses.len()).collect()).collect()
        };
        ensure(shape(&a) == shape(&b), || format!("structure changed on {text:?}"))?;
        rewritten += usize::from(once != text);
    }

    let corpus = gen::corpus();
    for i in 0..SHARD_CORPORA {
        let examples = sampler.sample(&corpus);
        let cut = i % (examples.len() + 1);
        let whole = train_top_choice(&examples, Level::Morpheme).map_err(|e| e.to_string())?.lexicon;
        let (left, right) = examples.split_at(cut);
        let part = |xs: &[IgtExample]| {
            if xs.is_empty() {
                GlossLexicon::empty(Level::Morpheme)
            } else {
                train_top_choice(xs, Level::Morpheme).unwrap().lexicon
            }
        };
        let merged = merge_lexicons(&part(left), &part(right)).map_err(|e| e.to_string())?;
        ensure(merged == whole, || format!("shard merge differs on corpus {i}"))?;
    }

    let example = gen::segmented_example();
    for _ in 0..SEGMENTATION_CASES {
        let e = sampler.sample(&example);
        let stripped = strip_segmentation(&e).map_err(|err| err.to_string())?;
        ensure(
            !stripped.transcription.contains('-')
                && detect_segmentation(&stripped.transcription) == Segmented::No
                && stripped.derived_unsegmented
                && stripped.gloss_text == e.gloss_text
                && stripped.transcription.split_whitespace().count() == e.transcription.split_whitespace().count()
                && strip_segmentation(&stripped).is_err()
                && (!e.transcription.contains('-') || detect_segmentation(&e.transcription) == Segmented::Yes),
            || format!("segmentation invariant broken on {:?}", e.transcription),
        )?;
    }

    let opts = PromptOptions::default();
    for (record, file) in [
        (arapaho(), "prompt_arapaho.txt"),
        (uspanteko(), "prompt_uspanteko_no_translation.txt"),
        (gitksan(), "prompt_unknown_segmentation.txt"),
    ] {
        let prompt = build_prompt(&record, &opts);
        ensure(prompt == golden(file), || format!("{file} differs: {prompt:?}"))?;
    }

    Ok(format!(
        "{ROUND_TRIP_LINES} round trips, {NORMALIZE_LINES} normalized ({rewritten} rewritten), \
         {SHARD_CORPORA} shard merges, {SEGMENTATION_CASES} segmentation cases, 3 golden prompts"
    ))
}

// ---------------------------------------------------------------------------
// Criterion 7: prompt export, remote client and evaluation end to end.

fn criterion_7() -> Check {
    let records = vec![arapaho(), uspanteko(), gitksan()];
    let built = build_corpus(&[Source::records(SourceMeta::named("fixture"), records)], &BuildOptions::default(), None, None)
        .map_err(|e| e.to_string())?;
    let corpus = built.corpus;
    let prompts = export_prompts(&corpus.examples, &PromptOptions::default());
    let answers: BTreeMap<String, String> = prompts.iter().map(|p| (p.prompt.clone(), p.target.clone())).collect();
    let server = MockServer::start(move |request| {
        let prompt = request.json()["inputs"].as_str().unwrap_or_default().to_string();
        let gloss = answers.get(&prompt).cloned().unwrap_or_default();
        Reply::ok(serde_json::json!([{ "generated_text": format!("{prompt}{gloss}") }]).to_string())
    });
    let config = RemoteConfig { backoff: Duration::from_millis(5), ..RemoteConfig::new(&server.url) };
    let client = RemoteClient::new(config).map_err(|e| e.to_string())?;
    let mut predictions = Vec::new();
    for (id, result) in client.gloss_all(&prompts) {
        predictions.push(Prediction { example_id: id, prediction: result.map_err(|e| e.to_string())? });
    }
    let file = to_prediction_lines(&predictions);
    let predictions = parse_predictions(&file).map_err(|e| e.to_string())?;
    let report = evaluate(&corpus.examples, &predictions, &EvalOptions::default()).map_err(|e| e.to_string())?.overall;
    ensure(
        (report.morpheme_accuracy, report.word_accuracy, report.chrf) == (1.0, 1.0, 100.0),
        || format!("round trip scored {report:?}"),
    )?;
    ensure(server.hits() == prompts.len(), || format!("{} requests for {} prompts", server.hits(), prompts.len()))?;
    Ok(format!("{} records: export, mock endpoint, predictions file, eval = (1.0, 1.0, 100.0)", corpus.len()))
}

// ---------------------------------------------------------------------------

const NAMES: [&str; 7] = [
    "metric oracle equivalence",
    "chrF++ oracle equivalence",
    "Top-choice reproduction",
    "gloss inventory statistics",
    "Grambank coverage analysis",
    "data-free property suites",
    "remote client + eval end to end",
];

fn data_missing(var: &str) -> Status {
    Status::NotRun(format!("data unavailable, set {var}"))
}

#[test]
fn acceptance_summary() {
    let outcomes = [
        status(criterion_1()),
        status(criterion_2()),
        criterion_3().map_or_else(|| data_missing("IGT_SIGMORPHON_DIR"), status),
        criterion_4().map_or_else(|| data_missing("IGT_CORPUS"), status),
        criterion_5().map_or_else(|| data_missing("IGT_GRAMBANK_DIR and IGT_CORPUS"), status),
        status(criterion_6()),
        status(criterion_7()),
    ];
    // Written to the raw stderr handle so the lines show without --nocapture.
    let mut out = std::io::stderr().lock();
    let mut failed = Vec::new();
    writeln!(out).unwrap();
    for (i, (name, outcome)) in NAMES.iter().zip(&outcomes).enumerate() {
        let (tag, detail) = match outcome {
            Status::Pass(d) => ("PASS", d),
            Status::Fail(d) => {
                failed.push(i + 1);
                ("FAIL", d)
            }
            Status::NotRun(d) => ("NOT RUN", d),
        };
        writeln!(out, "criterion {}: {tag:7} {name}: {detail}", i + 1).unwrap();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

fn require(check: Option<Check>, var: &str) {
    match check {
        None => panic!("{var} is not set; this criterion needs external data"),
        Some(Err(e)) => panic!("{e}"),
        Some(Ok(detail)) => println!("{detail}"),
    }
}

#[test]
#[ignore = "needs the SIGMORPHON shared-task files"]
fn top_choice_reproduction() {
    require(criterion_3(), "IGT_SIGMORPHON_DIR");
}

#[test]
#[ignore = "needs the full corpus"]
fn gloss_inventory_statistics() {
    require(criterion_4(), "IGT_CORPUS");
}

#[test]
#[ignore = "needs Grambank and the full corpus"]
fn grambank_coverage() {
    require(criterion_5(), "IGT_GRAMBANK_DIR");
}

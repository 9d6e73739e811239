//! Proptest generators for gloss lines and IGT records.

#![allow(dead_code)]

use igt_core::igt::{IgtExample, Segmented};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

pub const GRAMMATICAL: &[&str] = &["PL", "3SG", "PST", "PAST", "COM", "E3S", "IC", "1", "3PL", "SG", "DEM", "NEG"];

pub fn grammatical() -> impl Strategy<Value = String> {
    prop_oneof![
        prop::sample::select(GRAMMATICAL).prop_map(str::to_string),
        "[A-Z0-9]{1,4}",
    ]
}

pub fn lexical() -> impl Strategy<Value = String> {
    "[a-z]{1,6}"
}

pub fn subgloss() -> impl Strategy<Value = String> {
    prop_oneof![grammatical(), lexical()]
}

pub fn morpheme() -> impl Strategy<Value = String> {
    prop::collection::vec(subgloss(), 1..4).prop_map(|s| s.join("."))
}

/// A gloss word whose morphemes are joined by `-` or `=`.
pub fn word() -> impl Strategy<Value = String> {
    prop::collection::vec((morpheme(), prop::bool::weighted(0.8)), 1..5).prop_map(|ms| {
        let mut out = String::new();
        for (i, (m, dash)) in ms.iter().enumerate() {
            if i > 0 {
                out.push(if *dash { '-' } else { '=' });
            }
            out.push_str(m);
        }
        out
    })
}

pub fn gloss_line() -> impl Strategy<Value = String> {
    prop::collection::vec(word(), 1..9).prop_map(|w| w.join(" "))
}

/// A segmented word as (forms, glosses), with `-` between morphemes.
pub fn aligned_word(forms: &'static [&'static str], glosses: &'static [&'static str]) -> impl Strategy<Value = (String, String)> {
    prop::collection::vec((prop::sample::select(forms), prop::sample::select(glosses)), 1..4).prop_map(|ms| {
        let f: Vec<&str> = ms.iter().map(|(f, _)| *f).collect();
        let g: Vec<&str> = ms.iter().map(|(_, g)| *g).collect();
        (f.join("-"), g.join("-"))
    })
}

pub const FORMS: &[&str] = &["tih", "'eeneti", "3i'", "nuhu'", "xtok", "ri", "xoqiil", "ka", "be", "on"];
pub const LABELS: &[&str] = &["when.PAST", "PAST", "speak", "3PL", "this", "COM", "buscar", "E3S", "esposa", "PL"];

/// Segmented records drawn from a small vocabulary so that forms repeat.
pub fn segmented_example() -> impl Strategy<Value = IgtExample> {
    (prop::collection::vec(aligned_word(FORMS, LABELS), 1..6), "[a-z]{4}").prop_map(|(words, tag)| {
        let t: Vec<&str> = words.iter().map(|(f, _)| f.as_str()).collect();
        let g: Vec<&str> = words.iter().map(|(_, g)| g.as_str()).collect();
        IgtExample::new(format!("ex-{tag}"), t.join(" "), g.join(" ")).with_segmented(Segmented::Yes)
    })
}

pub fn corpus() -> impl Strategy<Value = Vec<IgtExample>> {
    prop::collection::vec(segmented_example(), 1..20).prop_map(|mut v| {
        for (i, e) in v.iter_mut().enumerate() {
            e.id = format!("{}-{i}", e.id);
        }
        v
    })
}

/// Deterministic sampler for oracle comparisons that need plain values.
pub struct Sampler(TestRunner);

impl Sampler {
    pub fn new() -> Self {
        let rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
        Sampler(TestRunner::new_with_rng(Config::default(), rng))
    }

    pub fn sample<S: Strategy>(&mut self, strategy: &S) -> S::Value {
        strategy.new_tree(&mut self.0).expect("strategy produces a value").current()
    }
}

//! Rank-order character n-gram language identification.
//!
//! Profiles hold the 300 most frequent character 1- to 3-grams of a
//! language's seed text. A document is assigned to the profile with the
//! smallest out-of-place distance between its own ranking and the profile's.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PROFILE_SIZE: usize = 300;
pub const MAX_ORDER: usize = 3;
/// Texts shorter than this (in characters, after trimming) get no verdict.
pub const DEFAULT_MIN_CHARS: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangIdError {
    #[error("no language profiles were supplied")]
    NoProfiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangIdProfile {
    pub lang: String,
    /// N-grams in rank order, most frequent first, with their counts.
    pub ngram_counts: Vec<(String, u64)>,
}

impl LangIdProfile {
    pub fn from_texts<S: AsRef<str>>(lang: impl Into<String>, texts: &[S]) -> Self {
        let mut counts: HashMap<String, u64> = HashMap::new();
        for text in texts {
            count_ngrams(text.as_ref(), &mut counts);
        }
        LangIdProfile { lang: lang.into(), ngram_counts: ranked(counts) }
    }

    fn ranks(&self) -> HashMap<&str, usize> {
        self.ngram_counts.iter().enumerate().map(|(i, (g, _))| (g.as_str(), i)).collect()
    }
}

fn count_ngrams(text: &str, counts: &mut HashMap<String, u64>) {
    for word in text
        .split(|c: char| !c.is_alphabetic() && c != '\'')
        .filter(|w| !w.is_empty())
    {
        let padded: Vec<char> = std::iter::once('_')
            .chain(word.chars().flat_map(char::to_lowercase))
            .chain(std::iter::once('_'))
            .collect();
        for n in 1..=MAX_ORDER {
            for gram in padded.windows(n) {
                if n == 1 && gram[0] == '_' {
                    continue;
                }
                *counts.entry(gram.iter().collect()).or_default() += 1;
            }
        }
    }
}

fn ranked(counts: HashMap<String, u64>) -> Vec<(String, u64)> {
    let mut grams: Vec<(String, u64)> = counts.into_iter().collect();
    grams.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    grams.truncate(PROFILE_SIZE);
    grams
}

pub fn train_langid<S: AsRef<str>>(sources: &[(String, Vec<S>)]) -> Vec<LangIdProfile> {
    sources
        .iter()
        .map(|(lang, texts)| LangIdProfile::from_texts(lang.clone(), texts))
        .filter(|p| !p.ngram_counts.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Language { lang: String, score: f64 },
    Unknown,
}

impl Verdict {
    pub fn lang(&self) -> Option<&str> {
        match self {
            Verdict::Language { lang, .. } => Some(lang),
            Verdict::Unknown => None,
        }
    }
}

/// Anything that can label a text with a language code.
pub trait LanguageIdentifier {
    fn identify(&self, text: &str) -> Verdict;
}

#[derive(Debug, Clone)]
pub struct RankClassifier {
    profiles: Vec<LangIdProfile>,
    pub min_chars: usize,
}

impl RankClassifier {
    pub fn new(profiles: Vec<LangIdProfile>) -> Result<Self, LangIdError> {
        if profiles.is_empty() {
            return Err(LangIdError::NoProfiles);
        }
        Ok(RankClassifier { profiles, min_chars: DEFAULT_MIN_CHARS })
    }

    pub fn profiles(&self) -> &[LangIdProfile] {
        &self.profiles
    }
}

impl LanguageIdentifier for RankClassifier {
    fn identify(&self, text: &str) -> Verdict {
        classify_with_min(text, &self.profiles, self.min_chars).unwrap_or(Verdict::Unknown)
    }
}

pub fn classify_language(text: &str, profiles: &[LangIdProfile]) -> Result<Verdict, LangIdError> {
    classify_with_min(text, profiles, DEFAULT_MIN_CHARS)
}

fn classify_with_min(text: &str, profiles: &[LangIdProfile], min_chars: usize) -> Result<Verdict, LangIdError> {
    if profiles.is_empty() {
        return Err(LangIdError::NoProfiles);
    }
    if text.trim().chars().count() < min_chars {
        return Ok(Verdict::Unknown);
    }
    let mut counts = HashMap::new();
    count_ngrams(text, &mut counts);
    let doc = ranked(counts);
    if doc.is_empty() {
        return Ok(Verdict::Unknown);
    }
    let worst = (doc.len() * PROFILE_SIZE) as f64;
    let mut best: Option<(usize, &str)> = None;
    for profile in profiles {
        let ranks = profile.ranks();
        let distance: usize = doc
            .iter()
            .enumerate()
            .map(|(i, (g, _))| ranks.get(g.as_str()).map_or(PROFILE_SIZE, |&r| r.abs_diff(i).min(PROFILE_SIZE)))
            .sum();
        if best.is_none_or(|(d, _)| distance < d) {
            best = Some((distance, profile.lang.as_str()));
        }
    }
    let (distance, lang) = best.expect("at least one profile");
    Ok(Verdict::Language { lang: lang.to_string(), score: 1.0 - distance as f64 / worst })
}

/// Reads seed texts keyed by language into profiles, one per language.
pub fn profiles_from_seed(seeds: &BTreeMap<String, String>) -> Vec<LangIdProfile> {
    seeds
        .iter()
        .map(|(lang, text)| LangIdProfile::from_texts(lang.clone(), &[text.as_str()]))
        .collect()
}

#[cfg(test)]
pub(crate) mod seed {
    pub const ENGLISH: &str = "When they speak, they tell the truth. The people of the village \
        went to the river in the morning and they came back in the evening with fish. \
        She said that her brother would arrive tomorrow with the horses. What are you doing \
        here? I think that the old man knows where the children have gone. They were \
        singing songs about the mountains and the rain, and everyone was happy. He gave \
        the book to his teacher because he had finished reading it. We should have \
        listened to the story before we left the house.";

    pub const SPANISH: &str = "Cuando ellos hablan, dicen la verdad. La gente del pueblo fue \
        al río por la mañana y regresó por la tarde con pescado. Ella dijo que su hermano \
        llegaría mañana con los caballos. ¿Qué estás haciendo aquí? Creo que el viejo sabe \
        dónde se fueron los niños. O sea que él busca una esposa para su casa. Estaban \
        cantando canciones sobre las montañas y la lluvia, y todos estaban contentos. Le \
        dio el libro a su maestro porque había terminado de leerlo. Deberíamos haber \
        escuchado la historia antes de salir de la casa.";
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profiles() -> Vec<LangIdProfile> {
        train_langid(&[
            ("eng".to_string(), vec![seed::ENGLISH]),
            ("spa".to_string(), vec![seed::SPANISH]),
        ])
    }

    #[test]
    fn profile_is_rank_ordered_and_truncated() {
        let p = &profiles()[0];
        assert!(!p.ngram_counts.is_empty());
        assert!(p.ngram_counts.len() <= PROFILE_SIZE);
        for pair in p.ngram_counts.windows(2) {
            assert!(pair[0].1 >= pair[1].1);
            if pair[0].1 == pair[1].1 {
                assert!(pair[0].0 < pair[1].0);
            }
        }
    }

    #[test]
    fn classifies_example_translations() {
        let p = profiles();
        let v = classify_language("when they speak, they tell the truth", &p).unwrap();
        assert_eq!(v.lang(), Some("eng"));
        let v = classify_language("O sea busca esposa.", &p).unwrap();
        assert_eq!(v.lang(), Some("spa"));
        if let Verdict::Language { score, .. } = v {
            assert!((0.0..=1.0).contains(&score));
        }
    }

    #[test]
    fn short_text_is_unknown() {
        assert_eq!(classify_language("hello", &profiles()).unwrap(), Verdict::Unknown);
    }

    #[test]
    fn no_profiles() {
        assert_eq!(classify_language("some long enough text here", &[]), Err(LangIdError::NoProfiles));
        assert!(RankClassifier::new(vec![]).is_err());
    }
}

//! Toolkit for interlinear glossed text corpora: parsing and preprocessing
//! of IGT records, gloss-label normalization, the Top-choice glossing
//! baseline, prompt export with a remote glossing client, evaluation
//! metrics, and Grambank typological coverage analysis.

pub mod eval;
pub mod glosser;
pub mod igt;
pub mod ingest;
pub mod langid;
pub mod normalize;
pub mod remote;
pub mod typology;

pub use igt::{GlossKind, GlossLine, IgtExample, Segmented};
pub use ingest::Corpus;

//! Evaluation of multilingual spaces.

pub mod classify;
pub mod csimple;
pub mod lexical;
pub mod rtt;

pub use classify::{classify_transfer, ClassifyReport, LabeledVerses, LinearSvm};
pub use csimple::{c_simple_rtt, weighted_sample_without_replacement};
pub use lexical::{spearman, word_similarity, word_translation_p1, SimilarityReport, TranslationReport};
pub use rtt::{rtt, rtt_bilingual, Query, QueryResolver, QuerySet, RttReport, RttVariant};

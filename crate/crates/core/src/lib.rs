//! Multilingual word embeddings from sentence-aligned parallel corpora.
//!
//! The pipeline has three learning stages and one evaluation stage:
//!
//! 1. [`concepts`]: sample subcorpora, extract ngrams that occur in exactly
//!    the same sentences across editions, and keep those spanning enough
//!    editions as *concepts*.
//! 2. [`pairs`]: turn the corpus into `(sentence-id, word)` pairs, the
//!    concepts into `(concept-id, word)` pairs, or concatenate both (Co+Co).
//! 3. [`sgns`]: skipgram with negative sampling over the pair corpus,
//!    producing a unit-normalized [`space::EmbeddingSpace`].
//! 4. [`eval`]: roundtrip translation, word translation, word similarity
//!    and cross-lingual classification transfer.
//!
//! [`pipeline`] glues the stages together and [`synth`] generates parallel
//! corpora with a known ground-truth lexicon.

pub mod concepts;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod pairs;
pub mod pipeline;
pub mod rng;
pub mod sgns;
pub mod space;
pub mod synth;

pub use error::{Error, Result};

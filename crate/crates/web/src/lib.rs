//! Browser demo: generate a synthetic parallel corpus, induce concepts,
//! train a multilingual space and query it. Every operation returns JSON.
//!
//! [`Session`] holds the state and is plain Rust; [`Demo`] is its
//! wasm-bindgen wrapper.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use coco_core::concepts::{concept_stats, induce_concepts_with, ConceptParams, ConceptSet};
use coco_core::config::Method;
use coco_core::corpus::{EditionId, WordKey};
use coco_core::eval::{rtt, word_translation_p1, QueryResolver, QuerySet, RttVariant};
use coco_core::pipeline::build_pairs;
use coco_core::sgns::{self, TrainConfig};
use coco_core::space::EmbeddingSpace;
use coco_core::synth::{generate, SynthCorpus, SynthParams};

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct CorpusRequest {
    pub editions: usize,
    pub vocab: usize,
    pub sentences: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for CorpusRequest {
    fn default() -> Self {
        CorpusRequest {
            editions: 4,
            vocab: 150,
            sentences: 600,
            noise: 0.1,
            seed: 1,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct TrainRequest {
    pub method: String,
    pub min_editions: usize,
    pub max_ngram: usize,
    pub budget: u64,
    pub dim: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for TrainRequest {
    fn default() -> Self {
        TrainRequest {
            method: "s-id".into(),
            min_editions: 3,
            max_ngram: 2,
            budget: 50,
            dim: 30,
            iterations: 10,
            seed: 1,
        }
    }
}

#[derive(Debug, Serialize)]
struct Point {
    key: String,
    edition: String,
    base: usize,
    x: f64,
    y: f64,
}

#[derive(Default)]
pub struct Session {
    synth: Option<SynthCorpus>,
    concepts: Option<ConceptSet>,
    space: Option<EmbeddingSpace>,
}

impl Session {
    fn synth(&self) -> Result<&SynthCorpus, String> {
        self.synth.as_ref().ok_or_else(|| "generate a corpus first".to_string())
    }

    /// Generates the corpus and describes it with one aligned sentence.
    pub fn generate(&mut self, req: &CorpusRequest) -> Result<Value, String> {
        let params = SynthParams {
            editions: req.editions,
            vocab: req.vocab,
            sentences: req.sentences,
            noise: req.noise,
            num_queries: 20.min(req.vocab),
            seed: req.seed,
            ..SynthParams::default()
        };
        let synth = generate(&params).map_err(|e| e.to_string())?;
        let sample: Vec<Value> = synth
            .corpus
            .editions()
            .iter()
            .map(|ed| {
                let text = ed.tokens(0).map(|t| ed.join(t)).unwrap_or_default();
                json!({ "edition": ed.id().to_string(), "text": text })
            })
            .collect();
        let out = json!({
            "editions": synth.edition_ids().iter().map(ToString::to_string).collect::<Vec<_>>(),
            "sentences": synth.corpus.num_sentences(),
            "types": synth.corpus.editions().iter().map(|e| e.num_types()).sum::<usize>(),
            "tokens": synth.corpus.editions().iter().map(|e| e.num_tokens()).sum::<u64>(),
            "queries": synth.queries(),
            "sample": sample,
        });
        *self = Session {
            synth: Some(synth),
            ..Session::default()
        };
        Ok(out)
    }

    /// Induces concepts (when the method needs them), trains a space and
    /// reports roundtrip and translation scores plus a 2D projection of the
    /// query words in every edition.
    pub fn train(&mut self, req: &TrainRequest) -> Result<Value, String> {
        let method: Method = req.method.parse().map_err(|e: coco_core::Error| e.to_string())?;
        if !matches!(method, Method::Sid | Method::Cid | Method::Coco) {
            return Err(format!("the demo trains s-id, c-id or co+co, not {method}"));
        }
        let synth = self.synth()?;
        let concepts = if method.needs_concepts() {
            let params = ConceptParams {
                min_editions: req.min_editions,
                max_ngram: req.max_ngram,
                budget: req.budget,
                seed: req.seed,
            };
            Some(induce_concepts_with(&synth.corpus, &params, 1).map_err(|e| e.to_string())?)
        } else {
            None
        };
        let pairs = build_pairs(method, &synth.corpus, concepts.as_ref(), 2).map_err(|e| e.to_string())?;
        let config = TrainConfig {
            dim: req.dim,
            iterations: req.iterations,
            seed: req.seed,
            ..TrainConfig::default()
        };
        let space = sgns::train(&pairs, &config).map_err(|e| e.to_string())?;

        let queries = QuerySet::new(synth.queries());
        let editions = synth.edition_ids();
        let resolver = QueryResolver::new(editions[0], &editions);
        let s1 = rtt(&space, &queries, RttVariant::S1, &resolver, &editions);
        let p1 = word_translation_p1(&space, &synth.translation_pairs());
        let stats = concepts
            .as_ref()
            .map(|c| concept_stats(c, &synth.corpus, editions[0]).map_err(|e| e.to_string()))
            .transpose()?;
        let out = json!({
            "method": method.to_string(),
            "concepts": concepts.as_ref().map_or(0, ConceptSet::len),
            "concept_coverage": stats.map(|s| s.coverage),
            "pairs": pairs.len(),
            "vocabulary": space.len(),
            "rtt_s1_mean": s1.mean,
            "rtt_s1_median": s1.median,
            "rtt_coverage": s1.coverage,
            "translation_p1": p1.accuracy,
            "points": projection(synth, &space),
        });
        self.concepts = concepts;
        self.space = Some(space);
        Ok(out)
    }

    /// Nearest neighbours of `word` (an `edition:surface` key) in every
    /// other edition, or in `target` when given.
    pub fn neighbors(&self, word: &str, target: Option<&str>, k: usize) -> Result<Value, String> {
        let space = self.space.as_ref().ok_or_else(|| "train a space first".to_string())?;
        let key: WordKey = word.trim().parse().map_err(|e: coco_core::Error| e.to_string())?;
        if !space.contains(&key) {
            return Err(format!("{key} is not in the space"));
        }
        let targets: Vec<EditionId> = match target.map(str::trim).filter(|t| !t.is_empty()) {
            Some(t) => vec![t.parse().map_err(|e: coco_core::Error| e.to_string())?],
            None => space.editions().into_iter().filter(|&e| e != key.edition()).collect(),
        };
        let rows: Vec<Value> = targets
            .iter()
            .map(|&e| {
                let nn = space.nearest(&key, e, k).unwrap_or_default();
                json!({
                    "edition": e.to_string(),
                    "neighbors": nn.iter().map(|n| json!({"key": n.key.to_string(), "cosine": n.cosine})).collect::<Vec<_>>(),
                })
            })
            .collect();
        Ok(json!({ "query": key.to_string(), "results": rows }))
    }
}

/// First two principal components of the query words' vectors.
fn projection(synth: &SynthCorpus, space: &EmbeddingSpace) -> Vec<Point> {
    let n_ed = synth.edition_ids().len();
    let mut keys = Vec::new();
    for b in synth.query_words.iter().copied() {
        for e in 0..n_ed {
            let k = synth.key(e, b);
            if space.contains(&k) {
                keys.push((k, b));
            }
        }
    }
    if keys.len() < 2 {
        return Vec::new();
    }
    let d = space.dim();
    let mut m = nalgebra::DMatrix::from_fn(keys.len(), d, |i, j| space.get(&keys[i].0).expect("present")[j]);
    let mean = m.row_mean();
    for mut row in m.row_iter_mut() {
        row -= &mean;
    }
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let proj = &m * v_t.rows(0, 2.min(v_t.nrows())).transpose();
    keys.into_iter()
        .enumerate()
        .map(|(i, (k, base))| Point {
            edition: k.edition().to_string(),
            key: k.to_string(),
            base,
            x: proj[(i, 0)],
            y: if proj.ncols() > 1 { proj[(i, 1)] } else { 0.0 },
        })
        .collect()
}

fn parse<T: for<'de> Deserialize<'de> + Default>(json: &str) -> Result<T, String> {
    if json.trim().is_empty() {
        return Ok(T::default());
    }
    serde_json::from_str(json).map_err(|e| e.to_string())
}

fn respond(r: Result<Value, String>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[derive(Default)]
pub struct Demo {
    session: Session,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Demo {
        Demo::default()
    }

    /// `{"editions", "vocab", "sentences", "noise", "seed"}`; missing
    /// fields take demo defaults.
    pub fn generate(&mut self, request: &str) -> Result<String, JsError> {
        respond(parse(request).and_then(|r| self.session.generate(&r)))
    }

    /// `{"method", "min_editions", "max_ngram", "budget", "dim",
    /// "iterations", "seed"}`.
    pub fn train(&mut self, request: &str) -> Result<String, JsError> {
        respond(parse(request).and_then(|r| self.session.train(&r)))
    }

    pub fn neighbors(&self, word: &str, target: &str, k: usize) -> Result<String, JsError> {
        respond(self.session.neighbors(word, Some(target), k))
    }
}

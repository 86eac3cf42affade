//! Roundtrips through shared concepts, without embeddings. Intermediate
//! words are drawn at random with weight equal to the number of concepts
//! they share with the query; back-translation works the same way.

use std::collections::BTreeMap;

use rand::Rng as _;

use crate::concepts::ConceptSet;
use crate::corpus::{EditionId, WordKey};
use crate::eval::rtt::{QueryResolver, QuerySet, RttReport, RttVariant};
use crate::rng::Rng;

/// Draw up to `k` distinct indices, each draw proportional to the remaining
/// weights.
pub fn weighted_sample_without_replacement(weights: &[f64], k: usize, rng: &mut Rng) -> Vec<usize> {
    let mut remaining: Vec<(usize, f64)> = weights
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, w)| w > 0.0)
        .collect();
    let mut picked = Vec::with_capacity(k.min(remaining.len()));
    while picked.len() < k && !remaining.is_empty() {
        let total: f64 = remaining.iter().map(|&(_, w)| w).sum();
        let mut u = rng.gen::<f64>() * total;
        let mut chosen = remaining.len() - 1;
        for (pos, &(_, w)) in remaining.iter().enumerate() {
            if u < w {
                chosen = pos;
                break;
            }
            u -= w;
        }
        picked.push(remaining.remove(chosen).0);
    }
    picked
}

/// Words of `edition` sharing at least one concept with `word`, sorted by
/// key, with the number of shared concepts.
pub fn shared_concept_candidates(
    concepts: &ConceptSet,
    word: &WordKey,
    edition: EditionId,
) -> Vec<(WordKey, usize)> {
    let mut counts: BTreeMap<&WordKey, usize> = BTreeMap::new();
    for &cid in concepts.concepts_of(word) {
        let concept = concepts.get(cid).expect("membership index is consistent");
        for m in concept.members() {
            if m.edition() == edition && m != word {
                *counts.entry(m).or_default() += 1;
            }
        }
    }
    counts.into_iter().map(|(k, c)| (k.clone(), c)).collect()
}

fn draw(candidates: &[(WordKey, usize)], k: usize, rng: &mut Rng) -> Vec<WordKey> {
    let weights: Vec<f64> = candidates.iter().map(|&(_, c)| c as f64).collect();
    weighted_sample_without_replacement(&weights, k, rng)
        .into_iter()
        .map(|i| candidates[i].0.clone())
        .collect()
}

/// Concept-only roundtrip translation. A query is covered when it belongs
/// to at least one concept.
pub fn c_simple_rtt(
    concepts: &ConceptSet,
    queries: &QuerySet,
    variant: RttVariant,
    resolver: &QueryResolver,
    intermediates: &[EditionId],
    rng: &mut Rng,
) -> RttReport {
    let mut scores = Vec::with_capacity(queries.len());
    let mut present = Vec::with_capacity(queries.len());
    for q in &queries.queries {
        let Some(key) = resolver.resolve(&q.surface, |k| concepts.contains_member(k)) else {
            scores.push(0.0);
            present.push(false);
            continue;
        };
        let home = key.edition();
        let mut hits = 0usize;
        let mut trials = 0usize;
        for &e in intermediates.iter().filter(|&&e| e != home) {
            trials += 1;
            let forward = draw(&shared_concept_candidates(concepts, &key, e), variant.k_intermediate, rng);
            let success = forward.iter().any(|v| {
                let back = shared_concept_candidates(concepts, v, home);
                draw(&back, variant.k_back, rng)
                    .iter()
                    .any(|b| q.accepts(b.surface(), variant.relaxed))
            });
            hits += usize::from(success);
        }
        scores.push(if trials == 0 { 0.0 } else { hits as f64 / trials as f64 });
        present.push(true);
    }
    RttReport::from_scores(variant.name, scores, present)
}

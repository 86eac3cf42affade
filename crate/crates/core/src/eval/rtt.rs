//! Roundtrip translation: query → `k_I` neighbours in an intermediate
//! edition → `k_T` back-translations each; success iff a back-translation is
//! in the query's ground-truth set. Per-query scores average the binary
//! outcomes over intermediate editions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;

use crate::concepts::median;
use crate::corpus::{EditionId, WordKey};
use crate::error::{Error, Result};
use crate::space::EmbeddingSpace;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RttVariant {
    pub name: &'static str,
    pub k_intermediate: usize,
    pub k_back: usize,
    pub relaxed: bool,
}

impl RttVariant {
    pub const S1: RttVariant = RttVariant { name: "S1", k_intermediate: 1, k_back: 1, relaxed: false };
    pub const R1: RttVariant = RttVariant { name: "R1", k_intermediate: 1, k_back: 1, relaxed: true };
    pub const S4: RttVariant = RttVariant { name: "S4", k_intermediate: 2, k_back: 2, relaxed: false };
    pub const S16: RttVariant = RttVariant { name: "S16", k_intermediate: 2, k_back: 8, relaxed: false };

    pub const ALL: [RttVariant; 4] = [Self::S1, Self::R1, Self::S4, Self::S16];

    pub fn by_name(name: &str) -> Result<RttVariant> {
        Self::ALL
            .into_iter()
            .find(|v| v.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown RTT variant {name:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub surface: String,
    /// Relaxed ground truth; always contains `surface`.
    pub relaxed: BTreeSet<String>,
}

impl Query {
    pub fn new(surface: impl Into<String>) -> Self {
        let surface = surface.into();
        let relaxed = BTreeSet::from([surface.clone()]);
        Query { surface, relaxed }
    }

    pub fn accepts(&self, surface: &str, relaxed: bool) -> bool {
        if relaxed {
            self.relaxed.contains(surface)
        } else {
            self.surface == surface
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QuerySet {
    pub queries: Vec<Query>,
}

impl QuerySet {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(surfaces: I) -> Self {
        QuerySet {
            queries: surfaces.into_iter().map(Query::new).collect(),
        }
    }

    /// One surface per line.
    pub fn read<R: BufRead>(reader: R, name: &str) -> Result<QuerySet> {
        let mut surfaces = Vec::new();
        for line in reader.lines() {
            let line = line.map_err(|e| Error::io(name, e))?;
            let q = line.trim();
            if !q.is_empty() {
                surfaces.push(q.to_string());
            }
        }
        Ok(QuerySet::new(surfaces))
    }

    /// Attach relaxed ground truth: `query\tequivalent\tequivalent...`.
    pub fn read_relaxed<R: BufRead>(&mut self, reader: R, name: &str) -> Result<()> {
        let mut extra: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for line in reader.lines() {
            let line = line.map_err(|e| Error::io(name, e))?;
            let mut fields = line.split('\t').map(str::trim).filter(|f| !f.is_empty());
            if let Some(q) = fields.next() {
                extra.entry(q.to_string()).or_default().extend(fields.map(str::to_string));
            }
        }
        for q in &mut self.queries {
            if let Some(eq) = extra.get(&q.surface) {
                q.relaxed.extend(eq.iter().cloned());
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

/// Chooses the edition a query surface is looked up in: the primary edition
/// if it has the word, else the lexicographically first other edition of
/// the same language that has it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryResolver {
    pub primary: EditionId,
    pub fallbacks: Vec<EditionId>,
}

impl QueryResolver {
    pub fn new(primary: EditionId, available: &[EditionId]) -> Self {
        let mut fallbacks: Vec<EditionId> = available
            .iter()
            .copied()
            .filter(|e| *e != primary && e.iso() == primary.iso())
            .collect();
        fallbacks.sort();
        fallbacks.dedup();
        QueryResolver { primary, fallbacks }
    }

    pub fn resolve(&self, surface: &str, contains: impl Fn(&WordKey) -> bool) -> Option<WordKey> {
        std::iter::once(self.primary)
            .chain(self.fallbacks.iter().copied())
            .filter_map(|e| WordKey::new(e, surface).ok())
            .find(|k| contains(k))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RttReport {
    pub variant: &'static str,
    /// One score in `[0, 1]` per query; absent queries score 0.
    pub scores: Vec<f64>,
    pub present: Vec<bool>,
    pub mean: f64,
    pub median: f64,
    /// Number of queries found in the space.
    pub coverage: usize,
}

impl RttReport {
    pub fn from_scores(variant: &'static str, scores: Vec<f64>, present: Vec<bool>) -> Self {
        let mean = if scores.is_empty() {
            0.0
        } else {
            scores.iter().sum::<f64>() / scores.len() as f64
        };
        RttReport {
            variant,
            median: median(&scores),
            mean,
            coverage: present.iter().filter(|&&p| p).count(),
            scores,
            present,
        }
    }
}

impl fmt::Display for RttReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\tmean={:.2}\tmedian={:.2}\tN={}",
            self.variant,
            100.0 * self.mean,
            100.0 * self.median,
            self.coverage
        )
    }
}

/// Binary roundtrip outcomes of one query, one per intermediate edition
/// (the query's own edition is skipped).
pub fn roundtrip_outcomes(
    space: &EmbeddingSpace,
    query: &Query,
    key: &WordKey,
    variant: RttVariant,
    intermediates: &[EditionId],
) -> Vec<bool> {
    let home = key.edition();
    intermediates
        .iter()
        .filter(|&&e| e != home)
        .map(|&e| {
            let Some(forward) = space.nearest(key, e, variant.k_intermediate) else {
                return false;
            };
            forward.iter().any(|v| {
                space
                    .nearest(&v.key, home, variant.k_back)
                    .unwrap_or_default()
                    .iter()
                    .any(|b| query.accepts(b.key.surface(), variant.relaxed))
            })
        })
        .collect()
}

fn mean_of(outcomes: &[bool]) -> f64 {
    if outcomes.is_empty() {
        0.0
    } else {
        outcomes.iter().filter(|&&b| b).count() as f64 / outcomes.len() as f64
    }
}

pub fn rtt(
    space: &EmbeddingSpace,
    queries: &QuerySet,
    variant: RttVariant,
    resolver: &QueryResolver,
    intermediates: &[EditionId],
) -> RttReport {
    let mut scores = Vec::with_capacity(queries.len());
    let mut present = Vec::with_capacity(queries.len());
    for q in &queries.queries {
        match resolver.resolve(&q.surface, |k| space.contains(k)) {
            Some(key) => {
                scores.push(mean_of(&roundtrip_outcomes(space, q, &key, variant, intermediates)));
                present.push(true);
            }
            None => {
                scores.push(0.0);
                present.push(false);
            }
        }
    }
    RttReport::from_scores(variant.name, scores, present)
}

/// Roundtrips run separately inside each bilingual space; outcomes are
/// pooled per query across spaces before averaging. A query counts as
/// present if any space contains it.
pub fn rtt_bilingual(
    spaces: &[EmbeddingSpace],
    queries: &QuerySet,
    variant: RttVariant,
    resolver: &QueryResolver,
) -> RttReport {
    let mut scores = Vec::with_capacity(queries.len());
    let mut present = Vec::with_capacity(queries.len());
    for q in &queries.queries {
        let mut outcomes = Vec::new();
        let mut found = false;
        for space in spaces {
            let editions = space.editions();
            match resolver.resolve(&q.surface, |k| space.contains(k)) {
                Some(key) => {
                    found = true;
                    outcomes.extend(roundtrip_outcomes(space, q, &key, variant, &editions));
                }
                None => {
                    let others = editions.iter().filter(|&&e| e != resolver.primary).count();
                    outcomes.extend(std::iter::repeat_n(false, others));
                }
            }
        }
        scores.push(if found { mean_of(&outcomes) } else { 0.0 });
        present.push(found);
    }
    RttReport::from_scores(variant.name, scores, present)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ed(s: &str) -> EditionId {
        s.parse().unwrap()
    }

    fn key(s: &str) -> WordKey {
        s.parse().unwrap()
    }

    fn perfect_space() -> EmbeddingSpace {
        let rows = [
            ("enge:water", vec![1.0, 0.0, 0.0]),
            ("enge:fire", vec![0.0, 1.0, 0.0]),
            ("enge:stone", vec![0.0, 0.0, 1.0]),
            ("fra1:eau", vec![1.0, 0.0, 0.0]),
            ("fra1:feu", vec![0.0, 1.0, 0.0]),
            ("fra1:pierre", vec![0.0, 0.0, 1.0]),
            ("deu0:Wasser", vec![1.0, 0.0, 0.0]),
            ("deu0:Feuer", vec![0.0, 1.0, 0.0]),
            ("deu0:Stein", vec![0.0, 0.0, 1.0]),
        ];
        EmbeddingSpace::from_rows(3, rows.into_iter().map(|(k, v)| (key(k), v))).unwrap()
    }

    #[test]
    fn variants() {
        assert_eq!((RttVariant::S4.k_intermediate, RttVariant::S4.k_back), (2, 2));
        assert_eq!((RttVariant::S16.k_intermediate, RttVariant::S16.k_back), (2, 8));
        assert!(RttVariant::R1.relaxed && !RttVariant::S1.relaxed);
        assert_eq!(RttVariant::by_name("s16").unwrap(), RttVariant::S16);
        assert!(RttVariant::by_name("S2").is_err());
    }

    #[test]
    fn report_arithmetic() {
        let r = RttReport::from_scores("S1", vec![1.0, 0.5, 0.0], vec![true, true, false]);
        assert_eq!(r.mean, 0.5);
        assert_eq!(r.median, 0.5);
        assert_eq!(r.coverage, 2);
    }

    #[test]
    fn perfect_space_scores_full() {
        let s = perfect_space();
        let q = QuerySet::new(["water", "fire", "stone"]);
        let res = QueryResolver::new(ed("enge"), &s.editions());
        let r = rtt(&s, &q, RttVariant::S1, &res, &s.editions());
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.coverage, 3);
    }

    #[test]
    fn absent_query_scores_zero() {
        let s = perfect_space();
        let q = QuerySet::new(["water", "sky"]);
        let res = QueryResolver::new(ed("enge"), &s.editions());
        let r = rtt(&s, &q, RttVariant::S1, &res, &s.editions());
        assert_eq!(r.scores, vec![1.0, 0.0]);
        assert_eq!(r.coverage, 1);
        assert_eq!(r.present, vec![true, false]);
    }

    #[test]
    fn fallback_edition_resolution() {
        let eds = [ed("engk"), ed("enga"), ed("enge"), ed("fra1")];
        let res = QueryResolver::new(ed("enge"), &eds);
        assert_eq!(res.fallbacks, vec![ed("enga"), ed("engk")]);
        let have = [key("engk:x"), key("enga:x")];
        assert_eq!(res.resolve("x", |k| have.contains(k)), Some(key("enga:x")));
        let have = [key("enge:x"), key("enga:x")];
        assert_eq!(res.resolve("x", |k| have.contains(k)), Some(key("enge:x")));
        assert_eq!(res.resolve("y", |k| have.contains(k)), None);
    }

    #[test]
    fn relaxed_truth_accepts_inflections() {
        // "waters" back-translates onto "water" only under relaxed truth.
        let rows = [
            ("enge:waters", vec![1.0, 0.1]),
            ("enge:water", vec![1.0, 0.0]),
            ("fra1:eau", vec![1.0, 0.0]),
        ];
        let s = EmbeddingSpace::from_rows(2, rows.into_iter().map(|(k, v)| (key(k), v))).unwrap();
        let mut q = QuerySet::new(["waters"]);
        q.read_relaxed("waters\twater\n".as_bytes(), "mem").unwrap();
        let res = QueryResolver::new(ed("enge"), &s.editions());
        let strict = rtt(&s, &q, RttVariant::S1, &res, &s.editions());
        let relaxed = rtt(&s, &q, RttVariant::R1, &res, &s.editions());
        assert_eq!(strict.mean, 0.0);
        assert_eq!(relaxed.mean, 1.0);
    }

    #[test]
    fn empty_intermediate_edition_counts_as_failure() {
        let s = perfect_space();
        let q = QuerySet::new(["water"]);
        let res = QueryResolver::new(ed("enge"), &s.editions());
        let r = rtt(&s, &q, RttVariant::S1, &res, &[ed("fra1"), ed("ita0")]);
        assert_eq!(r.scores, vec![0.5]);
    }

    #[test]
    fn bilingual_pooling() {
        let s = perfect_space();
        let a = s.restrict(&[ed("enge"), ed("fra1")]);
        let b = s.restrict(&[ed("enge"), ed("deu0")]);
        let q = QuerySet::new(["fire", "sky"]);
        let res = QueryResolver::new(ed("enge"), &s.editions());
        let r = rtt_bilingual(&[a, b], &q, RttVariant::S1, &res);
        assert_eq!(r.scores, vec![1.0, 0.0]);
        assert_eq!(r.coverage, 1);
    }

    #[test]
    fn query_file_parsing() {
        let q = QuerySet::read("water\n\n fire \n".as_bytes(), "mem").unwrap();
        assert_eq!(q.len(), 2);
        assert_eq!(q.queries[1].surface, "fire");
        assert!(q.queries[1].relaxed.contains("fire"));
    }
}

//! Concept induction by subcorpus sampling.
//!
//! Each iteration draws a random subcorpus, groups every `(edition, ngram)`
//! by the exact set of subcorpus sentences it occurs in, and keeps groups
//! that span at least `min_editions` editions. Such a group is a *concept*:
//! its members occur in exactly the same sentences, so they are read as
//! mutual translations.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::index;
use rand::Rng as _;

use crate::corpus::{ngrams, EditionId, ParallelCorpus, WordKey};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

#[derive(Clone, Debug, PartialEq)]
pub struct ConceptParams {
    /// Minimum number of distinct editions a concept must span.
    pub min_editions: usize,
    pub max_ngram: usize,
    /// Number of sampled subcorpora.
    pub budget: u64,
    pub seed: u64,
}

impl ConceptParams {
    /// Massively parallel profile (1000+ editions).
    pub fn pbc() -> Self {
        ConceptParams {
            min_editions: 100,
            max_ngram: 3,
            budget: 100_000,
            seed: 0,
        }
    }

    /// Mildly multilingual profile (about a dozen languages).
    pub fn europarl() -> Self {
        ConceptParams {
            min_editions: 9,
            ..Self::pbc()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_editions < 2 {
            return Err(Error::InvalidParameter("min_editions must be >= 2".into()));
        }
        if self.max_ngram < 1 {
            return Err(Error::InvalidParameter("max_ngram must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for ConceptParams {
    fn default() -> Self {
        Self::pbc()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConceptId(pub u32);

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C:{}", self.0)
    }
}

impl fmt::Debug for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C:{}", self.0)
    }
}

impl FromStr for ConceptId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.strip_prefix("C:")
            .and_then(|n| n.parse().ok())
            .map(ConceptId)
            .ok_or_else(|| Error::Format(format!("invalid concept id {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Concept {
    id: ConceptId,
    members: Vec<WordKey>,
}

impl Concept {
    pub fn id(&self) -> ConceptId {
        self.id
    }

    /// Sorted, distinct members.
    pub fn members(&self) -> &[WordKey] {
        &self.members
    }

    pub fn editions(&self) -> BTreeSet<EditionId> {
        self.members.iter().map(WordKey::edition).collect()
    }

    pub fn num_editions(&self) -> usize {
        self.editions().len()
    }
}

/// Deduplicated concepts plus the inverse membership index.
#[derive(Clone, Debug, Default)]
pub struct ConceptSet {
    concepts: Vec<Concept>,
    membership: HashMap<WordKey, Vec<ConceptId>>,
    seen: HashMap<Vec<WordKey>, ConceptId>,
}

impl ConceptSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a member set unless an identical one exists. Returns the new id.
    pub fn insert(&mut self, mut members: Vec<WordKey>) -> Option<ConceptId> {
        members.sort();
        members.dedup();
        if members.is_empty() || self.seen.contains_key(&members) {
            return None;
        }
        let id = ConceptId(self.concepts.len() as u32);
        for m in &members {
            self.membership.entry(m.clone()).or_default().push(id);
        }
        self.seen.insert(members.clone(), id);
        self.concepts.push(Concept { id, members });
        Some(id)
    }

    /// Union in `other`'s concepts, renumbering new ones after ours.
    pub fn extend(&mut self, other: &ConceptSet) {
        for c in &other.concepts {
            self.insert(c.members.clone());
        }
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn get(&self, id: ConceptId) -> Option<&Concept> {
        self.concepts.get(id.0 as usize)
    }

    /// Concepts containing `key`, in id order.
    pub fn concepts_of(&self, key: &WordKey) -> &[ConceptId] {
        self.membership.get(key).map_or(&[], Vec::as_slice)
    }

    pub fn contains_member(&self, key: &WordKey) -> bool {
        self.membership.contains_key(key)
    }

    /// Every distinct member, sorted.
    pub fn members(&self) -> Vec<&WordKey> {
        let mut m: Vec<_> = self.membership.keys().collect();
        m.sort();
        m
    }

    /// One line per member: `C:<id>\t<edition>:<surface>`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for c in &self.concepts {
            for m in &c.members {
                writeln!(out, "{}\t{}", c.id, m)?;
            }
        }
        Ok(())
    }

    /// Read a concept file. Ids are reassigned in order of first appearance.
    pub fn read_tsv<R: BufRead>(reader: R, name: &str) -> Result<ConceptSet> {
        let mut order: Vec<String> = Vec::new();
        let mut groups: HashMap<String, Vec<WordKey>> = HashMap::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(name, e))?;
            if line.is_empty() {
                continue;
            }
            let (cid, key) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(name, n + 1, "expected C:<id>\\t<word-key>"))?;
            cid.parse::<ConceptId>()
                .map_err(|e| Error::parse(name, n + 1, e.to_string()))?;
            let key: WordKey = key
                .parse()
                .map_err(|e: Error| Error::parse(name, n + 1, e.to_string()))?;
            if !groups.contains_key(cid) {
                order.push(cid.to_string());
            }
            groups.entry(cid.to_string()).or_default().push(key);
        }
        let mut set = ConceptSet::new();
        for cid in order {
            set.insert(groups.remove(&cid).unwrap_or_default());
        }
        Ok(set)
    }
}

impl PartialEq for ConceptSet {
    fn eq(&self, other: &Self) -> bool {
        self.concepts == other.concepts
    }
}

/// Draws subcorpus sizes with `p(k) ∝ 1/k` over `k ∈ 1..=n`.
#[derive(Clone, Debug)]
pub struct SubsampleSizer {
    cumulative: Vec<f64>,
}

impl SubsampleSizer {
    pub fn new(n: usize) -> Self {
        let mut acc = 0.0;
        let cumulative = (1..=n)
            .map(|k| {
                acc += 1.0 / k as f64;
                acc
            })
            .collect();
        SubsampleSizer { cumulative }
    }

    pub fn draw(&self, rng: &mut Rng) -> usize {
        let total = match self.cumulative.last() {
            Some(&t) => t,
            None => return 0,
        };
        let u = rng.gen::<f64>() * total;
        let k = self.cumulative.partition_point(|&c| c <= u);
        k.min(self.cumulative.len() - 1) + 1
    }
}

/// Draw one subcorpus: global sentence indices, sorted.
pub fn sample_subcorpus(corpus: &ParallelCorpus, rng: &mut Rng) -> Vec<usize> {
    sample_with(&SubsampleSizer::new(corpus.num_sentences()), corpus.num_sentences(), rng)
}

fn sample_with(sizer: &SubsampleSizer, n: usize, rng: &mut Rng) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let k = sizer.draw(rng);
    let mut picked = index::sample(rng, n, k).into_vec();
    picked.sort_unstable();
    picked
}

/// One ngram of one edition, by interned token ids.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AlignedNgram {
    pub edition: usize,
    pub tokens: Vec<u32>,
}

/// `(edition, ngram)`s sharing one subcorpus occurrence signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemberSet {
    /// Positions (into the sorted subcorpus) of the shared signature.
    pub signature: Vec<u32>,
    pub members: Vec<AlignedNgram>,
}

impl MemberSet {
    pub fn num_editions(&self) -> usize {
        let mut eds: Vec<usize> = self.members.iter().map(|m| m.edition).collect();
        eds.sort_unstable();
        eds.dedup();
        eds.len()
    }

    pub fn to_keys(&self, corpus: &ParallelCorpus) -> Vec<WordKey> {
        self.members
            .iter()
            .map(|m| {
                let ed = &corpus.editions()[m.edition];
                WordKey::new(ed.id(), ed.join(&m.tokens)).expect("corpus tokens form valid keys")
            })
            .collect()
    }
}

/// Group every `(edition, ngram)` occurring in the subcorpus by its exact
/// occurrence signature; keep groups of at least two members spanning at
/// least two editions. Output is sorted by signature, members by
/// `(edition, tokens)`.
pub fn extract_perfect_alignments(
    corpus: &ParallelCorpus,
    subcorpus: &[usize],
    max_ngram: usize,
) -> Vec<MemberSet> {
    let mut groups: HashMap<Vec<u32>, Vec<AlignedNgram>> = HashMap::new();
    for (ei, ed) in corpus.editions().iter().enumerate() {
        let mut sigs: HashMap<&[u32], Vec<u32>> = HashMap::new();
        for (pos, &s) in subcorpus.iter().enumerate() {
            let Some(toks) = ed.tokens(s) else { continue };
            for g in ngrams(toks, max_ngram) {
                let sig = sigs.entry(g).or_default();
                if sig.last() != Some(&(pos as u32)) {
                    sig.push(pos as u32);
                }
            }
        }
        for (g, sig) in sigs {
            groups.entry(sig).or_default().push(AlignedNgram {
                edition: ei,
                tokens: g.to_vec(),
            });
        }
    }
    let mut out: Vec<MemberSet> = groups
        .into_iter()
        .filter_map(|(signature, mut members)| {
            members.sort();
            let set = MemberSet { signature, members };
            (set.members.len() >= 2 && set.num_editions() >= 2).then_some(set)
        })
        .collect();
    out.sort_by(|a, b| a.signature.cmp(&b.signature));
    out
}

pub fn filter_member_set(members: &[WordKey], min_editions: usize) -> bool {
    let eds: BTreeSet<EditionId> = members.iter().map(WordKey::edition).collect();
    eds.len() >= min_editions
}

fn run_iteration(
    corpus: &ParallelCorpus,
    sizer: &SubsampleSizer,
    params: &ConceptParams,
    iteration: u64,
) -> Vec<Vec<WordKey>> {
    let mut rng = rng::stream(params.seed, iteration);
    let sub = sample_with(sizer, corpus.num_sentences(), &mut rng);
    extract_perfect_alignments(corpus, &sub, params.max_ngram)
        .into_iter()
        .filter(|set| set.num_editions() >= params.min_editions)
        .map(|set| set.to_keys(corpus))
        .collect()
}

const BATCH: u64 = 64;

/// Run `budget` sample → extract → filter iterations and union the
/// surviving member sets. Iteration `i` draws from its own stream derived
/// from `(seed, i)`, so the result does not depend on `workers`.
pub fn induce_concepts(corpus: &ParallelCorpus, params: &ConceptParams) -> Result<ConceptSet> {
    induce_concepts_with(corpus, params, 1)
}

pub fn induce_concepts_with(
    corpus: &ParallelCorpus,
    params: &ConceptParams,
    workers: usize,
) -> Result<ConceptSet> {
    params.validate()?;
    let mut set = ConceptSet::new();
    if corpus.num_sentences() == 0 {
        return Ok(set);
    }
    let sizer = SubsampleSizer::new(corpus.num_sentences());
    let mut start = 0;
    while start < params.budget {
        let end = (start + BATCH).min(params.budget);
        for sets in run_batch(corpus, &sizer, params, start..end, workers) {
            for members in sets {
                set.insert(members);
            }
        }
        start = end;
    }
    Ok(set)
}

#[cfg(feature = "parallel")]
fn run_batch(
    corpus: &ParallelCorpus,
    sizer: &SubsampleSizer,
    params: &ConceptParams,
    range: std::ops::Range<u64>,
    workers: usize,
) -> Vec<Vec<Vec<WordKey>>> {
    use rayon::prelude::*;
    if workers <= 1 {
        return range.map(|i| run_iteration(corpus, sizer, params, i)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build();
    match pool {
        Ok(pool) => pool.install(|| {
            range
                .into_par_iter()
                .map(|i| run_iteration(corpus, sizer, params, i))
                .collect()
        }),
        Err(_) => range.map(|i| run_iteration(corpus, sizer, params, i)).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_batch(
    corpus: &ParallelCorpus,
    sizer: &SubsampleSizer,
    params: &ConceptParams,
    range: std::ops::Range<u64>,
    _workers: usize,
) -> Vec<Vec<Vec<WordKey>>> {
    range.map(|i| run_iteration(corpus, sizer, params, i)).collect()
}

/// Estimate how many samples fit into `seconds` by timing a few iterations.
#[cfg(not(target_arch = "wasm32"))]
pub fn budget_for_duration(corpus: &ParallelCorpus, params: &ConceptParams, seconds: f64) -> u64 {
    const PROBE: u64 = 16;
    if corpus.num_sentences() == 0 {
        return 1;
    }
    let sizer = SubsampleSizer::new(corpus.num_sentences());
    let start = std::time::Instant::now();
    for i in 0..PROBE {
        run_iteration(corpus, &sizer, params, i);
    }
    let per = start.elapsed().as_secs_f64() / PROBE as f64;
    ((seconds / per.max(1e-9)) as u64).max(1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        if values.is_empty() {
            return Summary {
                mean: 0.0,
                median: 0.0,
                stddev: 0.0,
                min: 0.0,
                max: 0.0,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Summary {
            mean,
            median: median(values),
            stddev: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

pub(crate) fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConceptStats {
    pub num_concepts: usize,
    pub editions: Summary,
    pub tokens: Summary,
    pub reference: EditionId,
    /// Fraction of the reference edition's types that are concept members.
    pub coverage: f64,
    /// Same, restricted to the most frequent tenth of types.
    pub coverage_frequent: f64,
    /// Same, restricted to the least frequent tenth of types.
    pub coverage_rare: f64,
}

pub fn concept_stats(
    concepts: &ConceptSet,
    corpus: &ParallelCorpus,
    reference: EditionId,
) -> Result<ConceptStats> {
    let ed = corpus.edition(reference)?;
    let eds: Vec<f64> = concepts.concepts().iter().map(|c| c.num_editions() as f64).collect();
    let toks: Vec<f64> = concepts.concepts().iter().map(|c| c.members.len() as f64).collect();

    let mut types: Vec<(&str, u64)> = ed.vocabulary().collect();
    types.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let covered: Vec<bool> = types
        .iter()
        .map(|(t, _)| {
            WordKey::new(reference, *t)
                .map(|k| concepts.contains_member(&k))
                .unwrap_or(false)
        })
        .collect();
    let frac = |s: &[bool]| {
        if s.is_empty() {
            0.0
        } else {
            s.iter().filter(|&&c| c).count() as f64 / s.len() as f64
        }
    };
    let decile = covered.len().div_ceil(10);
    Ok(ConceptStats {
        num_concepts: concepts.len(),
        editions: Summary::of(&eds),
        tokens: Summary::of(&toks),
        reference,
        coverage: frac(&covered),
        coverage_frequent: frac(&covered[..decile]),
        coverage_rare: frac(&covered[covered.len() - decile..]),
    })
}

impl fmt::Display for ConceptStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>9} {:>9} {:>9} {:>9} {:>9}", "", "Mean", "Median", "Stddev.", "Min", "Max")?;
        for (name, s) in [("#editions", &self.editions), ("#tokens", &self.tokens)] {
            writeln!(
                f,
                "{:<10} {:>9.2} {:>9.2} {:>9.2} {:>9.0} {:>9.0}",
                name, s.mean, s.median, s.stddev, s.min, s.max
            )?;
        }
        writeln!(f)?;
        writeln!(
            f,
            "{:>10} {:>9} {:>12} {:>12}   (reference {})",
            "#Concepts", "Cov.", "Cov. (rare)", "Cov. (freq.)", self.reference
        )?;
        writeln!(
            f,
            "{:>10} {:>9.2} {:>12.2} {:>12.2}",
            self.num_concepts, self.coverage, self.coverage_rare, self.coverage_frequent
        )
    }
}

//! Synthetic parallel corpora with a known lexicon.
//!
//! A base language of `vocab` words is sampled sentence by sentence with
//! Zipfian word frequencies. Every edition renders the same base sentences
//! through its own bijective lexicon, then replaces each token independently
//! with probability `noise` by a uniformly drawn base word. Without noise,
//! editions are exact relabelings of each other.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::corpus::{save_corpus, EditionId, ParallelCorpus, SentenceId, WordKey};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthParams {
    pub editions: usize,
    pub vocab: usize,
    pub sentences: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Per-token replacement probability, independent per edition.
    pub noise: f64,
    /// Exponent `s` of the word distribution `p(rank) ∝ rank^-s`.
    pub zipf: f64,
    pub num_queries: usize,
    /// Number of most frequent base words passed over before picking queries.
    pub query_skip: usize,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            editions: 5,
            vocab: 500,
            sentences: 2000,
            min_len: 8,
            max_len: 15,
            noise: 0.1,
            zipf: 1.0,
            num_queries: 50,
            query_skip: 0,
            seed: 1,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.editions < 1 || self.editions > 26 {
            return bad("editions must lie in 1..=26");
        }
        if self.vocab < 2 {
            return bad("vocab must be >= 2");
        }
        if self.sentences < 1 {
            return bad("sentences must be >= 1");
        }
        if self.min_len < 1 || self.min_len > self.max_len {
            return bad("need 1 <= min_len <= max_len");
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return bad("noise must lie in [0, 1]");
        }
        if !(self.zipf >= 0.0 && self.zipf.is_finite()) {
            return bad("zipf exponent must be finite and >= 0");
        }
        if self.query_skip + self.num_queries > self.vocab {
            return bad("query_skip + num_queries exceeds vocab");
        }
        Ok(())
    }
}

/// Edition id of the `i`-th synthetic edition: `sya0`, `syb0`, ...
pub fn edition_id(i: usize) -> EditionId {
    EditionId::new(&format!("sy{}", (b'a' + i as u8) as char), '0').expect("valid synthetic edition id")
}

#[derive(Clone, Debug)]
pub struct SynthCorpus {
    pub corpus: ParallelCorpus,
    /// `lexicon[e][b]` is the surface of base word `b` in edition `e`.
    pub lexicon: Vec<Vec<String>>,
    /// Base words sampled before noise, per sentence.
    pub base_sentences: Vec<Vec<usize>>,
    /// Base ids of the query words, most frequent first.
    pub query_words: Vec<usize>,
    pub params: SynthParams,
}

impl SynthCorpus {
    pub fn edition_ids(&self) -> Vec<EditionId> {
        (0..self.params.editions).map(edition_id).collect()
    }

    /// Query surfaces in the first edition.
    pub fn queries(&self) -> Vec<String> {
        self.query_words.iter().map(|&b| self.lexicon[0][b].clone()).collect()
    }

    pub fn key(&self, edition: usize, base: usize) -> WordKey {
        WordKey::new(edition_id(edition), self.lexicon[edition][base].clone()).expect("synthetic surfaces are valid")
    }

    /// Gold translations of the query words from the first edition into
    /// every other edition.
    pub fn translation_pairs(&self) -> Vec<(WordKey, WordKey)> {
        let mut out = Vec::new();
        for e in 1..self.params.editions {
            for &b in &self.query_words {
                out.push((self.key(0, b), self.key(e, b)));
            }
        }
        out
    }

    /// Binary verse labels: a base sentence is positive iff it contains one
    /// of the base words `10..20` (before noise). Every edition gets the same
    /// labels.
    pub fn labels(&self) -> Vec<(EditionId, SentenceId, bool)> {
        let mut out = Vec::new();
        for e in 0..self.params.editions {
            for (s, words) in self.base_sentences.iter().enumerate() {
                let label = words.iter().any(|&w| (10..20).contains(&w));
                out.push((edition_id(e), self.corpus.sentence_ids()[s].clone(), label));
            }
        }
        out
    }

    /// Writes the corpus (`<edition>.tsv` and `manifest.tsv`), `queries.txt`,
    /// `translation.tsv`, `labels.tsv` and `lexicon.tsv` into `dir`. Returns
    /// the manifest path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let manifest = save_corpus(&self.corpus, dir)?;
        let write = |name: &str, body: &dyn Fn(&mut dyn Write) -> std::io::Result<()>| -> Result<()> {
            let path = dir.join(name);
            let mut out = BufWriter::new(fs::File::create(&path).map_err(|e| Error::io(&path, e))?);
            body(&mut out).map_err(|e| Error::io(&path, e))?;
            out.flush().map_err(|e| Error::io(&path, e))
        };
        write("queries.txt", &|out| {
            self.queries().iter().try_for_each(|q| writeln!(out, "{q}"))
        })?;
        write("translation.tsv", &|out| {
            self.translation_pairs()
                .iter()
                .try_for_each(|(a, b)| writeln!(out, "{a}\t{b}"))
        })?;
        write("labels.tsv", &|out| {
            self.labels()
                .iter()
                .try_for_each(|(e, s, l)| writeln!(out, "{e}\t{s}\t{}", u8::from(*l)))
        })?;
        write("lexicon.tsv", &|out| {
            for b in 0..self.params.vocab {
                let row: Vec<&str> = self.lexicon.iter().map(|lex| lex[b].as_str()).collect();
                writeln!(out, "{}", row.join("\t"))?;
            }
            Ok(())
        })?;
        Ok(manifest)
    }
}

struct Zipf {
    cumulative: Vec<f64>,
}

impl Zipf {
    fn new(n: usize, s: f64) -> Self {
        let mut acc = 0.0;
        let cumulative = (1..=n)
            .map(|r| {
                acc += (r as f64).powf(-s);
                acc
            })
            .collect();
        Zipf { cumulative }
    }

    fn sample(&self, rng: &mut rng::Rng) -> usize {
        let u = rng.gen::<f64>() * self.cumulative[self.cumulative.len() - 1];
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}

/// Generates the corpus. Base word `b` has frequency rank `b + 1`; query
/// words are base words `query_skip..query_skip + num_queries`.
pub fn generate(params: &SynthParams) -> Result<SynthCorpus> {
    params.validate()?;
    let width = (params.vocab - 1).to_string().len();
    let mut perm_rng = rng::stream(params.seed, 0);
    let lexicon: Vec<Vec<String>> = (0..params.editions)
        .map(|e| {
            let mut perm: Vec<usize> = (0..params.vocab).collect();
            perm.shuffle(&mut perm_rng);
            let prefix = (b'a' + e as u8) as char;
            perm.iter().map(|p| format!("{prefix}{p:0width$}")).collect()
        })
        .collect();

    let zipf = Zipf::new(params.vocab, params.zipf);
    let mut sent_rng = rng::stream(params.seed, 1);
    let base_sentences: Vec<Vec<usize>> = (0..params.sentences)
        .map(|_| {
            let len = sent_rng.gen_range(params.min_len..=params.max_len);
            (0..len).map(|_| zipf.sample(&mut sent_rng)).collect()
        })
        .collect();

    let sid = |s: usize| SentenceId::new(format!("{:08}", s + 1));
    let mut builder = ParallelCorpus::builder();
    for (e, lex) in lexicon.iter().enumerate() {
        let mut noise_rng = rng::stream(params.seed, 2 + e as u64);
        let rows = base_sentences.iter().enumerate().map(|(s, words)| {
            let toks = words
                .iter()
                .map(|&w| {
                    let w = if noise_rng.gen::<f64>() < params.noise {
                        noise_rng.gen_range(0..params.vocab)
                    } else {
                        w
                    };
                    lex[w].clone()
                })
                .collect();
            (sid(s), toks)
        });
        builder.add_edition(edition_id(e), rows.collect::<Vec<_>>())?;
    }
    Ok(SynthCorpus {
        corpus: builder.build(),
        lexicon,
        base_sentences,
        query_words: (params.query_skip..params.query_skip + params.num_queries).collect(),
        params: params.clone(),
    })
}

//! Training pair corpora: `(sentence-id, word)`, `(concept-id, word)` and
//! their concatenation.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::concepts::ConceptSet;
use crate::corpus::{ParallelCorpus, WordKey};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    SentenceId,
    ConceptId,
    Combined,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::SentenceId => "s-id",
            Provenance::ConceptId => "c-id",
            Provenance::Combined => "co+co",
        })
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s-id" => Ok(Provenance::SentenceId),
            "c-id" => Ok(Provenance::ConceptId),
            "co+co" => Ok(Provenance::Combined),
            other => Err(Error::InvalidParameter(format!("unknown pair provenance {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pair {
    pub context: String,
    pub word: WordKey,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairCorpus {
    pub provenance: Provenance,
    pub pairs: Vec<Pair>,
}

impl PairCorpus {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `context-id\tword-key` per line. Ngram members use the whitespace-free
    /// token form so each line is exactly two tokens.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for p in &self.pairs {
            writeln!(out, "{}\t{}", p.context, p.word.to_token())?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R, provenance: Provenance, name: &str) -> Result<PairCorpus> {
        let mut pairs = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(name, e))?;
            if line.is_empty() {
                continue;
            }
            let (context, word) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(name, n + 1, "expected context-id\\tword-key"))?;
            let word =
                WordKey::from_token(word).map_err(|e| Error::parse(name, n + 1, e.to_string()))?;
            pairs.push(Pair {
                context: context.to_string(),
                word,
            });
        }
        Ok(PairCorpus { provenance, pairs })
    }
}

/// One pair per token occurrence whose per-edition frequency is at least
/// `min_count`. Order: edition, sentence index, token position.
pub fn build_sid(corpus: &ParallelCorpus, min_count: u64) -> PairCorpus {
    let mut pairs = Vec::new();
    for ed in corpus.editions() {
        // Keys are built once per type.
        let keys: Vec<Option<WordKey>> = ed
            .vocabulary()
            .map(|(surface, count)| {
                (count >= min_count).then(|| WordKey::new(ed.id(), surface).expect("valid token"))
            })
            .collect();
        for (s, toks) in ed.sentences() {
            let sid = corpus.sentence_ids()[s].as_str();
            for &t in toks {
                if let Some(key) = &keys[t as usize] {
                    pairs.push(Pair {
                        context: sid.to_string(),
                        word: key.clone(),
                    });
                }
            }
        }
    }
    PairCorpus {
        provenance: Provenance::SentenceId,
        pairs,
    }
}

/// One pair per `(concept, member)`.
pub fn build_cid(concepts: &ConceptSet) -> PairCorpus {
    let pairs = concepts
        .concepts()
        .iter()
        .flat_map(|c| {
            let id = c.id().to_string();
            c.members().iter().map(move |m| Pair {
                context: id.clone(),
                word: m.clone(),
            })
        })
        .collect();
    PairCorpus {
        provenance: Provenance::ConceptId,
        pairs,
    }
}

pub fn build_coco(corpus: &ParallelCorpus, concepts: &ConceptSet, sid_min_count: u64) -> PairCorpus {
    let mut pairs = build_sid(corpus, sid_min_count).pairs;
    pairs.extend(build_cid(concepts).pairs);
    PairCorpus {
        provenance: Provenance::Combined,
        pairs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_pbc_tsv, EditionId};

    fn key(s: &str) -> WordKey {
        s.parse().unwrap()
    }

    fn corpus() -> ParallelCorpus {
        let mut b = ParallelCorpus::builder();
        let en = "48001018\tfifteen , years\n45016016\tyears kiss\n";
        let de = "48001018\tfünfzehn Jahre ,\n";
        b.add_edition("enge".parse().unwrap(), parse_pbc_tsv(en.as_bytes(), "en").unwrap())
            .unwrap();
        b.add_edition("deu0".parse().unwrap(), parse_pbc_tsv(de.as_bytes(), "de").unwrap())
            .unwrap();
        b.build()
    }

    fn concepts() -> ConceptSet {
        let mut c = ConceptSet::new();
        c.insert(vec![key("kqc0:Jerusalem"), key("fra1:Jérusalem")]);
        c.insert(vec![key("kqc0:Jerusalem"), key("por5:Jerusalém")]);
        c
    }

    #[test]
    fn sid_pairs_follow_corpus_order() {
        let p = build_sid(&corpus(), 1);
        let rendered: Vec<String> = p.pairs.iter().map(|p| format!("{} {}", p.context, p.word)).collect();
        assert_eq!(
            &rendered[..3],
            ["48001018 enge:fifteen", "48001018 enge:,", "48001018 enge:years"]
        );
        assert_eq!(rendered.len(), 5 + 3);
        assert_eq!(rendered[5], "48001018 deu0:fünfzehn");
    }

    #[test]
    fn sid_min_count_drops_hapaxes() {
        let p = build_sid(&corpus(), 2);
        assert!(p.pairs.iter().all(|p| p.word == key("enge:years")));
        assert_eq!(p.len(), 2);
        assert!(build_sid(&ParallelCorpus::default(), 1).is_empty());
    }

    #[test]
    fn cid_pairs_once_per_member() {
        let p = build_cid(&concepts());
        assert_eq!(p.len(), 4);
        let jer: Vec<&str> = p
            .pairs
            .iter()
            .filter(|p| p.word == key("kqc0:Jerusalem"))
            .map(|p| p.context.as_str())
            .collect();
        assert_eq!(jer, ["C:0", "C:1"]);
        assert!(build_cid(&ConceptSet::new()).is_empty());
    }

    #[test]
    fn coco_is_concatenation() {
        let c = corpus();
        let k = concepts();
        let sid = build_sid(&c, 2);
        let cid = build_cid(&k);
        let coco = build_coco(&c, &k, 2);
        assert_eq!(coco.len(), sid.len() + cid.len());
        assert_eq!(&coco.pairs[..sid.len()], &sid.pairs[..]);
        assert_eq!(&coco.pairs[sid.len()..], &cid.pairs[..]);
        assert_eq!(build_coco(&c, &ConceptSet::new(), 2).pairs, sid.pairs);
        assert_eq!(build_coco(&ParallelCorpus::default(), &k, 2).pairs, cid.pairs);
    }

    #[test]
    fn tsv_round_trip_keeps_ngrams_two_tokens() {
        let mut k = ConceptSet::new();
        let ed: EditionId = "enge".parse().unwrap();
        k.insert(vec![WordKey::new(ed, "mount of olives").unwrap(), key("fra1:x")]);
        let p = build_coco(&corpus(), &k, 1);
        let mut buf = Vec::new();
        p.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().all(|l| l.split_whitespace().count() == 2));
        let back = PairCorpus::read_tsv(buf.as_slice(), Provenance::Combined, "mem").unwrap();
        assert_eq!(back, p);
    }
}

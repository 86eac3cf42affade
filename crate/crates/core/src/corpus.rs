//! Sentence-aligned parallel corpora.
//!
//! Every edition (one translation in one language) is stored as a list of
//! sentences over the shared global sentence-ID index. Tokens are interned
//! per edition, so `u32` token ids are only meaningful together with the
//! edition that produced them.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

/// A corpus edition: 3-letter ISO 639-3 code plus one alphanumeric variant
/// character, rendered as exactly four characters (`enge`, `deu0`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EditionId([u8; 4]);

impl EditionId {
    pub fn new(iso: &str, variant: char) -> Result<Self> {
        format!("{iso}{variant}").parse()
    }

    pub fn as_str(&self) -> &str {
        // Constructed only from validated ASCII.
        std::str::from_utf8(&self.0).expect("edition id is ASCII")
    }

    pub fn iso(&self) -> &str {
        &self.as_str()[..3]
    }

    pub fn variant(&self) -> char {
        self.0[3] as char
    }
}

impl FromStr for EditionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let b = s.as_bytes();
        if b.len() != 4
            || !b[..3].iter().all(u8::is_ascii_lowercase)
            || !b[3].is_ascii_alphanumeric()
        {
            return Err(Error::InvalidEdition(s.to_string()));
        }
        Ok(EditionId([b[0], b[1], b[2], b[3]]))
    }
}

impl fmt::Display for EditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for EditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EditionId({})", self.as_str())
    }
}

/// An edition-scoped word (or space-joined ngram), rendered `enge:fifteen`.
///
/// Ordering matches the lexicographic order of the rendered form because the
/// edition prefix has fixed width.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WordKey {
    edition: EditionId,
    surface: String,
}

impl WordKey {
    pub fn new(edition: EditionId, surface: impl Into<String>) -> Result<Self> {
        let surface = surface.into();
        if surface.is_empty() || surface.contains(['\t', '\n', '\r']) {
            return Err(Error::InvalidWordKey(format!("{edition}:{surface}")));
        }
        Ok(WordKey { edition, surface })
    }

    pub fn edition(&self) -> EditionId {
        self.edition
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    /// Whitespace-free rendering used in token-oriented files (pair corpora,
    /// embedding text files): spaces inside ngram surfaces become `\s` and
    /// backslashes become `\\`. Unigram keys without backslashes render
    /// exactly as [`Display`](fmt::Display).
    pub fn to_token(&self) -> String {
        let mut out = String::with_capacity(self.surface.len() + 5);
        out.push_str(self.edition.as_str());
        out.push(':');
        for c in self.surface.chars() {
            match c {
                ' ' => out.push_str("\\s"),
                '\\' => out.push_str("\\\\"),
                c => out.push(c),
            }
        }
        out
    }

    pub fn from_token(token: &str) -> Result<Self> {
        let (edition, rest) = split_key(token)?;
        let mut surface = String::with_capacity(rest.len());
        let mut chars = rest.chars();
        while let Some(c) = chars.next() {
            if c == '\\' {
                match chars.next() {
                    Some('s') => surface.push(' '),
                    Some('\\') => surface.push('\\'),
                    _ => return Err(Error::InvalidWordKey(token.to_string())),
                }
            } else {
                surface.push(c);
            }
        }
        WordKey::new(edition, surface)
    }
}

fn split_key(s: &str) -> Result<(EditionId, &str)> {
    if s.len() < 6 || !s.is_char_boundary(4) || s.as_bytes()[4] != b':' {
        return Err(Error::InvalidWordKey(s.to_string()));
    }
    let edition = s[..4]
        .parse()
        .map_err(|_| Error::InvalidWordKey(s.to_string()))?;
    Ok((edition, &s[5..]))
}

impl FromStr for WordKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (edition, surface) = split_key(s)?;
        WordKey::new(edition, surface)
    }
}

impl fmt::Display for WordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.edition, self.surface)
    }
}

impl fmt::Debug for WordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WordKey({self})")
    }
}

/// Alignment key shared across editions. Opaque: PBC verse ids and line
/// indices both fit.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct SentenceId(String);

impl SentenceId {
    pub fn new(id: impl Into<String>) -> Self {
        SentenceId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SentenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SentenceId {
    fn from(s: &str) -> Self {
        SentenceId(s.to_string())
    }
}

/// One edition's sentences and vocabulary.
#[derive(Clone, Debug)]
pub struct Edition {
    id: EditionId,
    types: Vec<String>,
    type_index: HashMap<String, u32>,
    counts: Vec<u64>,
    /// Indexed by global sentence index; `None` where the edition lacks the sentence.
    sentences: Vec<Option<Vec<u32>>>,
}

impl Edition {
    pub fn id(&self) -> EditionId {
        self.id
    }

    pub fn tokens(&self, sentence: usize) -> Option<&[u32]> {
        self.sentences.get(sentence).and_then(|s| s.as_deref())
    }

    /// `(global sentence index, tokens)` for every sentence of this edition,
    /// in global index order.
    pub fn sentences(&self) -> impl Iterator<Item = (usize, &[u32])> + '_ {
        self.sentences
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_deref().map(|t| (i, t)))
    }

    pub fn num_sentences(&self) -> usize {
        self.sentences.iter().filter(|s| s.is_some()).count()
    }

    pub fn surface(&self, token: u32) -> &str {
        &self.types[token as usize]
    }

    pub fn token_id(&self, surface: &str) -> Option<u32> {
        self.type_index.get(surface).copied()
    }

    pub fn count(&self, token: u32) -> u64 {
        self.counts[token as usize]
    }

    pub fn frequency(&self, surface: &str) -> u64 {
        self.token_id(surface).map_or(0, |t| self.count(t))
    }

    pub fn num_types(&self) -> usize {
        self.types.len()
    }

    pub fn num_tokens(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(surface, corpus frequency)` in order of first occurrence.
    pub fn vocabulary(&self) -> impl Iterator<Item = (&str, u64)> + '_ {
        self.types
            .iter()
            .zip(&self.counts)
            .map(|(t, &c)| (t.as_str(), c))
    }

    pub fn join(&self, tokens: &[u32]) -> String {
        let mut out = String::new();
        for (i, &t) in tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(self.surface(t));
        }
        out
    }
}

/// Editions over one global sentence-ID index. Immutable once built.
#[derive(Clone, Debug, Default)]
pub struct ParallelCorpus {
    editions: Vec<Edition>,
    sentence_ids: Vec<SentenceId>,
    sentence_index: HashMap<SentenceId, usize>,
}

impl ParallelCorpus {
    pub fn builder() -> CorpusBuilder {
        CorpusBuilder::default()
    }

    pub fn editions(&self) -> &[Edition] {
        &self.editions
    }

    pub fn edition_ids(&self) -> Vec<EditionId> {
        self.editions.iter().map(|e| e.id).collect()
    }

    pub fn edition_index(&self, id: EditionId) -> Option<usize> {
        self.editions.iter().position(|e| e.id == id)
    }

    pub fn edition(&self, id: EditionId) -> Result<&Edition> {
        self.edition_index(id)
            .map(|i| &self.editions[i])
            .ok_or_else(|| Error::UnknownEdition(id.to_string()))
    }

    /// Global sentence ids in index order (first appearance across editions
    /// in manifest order).
    pub fn sentence_ids(&self) -> &[SentenceId] {
        &self.sentence_ids
    }

    pub fn num_sentences(&self) -> usize {
        self.sentence_ids.len()
    }

    pub fn sentence_index(&self, id: &SentenceId) -> Option<usize> {
        self.sentence_index.get(id).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.editions.is_empty()
    }

    /// Rebuild the corpus with only the given editions, in the given order.
    pub fn select_editions(&self, ids: &[EditionId]) -> Result<ParallelCorpus> {
        let mut builder = ParallelCorpus::builder();
        for &id in ids {
            let edition = self.edition(id)?;
            let rows = edition.sentences().map(|(s, toks)| {
                (
                    self.sentence_ids[s].clone(),
                    toks.iter().map(|&t| edition.surface(t).to_string()).collect(),
                )
            });
            builder.add_edition(id, rows)?;
        }
        Ok(builder.build())
    }
}

#[derive(Default)]
pub struct CorpusBuilder {
    editions: Vec<Edition>,
    sentence_ids: Vec<SentenceId>,
    sentence_index: HashMap<SentenceId, usize>,
}

impl CorpusBuilder {
    /// Add one edition. Rows are `(sentence id, tokens)`; empty sentences are
    /// treated as absent.
    pub fn add_edition<I>(&mut self, id: EditionId, rows: I) -> Result<&mut Self>
    where
        I: IntoIterator<Item = (SentenceId, Vec<String>)>,
    {
        if self.editions.iter().any(|e| e.id == id) {
            return Err(Error::DuplicateEdition(id.to_string()));
        }
        let mut edition = Edition {
            id,
            types: Vec::new(),
            type_index: HashMap::new(),
            counts: Vec::new(),
            sentences: Vec::new(),
        };
        let mut seen = BTreeSet::new();
        let mut placed: Vec<(usize, Vec<u32>)> = Vec::new();
        for (sid, tokens) in rows {
            if !seen.insert(sid.clone()) {
                return Err(Error::DuplicateSentence {
                    edition: id.to_string(),
                    id: sid.0,
                });
            }
            if tokens.is_empty() {
                continue;
            }
            let idx = match self.sentence_index.get(&sid) {
                Some(&i) => i,
                None => {
                    let i = self.sentence_ids.len();
                    self.sentence_index.insert(sid.clone(), i);
                    self.sentence_ids.push(sid);
                    i
                }
            };
            let ids = tokens
                .into_iter()
                .map(|tok| {
                    let t = match edition.type_index.get(&tok) {
                        Some(&t) => t,
                        None => {
                            let t = edition.types.len() as u32;
                            edition.type_index.insert(tok.clone(), t);
                            edition.types.push(tok);
                            edition.counts.push(0);
                            t
                        }
                    };
                    edition.counts[t as usize] += 1;
                    t
                })
                .collect();
            placed.push((idx, ids));
        }
        for (idx, ids) in placed {
            if edition.sentences.len() <= idx {
                edition.sentences.resize(idx + 1, None);
            }
            edition.sentences[idx] = Some(ids);
        }
        self.editions.push(edition);
        Ok(self)
    }

    pub fn build(self) -> ParallelCorpus {
        let n = self.sentence_ids.len();
        let mut editions = self.editions;
        for e in &mut editions {
            e.sentences.resize(n, None);
        }
        ParallelCorpus {
            editions,
            sentence_ids: self.sentence_ids,
            sentence_index: self.sentence_index,
        }
    }
}

/// On-disk layout of one edition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusFormat {
    /// `<sentence-id>\t<pre-tokenized text>` per line; `#` lines are comments.
    PbcTsv,
    /// One sentence per line; the zero-based line index is the sentence id.
    AlignedLines,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pbc-tsv" => Ok(CorpusFormat::PbcTsv),
            "aligned-lines" => Ok(CorpusFormat::AlignedLines),
            other => Err(Error::InvalidParameter(format!("unknown corpus format {other:?}"))),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::PbcTsv => "pbc-tsv",
            CorpusFormat::AlignedLines => "aligned-lines",
        })
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

pub fn parse_pbc_tsv<R: BufRead>(reader: R, name: &str) -> Result<Vec<(SentenceId, Vec<String>)>> {
    let mut rows = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(name, e))?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let (id, text) = match line.split_once('\t') {
            Some(parts) => parts,
            None => return Err(Error::parse(name, n + 1, "expected <sentence-id>\\t<text>")),
        };
        if id.is_empty() {
            return Err(Error::parse(name, n + 1, "empty sentence id"));
        }
        rows.push((SentenceId::new(id), tokenize(text)));
    }
    Ok(rows)
}

pub fn parse_aligned_lines<R: BufRead>(reader: R, name: &str) -> Result<Vec<(SentenceId, Vec<String>)>> {
    reader
        .lines()
        .enumerate()
        .map(|(n, line)| {
            let line = line.map_err(|e| Error::io(name, e))?;
            Ok((SentenceId::new(n.to_string()), tokenize(&line)))
        })
        .collect()
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Load one file per edition.
pub fn load_corpus(entries: &[(EditionId, PathBuf)], format: CorpusFormat) -> Result<ParallelCorpus> {
    let mut parsed = Vec::with_capacity(entries.len());
    for (id, path) in entries {
        let name = path.display().to_string();
        let rows = match format {
            CorpusFormat::PbcTsv => parse_pbc_tsv(open(path)?, &name)?,
            CorpusFormat::AlignedLines => parse_aligned_lines(open(path)?, &name)?,
        };
        parsed.push((*id, name, rows));
    }
    if format == CorpusFormat::AlignedLines {
        let lens: BTreeSet<usize> = parsed.iter().map(|(_, _, r)| r.len()).collect();
        if lens.len() > 1 {
            let detail = parsed
                .iter()
                .map(|(_, name, r)| format!("{name}={}", r.len()))
                .collect::<Vec<_>>()
                .join(", ");
            return Err(Error::LineCountMismatch(detail));
        }
    }
    let mut builder = ParallelCorpus::builder();
    for (id, _, rows) in parsed {
        builder.add_edition(id, rows)?;
    }
    Ok(builder.build())
}

/// Parse a manifest of `<edition-id>\t<path>` lines. Relative paths resolve
/// against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<(EditionId, PathBuf)>> {
    let name = path.display().to_string();
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut entries = Vec::new();
    for (n, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let (ed, file) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(&name, n + 1, "expected <edition-id>\\t<path>"))?;
        let ed: EditionId = ed
            .trim()
            .parse()
            .map_err(|e: Error| Error::parse(&name, n + 1, e.to_string()))?;
        let file = PathBuf::from(file.trim());
        entries.push((ed, if file.is_absolute() { file } else { base.join(file) }));
    }
    Ok(entries)
}

pub fn load_manifest(path: &Path, format: CorpusFormat) -> Result<ParallelCorpus> {
    load_corpus(&read_manifest(path)?, format)
}

pub fn write_pbc_tsv<W: Write>(corpus: &ParallelCorpus, edition: EditionId, mut out: W) -> Result<()> {
    let ed = corpus.edition(edition)?;
    for (s, toks) in ed.sentences() {
        writeln!(out, "{}\t{}", corpus.sentence_ids()[s], ed.join(toks))?;
    }
    Ok(())
}

/// Write every edition as `<edition>.tsv` plus `manifest.tsv` into `dir`.
pub fn save_corpus(corpus: &ParallelCorpus, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest_path = dir.join("manifest.tsv");
    let mut manifest = BufWriter::new(File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?);
    for ed in corpus.editions() {
        let file = format!("{}.tsv", ed.id());
        let path = dir.join(&file);
        let out = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
        write_pbc_tsv(corpus, ed.id(), out)?;
        writeln!(manifest, "{}\t{}", ed.id(), file)?;
    }
    manifest.flush()?;
    Ok(manifest_path)
}

/// All contiguous ngrams of length `1..=max_n`, shorter ones first, each
/// length in sentence order. Duplicates are kept.
pub fn ngrams<T>(tokens: &[T], max_n: usize) -> impl Iterator<Item = &[T]> + '_ {
    (1..=max_n.min(tokens.len())).flat_map(move |n| tokens.windows(n))
}

/// Sentence ids (sorted, deduplicated) of `edition` in which `ngram` occurs
/// contiguously. With `subcorpus`, only those global sentence indices are
/// considered.
pub fn signature(
    corpus: &ParallelCorpus,
    edition: EditionId,
    ngram: &[&str],
    subcorpus: Option<&[usize]>,
) -> Result<Vec<SentenceId>> {
    let ed = corpus.edition(edition)?;
    let ids: Option<Vec<u32>> = ngram.iter().map(|w| ed.token_id(w)).collect();
    let mut hits = Vec::new();
    let ids = match ids {
        Some(ids) if !ids.is_empty() => ids,
        _ => return Ok(hits),
    };
    let mut check = |s: usize| {
        if let Some(toks) = ed.tokens(s) {
            if toks.windows(ids.len()).any(|w| w == ids.as_slice()) {
                hits.push(corpus.sentence_ids()[s].clone());
            }
        }
    };
    match subcorpus {
        Some(sub) => sub.iter().copied().for_each(&mut check),
        None => (0..corpus.num_sentences()).for_each(&mut check),
    }
    hits.sort();
    hits.dedup();
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ed(s: &str) -> EditionId {
        s.parse().unwrap()
    }

    fn toy() -> ParallelCorpus {
        let tsv_en = "48001018\tfifteen , years\n45016016\tholy kiss\n";
        let tsv_de = "48001018\tfünfzehn Jahre ,\n";
        let mut b = ParallelCorpus::builder();
        b.add_edition(ed("enge"), parse_pbc_tsv(tsv_en.as_bytes(), "en").unwrap())
            .unwrap();
        b.add_edition(ed("deu0"), parse_pbc_tsv(tsv_de.as_bytes(), "de").unwrap())
            .unwrap();
        b.build()
    }

    #[test]
    fn edition_ids() {
        let e = ed("enge");
        assert_eq!(e.iso(), "eng");
        assert_eq!(e.variant(), 'e');
        assert_eq!(e.to_string(), "enge");
        assert_eq!(EditionId::new("deu", '0').unwrap(), ed("deu0"));
        for bad in ["eng", "engee", "EngE", "en1e", "eng-"] {
            assert!(bad.parse::<EditionId>().is_err(), "{bad}");
        }
    }

    #[test]
    fn word_keys() {
        let k: WordKey = "enge:fifteen".parse().unwrap();
        assert_eq!(k.edition(), ed("enge"));
        assert_eq!(k.surface(), "fifteen");
        let colon: WordKey = "enge::".parse().unwrap();
        assert_eq!(colon.surface(), ":");
        assert!("enge:".parse::<WordKey>().is_err());
        assert!("enge:a\tb".parse::<WordKey>().is_err());
        assert!("engefifteen".parse::<WordKey>().is_err());

        let ngram = WordKey::new(ed("enge"), "mount of olives").unwrap();
        assert_eq!(ngram.to_token(), "enge:mount\\sof\\solives");
        assert_eq!(WordKey::from_token(&ngram.to_token()).unwrap(), ngram);
        let slash = WordKey::new(ed("enge"), "a\\s b").unwrap();
        assert_eq!(WordKey::from_token(&slash.to_token()).unwrap(), slash);
        assert!(WordKey::from_token("enge:a\\x").is_err());
    }

    #[test]
    fn tokenization_and_vocabulary() {
        let c = toy();
        let en = c.edition(ed("enge")).unwrap();
        let vocab: Vec<_> = en.vocabulary().collect();
        assert_eq!(
            vocab,
            vec![("fifteen", 1), (",", 1), ("years", 1), ("holy", 1), ("kiss", 1)]
        );
        assert_eq!(c.num_sentences(), 2);
        assert_eq!(c.sentence_ids()[0].as_str(), "48001018");
        let de = c.edition(ed("deu0")).unwrap();
        assert_eq!(de.num_sentences(), 1);
        assert!(de.tokens(1).is_none());
    }

    #[test]
    fn shared_verse_is_indexed_once() {
        let mut b = ParallelCorpus::builder();
        b.add_edition(ed("enge"), vec![("48001018".into(), tokenize("a b"))])
            .unwrap();
        b.add_edition(ed("deu0"), vec![("48001018".into(), tokenize("c d"))])
            .unwrap();
        assert_eq!(b.build().num_sentences(), 1);
    }

    #[test]
    fn duplicate_sentence_is_rejected() {
        let tsv = "1\ta\n1\tb\n";
        let rows = parse_pbc_tsv(tsv.as_bytes(), "x").unwrap();
        let err = ParallelCorpus::builder().add_edition(ed("enge"), rows).err();
        assert!(matches!(err, Some(Error::DuplicateSentence { .. })));
    }

    #[test]
    fn malformed_pbc_line() {
        assert!(parse_pbc_tsv("no tab here\n".as_bytes(), "x").is_err());
        let rows = parse_pbc_tsv("# comment\n\n7\tx y\n".as_bytes(), "x").unwrap();
        assert_eq!(rows.len(), 1);
    }

    #[test]
    fn aligned_lines_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        let b = dir.path().join("b.txt");
        std::fs::write(&a, "x y\nz\n").unwrap();
        std::fs::write(&b, "x y\n").unwrap();
        let entries = vec![(ed("aaa0"), a.clone()), (ed("bbb0"), b.clone())];
        assert!(matches!(
            load_corpus(&entries, CorpusFormat::AlignedLines),
            Err(Error::LineCountMismatch(_))
        ));
        std::fs::write(&b, "p q\nr\n").unwrap();
        let c = load_corpus(&entries, CorpusFormat::AlignedLines).unwrap();
        assert_eq!(c.sentence_ids()[1].as_str(), "1");
        assert_eq!(c.num_sentences(), 2);
    }

    #[test]
    fn manifest_and_round_trip() {
        let c = toy();
        let dir = tempfile::tempdir().unwrap();
        let manifest = save_corpus(&c, dir.path()).unwrap();
        let back = load_manifest(&manifest, CorpusFormat::PbcTsv).unwrap();
        assert_eq!(back.edition_ids(), c.edition_ids());
        assert_eq!(back.sentence_ids(), c.sentence_ids());
        for (a, b) in c.editions().iter().zip(back.editions()) {
            assert_eq!(a.vocabulary().collect::<Vec<_>>(), b.vocabulary().collect::<Vec<_>>());
            assert_eq!(a.sentences().collect::<Vec<_>>(), b.sentences().collect::<Vec<_>>());
        }
    }

    #[test]
    fn ngram_enumeration() {
        let s = ["mount", "of", "olives"];
        let grams: Vec<_> = ngrams(&s, 3).collect();
        assert_eq!(grams.len(), 6);
        assert!(grams.contains(&&s[..]));
        assert_eq!(ngrams(&["a"], 3).collect::<Vec<_>>(), vec![&["a"][..]]);
        let grams: Vec<String> = ngrams(&["a", "b", "a"], 2).map(|g| g.join(" ")).collect();
        assert_eq!(grams, ["a", "b", "a", "a b", "b a"]);
    }

    #[test]
    fn signature_set_semantics() {
        let mut b = ParallelCorpus::builder();
        let rows = vec![
            ("3".into(), tokenize("x y x")),
            ("9".into(), tokenize("y")),
            ("17".into(), tokenize("x x")),
        ];
        b.add_edition(ed("enge"), rows).unwrap();
        let c = b.build();
        let sig = signature(&c, ed("enge"), &["x"], None).unwrap();
        assert_eq!(sig, vec![SentenceId::from("17"), SentenceId::from("3")]);
        assert!(signature(&c, ed("enge"), &["z"], None).unwrap().is_empty());
        assert!(signature(&c, ed("enge"), &["y", "y"], None).unwrap().is_empty());
        assert!(signature(&c, ed("fra1"), &["x"], None).is_err());
        let sub = signature(&c, ed("enge"), &["x"], Some(&[0, 1])).unwrap();
        assert_eq!(sub, vec![SentenceId::from("3")]);
    }

    #[test]
    fn select_editions_keeps_content() {
        let c = toy();
        let de = c.select_editions(&[ed("deu0")]).unwrap();
        assert_eq!(de.num_sentences(), 1);
        assert_eq!(de.edition(ed("deu0")).unwrap().num_tokens(), 3);
        assert!(c.select_editions(&[ed("fra1")]).is_err());
    }
}

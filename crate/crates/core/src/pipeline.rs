//! End-to-end runs from corpus ingest to the written reports.
//!
//! [`execute`] works in memory on a loaded corpus; [`run`] reads every input
//! named by a [`PipelineConfig`], calls [`execute`] and writes the artifacts.
//! Every error leaving [`run`] is tagged with the stage that raised it.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::concepts::{induce_concepts_with, ConceptSet};
use crate::config::{Method, PipelineConfig};
use crate::corpus::{load_manifest, EditionId, ParallelCorpus, WordKey};
use crate::error::{Error, Result};
use crate::eval::classify::{classify_transfer, ClassifyReport, LabeledVerses};
use crate::eval::lexical::{
    read_similarity_pairs, read_translation_pairs, spearman, SimilarityReport, TranslationReport,
};
use crate::eval::{c_simple_rtt, rtt, rtt_bilingual, word_similarity, word_translation_p1};
use crate::eval::{QueryResolver, QuerySet, RttReport};
use crate::pairs::{build_cid, build_coco, build_sid, PairCorpus, Provenance};
use crate::rng;
use crate::sgns::{self, TrainConfig};
use crate::space::{apply_map, fit_between, EmbeddingSpace, LinearMap};

/// Evaluation data; absent parts are skipped.
#[derive(Clone, Debug, Default)]
pub struct EvalInputs {
    pub queries: Option<QuerySet>,
    pub translation: Option<Vec<(WordKey, WordKey)>>,
    pub similarity: Option<Vec<(WordKey, WordKey, f64)>>,
    pub labels: Option<LabeledVerses>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Spaces {
    /// C-SIMPLE trains nothing.
    None,
    Single(EmbeddingSpace),
    /// One space per non-defining edition, keyed by that edition.
    Bilingual(Vec<(EditionId, EmbeddingSpace)>),
}

impl Spaces {
    /// Total number of word vectors.
    pub fn vocab_size(&self) -> usize {
        match self {
            Spaces::None => 0,
            Spaces::Single(s) => s.len(),
            Spaces::Bilingual(v) => v.iter().map(|(_, s)| s.len()).sum(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReports {
    pub method: Method,
    pub num_concepts: usize,
    pub num_pairs: usize,
    pub vocab_size: usize,
    pub rtt: Vec<RttReport>,
    pub translation: Option<TranslationReport>,
    pub similarity: Option<SimilarityReport>,
    pub classify: Option<ClassifyReport>,
}

impl EvalReports {
    pub fn rtt_variant(&self, name: &str) -> Option<&RttReport> {
        self.rtt.iter().find(|r| r.variant.eq_ignore_ascii_case(name))
    }
}

#[derive(Clone, Debug)]
pub struct Outputs {
    /// The configuration actually used, with derived values filled in.
    pub resolved: PipelineConfig,
    pub concepts: Option<ConceptSet>,
    /// Pair corpora with a file-name suffix (empty for a single corpus).
    pub pairs: Vec<(String, PairCorpus)>,
    pub spaces: Spaces,
    pub maps: Vec<(EditionId, LinearMap)>,
    pub reports: EvalReports,
}

/// Edition used to resolve queries: the configured one or the first edition.
pub fn query_edition(corpus: &ParallelCorpus, config: &PipelineConfig) -> Result<EditionId> {
    match config.query_edition {
        Some(e) => corpus.edition(e).map(|_| e),
        None => corpus
            .edition_ids()
            .first()
            .copied()
            .ok_or_else(|| Error::Empty("corpus has no editions".into())),
    }
}

/// Pivot edition of bilingual and mapped spaces.
pub fn defining_edition(corpus: &ParallelCorpus, config: &PipelineConfig) -> Result<EditionId> {
    match config.defining_edition {
        Some(e) => corpus.edition(e).map(|_| e),
        None => query_edition(corpus, config),
    }
}

/// Trains a space; an empty pair corpus gives an empty space.
pub fn train_space(pairs: &PairCorpus, config: &TrainConfig) -> Result<EmbeddingSpace> {
    if pairs.is_empty() {
        log::warn!("empty {} pair corpus; producing an empty space", pairs.provenance);
        return Ok(EmbeddingSpace::empty(config.dim));
    }
    sgns::train(pairs, config)
}

fn with_seed(config: &TrainConfig, stream: u64) -> TrainConfig {
    TrainConfig {
        seed: rng::derive(config.seed, stream),
        ..config.clone()
    }
}

/// Pair corpus of the single-space methods.
pub fn build_pairs(
    method: Method,
    corpus: &ParallelCorpus,
    concepts: Option<&ConceptSet>,
    sid_min_count: u64,
) -> Result<PairCorpus> {
    let need = || concepts.ok_or_else(|| Error::InvalidParameter(format!("method {method} needs concepts")));
    Ok(match method {
        Method::Sid => build_sid(corpus, sid_min_count),
        Method::Cid => build_cid(need()?),
        Method::Coco => build_coco(corpus, need()?, sid_min_count),
        other => return Err(Error::InvalidParameter(format!("method {other} has no single pair corpus"))),
    })
}

/// One independently trained space per edition, merged. Edition `i` trains
/// with seed stream `i`.
pub fn train_mono(corpus: &ParallelCorpus, config: &PipelineConfig) -> Result<(PairCorpus, EmbeddingSpace)> {
    let mut all = PairCorpus {
        provenance: Provenance::SentenceId,
        pairs: Vec::new(),
    };
    let mut spaces = Vec::new();
    for (i, e) in corpus.edition_ids().into_iter().enumerate() {
        let pairs = build_sid(&corpus.select_editions(&[e])?, config.sid_min_count);
        spaces.push(train_space(&pairs, &with_seed(&config.train, i as u64))?);
        all.pairs.extend(pairs.pairs);
    }
    let merged = EmbeddingSpace::merge(config.train.dim, &spaces)?;
    Ok((all, merged))
}

/// Sentence-id spaces over `{defining, e}` for every other edition `e`; the
/// `i`-th one trains with seed stream `i + 1`.
pub fn train_bilingual(
    corpus: &ParallelCorpus,
    defining: EditionId,
    config: &PipelineConfig,
) -> Result<Vec<(EditionId, PairCorpus, EmbeddingSpace)>> {
    corpus.edition(defining)?;
    let mut out = Vec::new();
    for (i, e) in corpus
        .edition_ids()
        .into_iter()
        .filter(|&e| e != defining)
        .enumerate()
    {
        let pairs = build_sid(&corpus.select_editions(&[defining, e])?, config.sid_min_count);
        let space = train_space(&pairs, &with_seed(&config.train, i as u64 + 1))?;
        out.push((e, pairs, space));
    }
    Ok(out)
}

/// LINEAR: a monolingual space of the defining edition (seed stream 0) is the
/// target; each bilingual space is mapped onto it with the map fit over the
/// defining edition's shared words, and its other edition is added.
pub fn train_linear(
    corpus: &ParallelCorpus,
    defining: EditionId,
    config: &PipelineConfig,
) -> Result<(Vec<(String, PairCorpus)>, EmbeddingSpace, Vec<(EditionId, LinearMap)>)> {
    let target_pairs = build_sid(&corpus.select_editions(&[defining])?, config.sid_min_count);
    let target = train_space(&target_pairs, &with_seed(&config.train, 0))?;
    let mut pairs = vec![(defining.to_string(), target_pairs)];
    let mut parts = vec![target.clone()];
    let mut maps = Vec::new();
    for (e, bi_pairs, bi) in train_bilingual(corpus, defining, config)? {
        let fit = fit_between(&bi, &target, Some(defining))?;
        let mut map = fit.map;
        map.source = e.to_string();
        map.target = defining.to_string();
        parts.push(apply_map(&bi.restrict(&[e]), &map)?);
        maps.push((e, map));
        pairs.push((e.to_string(), bi_pairs));
    }
    let merged = EmbeddingSpace::merge(config.train.dim, &parts)?;
    Ok((pairs, merged, maps))
}

/// Concept budget: the configured count, or one derived from `hours` by a
/// timed probe.
pub fn resolve_budget(corpus: &ParallelCorpus, config: &PipelineConfig) -> u64 {
    match config.hours {
        #[cfg(not(target_arch = "wasm32"))]
        Some(h) => crate::concepts::budget_for_duration(corpus, &config.concepts, h * 3600.0),
        _ => {
            let _ = corpus;
            config.concepts.budget
        }
    }
}

fn intermediates(corpus: &ParallelCorpus, config: &PipelineConfig) -> Vec<EditionId> {
    if config.intermediates.is_empty() {
        corpus.edition_ids()
    } else {
        config.intermediates.clone()
    }
}

fn bilingual_translation(spaces: &[(EditionId, EmbeddingSpace)], pairs: &[(WordKey, WordKey)]) -> TranslationReport {
    let (mut correct, mut covered) = (0usize, 0usize);
    for (src, tgt) in pairs {
        let hit = spaces
            .iter()
            .map(|(_, s)| s)
            .find(|s| s.contains(src) && s.edition_len(tgt.edition()) > 0)
            .and_then(|s| s.nearest(src, tgt.edition(), 1));
        if let Some(nn) = hit {
            covered += 1;
            correct += usize::from(nn.first().is_some_and(|n| &n.key == tgt));
        }
    }
    TranslationReport {
        accuracy: if pairs.is_empty() { 0.0 } else { correct as f64 / pairs.len() as f64 },
        covered,
        total: pairs.len(),
    }
}

fn bilingual_similarity(
    spaces: &[(EditionId, EmbeddingSpace)],
    pairs: &[(WordKey, WordKey, f64)],
) -> Result<SimilarityReport> {
    let (cos, gold): (Vec<f64>, Vec<f64>) = pairs
        .iter()
        .filter_map(|(a, b, g)| spaces.iter().find_map(|(_, s)| s.cosine(a, b)).map(|c| (c, *g)))
        .unzip();
    if cos.len() < 2 {
        return Err(Error::Evaluation(format!(
            "word similarity needs at least 2 covered pairs, found {}",
            cos.len()
        )));
    }
    let rho = spearman(&cos, &gold)
        .ok_or_else(|| Error::Evaluation("word similarity undefined for constant scores".into()))?;
    Ok(SimilarityReport {
        rho,
        covered: cos.len(),
        total: pairs.len(),
    })
}

/// One classifier per bilingual space, each scored on its non-training
/// edition. C and the CV score are those of the first space.
fn bilingual_classify(
    spaces: &[(EditionId, EmbeddingSpace)],
    corpus: &ParallelCorpus,
    labels: &LabeledVerses,
    seed: u64,
) -> Result<ClassifyReport> {
    let mut merged: Option<ClassifyReport> = None;
    for (e, space) in spaces {
        if *e == labels.training_edition {
            continue;
        }
        let sub = LabeledVerses {
            rows: labels
                .rows
                .iter()
                .filter(|r| r.edition == labels.training_edition || r.edition == *e)
                .cloned()
                .collect(),
            ..labels.clone()
        };
        if sub.test_editions().is_empty() {
            continue;
        }
        let r = classify_transfer(space, corpus, &sub, seed)?;
        match &mut merged {
            None => merged = Some(r),
            Some(m) => m.per_edition.extend(r.per_edition),
        }
    }
    let mut m = merged.ok_or_else(|| Error::Evaluation("no bilingual space covers a test edition".into()))?;
    m.f1 = m.per_edition.values().sum::<f64>() / m.per_edition.len() as f64;
    Ok(m)
}

/// Runs every stage in memory.
pub fn execute(corpus: &ParallelCorpus, config: &PipelineConfig, inputs: &EvalInputs) -> Result<Outputs> {
    config.concepts.validate().map_err(|e| e.in_stage("config"))?;
    config.train.validate().map_err(|e| e.in_stage("config"))?;
    let mut resolved = config.clone();
    let method = config.method;

    let concepts = if method.needs_concepts() {
        resolved.concepts.budget = resolve_budget(corpus, config);
        resolved.hours = None;
        let c = induce_concepts_with(corpus, &resolved.concepts, config.effective_workers())
            .map_err(|e| e.in_stage("induce-concepts"))?;
        log::info!("induced {} concepts", c.len());
        Some(c)
    } else {
        None
    };

    let home = query_edition(corpus, config).map_err(|e| e.in_stage("config"))?;
    let mut maps = Vec::new();
    let (pairs, spaces): (Vec<(String, PairCorpus)>, Spaces) = match method {
        Method::Sid | Method::Cid | Method::Coco => {
            let p = build_pairs(method, corpus, concepts.as_ref(), config.sid_min_count)
                .map_err(|e| e.in_stage("build-pairs"))?;
            let s = train_space(&p, &config.train).map_err(|e| e.in_stage("train"))?;
            (vec![(String::new(), p)], Spaces::Single(s))
        }
        Method::Mono => {
            let (p, s) = train_mono(corpus, config).map_err(|e| e.in_stage("train"))?;
            (vec![(String::new(), p)], Spaces::Single(s))
        }
        Method::Biling => {
            let def = defining_edition(corpus, config).map_err(|e| e.in_stage("config"))?;
            let v = train_bilingual(corpus, def, config).map_err(|e| e.in_stage("train"))?;
            let mut pairs = Vec::new();
            let mut spaces = Vec::new();
            for (e, p, s) in v {
                pairs.push((e.to_string(), p));
                spaces.push((e, s));
            }
            (pairs, Spaces::Bilingual(spaces))
        }
        Method::Linear => {
            let def = defining_edition(corpus, config).map_err(|e| e.in_stage("config"))?;
            let (p, s, m) = train_linear(corpus, def, config).map_err(|e| e.in_stage("fit-map"))?;
            maps = m;
            (p, Spaces::Single(s))
        }
        Method::CSimple => (Vec::new(), Spaces::None),
    };

    let resolver = QueryResolver::new(home, &corpus.edition_ids());
    let inter = intermediates(corpus, config);
    let mut rtt_reports = Vec::new();
    if let Some(q) = &inputs.queries {
        for (i, &variant) in config.variants.iter().enumerate() {
            let report = match &spaces {
                Spaces::Single(s) => rtt(s, q, variant, &resolver, &inter),
                Spaces::Bilingual(v) => {
                    let only: Vec<EmbeddingSpace> = v.iter().map(|(_, s)| s.clone()).collect();
                    rtt_bilingual(&only, q, variant, &resolver)
                }
                Spaces::None => {
                    let concepts = concepts.as_ref().expect("c-simple induces concepts");
                    let mut r = rng::stream(config.eval_seed, i as u64);
                    c_simple_rtt(concepts, q, variant, &resolver, &inter, &mut r)
                }
            };
            rtt_reports.push(report);
        }
    }
    let translation = inputs.translation.as_ref().and_then(|t| match &spaces {
        Spaces::Single(s) => Some(word_translation_p1(s, t)),
        Spaces::Bilingual(v) => Some(bilingual_translation(v, t)),
        Spaces::None => None,
    });
    let similarity = match (&inputs.similarity, &spaces) {
        (Some(p), Spaces::Single(s)) => Some(word_similarity(s, p).map_err(|e| e.in_stage("evaluate"))?),
        (Some(p), Spaces::Bilingual(v)) => Some(bilingual_similarity(v, p).map_err(|e| e.in_stage("evaluate"))?),
        _ => None,
    };
    let classify = match (&inputs.labels, &spaces) {
        (Some(l), Spaces::Single(s)) => {
            Some(classify_transfer(s, corpus, l, config.eval_seed).map_err(|e| e.in_stage("evaluate"))?)
        }
        (Some(l), Spaces::Bilingual(v)) => {
            Some(bilingual_classify(v, corpus, l, config.eval_seed).map_err(|e| e.in_stage("evaluate"))?)
        }
        _ => None,
    };

    let reports = EvalReports {
        method,
        num_concepts: concepts.as_ref().map_or(0, ConceptSet::len),
        num_pairs: pairs.iter().map(|(_, p)| p.len()).sum(),
        vocab_size: spaces.vocab_size(),
        rtt: rtt_reports,
        translation,
        similarity,
        classify,
    };
    Ok(Outputs {
        resolved,
        concepts,
        pairs,
        spaces,
        maps,
        reports,
    })
}

/// Reads the evaluation files named in the configuration.
pub fn load_inputs(corpus: &ParallelCorpus, config: &PipelineConfig) -> Result<EvalInputs> {
    let open = |p: &Path| File::open(p).map(BufReader::new).map_err(|e| Error::io(p, e));
    let name = |p: &Path| p.display().to_string();
    let mut inputs = EvalInputs::default();
    if let Some(p) = &config.queries {
        let mut q = QuerySet::read(open(p)?, &name(p))?;
        if let Some(r) = &config.relaxed {
            q.read_relaxed(open(r)?, &name(r))?;
        }
        inputs.queries = Some(q);
    }
    if let Some(p) = &config.translation {
        inputs.translation = Some(read_translation_pairs(open(p)?, &name(p))?);
    }
    if let Some(p) = &config.similarity {
        inputs.similarity = Some(read_similarity_pairs(open(p)?, &name(p))?);
    }
    if let Some(p) = &config.labels {
        let train = match config.training_edition {
            Some(e) => e,
            None => query_edition(corpus, config)?,
        };
        inputs.labels = Some(LabeledVerses::read(open(p)?, &name(p), &config.label_task, train)?);
    }
    Ok(inputs)
}

/// Machine-readable report: `key\tvalue` lines in a fixed order.
pub fn report_tsv(r: &EvalReports) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "method\t{}", r.method);
    let _ = writeln!(s, "concepts\t{}", r.num_concepts);
    let _ = writeln!(s, "pairs\t{}", r.num_pairs);
    let _ = writeln!(s, "vocabulary\t{}", r.vocab_size);
    for x in &r.rtt {
        let _ = writeln!(s, "rtt.{}.mean\t{:.6}", x.variant, x.mean);
        let _ = writeln!(s, "rtt.{}.median\t{:.6}", x.variant, x.median);
        let _ = writeln!(s, "rtt.{}.coverage\t{}", x.variant, x.coverage);
        let _ = writeln!(s, "rtt.{}.queries\t{}", x.variant, x.scores.len());
    }
    if let Some(t) = &r.translation {
        let _ = writeln!(s, "translation.p1\t{:.6}", t.accuracy);
        let _ = writeln!(s, "translation.covered\t{}", t.covered);
        let _ = writeln!(s, "translation.total\t{}", t.total);
    }
    if let Some(t) = &r.similarity {
        let _ = writeln!(s, "similarity.rho\t{:.6}", t.rho);
        let _ = writeln!(s, "similarity.covered\t{}", t.covered);
        let _ = writeln!(s, "similarity.total\t{}", t.total);
    }
    if let Some(c) = &r.classify {
        let _ = writeln!(s, "classify.{}.f1\t{:.6}", c.task, c.f1);
        let _ = writeln!(s, "classify.{}.c\t{}", c.task, c.c);
        let _ = writeln!(s, "classify.{}.cv_f1\t{:.6}", c.task, c.cv_f1);
        for (e, v) in &c.per_edition {
            let _ = writeln!(s, "classify.{}.f1.{e}\t{v:.6}", c.task);
        }
    }
    s
}

/// Human-readable table with one row per report: RTT mean and median per
/// variant in percent, coverage N, and task F1 in percent.
pub fn report_table(rows: &[EvalReports]) -> String {
    let mut variants: Vec<&'static str> = Vec::new();
    for r in rows {
        for x in &r.rtt {
            if !variants.contains(&x.variant) {
                variants.push(x.variant);
            }
        }
    }
    let mut header = vec!["method".to_string()];
    for v in &variants {
        header.push(format!("{v} μ"));
        header.push(format!("{v} Md."));
    }
    header.push("N".into());
    header.push("P@1".into());
    header.push("ρ".into());
    header.push("F1".into());
    let mut lines = vec![header];
    for r in rows {
        let mut row = vec![r.method.to_string()];
        for v in &variants {
            match r.rtt.iter().find(|x| x.variant == *v) {
                Some(x) => {
                    row.push(format!("{:.1}", 100.0 * x.mean));
                    row.push(format!("{:.1}", 100.0 * x.median));
                }
                None => row.extend(["-".to_string(), "-".to_string()]),
            }
        }
        row.push(r.rtt.first().map_or("-".into(), |x| x.coverage.to_string()));
        row.push(r.translation.as_ref().map_or("-".into(), |t| format!("{:.1}", 100.0 * t.accuracy)));
        row.push(r.similarity.as_ref().map_or("-".into(), |t| format!("{:.3}", t.rho)));
        row.push(r.classify.as_ref().map_or("-".into(), |c| format!("{:.1}", 100.0 * c.f1)));
        lines.push(row);
    }
    let widths: Vec<usize> = (0..lines[0].len())
        .map(|i| lines.iter().map(|l| l[i].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for l in &lines {
        let cells: Vec<String> = l
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                let pad = w - c.chars().count();
                if i == 0 {
                    format!("{c}{}", " ".repeat(pad))
                } else {
                    format!("{}{c}", " ".repeat(pad))
                }
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Per-query RTT scores, one column per variant.
pub fn rtt_scores_tsv(queries: &QuerySet, reports: &[RttReport]) -> String {
    let mut s = String::from("query\tpresent");
    for r in reports {
        s.push('\t');
        s.push_str(r.variant);
    }
    s.push('\n');
    for (i, q) in queries.queries.iter().enumerate() {
        let present = reports.first().is_some_and(|r| r.present[i]);
        let _ = write!(s, "{}\t{}", q.surface, u8::from(present));
        for r in reports {
            let _ = write!(s, "\t{:.6}", r.scores[i]);
        }
        s.push('\n');
    }
    s
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_string(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn suffixed(stem: &str, suffix: &str, ext: &str) -> String {
    if suffix.is_empty() {
        format!("{stem}.{ext}")
    } else {
        format!("{stem}-{suffix}.{ext}")
    }
}

/// Writes every artifact of a run into `dir` and returns the written paths.
pub fn write_outputs(out: &Outputs, inputs: &EvalInputs, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if let Some(c) = &out.concepts {
        let p = dir.join("concepts.tsv");
        let mut w = create(&p)?;
        c.write_tsv(&mut w)?;
        w.flush().map_err(|e| Error::io(&p, e))?;
        written.push(p);
    }
    for (suffix, pairs) in &out.pairs {
        let p = dir.join(suffixed("pairs", suffix, "tsv"));
        let mut w = create(&p)?;
        pairs.write_tsv(&mut w)?;
        w.flush().map_err(|e| Error::io(&p, e))?;
        written.push(p);
    }
    let mut save_space = |name: String, s: &EmbeddingSpace| -> Result<()> {
        let p = dir.join(name);
        let mut w = create(&p)?;
        s.save(&mut w)?;
        w.flush().map_err(|e| Error::io(&p, e))?;
        written.push(p);
        Ok(())
    };
    match &out.spaces {
        Spaces::None => {}
        Spaces::Single(s) => save_space("embeddings.txt".into(), s)?,
        Spaces::Bilingual(v) => {
            for (e, s) in v {
                save_space(suffixed("embeddings", e.as_str(), "txt"), s)?;
            }
        }
    }
    for (e, m) in &out.maps {
        let p = dir.join(suffixed("map", e.as_str(), "txt"));
        let mut w = create(&p)?;
        m.save(&mut w)?;
        w.flush().map_err(|e| Error::io(&p, e))?;
        written.push(p);
    }
    let p = dir.join("report.tsv");
    write_string(&p, &report_tsv(&out.reports))?;
    written.push(p);
    let p = dir.join("report.txt");
    write_string(&p, &report_table(std::slice::from_ref(&out.reports)))?;
    written.push(p);
    if let Some(q) = &inputs.queries {
        let p = dir.join("rtt-scores.tsv");
        write_string(&p, &rtt_scores_tsv(q, &out.reports.rtt))?;
        written.push(p);
    }
    let p = dir.join("run-manifest.kv");
    write_string(&p, &out.resolved.to_kv())?;
    written.push(p);
    Ok(written)
}

/// Loads the corpus and evaluation inputs, runs the pipeline, and writes
/// the artifacts into `config.output_dir`.
pub fn run(config: &PipelineConfig) -> Result<Outputs> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    let manifest = config.manifest.as_ref().expect("validated");
    let corpus = load_manifest(manifest, config.format).map_err(|e| e.in_stage("ingest"))?;
    let inputs = load_inputs(&corpus, config).map_err(|e| e.in_stage("ingest"))?;
    let out = execute(&corpus, config, &inputs)?;
    write_outputs(&out, &inputs, &config.output_dir).map_err(|e| e.in_stage("report"))?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub key: String,
    pub value: String,
    pub reports: EvalReports,
}

/// One-at-a-time variation: for each `(key, values)` entry, every value is
/// applied to a copy of the base configuration on its own.
pub fn sweep(
    corpus: &ParallelCorpus,
    base: &PipelineConfig,
    inputs: &EvalInputs,
    grid: &[(String, Vec<String>)],
) -> Result<Vec<SweepRow>> {
    if grid.iter().all(|(_, v)| v.is_empty()) {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    let mut rows = Vec::new();
    for (key, values) in grid {
        for value in values {
            let mut cfg = base.clone();
            cfg.set(key, value).map_err(|e| e.in_stage("config"))?;
            let out = execute(corpus, &cfg, inputs)?;
            log::info!("sweep {key}={value} done");
            rows.push(SweepRow {
                key: key.clone(),
                value: value.clone(),
                reports: out.reports,
            });
        }
    }
    Ok(rows)
}

/// Parses `key=v1,v2,...` sweep grid entries.
pub fn parse_grid(specs: &[String]) -> Result<Vec<(String, Vec<String>)>> {
    specs
        .iter()
        .map(|s| {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("sweep grid entry {s:?} is not key=v1,v2,...")))?;
            let values: Vec<String> = v.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect();
            Ok((k.trim().to_string(), values))
        })
        .collect()
}

/// Sweep table: one row per setting, RTT mean per variant, coverage and
/// the lexical and classification metrics.
pub fn sweep_tsv(rows: &[SweepRow]) -> String {
    let mut variants: Vec<&'static str> = Vec::new();
    for r in rows {
        for x in &r.reports.rtt {
            if !variants.contains(&x.variant) {
                variants.push(x.variant);
            }
        }
    }
    let mut s = String::from("parameter\tvalue\tconcepts\tpairs\tvocabulary");
    for v in &variants {
        let _ = write!(s, "\t{v}.mean\t{v}.median");
    }
    s.push_str("\tN\tp1\trho\tf1\n");
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
    for r in rows {
        let rep = &r.reports;
        let _ = write!(
            s,
            "{}\t{}\t{}\t{}\t{}",
            r.key, r.value, rep.num_concepts, rep.num_pairs, rep.vocab_size
        );
        for v in &variants {
            match rep.rtt.iter().find(|x| x.variant == *v) {
                Some(x) => {
                    let _ = write!(s, "\t{:.6}\t{:.6}", x.mean, x.median);
                }
                None => s.push_str("\t-\t-"),
            }
        }
        let _ = writeln!(
            s,
            "\t{}\t{}\t{}\t{}",
            rep.rtt.first().map_or("-".into(), |x| x.coverage.to_string()),
            opt(rep.translation.as_ref().map(|t| t.accuracy)),
            opt(rep.similarity.as_ref().map(|t| t.rho)),
            opt(rep.classify.as_ref().map(|c| c.f1)),
        );
    }
    s
}

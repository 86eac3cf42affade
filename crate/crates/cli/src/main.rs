//! `coco`: command-line front end of the embedding pipeline.
//!
//! Settings come from, in increasing precedence: built-in defaults, the
//! `--config` file, the `COCO_OUTPUT_DIR` environment variable (output
//! directory only), `--set key=value` overrides, and dedicated flags.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use coco_core::concepts::{concept_stats, induce_concepts_with, ConceptSet};
use coco_core::config::{Method, PipelineConfig};
use coco_core::corpus::{load_manifest, EditionId, ParallelCorpus, WordKey};
use coco_core::eval::classify::{classify_transfer, LabeledVerses};
use coco_core::eval::lexical::{read_similarity_pairs, read_translation_pairs};
use coco_core::eval::{c_simple_rtt, rtt, word_similarity, word_translation_p1, QueryResolver, QuerySet};
use coco_core::pairs::{PairCorpus, Provenance};
use coco_core::pipeline::{self, EvalInputs};
use coco_core::rng;
use coco_core::space::{apply_map, fit_between, EmbeddingSpace};
use coco_core::synth::{generate, SynthParams};

const OUTPUT_DIR_ENV: &str = "COCO_OUTPUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "coco", version, about = "Multilingual word embeddings from concept and sentence-ID contexts")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long, short = 'c', global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", short = 's', value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Corpus manifest (`edition<TAB>path` lines).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Output directory (overrides the config file and COCO_OUTPUT_DIR).
    #[arg(long, short = 'o', global = true)]
    out: Option<PathBuf>,
    /// Pipeline method: s-id, c-id, co+co, mono, biling, linear, c-simple.
    #[arg(long, global = true)]
    method: Option<String>,
    /// Seed of every stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel stages (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Force single-worker code paths for byte-identical reruns.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Derive the concept sampling budget from a wall-clock duration.
    #[arg(long, global = true)]
    hours: Option<f64>,
    /// Log verbosity: -v info, -vv debug.
    #[arg(long, short = 'v', action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate a synthetic parallel corpus with a known lexicon.
    GenSynth(GenSynth),
    /// Sample concepts from the corpus and write concepts.tsv.
    InduceConcepts,
    /// Build the pair corpus of method s-id, c-id or co+co.
    BuildPairs {
        /// Existing concept file; induced from the corpus when absent.
        #[arg(long)]
        concepts: Option<PathBuf>,
    },
    /// Train an embedding space on a pair corpus.
    Train {
        #[arg(long)]
        pairs: PathBuf,
        /// Run a word2vec-compatible tool instead, e.g.
        /// "word2vec -train {input} -output {output} -size 100 -cbow 0".
        /// Context-id rows of its output are dropped.
        #[arg(long, value_name = "CMD")]
        external_trainer: Option<String>,
    },
    /// Fit a linear map from a source space onto a target space.
    FitMap {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Restrict the fitting vocabulary to one edition.
        #[arg(long)]
        edition: Option<String>,
        /// Also write the mapped source space.
        #[arg(long)]
        apply: bool,
    },
    /// Roundtrip translation over an embedding space.
    EvalRtt {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        queries: Option<PathBuf>,
        #[arg(long)]
        relaxed: Option<PathBuf>,
    },
    /// Word translation precision@1.
    EvalTranslate {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
    /// Word similarity (Spearman correlation).
    EvalSim {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
    /// Cross-lingual verse classification transfer.
    EvalClassify {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Concept-only roundtrip translation.
    CSimple {
        /// Existing concept file; induced from the corpus when absent.
        #[arg(long)]
        concepts: Option<PathBuf>,
        #[arg(long)]
        queries: Option<PathBuf>,
    },
    /// Vary one parameter at a time and tabulate the metrics.
    Sweep {
        /// `key=v1,v2,...`; repeatable.
        #[arg(long = "grid", value_name = "KEY=V1,V2,...", required = true)]
        grid: Vec<String>,
    },
    /// Concept coverage statistics against a reference edition.
    Stats {
        /// Existing concept file; induced from the corpus when absent.
        #[arg(long)]
        concepts: Option<PathBuf>,
        /// Reference edition; defaults to the query edition.
        #[arg(long)]
        reference: Option<String>,
    },
    /// Every stage implied by the method, writing all artifacts.
    Run,
    /// Print the resolved configuration.
    Config,
}

#[derive(Args, Debug)]
struct GenSynth {
    #[arg(long, default_value_t = SynthParams::default().editions)]
    editions: usize,
    #[arg(long, default_value_t = SynthParams::default().vocab)]
    vocab: usize,
    #[arg(long, default_value_t = SynthParams::default().sentences)]
    sentences: usize,
    #[arg(long, default_value_t = SynthParams::default().min_len)]
    min_len: usize,
    #[arg(long, default_value_t = SynthParams::default().max_len)]
    max_len: usize,
    #[arg(long, default_value_t = SynthParams::default().noise)]
    noise: f64,
    #[arg(long, default_value_t = SynthParams::default().zipf)]
    zipf: f64,
    #[arg(long, default_value_t = SynthParams::default().num_queries)]
    num_queries: usize,
    #[arg(long, default_value_t = SynthParams::default().query_skip)]
    query_skip: usize,
}

fn resolve_config(common: &Common, env_out: Option<PathBuf>) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(dir) = env_out {
        cfg.output_dir = dir;
    }
    for o in &common.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {o:?}"))?;
        cfg.set(k, v)?;
    }
    if let Some(m) = &common.manifest {
        cfg.manifest = Some(m.clone());
    }
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    if let Some(m) = &common.method {
        cfg.method = m.parse()?;
    }
    if let Some(s) = common.seed {
        cfg.set("seed", &s.to_string())?;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    if common.deterministic {
        cfg.deterministic = true;
    }
    if common.hours.is_some() {
        cfg.hours = common.hours;
    }
    Ok(cfg)
}

fn load_corpus(cfg: &PipelineConfig) -> Result<ParallelCorpus> {
    let manifest = cfg
        .manifest
        .as_ref()
        .ok_or_else(|| anyhow!("no corpus manifest given (use --manifest or the `manifest` key)"))?;
    load_manifest(manifest, cfg.format).with_context(|| "stage ingest".to_string())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?))
}

fn create_in(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok((path, BufWriter::new(f)))
}

fn write_text(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    let (path, mut w) = create_in(dir, name)?;
    w.write_all(body.as_bytes())?;
    w.flush()?;
    Ok(path)
}

fn load_space(path: &Path) -> Result<EmbeddingSpace> {
    Ok(EmbeddingSpace::load(open(path)?, &path.display().to_string())?)
}

fn save_space(space: &EmbeddingSpace, dir: &Path, name: &str) -> Result<PathBuf> {
    let (path, mut w) = create_in(dir, name)?;
    space.save(&mut w)?;
    w.flush()?;
    Ok(path)
}

fn concepts_from(cfg: &PipelineConfig, corpus: &ParallelCorpus, file: Option<&Path>) -> Result<ConceptSet> {
    match file {
        Some(p) => Ok(ConceptSet::read_tsv(open(p)?, &p.display().to_string())?),
        None => induce(cfg, corpus),
    }
}

fn induce(cfg: &PipelineConfig, corpus: &ParallelCorpus) -> Result<ConceptSet> {
    let mut params = cfg.concepts.clone();
    params.budget = pipeline::resolve_budget(corpus, cfg);
    let c = induce_concepts_with(corpus, &params, cfg.effective_workers()).context("stage induce-concepts")?;
    log::info!("induced {} concepts from {} samples", c.len(), params.budget);
    Ok(c)
}

fn write_concepts(c: &ConceptSet, dir: &Path) -> Result<PathBuf> {
    let (path, mut w) = create_in(dir, "concepts.tsv")?;
    c.write_tsv(&mut w)?;
    w.flush()?;
    Ok(path)
}

fn read_queries(cfg: &PipelineConfig, flag: Option<&PathBuf>, relaxed: Option<&PathBuf>) -> Result<QuerySet> {
    let path = flag
        .or(cfg.queries.as_ref())
        .ok_or_else(|| anyhow!("no query file given (use --queries or the `queries` key)"))?;
    let mut q = QuerySet::read(open(path)?, &path.display().to_string())?;
    if let Some(r) = relaxed.or(cfg.relaxed.as_ref()) {
        q.read_relaxed(open(r)?, &r.display().to_string())?;
    }
    Ok(q)
}

fn required<'a>(flag: Option<&'a PathBuf>, key: &'a Option<PathBuf>, what: &str) -> Result<&'a PathBuf> {
    flag.or(key.as_ref())
        .ok_or_else(|| anyhow!("no {what} file given (flag or config key)"))
}

/// Home edition of queries inside a loaded space.
fn space_home(cfg: &PipelineConfig, editions: &[EditionId]) -> Result<EditionId> {
    match cfg.query_edition {
        Some(e) => Ok(e),
        None => editions.first().copied().ok_or_else(|| anyhow!("space has no editions")),
    }
}

fn intermediates_or(cfg: &PipelineConfig, available: Vec<EditionId>) -> Vec<EditionId> {
    if cfg.intermediates.is_empty() {
        available
    } else {
        cfg.intermediates.clone()
    }
}

/// Reads word2vec text output, keeping rows whose token is a word key.
fn load_external(path: &Path) -> Result<EmbeddingSpace> {
    let mut lines = open(path)?.lines();
    let header = lines.next().ok_or_else(|| anyhow!("{}: empty output", path.display()))??;
    let dim: usize = header
        .split_whitespace()
        .nth(1)
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| anyhow!("{}: header must be <vocab> <dim>", path.display()))?;
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        let mut fields = line.split_whitespace();
        let Some(Ok(key)) = fields.next().map(WordKey::from_token) else {
            continue;
        };
        let v: Vec<f64> = fields.map(str::parse).collect::<std::result::Result<_, _>>()?;
        rows.push((key, v));
    }
    Ok(EmbeddingSpace::from_rows(dim, rows)?)
}

fn run_external(template: &str, input: &Path, dir: &Path) -> Result<EmbeddingSpace> {
    fs::create_dir_all(dir)?;
    let output = dir.join("external-vectors.txt");
    let cmd = template
        .replace("{input}", &input.display().to_string())
        .replace("{output}", &output.display().to_string());
    log::info!("running external trainer: {cmd}");
    let status = Command::new("sh").arg("-c").arg(&cmd).status().context("stage train: cannot spawn shell")?;
    if !status.success() {
        bail!("stage train: external trainer exited with {status}");
    }
    load_external(&output).context("stage train")
}

fn gen_synth(args: &GenSynth, cfg: &PipelineConfig) -> Result<()> {
    let params = SynthParams {
        editions: args.editions,
        vocab: args.vocab,
        sentences: args.sentences,
        min_len: args.min_len,
        max_len: args.max_len,
        noise: args.noise,
        zipf: args.zipf,
        num_queries: args.num_queries,
        query_skip: args.query_skip,
        seed: cfg.concepts.seed,
    };
    let synth = generate(&params)?;
    let manifest = synth.write(&cfg.output_dir)?;
    println!("{}", manifest.display());
    Ok(())
}

fn execute(cmd: &Cmd, cfg: &PipelineConfig) -> Result<()> {
    let dir = &cfg.output_dir;
    match cmd {
        Cmd::GenSynth(args) => gen_synth(args, cfg)?,
        Cmd::Config => print!("{}", cfg.to_kv()),
        Cmd::Run => {
            let out = pipeline::run(cfg)?;
            print!("{}", pipeline::report_table(std::slice::from_ref(&out.reports)));
            println!("artifacts in {}", dir.display());
        }
        Cmd::InduceConcepts => {
            let corpus = load_corpus(cfg)?;
            let c = induce(cfg, &corpus)?;
            println!("{} concepts -> {}", c.len(), write_concepts(&c, dir)?.display());
        }
        Cmd::BuildPairs { concepts } => {
            let corpus = load_corpus(cfg)?;
            let c = match cfg.method {
                Method::Sid => None,
                Method::Cid | Method::Coco => Some(concepts_from(cfg, &corpus, concepts.as_deref())?),
                other => bail!("build-pairs supports s-id, c-id and co+co, not {other}"),
            };
            let p = pipeline::build_pairs(cfg.method, &corpus, c.as_ref(), cfg.sid_min_count)
                .context("stage build-pairs")?;
            let (path, mut w) = create_in(dir, "pairs.tsv")?;
            p.write_tsv(&mut w)?;
            w.flush()?;
            println!("{} {} pairs -> {}", p.provenance, p.len(), path.display());
        }
        Cmd::Train { pairs, external_trainer } => {
            let space = match external_trainer {
                Some(t) => run_external(t, pairs, dir)?,
                None => {
                    let provenance = match cfg.method {
                        Method::Sid => Provenance::SentenceId,
                        Method::Cid => Provenance::ConceptId,
                        _ => Provenance::Combined,
                    };
                    let p = PairCorpus::read_tsv(open(pairs)?, provenance, &pairs.display().to_string())?;
                    pipeline::train_space(&p, &cfg.train).context("stage train")?
                }
            };
            println!("{} vectors -> {}", space.len(), save_space(&space, dir, "embeddings.txt")?.display());
        }
        Cmd::FitMap { source, target, edition, apply } => {
            let src = load_space(source)?;
            let tgt = load_space(target)?;
            let ed = edition.as_deref().map(str::parse::<EditionId>).transpose()?;
            let fit = fit_between(&src, &tgt, ed).context("stage fit-map")?;
            if fit.rank_deficient {
                log::warn!("fitting matrix is rank deficient (rank {})", fit.rank);
            }
            let map = fit.map;
            let (path, mut w) = create_in(dir, "map.txt")?;
            map.save(&mut w)?;
            w.flush()?;
            println!("map -> {}", path.display());
            if *apply {
                let mapped = apply_map(&src, &map).context("stage fit-map")?;
                println!("mapped space -> {}", save_space(&mapped, dir, "mapped.txt")?.display());
            }
        }
        Cmd::EvalRtt { embeddings, queries, relaxed } => {
            let space = load_space(embeddings)?;
            let q = read_queries(cfg, queries.as_ref(), relaxed.as_ref())?;
            let editions = space.editions();
            let resolver = QueryResolver::new(space_home(cfg, &editions)?, &editions);
            let inter = intermediates_or(cfg, editions);
            let reports: Vec<_> = cfg.variants.iter().map(|&v| rtt(&space, &q, v, &resolver, &inter)).collect();
            write_text(dir, "rtt-scores.tsv", &pipeline::rtt_scores_tsv(&q, &reports))?;
            for r in &reports {
                println!("{r}");
            }
        }
        Cmd::EvalTranslate { embeddings, pairs } => {
            let space = load_space(embeddings)?;
            let path = required(pairs.as_ref(), &cfg.translation, "translation")?;
            let t = read_translation_pairs(open(path)?, &path.display().to_string())?;
            let r = word_translation_p1(&space, &t);
            println!("p@1 {:.4}  covered {}/{}", r.accuracy, r.covered, r.total);
        }
        Cmd::EvalSim { embeddings, pairs } => {
            let space = load_space(embeddings)?;
            let path = required(pairs.as_ref(), &cfg.similarity, "similarity")?;
            let s = read_similarity_pairs(open(path)?, &path.display().to_string())?;
            let r = word_similarity(&space, &s).context("stage evaluate")?;
            println!("rho {:.4}  covered {}/{}", r.rho, r.covered, r.total);
        }
        Cmd::EvalClassify { embeddings, labels } => {
            let corpus = load_corpus(cfg)?;
            let space = load_space(embeddings)?;
            let path = required(labels.as_ref(), &cfg.labels, "labels")?;
            let train = match cfg.training_edition {
                Some(e) => e,
                None => pipeline::query_edition(&corpus, cfg)?,
            };
            let l = LabeledVerses::read(open(path)?, &path.display().to_string(), &cfg.label_task, train)?;
            let r = classify_transfer(&space, &corpus, &l, cfg.eval_seed).context("stage evaluate")?;
            println!("{r}");
        }
        Cmd::CSimple { concepts, queries } => {
            let corpus = load_corpus(cfg)?;
            let c = concepts_from(cfg, &corpus, concepts.as_deref())?;
            let q = read_queries(cfg, queries.as_ref(), None)?;
            let home = pipeline::query_edition(&corpus, cfg)?;
            let resolver = QueryResolver::new(home, &corpus.edition_ids());
            let inter = intermediates_or(cfg, corpus.edition_ids());
            let reports: Vec<_> = cfg
                .variants
                .iter()
                .enumerate()
                .map(|(i, &v)| c_simple_rtt(&c, &q, v, &resolver, &inter, &mut rng::stream(cfg.eval_seed, i as u64)))
                .collect();
            write_text(dir, "rtt-scores.tsv", &pipeline::rtt_scores_tsv(&q, &reports))?;
            for r in &reports {
                println!("{r}");
            }
        }
        Cmd::Sweep { grid } => {
            let corpus = load_corpus(cfg)?;
            let inputs: EvalInputs = pipeline::load_inputs(&corpus, cfg).context("stage ingest")?;
            let grid = pipeline::parse_grid(grid)?;
            let rows = pipeline::sweep(&corpus, cfg, &inputs, &grid)?;
            let table = pipeline::sweep_tsv(&rows);
            write_text(dir, "sweep.tsv", &table)?;
            print!("{table}");
        }
        Cmd::Stats { concepts, reference } => {
            let corpus = load_corpus(cfg)?;
            let c = concepts_from(cfg, &corpus, concepts.as_deref())?;
            let reference = match reference {
                Some(r) => r.parse()?,
                None => pipeline::query_edition(&corpus, cfg)?,
            };
            let stats = concept_stats(&c, &corpus, reference)?;
            print!("{stats}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let env_out = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
    let result = resolve_config(&cli.common, env_out).and_then(|cfg| {
        if cfg.effective_workers() == 1 {
            log::debug!("single-worker mode");
        }
        execute(&cli.command, &cfg)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

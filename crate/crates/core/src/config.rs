//! Pipeline configuration as a flat `key=value` file.
//!
//! Lines are `key = value`; blank lines and lines starting with `#` are
//! ignored. Keys are applied in order, so later lines and command-line
//! overrides win. [`PipelineConfig::to_kv`] writes every resolved key, and
//! reading that output back yields an equal configuration.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::concepts::ConceptParams;
use crate::corpus::{CorpusFormat, EditionId};
use crate::error::{Error, Result};
use crate::eval::RttVariant;
use crate::sgns::TrainConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// Sentence-id pairs.
    Sid,
    /// Concept-id pairs.
    Cid,
    /// Sentence-id and concept-id pairs concatenated.
    Coco,
    /// One independent space per edition.
    Mono,
    /// One bilingual space per non-defining edition, evaluated separately.
    Biling,
    /// Bilingual spaces mapped into the defining edition's space.
    Linear,
    /// Roundtrips through shared concepts, without embeddings.
    CSimple,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Sid,
        Method::Cid,
        Method::Coco,
        Method::Mono,
        Method::Biling,
        Method::Linear,
        Method::CSimple,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sid => "s-id",
            Method::Cid => "c-id",
            Method::Coco => "co+co",
            Method::Mono => "mono",
            Method::Biling => "biling",
            Method::Linear => "linear",
            Method::CSimple => "c-simple",
        }
    }

    /// Whether the method needs induced concepts.
    pub fn needs_concepts(self) -> bool {
        matches!(self, Method::Cid | Method::Coco | Method::CSimple)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .or(match s.as_str() {
                "sid" => Some(Method::Sid),
                "cid" => Some(Method::Cid),
                "coco" => Some(Method::Coco),
                "csimple" => Some(Method::CSimple),
                _ => None,
            })
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

/// Concept-induction defaults for a corpus family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// Massively parallel (1000+ editions): MinLg 100.
    Pbc,
    /// About a dozen languages: MinLg 9.
    Europarl,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pbc" => Ok(Profile::Pbc),
            "europarl" => Ok(Profile::Europarl),
            other => Err(Error::InvalidParameter(format!("unknown profile {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub manifest: Option<PathBuf>,
    pub format: CorpusFormat,
    pub method: Method,
    pub concepts: ConceptParams,
    /// When set, the concept budget is derived from a timed probe instead of
    /// `concepts.budget`; the resolved budget is what the run manifest records.
    pub hours: Option<f64>,
    pub train: TrainConfig,
    /// Per-edition minimum frequency of words in sentence-id pairs.
    pub sid_min_count: u64,
    /// Seed for evaluation randomness (C-SIMPLE draws, classifier shuffles).
    pub eval_seed: u64,
    pub output_dir: PathBuf,
    pub queries: Option<PathBuf>,
    pub relaxed: Option<PathBuf>,
    /// Preferred edition for resolving queries; defaults to the first edition.
    pub query_edition: Option<EditionId>,
    /// Intermediate editions for roundtrips; empty means all editions.
    pub intermediates: Vec<EditionId>,
    pub variants: Vec<RttVariant>,
    pub translation: Option<PathBuf>,
    pub similarity: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub label_task: String,
    /// Edition whose labels train the classifier; defaults to the query edition.
    pub training_edition: Option<EditionId>,
    /// Target space of the linear mapping and pivot of bilingual spaces.
    pub defining_edition: Option<EditionId>,
    /// Worker threads for concept induction; 0 picks the available parallelism.
    pub workers: usize,
    /// Forces single-worker code paths.
    pub deterministic: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let seed = 1;
        PipelineConfig {
            manifest: None,
            format: CorpusFormat::PbcTsv,
            method: Method::Coco,
            concepts: ConceptParams { seed, ..ConceptParams::pbc() },
            hours: None,
            train: TrainConfig { seed, ..TrainConfig::default() },
            sid_min_count: 2,
            eval_seed: seed,
            output_dir: PathBuf::from("out"),
            queries: None,
            relaxed: None,
            query_edition: None,
            intermediates: Vec::new(),
            variants: RttVariant::ALL.to_vec(),
            translation: None,
            similarity: None,
            labels: None,
            label_task: "task".into(),
            training_edition: None,
            defining_edition: None,
            workers: 0,
            deterministic: false,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::InvalidParameter(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

fn opt_path(value: &str) -> Option<PathBuf> {
    let v = value.trim();
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn opt_edition(value: &str) -> Result<Option<EditionId>> {
    let v = value.trim();
    if v.is_empty() {
        Ok(None)
    } else {
        v.parse().map(Some)
    }
}

fn list<T, F: Fn(&str) -> Result<T>>(value: &str, f: F) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(f)
        .collect()
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

fn show_opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn show_list<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl PipelineConfig {
    /// Every key accepted by [`PipelineConfig::set`].
    pub const KEYS: &'static [&'static str] = &[
        "manifest",
        "format",
        "method",
        "profile",
        "seed",
        "min_editions",
        "max_ngram",
        "budget",
        "hours",
        "concept_seed",
        "dim",
        "iterations",
        "negatives",
        "lr",
        "noise_power",
        "subsample",
        "max_memory_bytes",
        "train_seed",
        "sid_min_count",
        "eval_seed",
        "output_dir",
        "queries",
        "relaxed",
        "query_edition",
        "intermediates",
        "variants",
        "translation",
        "similarity",
        "labels",
        "label_task",
        "training_edition",
        "defining_edition",
        "workers",
        "deterministic",
    ];

    /// Applies one `key=value` setting. `seed` sets all three stage seeds;
    /// `profile` resets MinLg and MaxNgr to the profile values.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match key {
            "manifest" => self.manifest = opt_path(value),
            "format" => self.format = value.trim().parse()?,
            "method" => self.method = value.parse()?,
            "profile" => {
                let p = match value.parse::<Profile>()? {
                    Profile::Pbc => ConceptParams::pbc(),
                    Profile::Europarl => ConceptParams::europarl(),
                };
                self.concepts.min_editions = p.min_editions;
                self.concepts.max_ngram = p.max_ngram;
            }
            "seed" => {
                let s: u64 = parse_num(key, value)?;
                self.concepts.seed = s;
                self.train.seed = s;
                self.eval_seed = s;
            }
            "min_editions" => self.concepts.min_editions = parse_num(key, value)?,
            "max_ngram" => self.concepts.max_ngram = parse_num(key, value)?,
            "budget" => self.concepts.budget = parse_num(key, value)?,
            "hours" => {
                self.hours = if value.trim().is_empty() { None } else { Some(parse_num(key, value)?) }
            }
            "concept_seed" => self.concepts.seed = parse_num(key, value)?,
            "dim" => self.train.dim = parse_num(key, value)?,
            "iterations" => self.train.iterations = parse_num(key, value)?,
            "negatives" => self.train.negatives = parse_num(key, value)?,
            "lr" => self.train.initial_lr = parse_num(key, value)?,
            "noise_power" => self.train.noise_power = parse_num(key, value)?,
            "subsample" => {
                self.train.subsample = if value.trim().is_empty() { None } else { Some(parse_num(key, value)?) }
            }
            "max_memory_bytes" => self.train.max_memory_bytes = parse_num(key, value)?,
            "train_seed" => self.train.seed = parse_num(key, value)?,
            "sid_min_count" => self.sid_min_count = parse_num(key, value)?,
            "eval_seed" => self.eval_seed = parse_num(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value.trim()),
            "queries" => self.queries = opt_path(value),
            "relaxed" => self.relaxed = opt_path(value),
            "query_edition" => self.query_edition = opt_edition(value)?,
            "intermediates" => self.intermediates = list(value, |s| s.parse())?,
            "variants" => {
                self.variants = list(value, RttVariant::by_name)?
            }
            "translation" => self.translation = opt_path(value),
            "similarity" => self.similarity = opt_path(value),
            "labels" => self.labels = opt_path(value),
            "label_task" => self.label_task = value.trim().to_string(),
            "training_edition" => self.training_edition = opt_edition(value)?,
            "defining_edition" => self.defining_edition = opt_edition(value)?,
            "workers" => self.workers = parse_num(key, value)?,
            "deterministic" => self.deterministic = parse_bool(key, value)?,
            _ => return Err(Error::InvalidParameter(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` text. Relative paths are kept as written.
    pub fn apply_str(&mut self, text: &str, name: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(name, n + 1, "expected key=value"))?;
            self.set(k, v).map_err(|e| Error::parse(name, n + 1, e.to_string()))?;
        }
        Ok(())
    }

    /// Defaults overridden by the file. Relative paths in the file are
    /// resolved against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = PipelineConfig::default();
        cfg.apply_str(&text, &path.display().to_string())?;
        if let Some(base) = path.parent() {
            cfg.resolve_relative(base);
        }
        Ok(cfg)
    }

    fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        fix(&mut self.manifest);
        fix(&mut self.queries);
        fix(&mut self.relaxed);
        fix(&mut self.translation);
        fix(&mut self.similarity);
        fix(&mut self.labels);
    }

    /// Every setting as `key=value` lines in [`Self::KEYS`] order, with the
    /// `seed` and `profile` shorthands expanded.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        put("manifest", show_path(&self.manifest));
        put("format", self.format.to_string());
        put("method", self.method.to_string());
        put("min_editions", self.concepts.min_editions.to_string());
        put("max_ngram", self.concepts.max_ngram.to_string());
        put("budget", self.concepts.budget.to_string());
        put("hours", show_opt(&self.hours));
        put("concept_seed", self.concepts.seed.to_string());
        put("dim", self.train.dim.to_string());
        put("iterations", self.train.iterations.to_string());
        put("negatives", self.train.negatives.to_string());
        put("lr", self.train.initial_lr.to_string());
        put("noise_power", self.train.noise_power.to_string());
        put("subsample", show_opt(&self.train.subsample));
        put("max_memory_bytes", self.train.max_memory_bytes.to_string());
        put("train_seed", self.train.seed.to_string());
        put("sid_min_count", self.sid_min_count.to_string());
        put("eval_seed", self.eval_seed.to_string());
        put("output_dir", self.output_dir.display().to_string());
        put("queries", show_path(&self.queries));
        put("relaxed", show_path(&self.relaxed));
        put("query_edition", show_opt(&self.query_edition));
        put("intermediates", show_list(&self.intermediates));
        put("variants", self.variants.iter().map(|v| v.name).collect::<Vec<_>>().join(","));
        put("translation", show_path(&self.translation));
        put("similarity", show_path(&self.similarity));
        put("labels", show_path(&self.labels));
        put("label_task", self.label_task.clone());
        put("training_edition", show_opt(&self.training_edition));
        put("defining_edition", show_opt(&self.defining_edition));
        put("workers", self.workers.to_string());
        put("deterministic", self.deterministic.to_string());
        out
    }

    /// Worker count for parallel stages; 1 in deterministic mode.
    pub fn effective_workers(&self) -> usize {
        if self.deterministic {
            1
        } else {
            self.workers
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.manifest.is_none() {
            return Err(Error::InvalidParameter("no corpus manifest given (key `manifest`)".into()));
        }
        self.concepts.validate()?;
        self.train.validate()?;
        if let Some(h) = self.hours {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidParameter("hours must be positive".into()));
            }
        }
        if self.method == Method::Linear && self.defining_edition.is_none() {
            return Err(Error::InvalidParameter("method linear requires defining_edition".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::InvalidParameter("no RTT variants selected".into()));
        }
        Ok(())
    }
}

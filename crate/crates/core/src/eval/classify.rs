//! Cross-lingual verse classification transfer: a linear max-margin
//! classifier is fit on one edition and scored on the others.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;

use rand::seq::SliceRandom;

use crate::corpus::{EditionId, ParallelCorpus, SentenceId, WordKey};
use crate::error::{Error, Result};
use crate::rng;
use crate::space::EmbeddingSpace;

/// The fixed regularization grid searched by cross-validation.
pub const C_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];
const FOLDS: usize = 5;
const EPOCHS: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledVerse {
    pub edition: EditionId,
    pub sentence: SentenceId,
    pub label: bool,
}

/// Binary labels for one task. Rows of `training_edition` form the training
/// split; all other rows form the test split, so the two are disjoint.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledVerses {
    pub task: String,
    pub training_edition: EditionId,
    pub rows: Vec<LabeledVerse>,
}

fn parse_label(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "+1" | "true" | "pos" | "yes" => Some(true),
        "0" | "-1" | "false" | "neg" | "no" => Some(false),
        _ => None,
    }
}

impl LabeledVerses {
    /// Reads `edition\tsentence-id\tlabel` rows. Labels are 1/0, +1/-1,
    /// true/false, pos/neg or yes/no.
    pub fn read<R: BufRead>(reader: R, name: &str, task: &str, training_edition: EditionId) -> Result<Self> {
        let mut rows = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(name, e))?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [ed, sid, label] = fields[..] else {
                return Err(Error::parse(name, n + 1, "expected edition\\tsentence-id\\tlabel"));
            };
            let edition = ed
                .parse::<EditionId>()
                .map_err(|e| Error::parse(name, n + 1, e.to_string()))?;
            let label = parse_label(label).ok_or_else(|| Error::parse(name, n + 1, format!("bad label {label:?}")))?;
            rows.push(LabeledVerse {
                edition,
                sentence: SentenceId::new(sid),
                label,
            });
        }
        Ok(Self {
            task: task.to_string(),
            training_edition,
            rows,
        })
    }

    pub fn train_rows(&self) -> impl Iterator<Item = &LabeledVerse> {
        self.rows.iter().filter(|r| r.edition == self.training_edition)
    }

    /// Test editions in sorted order.
    pub fn test_editions(&self) -> Vec<EditionId> {
        let mut eds: Vec<EditionId> = self
            .rows
            .iter()
            .map(|r| r.edition)
            .filter(|&e| e != self.training_edition)
            .collect();
        eds.sort();
        eds.dedup();
        eds
    }
}

/// Mean of the in-space word vectors of a verse; zero when none is present
/// or the verse is missing from the corpus.
pub fn verse_vector(space: &EmbeddingSpace, corpus: &ParallelCorpus, edition: EditionId, sentence: &SentenceId) -> Vec<f64> {
    let mut v = vec![0.0; space.dim()];
    let (Ok(ed), Some(idx)) = (corpus.edition(edition), corpus.sentence_index(sentence)) else {
        return v;
    };
    let mut n = 0usize;
    for &tok in ed.tokens(idx).unwrap_or_default() {
        let Ok(key) = WordKey::new(edition, ed.surface(tok)) else {
            continue;
        };
        if let Some(x) = space.get(&key) {
            for (a, b) in v.iter_mut().zip(x) {
                *a += b;
            }
            n += 1;
        }
    }
    if n > 0 {
        v.iter_mut().for_each(|a| *a /= n as f64);
    }
    v
}

/// Linear classifier `sign(w·x + b)`, fit by averaged Pegasos-style
/// subgradient descent on the hinge loss. The bias is learned as the weight
/// of a constant feature and is regularized with the other weights.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvm {
    /// Minimizes `λ/2·|w|² + mean(hinge)` with `λ = 1/(C·n)`. A training set
    /// with one class yields a constant classifier.
    pub fn fit(xs: &[Vec<f64>], ys: &[bool], c: f64, seed: u64) -> Self {
        let dim = xs.first().map_or(0, Vec::len);
        let n = xs.len();
        if n == 0 {
            return Self { weights: vec![0.0; dim], bias: 0.0 };
        }
        if ys.iter().all(|&y| y == ys[0]) {
            return Self {
                weights: vec![0.0; dim],
                bias: if ys[0] { 1.0 } else { -1.0 },
            };
        }
        let lambda = 1.0 / (c * n as f64);
        let mut w = vec![0.0; dim + 1];
        let mut avg = vec![0.0; dim + 1];
        let mut order: Vec<usize> = (0..n).collect();
        let mut r = rng::seeded(seed);
        let mut t = 0usize;
        for _ in 0..EPOCHS {
            order.shuffle(&mut r);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let y = if ys[i] { 1.0 } else { -1.0 };
                let margin = y * (dot(&w[..dim], &xs[i]) + w[dim]);
                let shrink = 1.0 - eta * lambda;
                w.iter_mut().for_each(|a| *a *= shrink);
                if margin < 1.0 {
                    for (a, x) in w[..dim].iter_mut().zip(&xs[i]) {
                        *a += eta * y * x;
                    }
                    w[dim] += eta * y;
                }
                // Projection onto the ball of radius 1/sqrt(λ), which contains the optimum.
                let norm = dot(&w, &w).sqrt();
                let radius = 1.0 / lambda.sqrt();
                if norm > radius {
                    w.iter_mut().for_each(|a| *a *= radius / norm);
                }
                let k = 1.0 / t as f64;
                for (a, b) in avg.iter_mut().zip(&w) {
                    *a += (b - *a) * k;
                }
            }
        }
        let bias = avg[dim];
        avg.truncate(dim);
        Self { weights: avg, bias }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.decision(x) > 0.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean of the F1 scores of both classes. A class that is neither present
/// nor predicted has F1 1.
pub fn macro_f1(gold: &[bool], pred: &[bool]) -> f64 {
    let f1 = |class: bool| {
        let tp = gold.iter().zip(pred).filter(|&(&g, &p)| g == class && p == class).count();
        let fp = gold.iter().zip(pred).filter(|&(&g, &p)| g != class && p == class).count();
        let fn_ = gold.iter().zip(pred).filter(|&(&g, &p)| g == class && p != class).count();
        if tp + fp + fn_ == 0 {
            1.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
        }
    };
    (f1(true) + f1(false)) / 2.0
}

/// Mean macro F1 of `FOLDS`-fold cross-validation for one C. Fold membership
/// is a seeded permutation taken modulo the fold count.
pub fn cross_validate(xs: &[Vec<f64>], ys: &[bool], c: f64, seed: u64) -> f64 {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.shuffle(&mut rng::stream(seed, 0xcf));
    let folds = FOLDS.min(xs.len()).max(1);
    let mut total = 0.0;
    for f in 0..folds {
        let (mut tx, mut ty, mut vx, mut vy) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (pos, &i) in order.iter().enumerate() {
            if pos % folds == f {
                vx.push(xs[i].clone());
                vy.push(ys[i]);
            } else {
                tx.push(xs[i].clone());
                ty.push(ys[i]);
            }
        }
        let svm = LinearSvm::fit(&tx, &ty, c, rng::derive(seed, f as u64));
        let pred: Vec<bool> = vx.iter().map(|x| svm.predict(x)).collect();
        total += macro_f1(&vy, &pred);
    }
    total / folds as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyReport {
    pub task: String,
    /// Regularization constant picked by cross-validation.
    pub c: f64,
    pub cv_f1: f64,
    pub per_edition: BTreeMap<EditionId, f64>,
    /// Mean of `per_edition`.
    pub f1: f64,
}

impl fmt::Display for ClassifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "task\t{}", self.task)?;
        writeln!(f, "C\t{}", self.c)?;
        writeln!(f, "cv_f1\t{:.4}", self.cv_f1)?;
        for (e, v) in &self.per_edition {
            writeln!(f, "f1[{e}]\t{v:.4}")?;
        }
        write!(f, "f1\t{:.4}", self.f1)
    }
}

/// Fits on the training edition with C chosen from [`C_GRID`] (ties go to the
/// smaller C) and reports macro F1 per test edition and their mean.
pub fn classify_transfer(
    space: &EmbeddingSpace,
    corpus: &ParallelCorpus,
    labels: &LabeledVerses,
    seed: u64,
) -> Result<ClassifyReport> {
    let (xs, ys): (Vec<Vec<f64>>, Vec<bool>) = labels
        .train_rows()
        .map(|r| (verse_vector(space, corpus, r.edition, &r.sentence), r.label))
        .unzip();
    if xs.is_empty() {
        return Err(Error::Evaluation(format!(
            "no labeled verses for training edition {}",
            labels.training_edition
        )));
    }
    if ys.iter().all(|&y| y == ys[0]) {
        return Err(Error::Evaluation(format!(
            "training data for task {} contains a single class",
            labels.task
        )));
    }
    let mut best = (C_GRID[0], f64::NEG_INFINITY);
    for &c in &C_GRID {
        let score = cross_validate(&xs, &ys, c, seed);
        if score > best.1 {
            best = (c, score);
        }
    }
    let svm = LinearSvm::fit(&xs, &ys, best.0, seed);
    let mut per_edition = BTreeMap::new();
    for e in labels.test_editions() {
        let (gold, pred): (Vec<bool>, Vec<bool>) = labels
            .rows
            .iter()
            .filter(|r| r.edition == e)
            .map(|r| (r.label, svm.predict(&verse_vector(space, corpus, e, &r.sentence))))
            .unzip();
        per_edition.insert(e, macro_f1(&gold, &pred));
    }
    let f1 = if per_edition.is_empty() {
        0.0
    } else {
        per_edition.values().sum::<f64>() / per_edition.len() as f64
    };
    Ok(ClassifyReport {
        task: labels.task.clone(),
        c: best.0,
        cv_f1: best.1,
        per_edition,
        f1,
    })
}

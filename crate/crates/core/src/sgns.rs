//! Skipgram with negative sampling over `(context-id, word)` pairs.
//!
//! A pair corpus line holds exactly two tokens, so a windowed skipgram sees
//! each pair in both directions: the word predicts its context id, and the
//! context id predicts the word. Both directions are trained here, each
//! against its own noise distribution:
//!
//! ```text
//! L(c, w) = log σ(in_c · out_w) + Σ_{n ~ P_word} log σ(-in_c · out_n)
//!         + log σ(in_w · out_c) + Σ_{m ~ P_ctx}  log σ(-in_w · out_m)
//! ```
//!
//! Only the input vectors of words are returned, ℓ2-normalized.

use std::collections::HashMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::corpus::WordKey;
use crate::error::{Error, Result};
use crate::pairs::PairCorpus;
use crate::rng::{self, Rng};
use crate::space::EmbeddingSpace;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub iterations: usize,
    pub negatives: usize,
    pub initial_lr: f64,
    pub noise_power: f64,
    pub seed: u64,
    /// word2vec's frequent-word subsampling threshold (`1e-3` there); off by default.
    pub subsample: Option<f64>,
    /// Refuse to allocate parameter tables larger than this.
    pub max_memory_bytes: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            iterations: 100,
            negatives: 5,
            initial_lr: 0.025,
            noise_power: 0.75,
            seed: 1,
            subsample: None,
            max_memory_bytes: 16 << 30,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.dim < 1 {
            return bad("dim must be >= 1");
        }
        if self.iterations < 1 {
            return bad("iterations must be >= 1");
        }
        if self.negatives < 1 {
            return bad("negatives must be >= 1");
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return bad("initial_lr must be positive");
        }
        if !(0.0..=1.0).contains(&self.noise_power) {
            return bad("noise_power must lie in [0, 1]");
        }
        if let Some(t) = self.subsample {
            if !(t > 0.0) {
                return bad("subsample threshold must be positive");
            }
        }
        Ok(())
    }
}

/// Unigram counts raised to a power and normalized. Sampling uses Vose's
/// alias method: one uniform slot, then a biased coin between the slot and
/// its alias.
#[derive(Clone, Debug)]
pub struct NoiseDistribution {
    probs: Vec<f64>,
    /// Probability of keeping slot `i` rather than `alias[i]`.
    keep: Vec<f64>,
    alias: Vec<u32>,
}

impl NoiseDistribution {
    pub fn from_counts(counts: &[u64], power: f64) -> Result<Self> {
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(power)).collect();
        let total: f64 = weights.iter().sum();
        if counts.is_empty() || !(total > 0.0) {
            return Err(Error::Empty("noise distribution over an empty corpus".into()));
        }
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let n = probs.len();
        let mut keep: Vec<f64> = probs.iter().map(|p| p * n as f64).collect();
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| keep[i] < 1.0);
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            alias[s] = l as u32;
            keep[l] -= 1.0 - keep[s];
            if keep[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers differ from 1 only by rounding.
        for i in small.into_iter().chain(large) {
            keep[i] = 1.0;
        }
        Ok(NoiseDistribution { probs, keep, alias })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn sample(&self, rng: &mut Rng) -> usize {
        let i = rng.gen_range(0..self.keep.len());
        if rng.gen::<f64>() < self.keep[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }
}

/// Noise distribution over the word side of `pairs`, with words in order of
/// first appearance.
pub fn build_noise(pairs: &PairCorpus, power: f64) -> Result<(Vec<WordKey>, NoiseDistribution)> {
    let mut index: HashMap<&WordKey, usize> = HashMap::new();
    let mut words = Vec::new();
    let mut counts = Vec::new();
    for p in &pairs.pairs {
        let i = *index.entry(&p.word).or_insert_with(|| {
            words.push(p.word.clone());
            counts.push(0);
            words.len() - 1
        });
        counts[i] += 1;
    }
    let noise = NoiseDistribution::from_counts(&counts, power)?;
    Ok((words, noise))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Table {
    WordIn,
    WordOut,
    ContextIn,
    ContextOut,
}

const TABLES: [Table; 4] = [Table::WordIn, Table::WordOut, Table::ContextIn, Table::ContextOut];

/// One training example with its negative draws already fixed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    pub context: usize,
    pub word: usize,
    /// Noise words contrasted against the context's prediction of `word`.
    pub noise_words: Vec<usize>,
    /// Noise contexts contrasted against the word's prediction of `context`.
    pub noise_contexts: Vec<usize>,
}

/// Floating-point type of the parameter tables. Training uses `f32`; `f64`
/// serves exact gradient checks.
pub trait Real: num_traits::Float + std::ops::AddAssign + fmt::Debug + Send + Sync + 'static {
    fn of(x: f64) -> Self;
    fn f64(self) -> f64;
}

impl Real for f32 {
    fn of(x: f64) -> Self {
        x as f32
    }
    fn f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn of(x: f64) -> Self {
        x
    }
    fn f64(self) -> f64 {
        self
    }
}

fn sigmoid<F: Real>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

fn dot64<F: Real>(a: &[F], b: &[F]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.f64() * y.f64()).sum()
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Dot product with eight independent partial sums, so the additions do not
/// form one serial dependency chain. The summation order is fixed.
fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [F::zero(); 8];
    let chunks = n / 8;
    for i in 0..chunks {
        let (x, y) = (&a[i * 8..i * 8 + 8], &b[i * 8..i * 8 + 8]);
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = F::zero();
    for i in chunks * 8..n {
        tail += a[i] * b[i];
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

#[inline]
fn prefetch_row<T>(table: &[T], row: usize, d: usize) {
    #[cfg(target_arch = "x86_64")]
    {
        use std::arch::x86_64::{_mm_prefetch, _MM_HINT_T0};
        let slice = &table[row * d..(row + 1) * d];
        let bytes = std::mem::size_of_val(slice);
        let base = slice.as_ptr() as *const i8;
        for off in (0..bytes).step_by(64).chain(std::iter::once(bytes - 1)) {
            // SAFETY: `off < bytes`, so the address lies inside `slice`; a
            // prefetch never faults and has no observable effect on memory.
            #[allow(unused_unsafe)]
            unsafe {
                _mm_prefetch(base.add(off), _MM_HINT_T0)
            };
        }
    }
    #[cfg(not(target_arch = "x86_64"))]
    let _ = (table, row, d);
}

/// Ascent on one direction: the positive output row `pos` and the noise rows
/// other than `pos` move first, then `center` by the accumulated gradient.
fn ascend<F: Real>(center: &mut [F], outs: &mut [F], d: usize, pos: usize, noise: &[usize], lr: F, acc: &mut [F]) {
    acc.iter_mut().for_each(|a| *a = F::zero());
    let targets = std::iter::once((pos, F::one())).chain(noise.iter().filter(|&&n| n != pos).map(|&n| (n, F::zero())));
    for (oi, label) in targets {
        let out = &mut outs[oi * d..(oi + 1) * d];
        let coef = lr * (label - sigmoid(dot(center, out)));
        for ((a, o), c) in acc.iter_mut().zip(out.iter_mut()).zip(center.iter()) {
            *a += coef * *o;
            *o += coef * *c;
        }
    }
    center.iter_mut().zip(acc.iter()).for_each(|(c, a)| *c += *a);
}

/// Parameter tables plus vocabularies and noise distributions.
#[derive(Clone, Debug)]
pub struct TrainingState<F = f32> {
    dim: usize,
    negatives: usize,
    words: Vec<WordKey>,
    contexts: Vec<String>,
    word_counts: Vec<u64>,
    word_in: Vec<F>,
    word_out: Vec<F>,
    ctx_in: Vec<F>,
    ctx_out: Vec<F>,
    word_noise: NoiseDistribution,
    ctx_noise: NoiseDistribution,
    /// `(context, word)` index pairs in corpus order.
    pairs: Vec<(u32, u32)>,
    noise_buf: Vec<usize>,
    noise_ctx_buf: Vec<usize>,
    acc: Vec<F>,
}

impl<F: Real> TrainingState<F> {
    pub fn new(pairs: &PairCorpus, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        if pairs.is_empty() {
            return Err(Error::Empty("pair corpus".into()));
        }
        let (words, word_noise) = build_noise(pairs, config.noise_power)?;
        let word_index: HashMap<&WordKey, u32> =
            words.iter().enumerate().map(|(i, w)| (w, i as u32)).collect();
        let mut ctx_index: HashMap<&str, u32> = HashMap::new();
        let mut contexts: Vec<String> = Vec::new();
        let mut ctx_counts: Vec<u64> = Vec::new();
        let mut word_counts = vec![0u64; words.len()];
        let mut indexed = Vec::with_capacity(pairs.len());
        for p in &pairs.pairs {
            let c = *ctx_index.entry(p.context.as_str()).or_insert_with(|| {
                contexts.push(p.context.clone());
                ctx_counts.push(0);
                (contexts.len() - 1) as u32
            });
            ctx_counts[c as usize] += 1;
            let w = word_index[&p.word];
            word_counts[w as usize] += 1;
            indexed.push((c, w));
        }
        let ctx_noise = NoiseDistribution::from_counts(&ctx_counts, config.noise_power)?;

        let rows = (words.len() + contexts.len()) as u64;
        let bytes = rows
            .saturating_mul(config.dim as u64)
            .saturating_mul(2 * std::mem::size_of::<F>() as u64);
        if bytes > config.max_memory_bytes {
            return Err(Error::InvalidParameter(format!(
                "dim {} over {} items needs {} bytes of parameters, above the {} byte budget",
                config.dim, rows, bytes, config.max_memory_bytes
            )));
        }

        let mut init = rng::stream(config.seed, 0);
        let dim = config.dim;
        let mut uniform = |n: usize| -> Vec<F> {
            (0..n * dim).map(|_| F::of((init.gen::<f64>() - 0.5) / dim as f64)).collect()
        };
        let word_in = uniform(words.len());
        let ctx_in = uniform(contexts.len());
        Ok(TrainingState {
            dim,
            negatives: config.negatives,
            word_out: vec![F::zero(); words.len() * dim],
            ctx_out: vec![F::zero(); contexts.len() * dim],
            words,
            contexts,
            word_counts,
            word_in,
            ctx_in,
            word_noise,
            ctx_noise,
            pairs: indexed,
            noise_buf: Vec::with_capacity(config.negatives),
            noise_ctx_buf: Vec::with_capacity(config.negatives),
            acc: vec![F::zero(); dim],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[WordKey] {
        &self.words
    }

    pub fn contexts(&self) -> &[String] {
        &self.contexts
    }

    pub fn word_noise(&self) -> &NoiseDistribution {
        &self.word_noise
    }

    pub fn context_noise(&self) -> &NoiseDistribution {
        &self.ctx_noise
    }

    /// `(context, word)` index pairs in corpus order.
    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn table(&self, t: Table) -> &[F] {
        match t {
            Table::WordIn => &self.word_in,
            Table::WordOut => &self.word_out,
            Table::ContextIn => &self.ctx_in,
            Table::ContextOut => &self.ctx_out,
        }
    }

    pub fn table_mut(&mut self, t: Table) -> &mut [F] {
        match t {
            Table::WordIn => &mut self.word_in,
            Table::WordOut => &mut self.word_out,
            Table::ContextIn => &mut self.ctx_in,
            Table::ContextOut => &mut self.ctx_out,
        }
    }

    fn row(&self, t: Table, i: usize) -> &[F] {
        &self.table(t)[i * self.dim..(i + 1) * self.dim]
    }

    pub fn draw_sample(&self, context: usize, word: usize, rng: &mut Rng) -> Sample {
        let noise_words = (0..self.negatives).map(|_| self.word_noise.sample(rng)).collect();
        let noise_contexts = (0..self.negatives).map(|_| self.ctx_noise.sample(rng)).collect();
        Sample {
            context,
            word,
            noise_words,
            noise_contexts,
        }
    }

    /// Per-direction terms: (center table, center row, output table, [(row, label)]).
    fn terms<'a>(&self, s: &'a Sample) -> [(Table, usize, Table, Vec<(usize, f64)>); 2] {
        let mut ctx_side = vec![(s.word, 1.0)];
        ctx_side.extend(s.noise_words.iter().filter(|&&n| n != s.word).map(|&n| (n, 0.0)));
        let mut word_side = vec![(s.context, 1.0)];
        word_side.extend(s.noise_contexts.iter().filter(|&&m| m != s.context).map(|&m| (m, 0.0)));
        [
            (Table::ContextIn, s.context, Table::WordOut, ctx_side),
            (Table::WordIn, s.word, Table::ContextOut, word_side),
        ]
    }

    /// Log-likelihood of one sample. Noise draws equal to the positive item
    /// are skipped, as word2vec does.
    pub fn loss(&self, s: &Sample) -> f64 {
        let mut total = 0.0;
        for (ct, ci, ot, targets) in self.terms(s) {
            let center = self.row(ct, ci);
            for (oi, label) in targets {
                let x = dot64(center, self.row(ot, oi));
                total += if label > 0.0 { log_sigmoid(x) } else { log_sigmoid(-x) };
            }
        }
        total
    }

    /// Exact gradient of [`loss`](Self::loss) as dense tables, ordered
    /// `WordIn, WordOut, ContextIn, ContextOut`.
    pub fn gradient(&self, s: &Sample) -> [Vec<f64>; 4] {
        let mut g = TABLES.map(|t| vec![0.0; self.table(t).len()]);
        let slot = |t: Table| TABLES.iter().position(|&x| x == t).unwrap();
        let d = self.dim;
        for (ct, ci, ot, targets) in self.terms(s) {
            let center: Vec<f64> = self.row(ct, ci).iter().map(|x| x.f64()).collect();
            for (oi, label) in targets {
                let out: Vec<f64> = self.row(ot, oi).iter().map(|x| x.f64()).collect();
                let coef = label - sigmoid(dot64(&center, &out));
                for k in 0..d {
                    g[slot(ct)][ci * d + k] += coef * out[k];
                    g[slot(ot)][oi * d + k] += coef * center[k];
                }
            }
        }
        g
    }

    /// One stochastic gradient ascent update. Output rows are updated in
    /// place while the center's gradient accumulates from their values
    /// before the update; the center moves last.
    pub fn apply_sample(&mut self, s: &Sample, lr: f64) {
        let mut acc = std::mem::take(&mut self.acc);
        self.update(s.context, s.word, &s.noise_words, &s.noise_contexts, lr, &mut acc);
        self.acc = acc;
    }

    fn update(&mut self, context: usize, word: usize, noise_words: &[usize], noise_contexts: &[usize], lr: f64, acc: &mut [F]) {
        let d = self.dim;
        let lr = F::of(lr);
        ascend(
            &mut self.ctx_in[context * d..(context + 1) * d],
            &mut self.word_out,
            d,
            word,
            noise_words,
            lr,
            acc,
        );
        ascend(
            &mut self.word_in[word * d..(word + 1) * d],
            &mut self.ctx_out,
            d,
            context,
            noise_contexts,
            lr,
            acc,
        );
    }

    /// Draw negatives for `(context, word)` and update. Equivalent to
    /// [`draw_sample`](Self::draw_sample) followed by
    /// [`apply_sample`](Self::apply_sample), without allocating.
    pub fn step(&mut self, context: usize, word: usize, rng: &mut Rng, lr: f64) {
        let mut nw = std::mem::take(&mut self.noise_buf);
        let mut nc = std::mem::take(&mut self.noise_ctx_buf);
        let mut acc = std::mem::take(&mut self.acc);
        nw.clear();
        nc.clear();
        nw.extend((0..self.negatives).map(|_| self.word_noise.sample(rng)));
        nc.extend((0..self.negatives).map(|_| self.ctx_noise.sample(rng)));
        self.update(context, word, &nw, &nc, lr, &mut acc);
        self.noise_buf = nw;
        self.noise_ctx_buf = nc;
        self.acc = acc;
    }

    /// Hints the cache about every row `s` touches.
    fn prefetch(&self, s: &Sample) {
        let d = self.dim;
        prefetch_row(&self.ctx_in, s.context, d);
        prefetch_row(&self.word_in, s.word, d);
        prefetch_row(&self.word_out, s.word, d);
        prefetch_row(&self.ctx_out, s.context, d);
        for &n in &s.noise_words {
            prefetch_row(&self.word_out, n, d);
        }
        for &m in &s.noise_contexts {
            prefetch_row(&self.ctx_out, m, d);
        }
    }

    pub fn is_finite(&self) -> bool {
        TABLES.iter().all(|&t| self.table(t).iter().all(|v| v.is_finite()))
    }

    /// Input vectors of words, ℓ2-normalized.
    pub fn to_space(&self) -> Result<EmbeddingSpace> {
        let rows = self
            .words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), self.row(Table::WordIn, i).iter().map(|x| x.f64()).collect()));
        EmbeddingSpace::from_rows(self.dim, rows)
    }
}

/// Epoch-by-epoch driver with linearly decaying learning rate.
pub struct Trainer<F = f32> {
    state: TrainingState<F>,
    config: TrainConfig,
    rng: Rng,
    order: Vec<usize>,
    keep: Option<Vec<f64>>,
    done: u64,
    total: u64,
    epoch: usize,
    ring: Vec<Prepared>,
}

/// Number of samples drawn ahead of the update so their rows can be
/// prefetched.
const AHEAD: usize = 2;

#[derive(Clone, Debug)]
struct Prepared {
    active: bool,
    lr: f64,
    sample: Sample,
}

impl<F: Real> Trainer<F> {
    pub fn new(pairs: &PairCorpus, config: &TrainConfig) -> Result<Self> {
        let state = TrainingState::new(pairs, config)?;
        let keep = config.subsample.map(|t| {
            let total = state.pairs.len() as f64;
            state
                .word_counts
                .iter()
                .map(|&c| {
                    let f = c as f64;
                    (((f / (t * total)).sqrt() + 1.0) * (t * total) / f).min(1.0)
                })
                .collect()
        });
        let n = state.pairs.len();
        Ok(Trainer {
            total: (n as u64) * config.iterations as u64,
            order: (0..n).collect(),
            rng: rng::stream(config.seed, 1),
            config: config.clone(),
            keep,
            state,
            done: 0,
            epoch: 0,
            ring: vec![
                Prepared {
                    active: false,
                    lr: 0.0,
                    sample: Sample {
                        context: 0,
                        word: 0,
                        noise_words: Vec::with_capacity(config.negatives),
                        noise_contexts: Vec::with_capacity(config.negatives),
                    },
                };
                AHEAD
            ],
        })
    }

    pub fn state(&self) -> &TrainingState<F> {
        &self.state
    }

    pub fn epochs_done(&self) -> usize {
        self.epoch
    }

    pub fn learning_rate(&self) -> f64 {
        let frac = 1.0 - self.done as f64 / self.total.max(1) as f64;
        self.config.initial_lr * frac.max(1e-4)
    }

    /// One pass over the shuffled pair sequence. Random draws happen in pair
    /// order a few pairs ahead of the updates; updates consume no randomness,
    /// so results equal drawing and updating one pair at a time.
    pub fn run_epoch(&mut self) {
        self.order.shuffle(&mut self.rng);
        let n = self.order.len();
        let mut ring = std::mem::take(&mut self.ring);
        for (j, slot) in ring.iter_mut().enumerate().take(n) {
            self.prepare(j, slot);
        }
        for i in 0..n {
            let slot = &mut ring[i % AHEAD];
            if slot.active {
                self.state.apply_sample(&slot.sample, slot.lr);
            }
            if i + AHEAD < n {
                self.prepare(i + AHEAD, slot);
            }
        }
        self.ring = ring;
        self.epoch += 1;
        debug_assert!(self.state.is_finite());
    }

    fn prepare(&mut self, i: usize, slot: &mut Prepared) {
        let (c, w) = self.state.pairs[self.order[i]];
        slot.lr = self.learning_rate();
        self.done += 1;
        if let Some(keep) = &self.keep {
            if self.rng.gen::<f64>() >= keep[w as usize] {
                slot.active = false;
                return;
            }
        }
        let s = &mut slot.sample;
        s.context = c as usize;
        s.word = w as usize;
        s.noise_words.clear();
        s.noise_contexts.clear();
        let st = &self.state;
        s.noise_words.extend((0..st.negatives).map(|_| st.word_noise.sample(&mut self.rng)));
        s.noise_contexts.extend((0..st.negatives).map(|_| st.ctx_noise.sample(&mut self.rng)));
        st.prefetch(s);
        slot.active = true;
    }

    pub fn run(mut self) -> Result<EmbeddingSpace> {
        while self.epoch < self.config.iterations {
            self.run_epoch();
        }
        self.state.to_space()
    }
}

/// Train on `pairs` and return unit-normalized word vectors.
pub fn train(pairs: &PairCorpus, config: &TrainConfig) -> Result<EmbeddingSpace> {
    Trainer::<f32>::new(pairs, config)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairs::{Pair, Provenance};

    fn pairs(raw: &[(&str, &str)]) -> PairCorpus {
        PairCorpus {
            provenance: Provenance::SentenceId,
            pairs: raw
                .iter()
                .map(|(c, w)| Pair {
                    context: c.to_string(),
                    word: w.parse().unwrap(),
                })
                .collect(),
        }
    }

    #[test]
    fn noise_arithmetic() {
        let p = pairs(&[("1", "enge:a"), ("2", "enge:a"), ("3", "enge:a"), ("4", "enge:a"), ("5", "enge:b")]);
        let (words, noise) = build_noise(&p, 0.75).unwrap();
        assert_eq!(words[0].to_string(), "enge:a");
        let expected = 4f64.powf(0.75) / (4f64.powf(0.75) + 1.0);
        assert!((noise.probs()[0] - expected).abs() < 1e-12);
        assert!((noise.probs()[0] - 0.7388).abs() < 1e-4);
        let (_, uniform) = build_noise(&p, 0.0).unwrap();
        assert_eq!(uniform.probs(), &[0.5, 0.5]);
        let (_, freq) = build_noise(&p, 1.0).unwrap();
        assert!((freq.probs()[0] - 0.8).abs() < 1e-12);
        assert!(build_noise(&pairs(&[]), 0.75).is_err());
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            TrainConfig { dim: 0, ..ok.clone() },
            TrainConfig { iterations: 0, ..ok.clone() },
            TrainConfig { negatives: 0, ..ok.clone() },
            TrainConfig { initial_lr: 0.0, ..ok.clone() },
            TrainConfig { noise_power: 1.5, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn memory_budget_is_enforced() {
        let p = pairs(&[("1", "enge:a")]);
        let cfg = TrainConfig {
            dim: 1_000_000,
            max_memory_bytes: 1 << 20,
            ..TrainConfig::default()
        };
        let err = TrainingState::<f64>::new(&p, &cfg).unwrap_err();
        assert!(err.to_string().contains("byte budget"));
    }

    #[test]
    fn one_dim_closed_form() {
        // d/dx log σ(x) = 1 - σ(x); d/dx log σ(-x) = -σ(x).
        let p = pairs(&[("1", "enge:a"), ("2", "enge:b")]);
        let cfg = TrainConfig { dim: 1, negatives: 1, ..TrainConfig::default() };
        let mut st = TrainingState::new(&p, &cfg).unwrap();
        st.table_mut(Table::ContextIn).copy_from_slice(&[0.3, -0.2]);
        st.table_mut(Table::WordOut).copy_from_slice(&[0.5, -0.7]);
        st.table_mut(Table::WordIn).copy_from_slice(&[0.1, 0.4]);
        st.table_mut(Table::ContextOut).copy_from_slice(&[-0.6, 0.9]);
        let s = Sample { context: 0, word: 0, noise_words: vec![1], noise_contexts: vec![1] };
        let g = st.gradient(&s);
        let (c, wp, wn) = (0.3, 0.5, -0.7);
        let gc = (1.0 - sigmoid(c * wp)) * wp - sigmoid(c * wn) * wn;
        assert!((g[2][0] - gc).abs() < 1e-15);
        assert!((g[1][0] - (1.0 - sigmoid(c * wp)) * c).abs() < 1e-15);
        assert!((g[1][1] + sigmoid(c * wn) * c).abs() < 1e-15);
        let (w, cp, cn) = (0.1, -0.6, 0.9);
        let gw = (1.0 - sigmoid(w * cp)) * cp - sigmoid(w * cn) * cn;
        assert!((g[0][0] - gw).abs() < 1e-15);
    }

    #[test]
    fn fused_step_matches_exact_gradient() {
        let p = pairs(&[("1", "enge:a"), ("2", "enge:b"), ("3", "enge:c"), ("1", "enge:b")]);
        let cfg = TrainConfig { dim: 4, negatives: 2, ..TrainConfig::default() };
        let mut st = TrainingState::new(&p, &cfg).unwrap();
        let mut r = rng::seeded(3);
        for t in TABLES {
            st.table_mut(t).iter_mut().for_each(|v| *v = r.gen::<f64>() - 0.5);
        }
        let s = Sample { context: 0, word: 0, noise_words: vec![1, 2], noise_contexts: vec![1, 2] };
        let g = st.gradient(&s);
        let mut stepped = st.clone();
        stepped.apply_sample(&s, 0.1);
        for (slot, t) in TABLES.iter().enumerate() {
            for (i, (new, old)) in stepped.table(*t).iter().zip(st.table(*t)).enumerate() {
                assert!((new - (old + 0.1 * g[slot][i])).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let p = pairs(&[("1", "enge:a"), ("2", "enge:b")]);
        let mut st = TrainingState::new(&p, &TrainConfig { dim: 3, ..TrainConfig::default() }).unwrap();
        st.table_mut(Table::WordOut).iter_mut().for_each(|v| *v = 0.25);
        let before = st.clone();
        st.step(0, 1, &mut rng::seeded(0), 0.0);
        for t in TABLES {
            assert_eq!(st.table(t), before.table(t));
        }
    }

    #[test]
    fn shared_contexts_give_similar_vectors() {
        let mut raw = Vec::new();
        let ctx: Vec<String> = (0..40).map(|i| i.to_string()).collect();
        for (i, c) in ctx.iter().enumerate() {
            raw.push((c.as_str(), if i < 20 { "enge:x" } else { "enge:p" }));
            raw.push((c.as_str(), if i < 20 { "fra1:y" } else { "fra1:q" }));
        }
        let cfg = TrainConfig { dim: 10, iterations: 50, ..TrainConfig::default() };
        let space = train(&pairs(&raw), &cfg).unwrap();
        let cos = space.cosine(&"enge:x".parse().unwrap(), &"fra1:y".parse().unwrap()).unwrap();
        assert!(cos > 0.9, "cos {cos}");
        for (_, v) in space.iter() {
            let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let p = pairs(&[("1", "enge:a"), ("2", "enge:b"), ("1", "fra1:c"), ("2", "fra1:d")]);
        let cfg = TrainConfig { dim: 5, iterations: 5, ..TrainConfig::default() };
        let a = train(&p, &cfg).unwrap();
        let b = train(&p, &cfg).unwrap();
        assert_eq!(a, b);
        let c = train(&p, &TrainConfig { seed: 99, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn subsampling_still_trains() {
        let p = pairs(&[("1", "enge:a"), ("2", "enge:a"), ("1", "fra1:c"), ("2", "fra1:d")]);
        let cfg = TrainConfig { dim: 5, iterations: 3, subsample: Some(1e-3), ..TrainConfig::default() };
        assert_eq!(train(&p, &cfg).unwrap().len(), 3);
    }
}

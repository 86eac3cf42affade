//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints exactly one `PASS`/`FAIL` line; exits nonzero if any
//! criterion fails.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::BufReader;
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use coco_core::concepts::{extract_perfect_alignments, sample_subcorpus, ConceptSet, MemberSet};
use coco_core::config::{Method, PipelineConfig};
use coco_core::corpus::{EditionId, ParallelCorpus, SentenceId, WordKey};
use coco_core::eval::csimple::shared_concept_candidates;
use coco_core::eval::{rtt, weighted_sample_without_replacement, Query, QueryResolver, QuerySet, RttVariant};
use coco_core::pairs::{Pair, PairCorpus, Provenance};
use coco_core::pipeline::{self, execute, EvalInputs, EvalReports};
use coco_core::rng;
use coco_core::sgns::{Sample, Table, TrainConfig, TrainingState};
use coco_core::space::{fit_linear_map, EmbeddingSpace};
use coco_core::synth::{generate, SynthParams};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// Pipeline runs on the synthetic corpus, shared between criteria.
#[derive(Default)]
struct Runs {
    cache: HashMap<(Method, u64, usize, usize), (EvalReports, f64)>,
}

impl Runs {
    /// Synthetic corpus and pipeline both seeded with `seed`; Dim 50,
    /// budget 500 samples, MinLg 3, MaxNgr 3, roundtrip variant S1.
    fn get(&mut self, method: Method, seed: u64, iterations: usize, min_editions: usize) -> &(EvalReports, f64) {
        self.cache
            .entry((method, seed, iterations, min_editions))
            .or_insert_with(|| {
                let start = Instant::now();
                let synth = generate(&SynthParams { seed, ..SynthParams::default() }).unwrap();
                let inputs = EvalInputs {
                    queries: Some(QuerySet::new(synth.queries())),
                    ..EvalInputs::default()
                };
                let mut cfg = PipelineConfig::default();
                cfg.apply_str(
                    &format!(
                        "method={method}\nseed={seed}\nmin_editions={min_editions}\nmax_ngram=3\nbudget=500\n\
                         dim=50\niterations={iterations}\nvariants=S1\ndeterministic=true"
                    ),
                    "acceptance",
                )
                .unwrap();
                let out = execute(&synth.corpus, &cfg, &inputs).unwrap();
                (out.reports, start.elapsed().as_secs_f64())
            })
    }

    fn s1(&mut self, method: Method, seed: u64, iterations: usize) -> f64 {
        self.get(method, seed, iterations, 3).0.rtt[0].mean
    }
}

fn edition(i: usize) -> EditionId {
    let iso: String = ['a', 'b', 'c', 'd', 'e', 'f', 'g', 'h'][i..=i].iter().chain(['x', 'x'].iter()).collect();
    EditionId::new(&iso, '0').unwrap()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

// 1 ------------------------------------------------------------------------

fn random_toy_corpus(r: &mut impl Rng) -> ParallelCorpus {
    let editions = r.gen_range(1..=5);
    let sentences = r.gen_range(1..=30);
    let vocab = r.gen_range(1..=50);
    let mut b = ParallelCorpus::builder();
    for e in 0..editions {
        let rows: Vec<(SentenceId, Vec<String>)> = (0..sentences)
            .map(|s| {
                let len = r.gen_range(1..=6);
                let toks = (0..len).map(|_| format!("w{}", r.gen_range(0..vocab))).collect();
                (SentenceId::new(format!("{s:03}")), toks)
            })
            .collect();
        b.add_edition(edition(e), rows).unwrap();
    }
    b.build()
}

/// Every distinct ngram is checked against every subcorpus sentence with a
/// sliding-window containment test; groups come from a sorted map.
fn brute_force_alignments(corpus: &ParallelCorpus, sub: &[usize], max_ngram: usize) -> Vec<(Vec<u32>, Vec<(usize, Vec<u32>)>)> {
    let mut groups: BTreeMap<Vec<u32>, Vec<(usize, Vec<u32>)>> = BTreeMap::new();
    for (ei, ed) in corpus.editions().iter().enumerate() {
        let mut distinct: BTreeSet<Vec<u32>> = BTreeSet::new();
        for &s in sub {
            if let Some(t) = ed.tokens(s) {
                for n in 1..=max_ngram.min(t.len()) {
                    for w in t.windows(n) {
                        distinct.insert(w.to_vec());
                    }
                }
            }
        }
        for g in distinct {
            let sig: Vec<u32> = sub
                .iter()
                .enumerate()
                .filter(|(_, &s)| ed.tokens(s).is_some_and(|t| t.windows(g.len()).any(|w| w == g.as_slice())))
                .map(|(pos, _)| pos as u32)
                .collect();
            groups.entry(sig).or_default().push((ei, g));
        }
    }
    groups
        .into_iter()
        .filter_map(|(sig, mut m)| {
            m.sort();
            let eds: BTreeSet<usize> = m.iter().map(|x| x.0).collect();
            (m.len() >= 2 && eds.len() >= 2).then_some((sig, m))
        })
        .collect()
}

fn c1_perfect_alignment_oracle(_: &mut Runs) -> Verdict {
    let start = Instant::now();
    let mut r = rng::seeded(101);
    let mut sets = 0;
    for i in 0..200 {
        let corpus = random_toy_corpus(&mut r);
        let max_ngram = r.gen_range(1..=3);
        let sub = if i % 2 == 0 { (0..corpus.num_sentences()).collect() } else { sample_subcorpus(&corpus, &mut r) };
        let got: Vec<(Vec<u32>, Vec<(usize, Vec<u32>)>)> = extract_perfect_alignments(&corpus, &sub, max_ngram)
            .into_iter()
            .map(|MemberSet { signature, members }| (signature, members.into_iter().map(|m| (m.edition, m.tokens)).collect()))
            .collect();
        let want = brute_force_alignments(&corpus, &sub, max_ngram);
        if got != want {
            return verdict(false, format!("corpus {i}: {} groups vs {} expected", got.len(), want.len()));
        }
        sets += want.len();
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(secs < 30.0, format!("200 corpora, {sets} member sets identical, {secs:.2}s (< 30s)"))
}

// 2 ------------------------------------------------------------------------

fn c2_synthetic_coco(runs: &mut Runs) -> Verdict {
    let (coco, secs) = runs.get(Method::Coco, 1, 20, 3).clone();
    let mono = runs.s1(Method::Mono, 1, 20);
    let s1 = coco.rtt[0].mean;
    verdict(
        s1 >= 0.85 && mono <= 0.25 && secs <= 300.0,
        format!(
            "Co+Co S1 μ {:.3} (≥ 0.85) over {} queries, MONO S1 μ {mono:.3} (≤ 0.25), Co+Co run {secs:.0}s (≤ 300s)",
            s1,
            coco.rtt[0].scores.len()
        ),
    )
}

// 3 ------------------------------------------------------------------------

fn c3_method_ordering(runs: &mut Runs) -> Verdict {
    let seeds = 1..=5u64;
    let per = |runs: &mut Runs, m: Method| -> Vec<f64> { seeds.clone().map(|s| runs.s1(m, s, 20)).collect() };
    let coco = per(runs, Method::Coco);
    let sid = per(runs, Method::Sid);
    let cid = per(runs, Method::Cid);
    let (mc, ms, mi) = (median(&coco), median(&sid), median(&cid));
    verdict(
        mc >= ms.max(mi) - 0.01,
        format!("median S1 μ over 5 seeds: Co+Co {mc:.3}, S-ID {ms:.3}, C-ID {mi:.3}; Co+Co per seed {coco:.3?}"),
    )
}

// 4 ------------------------------------------------------------------------

fn c4_gradient_check(_: &mut Runs) -> Verdict {
    let start = Instant::now();
    let mut r = rng::seeded(404);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n_ctx = r.gen_range(1..6);
        let n_words = r.gen_range(2..8);
        let mut pairs: Vec<Pair> = (0..n_words)
            .map(|w| Pair {
                context: format!("c{}", w % n_ctx),
                word: WordKey::new(edition(w % 2), format!("w{w}")).unwrap(),
            })
            .collect();
        pairs.shuffle(&mut r);
        let pc = PairCorpus { provenance: Provenance::SentenceId, pairs };
        let dim = r.gen_range(1..8);
        let negatives = r.gen_range(1..5);
        let mut st = TrainingState::<f64>::new(&pc, &TrainConfig { dim, negatives, ..TrainConfig::default() }).unwrap();
        for t in [Table::WordIn, Table::WordOut, Table::ContextIn, Table::ContextOut] {
            st.table_mut(t).iter_mut().for_each(|x| *x = r.gen_range(-1.0..1.0));
        }
        let nw = st.words().len();
        let nc = st.contexts().len();
        let s = Sample {
            context: r.gen_range(0..nc),
            word: r.gen_range(0..nw),
            noise_words: (0..negatives).map(|_| r.gen_range(0..nw)).collect(),
            noise_contexts: (0..negatives).map(|_| r.gen_range(0..nc)).collect(),
        };
        let grad = st.gradient(&s);
        let h = 1e-5;
        for (ti, t) in [Table::WordIn, Table::WordOut, Table::ContextIn, Table::ContextOut].into_iter().enumerate() {
            let mut fd = vec![0.0; grad[ti].len()];
            for (i, slot) in fd.iter_mut().enumerate() {
                let orig = st.table(t)[i];
                st.table_mut(t)[i] = orig + h;
                let up = st.loss(&s);
                st.table_mut(t)[i] = orig - h;
                let down = st.loss(&s);
                st.table_mut(t)[i] = orig;
                *slot = (up - down) / (2.0 * h);
            }
            let diff: f64 = fd.iter().zip(&grad[ti]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale = fd.iter().map(|a| a * a).sum::<f64>().sqrt().max(grad[ti].iter().map(|a| a * a).sum::<f64>().sqrt());
            if scale > 1e-12 {
                worst = worst.max(diff / scale);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst < 1e-4 && secs < 5.0, format!("100 states, max relative error {worst:.2e} (< 1e-4), {secs:.2}s (< 5s)"))
}

// 5 ------------------------------------------------------------------------

fn c5_linear_map_recovery(_: &mut Runs) -> Verdict {
    let mut r = rng::seeded(505);
    let x = DMatrix::from_fn(20, 5, |_, _| r.gen_range(-1.0..1.0));
    let w0 = DMatrix::from_fn(5, 5, |_, _| r.gen_range(-2.0..2.0));
    let fit = fit_linear_map(&x, &(&x * &w0)).unwrap();
    let err_w = (&fit.map.w - &w0).amax();
    let id = fit_linear_map(&x, &x).unwrap();
    let err_i = (&id.map.w - DMatrix::<f64>::identity(5, 5)).amax();
    verdict(
        err_w <= 1e-6 && err_i <= 1e-8 && fit.rank == 5,
        format!("max |W − W₀| {err_w:.1e} (≤ 1e-6), max |W − I| {err_i:.1e} (≤ 1e-8)"),
    )
}

// 6 ------------------------------------------------------------------------

/// Independent roundtrip: exhaustive cosine ranking, no index structures.
fn naive_rtt_score(space: &EmbeddingSpace, query: &Query, key: &WordKey, v: RttVariant, editions: &[EditionId]) -> f64 {
    let top = |from: &WordKey, e: EditionId, k: usize| -> Vec<WordKey> {
        let a = space.get(from).unwrap();
        let mut c: Vec<(f64, &WordKey)> = space
            .keys()
            .iter()
            .filter(|w| w.edition() == e && *w != from)
            .map(|w| (a.iter().zip(space.get(w).unwrap()).map(|(x, y)| x * y).sum(), w))
            .collect();
        c.sort_by(|p, q| q.0.total_cmp(&p.0));
        c.into_iter().take(k).map(|(_, w)| w.clone()).collect()
    };
    let others: Vec<EditionId> = editions.iter().copied().filter(|&e| e != key.edition()).collect();
    let hits = others
        .iter()
        .filter(|&&e| {
            top(key, e, v.k_intermediate)
                .iter()
                .any(|m| top(m, key.edition(), v.k_back).iter().any(|b| query.accepts(b.surface(), v.relaxed)))
        })
        .count();
    if others.is_empty() {
        0.0
    } else {
        hits as f64 / others.len() as f64
    }
}

fn c6_rtt_properties(_: &mut Runs) -> Verdict {
    let mut r = rng::seeded(606);
    for trial in 0..1000 {
        let n_ed = r.gen_range(2..=4);
        let eds: Vec<EditionId> = (0..n_ed).map(edition).collect();
        let dim = r.gen_range(2..=5);
        let vocab = r.gen_range(3..=12);
        let mut rows = Vec::new();
        for &e in &eds {
            for w in 0..vocab {
                if r.gen_bool(0.85) {
                    rows.push((WordKey::new(e, format!("w{w}")).unwrap(), (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect()));
                }
            }
        }
        let Ok(space) = EmbeddingSpace::from_rows(dim, rows) else { continue };
        let mut queries = QuerySet::new((0..r.gen_range(1..=8)).map(|_| format!("w{}", r.gen_range(0..vocab + 3))));
        for q in &mut queries.queries {
            for _ in 0..r.gen_range(0..3) {
                q.relaxed.insert(format!("w{}", r.gen_range(0..vocab)));
            }
        }
        let resolver = QueryResolver::new(eds[0], &eds);
        let rep: BTreeMap<&str, _> = RttVariant::ALL.iter().map(|&v| (v.name, rtt(&space, &queries, v, &resolver, &eds))).collect();
        let (s1, r1, s4, s16) = (&rep["S1"], &rep["R1"], &rep["S4"], &rep["S16"]);
        for (i, q) in queries.queries.iter().enumerate() {
            let key = WordKey::new(eds[0], q.surface.as_str()).unwrap();
            let present = space.contains(&key);
            let fail = |what: &str| verdict(false, format!("trial {trial}, query {}: {what}", q.surface));
            if !(s1.scores[i] <= s4.scores[i] && s4.scores[i] <= s16.scores[i]) {
                return fail("S1 ≤ S4 ≤ S16 violated");
            }
            if r1.scores[i] < s1.scores[i] {
                return fail("R1 < S1");
            }
            for (v, rpt) in [(RttVariant::S1, s1), (RttVariant::R1, r1), (RttVariant::S4, s4), (RttVariant::S16, s16)] {
                if rpt.present[i] != present {
                    return fail("presence mismatch");
                }
                let want = if present { naive_rtt_score(&space, q, &key, v, &eds) } else { 0.0 };
                if rpt.scores[i] != want {
                    return fail(&format!("{} score {} vs naive {want}", v.name, rpt.scores[i]));
                }
            }
        }
        for rpt in [s1, r1, s4, s16] {
            let n = queries.queries.iter().filter(|q| space.contains(&WordKey::new(eds[0], q.surface.as_str()).unwrap())).count();
            let mean = rpt.scores.iter().sum::<f64>() / rpt.scores.len() as f64;
            if rpt.coverage != n || rpt.mean != mean || rpt.median != median(&rpt.scores) {
                return verdict(false, format!("trial {trial}: {} summary differs from reference", rpt.variant));
            }
        }
    }
    verdict(true, "1000 random spaces: S1 ≤ S4 ≤ S16, R1 ≥ S1, absent = 0 and outside N, μ/Md. exact")
}

// 7 ------------------------------------------------------------------------

fn c7_csimple_weighting(_: &mut Runs) -> Verdict {
    let k = |e: usize, s: &str| WordKey::new(edition(e), s).unwrap();
    let q = k(0, "q");
    let mut cs = ConceptSet::new();
    for members in [
        vec![q.clone(), k(1, "x")],
        vec![q.clone(), k(1, "y")],
        vec![q.clone(), k(1, "y"), k(2, "f1")],
        vec![q.clone(), k(1, "z")],
        vec![q.clone(), k(1, "z"), k(2, "f1")],
        vec![q.clone(), k(1, "z"), k(2, "f2")],
    ] {
        cs.insert(members);
    }
    let cands = shared_concept_candidates(&cs, &q, edition(1));
    let weights: Vec<f64> = cands.iter().map(|c| c.1 as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut r = rng::seeded(707);
    let mut counts = vec![0usize; cands.len()];
    const DRAWS: usize = 10_000;
    for _ in 0..DRAWS {
        counts[weighted_sample_without_replacement(&weights, 1, &mut r)[0]] += 1;
    }
    let dev = counts
        .iter()
        .zip(&weights)
        .map(|(&c, &w)| (c as f64 / DRAWS as f64 - w / total).abs())
        .fold(0.0, f64::max);
    verdict(
        weights == [1.0, 2.0, 3.0] && dev <= 0.02,
        format!("shares {weights:?}, counts {counts:?}, max deviation {dev:.4} (≤ 0.02)"),
    )
}

// 8 ------------------------------------------------------------------------

fn c8_normalization(_: &mut Runs) -> Verdict {
    let synth = generate(&SynthParams { vocab: 80, sentences: 300, ..SynthParams::default() }).unwrap();
    let pairs = coco_core::pairs::build_sid(&synth.corpus, 2);
    let trained = coco_core::sgns::train(&pairs, &TrainConfig { dim: 16, iterations: 3, ..TrainConfig::default() }).unwrap();
    let mut r = rng::seeded(808);
    let scaled = EmbeddingSpace::from_rows(
        7,
        (0..50).map(|i| {
            let scale = 10f64.powi(r.gen_range(-6..6));
            (WordKey::new(edition(i % 3), format!("v{i}")).unwrap(), (0..7).map(|_| scale * r.gen_range(-1.0..1.0)).collect())
        }),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (mut worst_norm, mut worst_cos) = (0.0f64, 0.0f64);
    for (name, space) in [("trained", &trained), ("scaled", &scaled)] {
        let path = dir.path().join(name);
        space.save(File::create(&path).unwrap()).unwrap();
        let back = EmbeddingSpace::load(BufReader::new(File::open(&path).unwrap()), name).unwrap();
        for s in [space, &back] {
            for (_, v) in s.iter() {
                worst_norm = worst_norm.max((v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs());
            }
        }
        let keys = space.keys();
        for a in keys {
            for b in keys {
                let d = (space.cosine(a, b).unwrap() - back.cosine(a, b).unwrap()).abs();
                worst_cos = worst_cos.max(d);
            }
        }
    }
    verdict(
        worst_norm <= 1e-6 && worst_cos <= 1e-6,
        format!("max |‖v‖ − 1| {worst_norm:.1e}, max cosine drift after save/load {worst_cos:.1e} (both ≤ 1e-6)"),
    )
}

// 9 ------------------------------------------------------------------------

fn c9_determinism(_: &mut Runs) -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let synth = generate(&SynthParams { vocab: 120, sentences: 400, ..SynthParams::default() }).unwrap();
    let manifest = synth.write(&dir.path().join("data")).unwrap();
    let data = dir.path().join("data");
    let mut files = Vec::new();
    for method in [Method::Coco, Method::Linear] {
        let mut outs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{method}-{run}"));
            let mut cfg = PipelineConfig::default();
            cfg.apply_str(
                &format!(
                    "manifest={}\nmethod={method}\nmin_editions=3\nbudget=60\ndim=20\niterations=5\nseed=9\n\
                     deterministic=true\nqueries={}\ntranslation={}\nlabels={}\ndefining_edition=sya0\noutput_dir={}",
                    manifest.display(),
                    data.join("queries.txt").display(),
                    data.join("translation.tsv").display(),
                    data.join("labels.tsv").display(),
                    out.display()
                ),
                "determinism",
            )
            .unwrap();
            pipeline::run(&cfg).unwrap();
            outs.push(out);
        }
        for entry in fs::read_dir(&outs[0]).unwrap() {
            let name = entry.unwrap().file_name();
            if name == "run-manifest.kv" {
                continue;
            }
            let a = fs::read(outs[0].join(&name)).unwrap();
            let b = fs::read(outs[1].join(&name)).unwrap();
            if a != b {
                return verdict(false, format!("{method}: {} differs between reruns", name.to_string_lossy()));
            }
            files.push(format!("{method}/{}", name.to_string_lossy()));
        }
    }
    verdict(true, format!("{} artifacts byte-identical across reruns", files.len()))
}

// 10 -----------------------------------------------------------------------

fn c10_sweep_sanity(runs: &mut Runs) -> Verdict {
    let mut coverage = Vec::new();
    for seed in 1..=3u64 {
        let row: Vec<usize> = (2..=5).map(|m| runs.get(Method::Cid, seed, 1, m).0.rtt[0].coverage).collect();
        coverage.push(row);
    }
    let monotone = coverage.iter().all(|row| row.windows(2).all(|w| w[1] <= w[0]));
    let mut niter = Vec::new();
    for seed in 1..=3u64 {
        niter.push((runs.s1(Method::Coco, seed, 2), runs.s1(Method::Coco, seed, 20)));
    }
    let improves = niter.iter().all(|(a, b)| b >= a);
    verdict(
        monotone && improves,
        format!(
            "C-ID N at MinLg 2..5 per seed {coverage:?}; Co+Co S1 μ (NIter 2, NIter 20) per seed {:?}",
            niter.iter().map(|(a, b)| format!("{a:.3}/{b:.3}")).collect::<Vec<_>>()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn(&mut Runs) -> Verdict); 10] = [
        ("perfect-alignment oracle", c1_perfect_alignment_oracle),
        ("synthetic Co+Co pipeline", c2_synthetic_coco),
        ("method ordering", c3_method_ordering),
        ("SGNS gradient check", c4_gradient_check),
        ("linear-map recovery", c5_linear_map_recovery),
        ("RTT metric properties", c6_rtt_properties),
        ("C-SIMPLE weighting", c7_csimple_weighting),
        ("normalization invariant", c8_normalization),
        ("determinism", c9_determinism),
        ("sweep sanity", c10_sweep_sanity),
    ];
    let filter: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    panic::set_hook(Box::new(|_| {}));
    let mut runs = Runs::default();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let v = panic::catch_unwind(AssertUnwindSafe(|| f(&mut runs)))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                verdict(false, format!("panicked: {msg}"))
            });
        if !v.pass {
            failed += 1;
        }
        println!(
            "{} [{n:>2}] {name}: {} ({:.1}s)",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

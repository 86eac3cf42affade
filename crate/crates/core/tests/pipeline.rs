use coco_core::config::{Method, PipelineConfig};
use coco_core::eval::QuerySet;
use coco_core::pipeline::{execute, report_tsv, EvalInputs, Spaces};
use coco_core::synth::{generate, SynthCorpus, SynthParams};

fn corpus() -> SynthCorpus {
    generate(&SynthParams { vocab: 120, sentences: 600, editions: 4, ..SynthParams::default() }).unwrap()
}

fn config(method: Method) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.apply_str(
        &format!("method={method}\nmin_editions=3\nbudget=40\ndim=24\niterations=10\nvariants=S1\ndefining_edition=sya0\ndeterministic=true"),
        "test",
    )
    .unwrap();
    cfg
}

fn inputs(s: &SynthCorpus) -> EvalInputs {
    EvalInputs {
        queries: Some(QuerySet::new(s.queries())),
        translation: Some(s.translation_pairs()),
        ..EvalInputs::default()
    }
}

#[test]
fn linear_mapping_improves_word_translation_over_mono() {
    let s = corpus();
    let mono = execute(&s.corpus, &config(Method::Mono), &inputs(&s)).unwrap();
    let linear = execute(&s.corpus, &config(Method::Linear), &inputs(&s)).unwrap();
    let p = |o: &coco_core::pipeline::Outputs| o.reports.translation.as_ref().unwrap().accuracy;
    assert!(p(&linear) > p(&mono) + 0.05, "linear {} vs mono {}", p(&linear), p(&mono));
    assert_eq!(linear.maps.len(), 3);
    // Both spaces hold the same keys: the map only moves vectors.
    assert_eq!(mono.reports.vocab_size, linear.reports.vocab_size);
}

#[test]
fn mono_space_merges_edition_prefixed_keys() {
    let s = corpus();
    let out = execute(&s.corpus, &config(Method::Mono), &inputs(&s)).unwrap();
    let Spaces::Single(space) = &out.spaces else { panic!("mono yields one merged space") };
    assert_eq!(space.editions(), s.edition_ids());
    let s1 = out.reports.rtt[0].mean;
    assert!(s1 < 0.25, "mono roundtrips should be near the floor, got {s1}");
}

#[test]
fn bilingual_spaces_pair_every_edition_with_the_pivot() {
    let s = corpus();
    let out = execute(&s.corpus, &config(Method::Biling), &inputs(&s)).unwrap();
    let Spaces::Bilingual(v) = &out.spaces else { panic!("biling yields bilingual spaces") };
    assert_eq!(v.len(), 3);
    for (e, space) in v {
        let eds = space.editions();
        assert!(eds.contains(e) && eds.contains(&s.edition_ids()[0]) && eds.len() == 2);
    }
    assert!(out.reports.rtt[0].mean > 0.5);
}

#[test]
fn c_simple_trains_nothing_and_is_seeded() {
    let s = corpus();
    let a = execute(&s.corpus, &config(Method::CSimple), &inputs(&s)).unwrap();
    let b = execute(&s.corpus, &config(Method::CSimple), &inputs(&s)).unwrap();
    assert!(matches!(a.spaces, Spaces::None));
    assert!(a.reports.num_concepts > 0);
    assert_eq!(report_tsv(&a.reports), report_tsv(&b.reports));
}

#[test]
fn resolved_config_records_the_budget() {
    let s = corpus();
    let mut cfg = config(Method::Cid);
    cfg.train.iterations = 2;
    let out = execute(&s.corpus, &cfg, &EvalInputs::default()).unwrap();
    assert_eq!(out.resolved.concepts.budget, 40);
    assert_eq!(out.resolved.hours, None);
    let mut again = PipelineConfig::default();
    again.apply_str(&out.resolved.to_kv(), "kv").unwrap();
    assert_eq!(again, out.resolved);
}

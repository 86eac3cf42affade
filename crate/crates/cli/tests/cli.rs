use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn coco(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_coco"));
    cmd.args(args).env_remove("COCO_OUTPUT_DIR");
    if let Some(d) = env_out {
        cmd.env("COCO_OUTPUT_DIR", d);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const SMALL: &[&str] = &[
    "--set", "min_editions=3",
    "--set", "max_ngram=2",
    "--set", "budget=30",
    "--set", "dim=16",
    "--set", "iterations=5",
    "--set", "variants=S1,S4",
];

fn synth(dir: &Path) -> String {
    let data = dir.join("data");
    let d = data.to_str().unwrap();
    ok(&coco(&["gen-synth", "-o", d, "--vocab", "60", "--sentences", "300", "--num-queries", "10"], None));
    data.join("manifest.tsv").to_str().unwrap().to_string()
}

#[test]
fn missing_manifest_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = coco(&["run", "-o", dir.path().to_str().unwrap()], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("manifest"));

    let out = coco(&["run", "--manifest", dir.path().join("nope.tsv").to_str().unwrap()], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("ingest"));
}

#[test]
fn unknown_subcommand_fails() {
    assert!(!coco(&["frobnicate"], None).status.success());
}

#[test]
fn coco_run_end_to_end_on_synthetic_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path());
    let data = dir.path().join("data");
    let out = dir.path().join("run");
    let mut args = vec![
        "run",
        "--manifest", &manifest,
        "--method", "co+co",
        "--deterministic",
        "-o", out.to_str().unwrap(),
    ];
    args.extend_from_slice(SMALL);
    let q = data.join("queries.txt");
    let t = data.join("translation.tsv");
    let l = data.join("labels.tsv");
    let qs = format!("queries={}", q.display());
    let ts = format!("translation={}", t.display());
    let ls = format!("labels={}", l.display());
    args.extend_from_slice(&["--set", &qs, "--set", &ts, "--set", &ls]);
    let stdout = ok(&coco(&args, None));
    assert!(stdout.contains("co+co"));

    for f in ["concepts.tsv", "pairs.tsv", "embeddings.txt", "report.tsv", "report.txt", "rtt-scores.tsv", "run-manifest.kv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let report = fs::read_to_string(out.join("report.tsv")).unwrap();
    assert!(report.contains("rtt.S1.mean\t"));
    assert!(report.contains("translation.p1\t"));
    assert!(report.contains("classify.task.f1\t"));

    // The run manifest alone reproduces the run.
    let again = dir.path().join("again");
    ok(&coco(
        &["run", "--config", out.join("run-manifest.kv").to_str().unwrap(), "-o", again.to_str().unwrap()],
        None,
    ));
    for f in ["concepts.tsv", "pairs.tsv", "embeddings.txt", "report.tsv"] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn staged_commands_compose() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path());
    let data = dir.path().join("data");
    let stage = dir.path().join("stage");
    let s = stage.to_str().unwrap();
    let with = |extra: &[&str]| -> Vec<String> {
        let mut v: Vec<String> = extra.iter().map(|x| x.to_string()).collect();
        v.extend(["--manifest".to_string(), manifest.clone(), "-o".into(), s.into()]);
        v.extend(SMALL.iter().map(|x| x.to_string()));
        v
    };
    let run = |extra: &[&str]| {
        let v = with(extra);
        let r: Vec<&str> = v.iter().map(String::as_str).collect();
        ok(&coco(&r, None))
    };

    assert!(run(&["induce-concepts"]).contains("concepts"));
    let concepts = stage.join("concepts.tsv");
    let c = concepts.to_str().unwrap();
    assert!(run(&["build-pairs", "--concepts", c, "--method", "c-id"]).contains("c-id"));
    run(&["train", "--pairs", stage.join("pairs.tsv").to_str().unwrap(), "--method", "c-id"]);
    let emb = stage.join("embeddings.txt");
    let e = emb.to_str().unwrap();

    let rtt = run(&["eval-rtt", "--embeddings", e, "--queries", data.join("queries.txt").to_str().unwrap()]);
    assert!(rtt.contains("S1") && rtt.contains("S4"));
    assert!(stage.join("rtt-scores.tsv").exists());
    assert!(run(&["eval-translate", "--embeddings", e, "--pairs", data.join("translation.tsv").to_str().unwrap()])
        .contains("p@1"));
    assert!(run(&["eval-classify", "--embeddings", e, "--labels", data.join("labels.tsv").to_str().unwrap()])
        .contains("f1"));
    assert!(run(&["c-simple", "--concepts", c, "--queries", data.join("queries.txt").to_str().unwrap()])
        .contains("S1"));
    assert!(run(&["stats", "--concepts", c]).contains("#editions"));

    let fit = run(&["fit-map", "--source", e, "--target", e, "--apply"]);
    assert!(fit.contains("map"));
    assert!(stage.join("mapped.txt").exists());

    let sim = dir.path().join("sim.tsv");
    let keys: Vec<String> = fs::read_to_string(&emb)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().next().unwrap().to_string())
        .filter(|k| !k.contains('\\'))
        .take(4)
        .collect();
    fs::write(
        &sim,
        format!("{}\t{}\t1\n{}\t{}\t2\n{}\t{}\t3\n", keys[0], keys[1], keys[0], keys[2], keys[1], keys[3]),
    )
    .unwrap();
    assert!(run(&["eval-sim", "--embeddings", e, "--pairs", sim.to_str().unwrap()]).contains("rho"));
}

#[test]
fn external_trainer_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.tsv");
    fs::write(&pairs, "00000001\tabc0:x\n").unwrap();
    // A stand-in trainer that writes a fixed word2vec-format file.
    let cmd = "printf '2 2\\n00000001 1 0\\nabc0:x 0 3\\n' > {output}";
    let out = dir.path().join("o");
    ok(&coco(
        &["train", "--pairs", pairs.to_str().unwrap(), "--external-trainer", cmd, "-o", out.to_str().unwrap()],
        None,
    ));
    let saved = fs::read_to_string(out.join("embeddings.txt")).unwrap();
    assert!(saved.starts_with("1 2\nabc0:x "));

    let failing = coco(&["train", "--pairs", pairs.to_str().unwrap(), "--external-trainer", "exit 3", "-o", out.to_str().unwrap()], None);
    assert!(!failing.status.success());
    assert!(String::from_utf8_lossy(&failing.stderr).contains("stage train"));
}

#[test]
fn output_dir_env_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("env");
    ok(&coco(&["gen-synth", "--vocab", "20", "--sentences", "20", "--num-queries", "5"], Some(&env_dir)));
    assert!(env_dir.join("manifest.tsv").exists());
    let flag_dir = dir.path().join("flag");
    ok(&coco(
        &["gen-synth", "--vocab", "20", "--sentences", "20", "--num-queries", "5", "-o", flag_dir.to_str().unwrap()],
        Some(&env_dir),
    ));
    assert!(flag_dir.join("manifest.tsv").exists());
    let cfg = ok(&coco(&["config"], Some(&env_dir)));
    assert!(cfg.contains(&format!("output_dir={}", env_dir.display())));
}

#[test]
fn sweep_writes_one_row_per_setting() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path());
    let q = dir.path().join("data/queries.txt");
    let out = dir.path().join("sweep");
    let qs = format!("queries={}", q.display());
    let mut args = vec!["sweep", "--manifest", &manifest, "--method", "s-id", "-o", out.to_str().unwrap(), "--set", &qs];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(&["--grid", "dim=4,8", "--grid", "iterations=1"]);
    let stdout = ok(&coco(&args, None));
    assert_eq!(stdout.lines().count(), 4);
    assert!(out.join("sweep.tsv").exists());
}

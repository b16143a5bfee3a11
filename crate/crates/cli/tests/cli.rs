use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_mathcorpus");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("MATHCORPUS_CACHE").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn extract(dir: &Path, extra: &[&str]) -> (Output, PathBuf) {
    let out = dir.join("expr.jsonl");
    let dump = fixture("dump.xml");
    let mut args = vec!["extract", "--dump", p(&dump), "--out", p(&out)];
    args.extend(extra);
    (run(&args), out)
}

#[test]
fn extract_writes_records_and_summary() {
    let dir = TempDir::new().unwrap();
    let (o, out) = extract(dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("pages=3 expressions=5 unterminated=1"), "{}", stdout(&o));
    let text = std::fs::read_to_string(out).unwrap();
    let records: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 5);
    let keys: Vec<&str> = records[0].as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys.len(), 4);
    for k in ["page_id", "page_title", "offset", "latex"] {
        assert!(keys.contains(&k));
    }
    assert_eq!(records[2]["latex"], "a < b");
}

#[test]
fn extract_is_deterministic_across_thread_counts() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let (oa, pa) = extract(a.path(), &["--deterministic"]);
    let dump = fixture("dump.xml");
    let pb = b.path().join("expr.jsonl");
    let ob = run(&["--jobs", "3", "extract", "--dump", p(&dump), "--out", p(&pb)]);
    assert!(oa.status.success() && ob.status.success());
    assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
}

#[test]
fn extract_reads_stdin() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("e.jsonl");
    let o = Command::new(BIN)
        .args(["extract", "--dump", "-", "--out", p(&out)])
        .stdin(std::fs::File::open(fixture("dump.xml")).unwrap())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(out).unwrap().lines().count(), 5);
}

#[test]
fn extract_filters_by_category() {
    let dir = TempDir::new().unwrap();
    let (links, pages) = (fixture("categorylinks.sql"), fixture("page.sql"));
    let (o, out) = extract(
        dir.path(),
        &["--sql-categorylinks", p(&links), "--sql-page", p(&pages), "--category", "Physics", "--depth", "0"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out).unwrap();
    let ids: Vec<u64> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["page_id"].as_u64().unwrap())
        .collect();
    assert_eq!(ids, vec![10, 10, 12]);
}

#[test]
fn extract_input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.xml");
    let out = dir.path().join("o.jsonl");
    let o = run(&["extract", "--dump", p(&missing), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.xml"), "{}", stderr(&o));

    let (o, _) = extract(dir.path(), &["--category", "Physics"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["extract", "--dump", p(&fixture("dump.xml"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("MATHCORPUS_CACHE"));
}

#[test]
fn jobs_zero_is_a_usage_error() {
    let o = run(&["--jobs", "0", "report", "--metrics", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cache_dir_and_config_file_supply_defaults() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("corpus.json");
    std::fs::write(&cfg, r#"{"library": "koza1", "policy": "drop"}"#).unwrap();
    let o = Command::new(BIN)
        .args(["extract", "--dump", p(&fixture("dump.xml"))])
        .env("MATHCORPUS_CACHE", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let o = Command::new(BIN)
        .args(["corpus", "--config", p(&cfg), "--policy", "replace"])
        .env("MATHCORPUS_CACHE", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let corpus = std::fs::read_to_string(dir.path().join("corpus.txt")).unwrap();
    assert!(corpus.starts_with("#mathcorpus v1 vocab=koza1\n"));
    assert!(corpus.contains("\treplaced\t"), "flag overrides the file:\n{corpus}");
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("corpus.txt.stats.json")).unwrap())
            .unwrap();
    assert_eq!(stats["n_samples"].as_u64().unwrap() as usize, corpus.lines().count() - 1);

    std::fs::write(&cfg, r#"{"nonsense": 1}"#).unwrap();
    let o = Command::new(BIN)
        .args(["corpus", "--config", p(&cfg)])
        .env("MATHCORPUS_CACHE", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corpus_rejects_unknown_library() {
    let dir = TempDir::new().unwrap();
    let (_, jsonl) = extract(dir.path(), &[]);
    let out = dir.path().join("c.txt");
    let o = run(&["corpus", "--in", p(&jsonl), "--out", p(&out), "--library", "nosuch"]);
    assert_eq!(o.status.code(), Some(2));
}

fn small_model(dir: &Path) -> PathBuf {
    let corpus = dir.join("n1.txt");
    std::fs::write(&corpus, "#mathcorpus v1 vocab=nguyen1\n1\tnone\tadd x mul x x\n2\tnone\tsin x\n")
        .unwrap();
    let model = dir.join("m.mlm1");
    let o = run(&[
        "mlm-train",
        "--corpus",
        p(&corpus),
        "--out",
        p(&model),
        "--hidden",
        "6",
        "--d-emb",
        "3",
        "--epochs",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("epoch=")).count(), 3);
    model
}

#[test]
fn mlm_train_writes_weights() {
    let dir = TempDir::new().unwrap();
    let model = small_model(dir.path());
    assert_eq!(&std::fs::read(model).unwrap()[..4], b"MLM1");
}

#[test]
fn mlm_train_rejects_empty_corpus() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("empty.txt");
    std::fs::write(&corpus, "#mathcorpus v1 vocab=nguyen1\n").unwrap();
    let o = run(&["mlm-train", "--corpus", p(&corpus), "--out", p(&dir.path().join("m.mlm1"))]);
    assert_eq!(o.status.code(), Some(2));
}

fn sr(dir: &Path, name: &str, extra: &[&str], jobs: &str) -> (Output, PathBuf) {
    let out = dir.join(name);
    let mut args = vec![
        "--jobs",
        jobs,
        "sr",
        "--benchmark",
        "nguyen-1",
        "--runs",
        "2",
        "--max-steps",
        "3",
        "--batch-size",
        "50",
        "--out",
        p(&out),
    ];
    args.extend(extra);
    (run(&args), out)
}

#[test]
fn sr_writes_metrics_deterministically() {
    let dir = TempDir::new().unwrap();
    let model = small_model(dir.path());
    let (o1, a) = sr(dir.path(), "a.csv", &["--with-mlm", p(&model), "--lambda", "0.5"], "1");
    let (o2, b) = sr(dir.path(), "b.csv", &["--with-mlm", p(&model), "--lambda", "0.5"], "2");
    assert!(o1.status.success(), "{}", stderr(&o1));
    assert!(o2.status.success());
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("benchmark,run,seed,lambda,with_mlm,recovered,steps,invalid_fraction,best_expression")
    );
    assert_eq!(lines.count(), 2);
    assert!(stdout(&o1).contains("benchmark=nguyen-1"));
}

#[test]
fn sr_lambda_sweep_writes_one_header() {
    let dir = TempDir::new().unwrap();
    let model = small_model(dir.path());
    let (o, out) =
        sr(dir.path(), "s.csv", &["--with-mlm", p(&model), "--lambda-sweep", "--max-steps", "1"], "1");
    // --max-steps given twice: clap rejects it.
    assert_eq!(o.status.code(), Some(2));
    let args = [
        "sr",
        "--benchmark",
        "nguyen-1",
        "--runs",
        "1",
        "--max-steps",
        "1",
        "--batch-size",
        "20",
        "--with-mlm",
        p(&model),
        "--lambda-sweep",
        "--out",
        p(&out),
    ];
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("benchmark,")).count(), 1);
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn sr_input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let model = small_model(dir.path());
    let (o, _) = sr(dir.path(), "x.csv", &["--no-mlm", "--runs", "0"], "1");
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "sr",
        "--benchmark",
        "nguyen-9",
        "--with-mlm",
        p(&model),
        "--out",
        p(&dir.path().join("y.csv")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nguyen-9"), "{}", stderr(&o));
    let o = run(&["sr", "--benchmark", "nguyen-99", "--no-mlm", "--out", p(&dir.path().join("z.csv"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sr_reads_json_specs() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"name": "square", "expression": "x*x+x", "variables": ["x"], "n_points": 20,
            "range": [-1.0, 1.0], "library": ["add", "mul", "x"]}"#,
    )
    .unwrap();
    let out = dir.path().join("sq.csv");
    let o = run(&[
        "sr",
        "--spec",
        p(&spec),
        "--no-mlm",
        "--runs",
        "1",
        "--max-steps",
        "200",
        "--batch-size",
        "100",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "square");
    assert_eq!(row[5], "true");
}

#[test]
fn report_prints_and_writes_tables() {
    let dir = TempDir::new().unwrap();
    let (o, csv) = sr(dir.path(), "r.csv", &["--no-mlm"], "1");
    assert!(o.status.success());
    let out = dir.path().join("report.txt");
    let o = run(&["report", "--metrics", p(&csv), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("Average:"));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), stdout(&o));
    assert!(std::fs::read_to_string(dir.path().join("report.html")).unwrap().contains("<table"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "name,runs\nx,1\n").unwrap();
    let o = run(&["report", "--metrics", p(&bad)]);
    assert_eq!(o.status.code(), Some(2));
}

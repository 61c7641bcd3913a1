//! The `cultalign` binary: exit codes, stage chaining and determinism.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cultalign"));
    c.env_remove("CULTALIGN_API_KEY");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Every file under `root`, relative path → bytes.
fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

#[test]
fn unknown_subcommand_exits_2() {
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
}

#[test]
fn invalid_config_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.toml");
    std::fs::write(&cfg, "[harvest]\nconcurrency = 0\n").unwrap();
    let o = run(&["generate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("concurrency"));

    std::fs::write(&cfg, "[harvest]\nno_such_key = 1\n").unwrap();
    assert_eq!(run(&["generate", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));

    let o = run(&["select", "--select.selector", "best"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["select", "--selector", "best"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["compose", "--corpus.questions", "/definitely/missing.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/definitely/missing.jsonl"));
}

#[test]
fn missing_api_key_names_the_variable() {
    let d = tempfile::tempdir().unwrap();
    let o = bin()
        .args([
            "generate",
            "--backend",
            "http",
            "--backend.model",
            "m",
            "--backend.api_key_env",
            "CULTALIGN_TEST_NO_KEY",
        ])
        .arg("--out")
        .arg(d.path())
        .env_remove("CULTALIGN_TEST_NO_KEY")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("CULTALIGN_TEST_NO_KEY"), "{}", stderr(&o));
}

#[test]
fn score_without_harvest_exits_1_with_path() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["score", "--out", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    let expected = d.path().join("eval").join("questions.jsonl");
    assert!(err.contains(expected.to_str().unwrap()), "{err}");
    assert!(err.contains("resume"), "{err}");
}

#[test]
fn pipeline_small_run_is_deterministic_and_complete() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["pipeline", "--per-topic", "5", "--cultures", "USA,CHN,NGA", "--mock-seed", "3", "--seed", "9"];
    for d in [&a, &b] {
        let o = bin().args(args).arg("--out").arg(d.path()).output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let ta = tree(a.path());
    let tb = tree(b.path());
    assert_eq!(ta.keys().collect::<Vec<_>>(), tb.keys().collect::<Vec<_>>());
    for (k, v) in &ta {
        assert!(v == &tb[k], "{} differs", k.display());
    }
    for f in [
        "generate/questions.jsonl",
        "generate/manifest.json",
        "harvest/records.jsonl",
        "harvest/records/unaware.jsonl",
        "harvest/records/NGA.jsonl",
        "select/crqpc.jsonl",
        "compose/joint.jsonl",
        "compose/specific/CHN.jsonl",
        "compose/distribution.csv",
        "eval/records.jsonl",
        "score/scores.csv",
        "score/model_matrix.csv",
        "score/reference_matrix.csv",
        "score/correlation.csv",
        "score/manifest.json",
    ] {
        assert!(ta.contains_key(Path::new(f)), "missing {f}");
    }
    let generated = String::from_utf8(ta[Path::new("generate/questions.jsonl")].clone()).unwrap();
    assert_eq!(generated.lines().count(), 65);
    let manifest: serde_json::Value = serde_json::from_slice(&ta[Path::new("score/manifest.json")]).unwrap();
    assert_eq!(manifest["stage"], "score");
    assert_eq!(manifest["seed"], 9);
    assert!(manifest["outputs"]["score/scores.csv"].is_string());
}

#[test]
fn stages_run_individually_match_pipeline() {
    let whole = tempfile::tempdir().unwrap();
    let steps = tempfile::tempdir().unwrap();
    let common = ["--per-topic", "3", "--cultures", "KEN,DEU", "--selector", "rds", "--variant", "specific"];
    let o = bin().arg("pipeline").args(common).arg("--out").arg(whole.path()).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    for stage in [&["generate"][..], &["harvest"], &["select"], &["compose"], &["harvest", "--eval"], &["score"]] {
        let o = bin().args(stage).args(common).arg("--out").arg(steps.path()).output().unwrap();
        assert!(o.status.success(), "{stage:?}: {}", stderr(&o));
    }
    let tw = tree(whole.path());
    assert_eq!(tw, tree(steps.path()));
    assert!(tw.contains_key(Path::new("select/rds.jsonl")));
    assert!(!tw.contains_key(Path::new("compose/joint.jsonl")));
}

#[test]
fn harvest_before_generate_fails_with_path() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["harvest", "--out", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("generate/questions.jsonl"), "{}", stderr(&o));
}

#[test]
fn config_file_and_dotted_overrides() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 4\nout_dir = \"artifacts\"\n[generate]\nper_topic = 2\n[harvest]\ncultures = [\"AUS\"]\nconcurrency = 2\n",
    )
    .unwrap();
    let o = run(&["generate", "--config", cfg.to_str().unwrap(), "--generate.per_topic=1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let q = std::fs::read_to_string(d.path().join("artifacts/generate/questions.jsonl")).unwrap();
    assert_eq!(q.lines().count(), 13);
}

#[test]
fn dump_prompt_matches_golden() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden");
    for (args, file) in [
        (&["dump-prompt", "p1", "Q46", "CHN"][..], "p1_chn_q46.txt"),
        (&["dump-prompt", "p2", "Q46", "usa"], "p2_usa_q46.txt"),
        (&["dump-prompt", "unaware", "Q46"], "unaware_q46.txt"),
    ] {
        let o = run(args);
        assert!(o.status.success(), "{}", stderr(&o));
        let expected = std::fs::read_to_string(golden.join(file)).unwrap();
        assert_eq!(String::from_utf8(o.stdout).unwrap(), expected, "{file}");
    }
    let o = run(&["dump-prompt", "p1p3", "Q46", "IND"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.matches("\nQuestion: ").count(), 5, "{text}");
    assert!(text.ends_with("#Answer:\n"), "{text}");
    assert_eq!(run(&["dump-prompt", "p1", "Q46"]).status.code(), Some(1));
    let o = run(&["dump-prompt", "generate", "2"]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().contains("Happiness and Well-being"));
}

#[test]
fn plan_reports_full_scale_counts() {
    let o = run(&["plan", "--per-topic", "1000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("generation slots: 13000"), "{out}");
    assert!(out.contains("harvest output sets: 19"), "{out}");
}

/// Answers every chat request with "2" until the test process exits.
fn always_two() -> String {
    use std::io::{BufRead, BufReader, Read, Write};
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut buf = vec![0; len];
            let _ = reader.read_exact(&mut buf);
            let body = r#"{"choices":[{"message":{"content":"2"},"finish_reason":"stop"}]}"#;
            let mut stream = stream;
            let _ = write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    url
}

#[test]
fn http_backend_end_to_end_keeps_key_out_of_artifacts() {
    let d = tempfile::tempdir().unwrap();
    let url = always_two();
    let o = bin()
        .args(["harvest", "--eval", "--backend", "http", "--cultures", "USA"])
        .args(["--backend.endpoint", &url, "--backend.model", "fake-model", "--harvest.concurrency", "3"])
        .arg("--out")
        .arg(d.path())
        .env("CULTALIGN_API_KEY", "sk-very-secret-value")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let t = tree(d.path());
    let records = String::from_utf8(t[Path::new("eval/records.jsonl")].clone()).unwrap();
    assert_eq!(records.lines().count(), 2 * 79);
    assert!(records.lines().all(|l| l.contains("\"parsed_code\":2")));
    for (p, bytes) in &t {
        assert!(!String::from_utf8_lossy(bytes).contains("sk-very-secret"), "key leaked into {}", p.display());
    }
    let manifest = String::from_utf8(t[Path::new("eval/manifest.json")].clone()).unwrap();
    assert!(manifest.contains("http:fake-model"));
    let o = run(&["score", "--out", d.path().to_str().unwrap(), "--cultures", "USA"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout).unwrap().contains("single culture"));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use authid::features::CSV_HEADER;
use authid::synth::{synthetic_corpus, write_corpus, SyntheticSpec};
use authid::{load_model, Source};

fn authid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_authid")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn corpus(dir: &Path, authors: usize, docs: usize) -> String {
    let spec = SyntheticSpec {
        authors,
        docs_per_author: docs,
        words_per_doc: 150,
        ..SyntheticSpec::default()
    };
    write_corpus(&synthetic_corpus(&spec).unwrap(), dir).unwrap();
    dir.to_str().unwrap().to_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_then_predict_training_document() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = corpus(&tmp.path().join("c"), 2, 6);
    let model = tmp.path().join("model.json");
    let out = authid(&["train", &dir, s(&model), "--k", "50"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 3);
    let loaded = load_model(&model).unwrap();
    assert_eq!(loaded.authors, ["author_00", "author_01"]);

    let doc = tmp.path().join("c/author_01/doc_002.txt");
    let out = authid(&["predict", s(&model), s(&doc)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "author_01\n");

    for source in Source::ALL {
        let out = authid(&[
            "predict",
            s(&model),
            s(&doc),
            "--classifier",
            source.as_str(),
            "--verbose",
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        let text = stdout(&out);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3, "{text}");
        assert!(lines[1].starts_with(lines[0]));
    }
}

#[test]
fn single_author_corpus_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = corpus(&tmp.path().join("c"), 1, 4);
    let out = authid(&["train", &dir, s(&tmp.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("NeedsTwoClasses"), "{}", stderr(&out));
    assert!(!tmp.path().join("m.json").exists());
}

#[test]
fn missing_model_and_empty_text() {
    let tmp = tempfile::tempdir().unwrap();
    let text = tmp.path().join("t.txt");
    fs::write(&text, "some words here").unwrap();
    let out = authid(&["predict", s(&tmp.path().join("nope.json")), s(&text)]);
    assert_ne!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("NotFound"), "{}", stderr(&out));

    let dir = corpus(&tmp.path().join("c"), 2, 4);
    let model = tmp.path().join("m.json");
    assert!(authid(&["train", &dir, s(&model)]).status.success());
    fs::write(&text, "  ...  ").unwrap();
    let out = authid(&["predict", s(&model), s(&text)]);
    assert_ne!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("EmptyFingerprint"), "{}", stderr(&out));
}

#[test]
fn invalid_flags_rejected_before_work() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = corpus(&tmp.path().join("c"), 2, 4);
    let out = authid(&["train", &dir, s(&tmp.path().join("m.json")), "--k", "0"]);
    assert!(stderr(&out).contains("InvalidConfig"), "{}", stderr(&out));
    let out = authid(&["evaluate", &dir, "--train-fraction", "1.5"]);
    assert!(stderr(&out).contains("InvalidConfig"), "{}", stderr(&out));
    let out = authid(&["predict", "m", "t", "--classifier", "bayes"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn export_four_documents() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = corpus(&tmp.path().join("c"), 2, 2);
    let csv = tmp.path().join("out/features.csv");
    let out = authid(&["export-features", &dir, s(&csv)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], CSV_HEADER);
    assert!(lines[1].starts_with("author_00/doc_000.txt,author_00,"));
    for l in &lines[1..] {
        assert_eq!(l.split(',').count(), 18);
    }
    assert!(text.ends_with('\n') && !text.contains('\r'));
}

#[test]
fn evaluate_and_cross_validate_write_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = corpus(&tmp.path().join("c"), 3, 6);
    let out_dir = tmp.path().join("eval");
    let out = authid(&["evaluate", &dir, "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = fs::read_to_string(out_dir.join("report.txt")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(
        rows[0].split_whitespace().collect::<Vec<_>>(),
        ["classifier", "accuracy_pct"]
    );
    assert_eq!(stdout(&out), table);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["eval"]["n_test"], 6);

    let cv_dir = tmp.path().join("cv");
    let out = authid(&["cross-validate", &dir, "--folds", "3", "--out", s(&cv_dir)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(cv_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["pooled"]["n_test"], 18);

    let out = authid(&["cross-validate", &dir, "--folds", "7"]);
    assert!(stderr(&out).contains("InsufficientDocuments"), "{}", stderr(&out));
}

#[test]
fn thread_count_does_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = corpus(&tmp.path().join("c"), 3, 5);
    let csv = |n: &str| {
        let p = tmp.path().join(format!("f{n}.csv"));
        assert!(authid(&["export-features", &dir, s(&p), "--threads", n])
            .status
            .success());
        fs::read(p).unwrap()
    };
    assert_eq!(csv("1"), csv("4"));
    let model = |n: &str| {
        let p = tmp.path().join(format!("m{n}.json"));
        assert!(authid(&["train", &dir, s(&p), "--threads", n]).status.success());
        fs::read(p).unwrap()
    };
    assert_eq!(model("1"), model("3"));
}

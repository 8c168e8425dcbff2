use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ontoalign(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ontoalign"))
        .current_dir(dir)
        .env_remove("ONTOALIGN_CORPUS")
        .env_remove("RUST_LOG")
        .args(args)
        .output()
        .expect("spawn ontoalign")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A work directory with the synthetic corpus at `./corpus`.
fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let o = ontoalign(dir.path(), &["fetch", "--synthetic"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("corpus/ontologies/cmt.owl").is_file());
    assert!(dir.path().join("corpus/reference/cmt-ekaw.rdf").is_file());
    dir
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", stderr(o));
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

#[test]
fn strategies_lists_seven() {
    let dir = tempfile::tempdir().unwrap();
    let o = ontoalign(dir.path(), &["strategies"]);
    assert!(o.status.success());
    let ids: Vec<String> = stdout(&o).lines().map(|l| l.split('\t').next().unwrap().to_string()).collect();
    assert_eq!(ids, ["P1", "P2", "P3", "P4", "P5", "P6", "P7"]);
}

#[test]
fn ingest_and_verbalize() {
    let dir = workspace();
    let summary = json(&ontoalign(dir.path(), &["ingest", "--ontology", "cmt"]));
    assert_eq!(summary["name"], "cmt");
    assert!(summary["classes"].as_u64().unwrap() > 10);

    let o = ontoalign(dir.path(), &["verbalize", "--ontology", "cmt", "--order", "root-first"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert!(!lines.is_empty());
    assert!(lines.iter().all(|l| l.contains(" (") && l.ends_with(')')));
}

#[test]
fn plan_text_and_json_agree() {
    let dir = workspace();
    let text = ontoalign(dir.path(), &["plan", "--strategy", "P4", "--pair", "cmt-ekaw"]);
    assert!(text.status.success(), "{}", stderr(&text));
    let plan = json(&ontoalign(
        dir.path(),
        &["plan", "--strategy", "P4", "--pair", "cmt-ekaw", "--format", "json"],
    ));
    let messages = plan["messages"].as_array().unwrap();
    assert!(messages.len() >= 2);
    for m in messages {
        assert!(stdout(&text).contains(m["text"].as_str().unwrap()));
    }
}

#[test]
fn unsplittable_plan_over_budget_exits_one() {
    let dir = workspace();
    let o = ontoalign(dir.path(), &["plan", "--strategy", "P1", "--pair", "cmt-ekaw", "--budget", "300"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("token"), "{}", stderr(&o));
}

#[test]
fn report_covers_every_pair() {
    let dir = workspace();
    let o = ontoalign(dir.path(), &["report", "--strategies", "P1,P7", "--workers", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let md = stdout(&o);
    let rows: Vec<&str> = md.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| Dataset")).collect();
    assert_eq!(rows.len(), 22, "{md}");
    assert!(rows.last().unwrap().starts_with("| Average"));
    assert!(md.starts_with("| Dataset | P1 P | P1 R | P1 F1 | P7 P | P7 R | P7 F1 |"));

    let csv = std::fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("pair,strategy,precision,recall,f1,tp,fp,fn"));
    assert_eq!(csv.lines().count(), 1 + 21 * 2);
    assert!(dir.path().join("out/summary.json").is_file());
    assert!(dir.path().join("out/cells/cmt-ekaw/P7/transcript.json").is_file());
}

#[test]
fn small_budget_dashes_whole_prompt_layouts() {
    let dir = workspace();
    let o = ontoalign(
        dir.path(),
        &["report", "--budget", "300", "--pairs", "cmt-ekaw,conference-edas", "--strategies", "P1,P4"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let md = stdout(&o);
    let row = md.lines().find(|l| l.starts_with("| cmt-ekaw")).unwrap();
    let cells: Vec<&str> = row.trim_matches('|').split('|').map(str::trim).collect();
    assert_eq!(&cells[1..4], ["-", "-", "-"]);
    assert!(cells[4..7].iter().all(|c| c.parse::<f64>().is_ok()), "{row}");
    let csv = std::fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    assert!(csv.contains("cmt-ekaw,P1,-,-,-,-,-,-"), "{csv}");
}

#[test]
fn missing_corpus_is_a_setup_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ontoalign(dir.path(), &["report", "--corpus", "nowhere", "--out", "out"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
    assert!(stderr(&o).contains("error"));
}

#[test]
fn bad_flag_values_are_rejected() {
    let dir = workspace();
    let o = ontoalign(dir.path(), &["plan", "--strategy", "P9", "--pair", "cmt-ekaw"]);
    assert!(!o.status.success());
    let o = ontoalign(dir.path(), &["plan", "--strategy", "P1", "--pair", "cmt-nothing"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ontoalign(dir.path(), &["report", "--budget", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn match_then_eval_and_diagnose() {
    let dir = workspace();
    let result = json(&ontoalign(
        dir.path(),
        &["match", "--strategy", "P7", "--pair", "cmt-ekaw", "--dump-extraction", "extraction.json"],
    ));
    assert_eq!(result["pair"], "cmt-ekaw");
    assert_eq!(result["cached"], false);
    let extraction: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("extraction.json")).unwrap()).unwrap();
    assert!(extraction.is_object());

    let again = json(&ontoalign(dir.path(), &["match", "--strategy", "P7", "--pair", "cmt-ekaw"]));
    assert_eq!(again["cached"], true);
    assert_eq!(again["result"], result["result"]);

    let alignment = "out/cells/cmt-ekaw/P7/alignment.rdf";
    assert!(dir.path().join(alignment).is_file());
    let scored = json(&ontoalign(dir.path(), &["eval", "--pair", "cmt-ekaw", "--predicted", alignment]));
    assert_eq!(scored["f1"], result["result"]["f1"]);

    let report = json(&ontoalign(dir.path(), &["diagnose", "--pair", "cmt-ekaw", "--predicted", alignment]));
    assert!(report.is_object());

    let perfect = json(&ontoalign(
        dir.path(),
        &["eval", "--pair", "cmt-ekaw", "--predicted", "corpus/reference/cmt-ekaw.rdf"],
    ));
    assert_eq!(perfect["f1"], 1.0);
}

#[test]
fn config_file_and_flags_combine() {
    let dir = workspace();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"corpus": "corpus", "out": "cfg-out", "budget": 300, "pairs": ["cmt-ekaw"], "strategies": ["P2"]}"#,
    )
    .unwrap();
    let o = ontoalign(dir.path(), &["--config", "run.json", "report", "--budget", "8192"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("cfg-out/report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(!csv.contains(",-,"), "flag budget should override the file: {csv}");
}

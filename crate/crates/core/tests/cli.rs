mod common;

use common::{fixtures, toy_workspace, uie};

fn stdout(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn schema_validate_accepts_toy_schema() {
    let dir = toy_workspace();
    let out = uie(&["schema", "validate", "schema.json"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("valid (3 entity, 2 relation, 3 event types)"));
}

#[test]
fn bad_schema_fails_with_json_error() {
    let dir = toy_workspace();
    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"dataset": "x", "entities": [{"name": 3}]}"#,
    )
    .unwrap();
    let out = uie(&["--json", "schema", "validate", "bad.json"], dir.path());
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_str(stderr(&out).trim()).expect("error is JSON");
    assert_eq!(err["error"], "schema");
    assert!(!err["message"].as_str().unwrap().is_empty());

    let plain = uie(&["schema", "validate", "bad.json"], dir.path());
    assert!(!plain.status.success());
    assert!(stderr(&plain).starts_with("error: "));
}

#[test]
fn score_identical_files_is_perfect() {
    let dir = toy_workspace();
    let out = uie(
        &[
            "--json",
            "score",
            "--pred",
            "test.jsonl",
            "--gold",
            "test.jsonl",
            "--task",
            "ner",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["f1"], 1.0);
    assert!(report["gold"].as_u64().unwrap() > 0);

    let table = uie(
        &[
            "score",
            "--pred",
            "test.jsonl",
            "--gold",
            "test.jsonl",
            "--task",
            "eae",
            "--head",
            "--schema",
            "schema.json",
        ],
        dir.path(),
    );
    assert!(table.status.success(), "{}", stderr(&table));
    assert!(stdout(&table).lines().last().unwrap().starts_with("micro"));
}

#[test]
fn score_against_empty_predictions_is_zero() {
    let dir = toy_workspace();
    std::fs::write(dir.path().join("empty.jsonl"), "{\"id\": \"te00\"}\n").unwrap();
    let out = uie(
        &[
            "--json",
            "score",
            "--pred",
            "empty.jsonl",
            "--gold",
            "test.jsonl",
            "--task",
            "re",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["f1"], 0.0);
    assert_eq!(report["predicted"], 0);
}

#[test]
fn two_stage_event_detection_is_a_config_error() {
    let dir = toy_workspace();
    let out = uie(
        &[
            "--json",
            "run",
            "--config",
            "configs/ed_one_stage.json",
            "--mode",
            "two_stage",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(err["error"], "config");
    assert!(
        !dir.path().join("runs").exists(),
        "no run directory on a config error"
    );
}

#[test]
fn run_writes_manifest_and_reports_metrics() {
    let dir = toy_workspace();
    let out = uie(
        &["run", "--config", "configs/ner_one_stage.json", "--k", "2"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let run_dir = text
        .lines()
        .find_map(|l| l.strip_prefix("run directory: "))
        .expect("run directory line");
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join(run_dir).join("manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["metrics"]["f1"], 1.0);
    assert_eq!(manifest["config"]["k"], 2);
    assert_eq!(manifest["records"].as_array().unwrap().len(), 20);
    assert!(stderr(&out).contains("20 examples"));
}

#[test]
fn index_build_persists_index() {
    let dir = toy_workspace();
    let out = uie(
        &["index", "build", "--config", "configs/ner_anony.json"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let line = stdout(&out);
    assert!(
        line.contains("20 entries, dimension 256, anonymized true"),
        "{line}"
    );
    let path = line.split(':').next().unwrap();
    assert!(dir.path().join(path).exists(), "{path}");
}

#[test]
fn prompt_render_single_stage() {
    let dir = toy_workspace();
    let out = uie(
        &[
            "prompt",
            "render",
            "--config",
            "configs/ner_two_stage.json",
            "--example",
            "te00",
            "--stage",
            "1",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("### two_stage_s1\n"));
    assert!(!text.contains("### two_stage_s2"));

    let missing = uie(
        &[
            "prompt",
            "render",
            "--config",
            "configs/ner_one_stage.json",
            "--example",
            "nope",
        ],
        dir.path(),
    );
    assert!(!missing.status.success());
}

#[test]
fn fixtures_are_present() {
    assert!(fixtures().join("golden").is_dir());
}

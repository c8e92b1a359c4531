use std::path::{Path, PathBuf};

use skillplan_cli::main_with;

fn demos_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/demos")
}

fn run(args: &[&str]) -> i32 {
    main_with(std::iter::once("skillplan").chain(args.iter().copied()))
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn run_exit_codes() {
    assert_eq!(run(&["run", "-q", "--scene", "grasp_mug", "--task", "grasp the mug by the handle", "--baseline"]), 0);
    assert_eq!(run(&["run", "--scene", "/no/such/scene.json", "--task", "pick up the mug"]), 2);
    assert_eq!(run(&["run", "-q", "--scene", "grasp_mug", "--task", "juggle the mug"]), 1);
    assert_eq!(run(&["run", "--scene", "grasp_mug", "--task", "   "]), 2);
    assert_eq!(run(&["run", "--scene", "grasp_mug", "--task", "x", "--feedback", "sometimes"]), 2);
    assert_eq!(run(&["run", "--scene", "grasp_mug", "--task", "x", "--thresholds", "/no/such.json"]), 2);
}

#[test]
fn identical_runs_write_identical_logs() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.jsonl", "b.jsonl"] {
        let code = run(&[
            "run", "-q", "--scene", "grasp_mug", "--task", "grasp the mug by the handle", "--feedback", "interactive",
            "--expert", "--seed", "3", "--log", &path(dir.path(), name),
        ]);
        assert_eq!(code, 0);
    }
    let a = std::fs::read_to_string(dir.path().join("a.jsonl")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b.jsonl")).unwrap();
    assert!(a.lines().count() > 10);
    assert_eq!(a, b);
}

#[test]
fn scene_file_round_trip_through_run() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene.json");
    let w = skillplan::fixtures::scene("grasp_mug", 0).unwrap();
    std::fs::write(&scene, skillplan::world::snapshot::snapshot_json(&w)).unwrap();
    assert_eq!(run(&["run", "-q", "--scene", scene.to_str().unwrap(), "--task", "pick up the mug"]), 0);
    std::fs::write(&scene, "{\"schema\": \"scene.v1\"").unwrap();
    assert_eq!(run(&["run", "-q", "--scene", scene.to_str().unwrap(), "--task", "pick up the mug"]), 2);
}

#[test]
fn learned_skill_is_reused_from_a_shared_library() {
    let dir = tempfile::tempdir().unwrap();
    let lib = path(dir.path(), "skills.json");
    let demos = demos_dir();
    let demos = demos.to_str().unwrap();
    let teach = [
        "run", "-q", "--scene", "grasp_mug", "--task", "grasp the mug by the handle", "--feedback", "interactive",
        "--expert", "--demos", demos, "--skills", &lib,
    ];
    assert_eq!(run(&teach), 0);
    let text = std::fs::read_to_string(&lib).unwrap();
    assert!(text.contains("pick_mug_by_handle"));
    // teaching again would be a duplicate; the library on disk is unchanged
    let before = skillplan::skills::SkillLibrary::from_json(&text).unwrap();
    let log = path(dir.path(), "sink.jsonl");
    let reuse = [
        "run", "-q", "--scene", "sink", "--task", "empty the sink", "--feedback", "interactive", "--expert",
        "--demos", demos, "--skills", &lib, "--log", &log,
    ];
    assert_eq!(run(&reuse), 0);
    let after = skillplan::skills::SkillLibrary::from_json(&std::fs::read_to_string(&lib).unwrap()).unwrap();
    assert!(after.contains("tilt_mug"));
    assert_eq!(after.get("pick_mug_by_handle").unwrap().template, before.get("pick_mug_by_handle").unwrap().template);
    let events = std::fs::read_to_string(&log).unwrap();
    assert!(!events.contains("\"skill\":\"pick_mug_by_handle\""));
}

#[test]
fn eval_writes_markdown_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report");
    assert_eq!(run(&["eval", "--suite", "learn_tasks", "--trials", "1", "--out", out.to_str().unwrap()]), 0);
    let md = std::fs::read_to_string(out.with_extension("md")).unwrap();
    assert!(md.contains("| Task | Success | Reported |"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    let tasks = json[0]["tasks"].as_array().unwrap();
    assert_eq!(tasks.len(), 6);
    for t in tasks {
        let id = t["id"].as_str().unwrap();
        let expected = if id.ends_with("_baseline") { 0.0 } else { 1.0 };
        assert_eq!(t["rate"].as_f64().unwrap(), expected, "{id}");
    }
}

#[test]
fn eval_rejects_bad_suites() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"schema": "suite.v1", "name": "e", "kind": "sim", "tasks": []}"#).unwrap();
    let out = path(dir.path(), "r");
    assert_eq!(run(&["eval", "--suite", empty.to_str().unwrap(), "--out", &out]), 2);
    assert_eq!(run(&["eval", "--suite", "no_such_suite", "--out", &out]), 2);
    assert_eq!(run(&["eval", "--suite", "sim_basic", "--trials", "0", "--out", &out]), 2);
    // planner-only suites need a chat endpoint unless the scripted planner is asked for
    if std::env::var_os("PLANNER_ENDPOINT").is_none() {
        assert_eq!(run(&["eval", "--suite", "dont_learn", "--trials", "1", "--out", &out]), 2);
    }
    assert_eq!(run(&["eval", "--suite", "dont_learn", "--trials", "1", "--planner", "scripted", "--out", &out]), 0);
}

#[test]
fn skills_export_import_teach() {
    let dir = tempfile::tempdir().unwrap();
    let bundled = path(dir.path(), "bundled.json");
    let lib = path(dir.path(), "lib.json");
    assert_eq!(run(&["skills", "export", "--bundled", "--out", &bundled]), 0);
    assert_eq!(run(&["skills", "import", &bundled, "--skills", &lib]), 0);
    let a = skillplan::skills::SkillLibrary::from_json(&std::fs::read_to_string(&bundled).unwrap()).unwrap();
    let b = skillplan::skills::SkillLibrary::from_json(&std::fs::read_to_string(&lib).unwrap()).unwrap();
    assert_eq!(a.names(), b.names());
    // same records again are skipped, not duplicates
    assert_eq!(run(&["skills", "import", &bundled, "--skills", &lib]), 0);

    let fresh = path(dir.path(), "fresh.json");
    let demo = demos_dir().join("tilt_mug.json");
    assert_eq!(run(&["skills", "teach", demo.to_str().unwrap(), "--skills", &fresh]), 0);
    assert_eq!(run(&["skills", "teach", demo.to_str().unwrap(), "--skills", &fresh]), 2);
    let exported = path(dir.path(), "exported.json");
    assert_eq!(run(&["skills", "export", "--skills", &fresh, "--out", &exported]), 0);
    assert!(std::fs::read_to_string(&exported).unwrap().contains("tilt_mug"));
    // a differing skill of the same name conflicts
    assert_eq!(run(&["skills", "import", &bundled, "--skills", &fresh]), 2);
    assert_eq!(run(&["skills", "export", "--skills", "/no/such/lib.json"]), 2);
}

//! Checked-in scene, description and demonstration files match what the
//! generators produce. Set `SKILLPLAN_BLESS=1` to rewrite them.

use std::path::{Path, PathBuf};

use skillplan::fixtures::{expert_demos, scene, EXPERT_DEMOS, SCENE_NAMES, TAUGHT_SKILLS};
use skillplan::learning::{fit_template, DemoFile};
use skillplan::skills::Robot;
use skillplan::world::snapshot::{load_json, snapshot_json};

fn dir(sub: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(sub)
}

fn check(path: &Path, expected: &str) {
    if std::env::var_os("SKILLPLAN_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, expected).unwrap();
        return;
    }
    let found = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let a: serde_json::Value = serde_json::from_str(&found).unwrap();
    let b: serde_json::Value = serde_json::from_str(expected).unwrap();
    assert_eq!(a, b, "{} is stale", path.display());
}

#[test]
fn scene_files_are_current() {
    for name in SCENE_NAMES {
        let json = snapshot_json(&scene(name, 0).unwrap());
        check(&dir("scenes").join(format!("{name}.json")), &json);
    }
}

#[test]
fn scene_files_load_to_the_same_objects() {
    for name in SCENE_NAMES {
        let text = std::fs::read_to_string(dir("scenes").join(format!("{name}.json"))).unwrap();
        let w = load_json(&text).unwrap();
        let fresh = scene(name, 0).unwrap();
        assert_eq!(w.len(), fresh.len(), "{name}");
        for (a, b) in w.objects().zip(fresh.objects()) {
            assert_eq!(a.label, b.label);
            assert!((a.pose.position - b.pose.position).norm() < 1e-9, "{name} {}", a.label);
        }
    }
}

fn description(name: &str) -> String {
    let mut robot = Robot::new(scene(name, 0).unwrap());
    let (_, grounded) = robot.describe(true).unwrap();
    let (_, plain) = robot.describe(false).unwrap();
    format!("{}\n\n{}\n", grounded.text, plain.text)
}

#[test]
fn description_files_are_current() {
    for name in SCENE_NAMES {
        let path = dir("descriptions").join(format!("{name}.txt"));
        let text = description(name);
        if std::env::var_os("SKILLPLAN_BLESS").is_some() {
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, &text).unwrap();
            continue;
        }
        assert_eq!(std::fs::read_to_string(&path).unwrap(), text, "{} is stale", path.display());
    }
}

#[test]
fn demo_files_are_current() {
    for skill in TAUGHT_SKILLS {
        let file = DemoFile::new(skill, &expert_demos(skill, EXPERT_DEMOS, 0, 0.0));
        check(&dir("demos").join(format!("{skill}.json")), &file.to_json());
    }
}

#[test]
fn demo_files_fit_a_template() {
    for skill in TAUGHT_SKILLS {
        let text = std::fs::read_to_string(dir("demos").join(format!("{skill}.json"))).unwrap();
        let file = DemoFile::from_json(&text).unwrap();
        assert_eq!(file.skill, skill);
        assert_eq!(file.demos.len(), EXPERT_DEMOS);
        let demos = file.demonstrations();
        assert!(fit_template(&demos).is_ok(), "{skill}");
    }
}

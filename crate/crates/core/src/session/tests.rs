use proptest::prelude::*;

use super::*;
use crate::fixtures::{expert_demos, scene, taught_skill, ExpertOperator, Watch};
use crate::planner::ScriptedPlanner;
use crate::skills::GraspRegion;

fn session(scene_name: &str, seed: u64, config: SessionConfig) -> Session {
    let world = scene(scene_name, seed).expect("bundled scene");
    Session::new(Robot::new(world), SkillLibrary::new(), Box::new(ScriptedPlanner::default()), config)
}

fn kinds(s: &Session) -> Vec<EventKind> {
    s.events().iter().map(|e| e.kind).collect()
}

fn step_events(s: &Session) -> Vec<serde_json::Value> {
    s.events().iter().filter(|e| e.kind == EventKind::Step).map(|e| e.payload.clone()).collect()
}

#[test]
fn feedback_mode_parses() {
    assert_eq!("auto".parse::<FeedbackMode>(), Ok(FeedbackMode::Auto));
    assert_eq!("interactive".parse::<FeedbackMode>(), Ok(FeedbackMode::Interactive));
    assert!("loud".parse::<FeedbackMode>().is_err());
}

#[test]
fn event_kinds_serialize_kebab_case() {
    let names: Vec<String> =
        EventKind::ALL.iter().map(|k| serde_json::to_value(k).unwrap().as_str().unwrap().to_string()).collect();
    assert_eq!(
        names,
        [
            "task",
            "scene-description",
            "nl-plan",
            "code-plan",
            "step",
            "execution-feedback",
            "human-feedback",
            "skill-requested",
            "demo-recorded",
            "skill-finalized",
            "replanned",
            "task-done",
            "task-failed"
        ]
    );
}

#[test]
fn simple_task_runs_to_done() {
    let mut s = session("grasp_mug", 0, SessionConfig::default());
    let state = s.run_task("pick up the mug", FeedbackMode::None, &mut Silent).unwrap();
    assert_eq!(state, SessionState::Done);
    assert_eq!(
        kinds(&s),
        [
            EventKind::Task,
            EventKind::SceneDescription,
            EventKind::NlPlan,
            EventKind::CodePlan,
            EventKind::Step,
            EventKind::Step,
            EventKind::Step,
            EventKind::Step,
            EventKind::TaskDone
        ]
    );
    assert!(s.world().held().is_some());
    let ts: Vec<u64> = s.events().iter().map(|e| e.ts).collect();
    assert_eq!(ts, (0..ts.len() as u64).collect::<Vec<_>>());
}

#[test]
fn start_task_rejects_empty_and_busy() {
    let mut s = session("grasp_mug", 0, SessionConfig::default());
    assert_eq!(s.start_task("  ", FeedbackMode::None), Err(SessionError::EmptyTask));
    s.start_task("pick up the mug", FeedbackMode::None).unwrap();
    assert_eq!(*s.state(), SessionState::Planning);
    assert!(matches!(s.start_task("pick up the mug", FeedbackMode::None), Err(SessionError::BadState(_))));
}

#[test]
fn feedback_in_idle_is_bad_state() {
    let mut s = session("grasp_mug", 0, SessionConfig::default());
    let e = s.submit_feedback("the mug was picked up by the rim").unwrap_err();
    assert_eq!(e.code(), "BadState");
    assert!(s.events().is_empty());
}

#[test]
fn interactive_pauses_after_each_step() {
    let mut s = session("grasp_mug", 0, SessionConfig::default());
    s.start_task("pick up the mug", FeedbackMode::Interactive).unwrap();
    let mut pauses = 0;
    loop {
        match s.advance_until_blocked().clone() {
            SessionState::AwaitingFeedback { plan_finished, step_failed } => {
                assert!(!step_failed);
                pauses += 1;
                s.submit_feedback("").unwrap();
                if plan_finished {
                    break;
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }
    assert_eq!(pauses, 4);
    assert_eq!(*s.state(), SessionState::Done);
    assert!(!kinds(&s).contains(&EventKind::HumanFeedback));
}

#[test]
fn unknown_task_is_planner_failure() {
    let mut s = session("grasp_mug", 0, SessionConfig::default());
    let state = s.run_task("juggle the tray", FeedbackMode::Auto, &mut Silent).unwrap();
    match state {
        SessionState::Failed { code, .. } => assert_eq!(code, "PlannerFailure"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn baseline_hides_learn_skill() {
    let s = session("grasp_mug", 0, SessionConfig { baseline: true, ..Default::default() });
    assert!(!s.api_doc().contains("learn_skill("));
    let s = session("grasp_mug", 0, SessionConfig::default());
    assert!(s.api_doc().contains("learn_skill("));
}

#[test]
fn rim_feedback_leads_to_teaching() {
    let mut s = session("grasp_mug", 3, SessionConfig::default());
    s.start_task("grasp the mug by the handle", FeedbackMode::Interactive).unwrap();
    loop {
        match s.advance_until_blocked().clone() {
            SessionState::AwaitingFeedback { plan_finished: true, .. } => break,
            SessionState::AwaitingFeedback { .. } => s.submit_feedback("").unwrap(),
            other => panic!("unexpected {other:?}"),
        }
    }
    assert_eq!(s.robot().last_grasp().map(|g| g.region), Some(GraspRegion::Rim));
    s.submit_feedback("the mug was picked up by the rim").unwrap();
    assert_eq!(*s.state(), SessionState::Planning);
    loop {
        match s.advance_until_blocked().clone() {
            SessionState::AwaitingFeedback { .. } => s.submit_feedback("").unwrap(),
            SessionState::Teaching { skill, demos } => {
                assert_eq!(skill, "pick_mug_by_handle");
                assert_eq!(demos, 0);
                break;
            }
            other => panic!("unexpected {other:?}"),
        }
    }
    assert_eq!(s.pending_skill(), Some("pick_mug_by_handle"));
    assert!(matches!(s.submit_feedback("hello"), Err(SessionError::BadState(_))));
    for d in expert_demos("pick_mug_by_handle", 5, 9, 0.0) {
        s.submit_demo(d).unwrap();
    }
    assert_eq!(*s.state(), SessionState::Teaching { skill: "pick_mug_by_handle".into(), demos: 5 });
    s.finalize_skill().unwrap();
    assert_eq!(*s.state(), SessionState::Executing);
    assert!(s.library().contains("pick_mug_by_handle"));
    assert_eq!(s.library().version(), 1);
    assert!(s.api_doc().contains("pick_mug_by_handle(object_id_1)"));
}

#[test]
fn headless_teaching_without_demos_fails_the_call() {
    let mut s = session("grasp_mug", 0, SessionConfig::default());
    // reports the rim grasp but has no demonstrations
    struct NoDemos(ExpertOperator);
    impl Operator for NoDemos {
        fn feedback(&mut self, s: &Session) -> Option<String> {
            self.0.feedback(s)
        }
    }
    let state = s.run_task("grasp the mug by the handle", FeedbackMode::Interactive, &mut NoDemos(ExpertOperator::new(0, &[Watch::RimGrasp]))).unwrap();
    let failed: Vec<&SessionEvent> = s.events().iter().filter(|e| e.kind == EventKind::Step).collect();
    assert!(failed.iter().any(|e| e.payload["result"]["error"]["code"] == "DemoSourceUnavailable"));
    assert!(!s.library().contains("pick_mug_by_handle"));
    assert!(matches!(state, SessionState::Failed { .. } | SessionState::Done));
}

#[test]
fn demo_dir_supplies_demonstrations() {
    let dir = tempfile::tempdir().unwrap();
    let file = DemoFile::new("pick_mug_by_handle", &expert_demos("pick_mug_by_handle", 5, 2, 0.0));
    std::fs::write(dir.path().join("pick_mug_by_handle.json"), file.to_json()).unwrap();
    let config = SessionConfig { demo_dir: Some(dir.path().to_path_buf()), ..Default::default() };
    let mut s = session("grasp_mug", 0, config);
    let state = s.run_task("grasp the mug by the handle", FeedbackMode::Interactive, &mut ExpertOperator::new(0, &[Watch::RimGrasp])).unwrap();
    assert_eq!(state, SessionState::Done);
    let demos = s.events().iter().filter(|e| e.kind == EventKind::DemoRecorded).count();
    assert_eq!(demos, 5);
    assert_eq!(s.robot().last_grasp().map(|g| g.region), Some(GraspRegion::Handle));
}

#[test]
fn relearning_an_existing_skill_is_duplicate_name() {
    let mut s = session("grasp_mug", 0, SessionConfig::default());
    s.start_task("grasp the mug by the handle", FeedbackMode::Interactive).unwrap();
    // register the skill behind the planner's back, after it chose to learn it
    loop {
        match s.advance_until_blocked().clone() {
            SessionState::AwaitingFeedback { plan_finished: true, .. } => break,
            SessionState::AwaitingFeedback { .. } => s.submit_feedback("").unwrap(),
            other => panic!("{other:?}"),
        }
    }
    s.submit_feedback("the mug was picked up by the rim").unwrap();
    s.advance();
    s.library.register(taught_skill("pick_mug_by_handle").unwrap()).unwrap();
    let version = s.library().version();
    loop {
        match s.advance_until_blocked().clone() {
            SessionState::AwaitingFeedback { step_failed: true, .. } => break,
            SessionState::AwaitingFeedback { .. } => s.submit_feedback("").unwrap(),
            other => panic!("{other:?}"),
        }
    }
    let last = s.events().iter().rev().find(|e| e.kind == EventKind::ExecutionFeedback).unwrap();
    assert_eq!(last.payload["code"], "DuplicateName");
    assert!(!kinds(&s).contains(&EventKind::SkillRequested));
    assert_eq!(s.library().version(), version);
}

#[test]
fn submit_demo_outside_teaching_is_bad_state() {
    let mut s = session("grasp_mug", 0, SessionConfig::default());
    let d = expert_demos("pick_mug_by_handle", 1, 0, 0.0).remove(0);
    assert!(matches!(s.submit_demo(d), Err(SessionError::BadState(_))));
    assert!(matches!(s.finalize_skill(), Err(SessionError::BadState(_))));
}

#[test]
fn name_only_mode_synthesizes_docstrings() {
    let config = SessionConfig { detail: DocDetail::NameOnly, ..Default::default() };
    let mut s = session("grasp_mug", 0, config);
    s.run_task("grasp the mug by the handle", FeedbackMode::Interactive, &mut ExpertOperator::new(0, &[Watch::RimGrasp]))
        .unwrap();
    let requested = s.events().iter().find(|e| e.kind == EventKind::SkillRequested).unwrap();
    assert!(requested.payload["docstring"].is_null());
    let doc = &s.library().get("pick_mug_by_handle").unwrap().docstring;
    assert!(doc.starts_with("performs `pick mug by handle`"), "{doc}");
    assert!(!s.conversation().messages().iter().any(|m| m.content.starts_with(crate::planner::DOCSTRING_REQUEST)));
}

#[test]
fn docstring_mode_asks_the_planner() {
    let mut s = session("grasp_mug", 0, SessionConfig::default());
    s.run_task("grasp the mug by the handle", FeedbackMode::Interactive, &mut ExpertOperator::new(0, &[Watch::RimGrasp]))
        .unwrap();
    let doc = &s.library().get("pick_mug_by_handle").unwrap().docstring;
    assert!(doc.starts_with("grasps a mug from the side"), "{doc}");
}

#[test]
fn replan_budget_is_enforced() {
    let config = SessionConfig { max_replans: 0, ..Default::default() };
    let mut s = session("grasp_mug", 0, config);
    let state = s
        .run_task("grasp the mug by the handle", FeedbackMode::Interactive, &mut ExpertOperator::new(0, &[Watch::RimGrasp]))
        .unwrap();
    match state {
        SessionState::Failed { code, .. } => assert_eq!(code, "MaxReplansExceeded"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn execution_failure_without_feedback_fails_task() {
    let mut world = scene("three_bowls", 0).unwrap();
    world.inject_failure(crate::world::FailureKind::GraspSlip, 1.0).unwrap();
    let mut s = Session::new(Robot::new(world), SkillLibrary::new(), Box::new(ScriptedPlanner::default()), SessionConfig::default());
    let state = s.run_task("stack the bowls", FeedbackMode::None, &mut Silent).unwrap();
    assert_eq!(state.name(), "failed");
    assert!(kinds(&s).contains(&EventKind::ExecutionFeedback));
    assert!(!kinds(&s).contains(&EventKind::Replanned));
}

#[test]
fn auto_mode_replans_on_slip() {
    let mut world = scene("three_bowls", 0).unwrap();
    world.inject_failure(crate::world::FailureKind::GraspSlip, 1.0).unwrap();
    let mut s = Session::new(Robot::new(world), SkillLibrary::new(), Box::new(ScriptedPlanner::default()), SessionConfig::default());
    let state = s.run_task("stack the bowls", FeedbackMode::Auto, &mut Silent).unwrap();
    match state {
        SessionState::Failed { code, .. } => assert_eq!(code, "MaxReplansExceeded"),
        other => panic!("{other:?}"),
    }
    let replans = s.events().iter().filter(|e| e.kind == EventKind::Replanned).count();
    assert_eq!(replans, DEFAULT_MAX_REPLANS);
    // the replanned code is the slip-aware variant
    let plans: Vec<&SessionEvent> = s.events().iter().filter(|e| e.kind == EventKind::CodePlan).collect();
    assert!(plans[1].payload["code"].as_str().unwrap().contains("get_objects_contained_and_over"));
    let feedback = s.conversation().messages().iter().filter(|m| m.content.contains("[execution feedback]")).count();
    assert_eq!(feedback, DEFAULT_MAX_REPLANS);
}

#[test]
fn events_since_slices_the_log() {
    let mut s = session("grasp_mug", 0, SessionConfig::default());
    s.run_task("pick up the mug", FeedbackMode::None, &mut Silent).unwrap();
    let n = s.events().len();
    assert_eq!(s.events_since(0).len(), n);
    assert_eq!(s.events_since(3), &s.events()[3..]);
    assert!(s.events_since(n + 10).is_empty());
}

#[test]
fn event_log_round_trips() {
    let mut s = session("grasp_mug", 0, SessionConfig::default());
    s.run_task("pick up the mug", FeedbackMode::None, &mut Silent).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.jsonl");
    s.write_event_log(&path).unwrap();
    assert_eq!(Session::read_event_log(&path).unwrap(), s.events());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), s.events().len());
}

#[test]
fn persisted_skills_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("session.json");
    let mut s = session("grasp_mug", 0, SessionConfig::default());
    s.run_task("grasp the mug by the handle", FeedbackMode::Interactive, &mut ExpertOperator::watchful(0)).unwrap();
    s.persist(&path).unwrap();
    let robot = Robot::new(scene("sink", 0).unwrap());
    let restored = Session::load(&path, robot, Box::new(ScriptedPlanner::default()), SessionConfig::default()).unwrap();
    assert!(restored.library().contains("pick_mug_by_handle"));
    assert_eq!(restored.events(), s.events());
    assert_eq!(*restored.state(), SessionState::Idle);
}

#[test]
fn corrupt_session_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("session.json");
    std::fs::write(&path, "{not json").unwrap();
    let robot = Robot::new(scene("sink", 0).unwrap());
    let e = Session::load(&path, robot, Box::new(ScriptedPlanner::default()), SessionConfig::default()).unwrap_err();
    assert_eq!(e.code(), "IOError");
    let missing = dir.path().join("nope.json");
    let robot = Robot::new(scene("sink", 0).unwrap());
    let e = Session::load(&missing, robot, Box::new(ScriptedPlanner::default()), SessionConfig::default()).unwrap_err();
    assert_eq!(e.code(), "IOError");
}

#[test]
fn reused_skill_keeps_library_version_at_plan_time() {
    let mut library = SkillLibrary::new();
    library.register(taught_skill("pick_mug_by_handle").unwrap()).unwrap();
    let before = library.version();
    let mut s = Session::new(
        Robot::new(scene("sink", 0).unwrap()),
        library,
        Box::new(ScriptedPlanner::default()),
        SessionConfig::default(),
    );
    s.run_task("empty the sink", FeedbackMode::Interactive, &mut ExpertOperator::watchful(0)).unwrap();
    let first = s.events().iter().find(|e| e.kind == EventKind::CodePlan).unwrap();
    assert_eq!(first.payload["library_version"], before);
    let code = first.payload["code"].as_str().unwrap();
    assert!(code.contains("pick_mug_by_handle(mug_id)"));
    assert!(!code.contains("learn_skill(\"pick_mug_by_handle\")"));
    let requested: Vec<&str> = s
        .events()
        .iter()
        .filter(|e| e.kind == EventKind::SkillRequested)
        .map(|e| e.payload["skill"].as_str().unwrap())
        .collect();
    assert_eq!(requested, ["tilt_mug"]);
}

#[test]
fn state_json_has_viewer_fields() {
    let mut s = session("grasp_mug", 0, SessionConfig::default());
    s.run_task("pick up the mug", FeedbackMode::None, &mut Silent).unwrap();
    let v = s.state_json();
    for key in ["state", "task", "world", "library", "library_version", "conversation", "code", "events"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["state"]["state"], "done");
}

fn replay(seed: u64, slip: f64) -> Vec<serde_json::Value> {
    let mut world = scene("three_bowls", seed).unwrap();
    world.inject_failure(crate::world::FailureKind::GraspSlip, slip).unwrap();
    let mut s = Session::new(Robot::new(world), SkillLibrary::new(), Box::new(ScriptedPlanner::default()), SessionConfig::default());
    s.run_task("stack the bowls", FeedbackMode::Auto, &mut Silent).unwrap();
    s.events().iter().map(|e| serde_json::to_value(e).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn replay_is_deterministic(seed in 0u64..1000, slip in 0.0f64..0.5) {
        prop_assert_eq!(replay(seed, slip), replay(seed, slip));
    }
}

#[test]
fn step_events_match_on_replay() {
    let run = || {
        let mut s = session("grasp_mug", 5, SessionConfig::default());
        s.run_task("grasp the mug by the handle", FeedbackMode::Interactive, &mut ExpertOperator::watchful(5)).unwrap();
        step_events(&s)
    };
    assert_eq!(run(), run());
}

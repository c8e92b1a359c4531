//! Run a task end to end with the scripted planner and an expert operator
//! that reports a rim grasp, so the robot asks to be taught.
//!
//!     cargo run --example run_task -- grasp_mug "grasp the mug by the handle"

use std::path::Path;

use skillplan::fixtures::{scene, ExpertOperator};
use skillplan::planner::ScriptedPlanner;
use skillplan::session::{FeedbackMode, Session, SessionConfig};
use skillplan::skills::{Robot, SkillLibrary};

fn main() {
    let mut args = std::env::args().skip(1);
    let scene_name = args.next().unwrap_or_else(|| "grasp_mug".into());
    let task = args.next().unwrap_or_else(|| "grasp the mug by the handle".into());
    let demos = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/demos");
    let config = SessionConfig { demo_dir: Some(demos), ..Default::default() };
    let world = scene(&scene_name, 0).expect("bundled scene");
    let mut session = Session::new(Robot::new(world), SkillLibrary::new(), Box::new(ScriptedPlanner::default()), config);
    let state = session.run_task(&task, FeedbackMode::Interactive, &mut ExpertOperator::watchful(0)).unwrap();
    for e in session.events() {
        let brief = e.payload.get("source").or_else(|| e.payload.get("text")).or_else(|| e.payload.get("skill"));
        println!("{:>3} {:<18} {}", e.ts, serde_json::to_value(e.kind).unwrap().as_str().unwrap(), brief.map_or(String::new(), |v| v.to_string()));
    }
    println!("{} after {} replans; library {:?}", state.name(), session.replans(), session.library().names());
}

//! Stack bowls with slipping grasps, with and without automatic replanning
//! on execution feedback.

use skillplan::fixtures::{scene, ExpertOperator};
use skillplan::planner::ScriptedPlanner;
use skillplan::session::{EventKind, FeedbackMode, Session, SessionConfig};
use skillplan::skills::{Robot, SkillLibrary};
use skillplan::world::FailureKind;

fn main() {
    for mode in [FeedbackMode::None, FeedbackMode::Auto] {
        let mut done = 0;
        for seed in 0..20 {
            let mut world = scene("three_bowls", seed).unwrap();
            world.inject_failure(FailureKind::GraspSlip, 0.3).unwrap();
            let mut s = Session::new(
                Robot::new(world),
                SkillLibrary::new(),
                Box::new(ScriptedPlanner::default()),
                SessionConfig::default(),
            );
            let state = s.run_task("stack the bowls", mode, &mut ExpertOperator::new(seed, &[])).unwrap();
            let replans = s.events().iter().filter(|e| e.kind == EventKind::Replanned).count();
            if seed < 3 {
                println!("{mode:?} seed {seed}: {} ({replans} replans)", state.name());
            }
            done += usize::from(state.name() == "done");
        }
        println!("{mode:?}: {done}/20 finished");
    }
}

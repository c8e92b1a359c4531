//! A scripted operator for the bundled demonstration tasks: it answers
//! skill requests with expert demonstrations and reports the mistakes a
//! person watching the robot would point out.

use serde::{Deserialize, Serialize};

use super::experts::{expert_demos, rests_inside, TAUGHT_SKILLS};
use crate::learning::{fit_template, Demonstration};
use crate::planner::PlanTable;
use crate::session::{Operator, Session, SessionState};
use crate::skills::{GraspRegion, SkillRecord};
use crate::world::{ObjectId, WorldState};

/// Demonstrations per taught skill.
pub const EXPERT_DEMOS: usize = 5;

/// Something the operator watches for once the plan has run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Watch {
    /// The mug was grasped on its rim.
    RimGrasp,
    /// The bottle stands upright in the tray.
    BottleUpright,
    /// The mug was put back into the sink.
    MugInSink,
}

impl Watch {
    pub const ALL: [Watch; 3] = [Watch::RimGrasp, Watch::BottleUpright, Watch::MugInSink];

    pub fn message(self) -> &'static str {
        match self {
            Watch::RimGrasp => "the mug was picked up by the rim",
            Watch::BottleUpright => "the bottle was placed upright in the tray",
            Watch::MugInSink => "the sink is not empty, put the mug to the right of the sink",
        }
    }

    fn fires(self, session: &Session) -> bool {
        let world = session.world();
        let id = |label: &str| world.objects().find(|o| o.label == label).map(|o| o.id);
        match self {
            Watch::RimGrasp => session
                .robot()
                .last_grasp()
                .is_some_and(|g| g.region == GraspRegion::Rim && Some(g.object) == id("mug")),
            Watch::BottleUpright => match (id("bottle"), id("tray")) {
                (Some(b), Some(t)) => {
                    world.held().is_none()
                        && world.object(b).is_ok_and(|o| o.is_upright())
                        && rests_inside(world, b, t)
                }
                _ => false,
            },
            Watch::MugInSink => match (id("mug"), id("sink")) {
                (Some(m), Some(s)) => world.held().is_none() && rests_inside(world, m, s),
                _ => false,
            },
        }
    }
}

/// Operator that teaches the bundled skills from expert demonstrations and
/// gives each watched-for remark at most once, after a plan has finished.
#[derive(Clone, Debug, Default)]
pub struct ExpertOperator {
    pub seed: u64,
    pub watch: Vec<Watch>,
    said: Vec<Watch>,
}

impl ExpertOperator {
    pub fn new(seed: u64, watch: &[Watch]) -> Self {
        Self { seed, watch: watch.to_vec(), said: vec![] }
    }

    /// Watches for every known mistake.
    pub fn watchful(seed: u64) -> Self {
        Self::new(seed, &Watch::ALL)
    }

    /// Remarks made so far.
    pub fn said(&self) -> &[Watch] {
        &self.said
    }
}

impl Operator for ExpertOperator {
    fn feedback(&mut self, session: &Session) -> Option<String> {
        if !matches!(session.state(), SessionState::AwaitingFeedback { plan_finished: true, .. }) {
            return None;
        }
        let w = self.watch.iter().copied().find(|w| !self.said.contains(w) && w.fires(session))?;
        self.said.push(w);
        Some(w.message().to_string())
    }

    fn demonstrations(&mut self, skill: &str, _session: &Session) -> Option<Vec<Demonstration>> {
        if !TAUGHT_SKILLS.contains(&skill) {
            return None;
        }
        let demos = expert_demos(skill, EXPERT_DEMOS, self.seed, 0.0);
        (!demos.is_empty()).then_some(demos)
    }
}

/// A taught skill fitted from expert demonstrations, documented with the
/// bundled docstring.
pub fn taught_skill(skill: &str) -> Option<SkillRecord> {
    if !TAUGHT_SKILLS.contains(&skill) {
        return None;
    }
    let template = fit_template(&expert_demos(skill, EXPERT_DEMOS, 0, 0.0)).ok()?;
    let doc = PlanTable::bundled().docstrings.get(skill).cloned().unwrap_or_default();
    Some(SkillRecord::learned(skill, template, &doc))
}

/// First object labelled `label`.
pub fn labelled(world: &WorldState, label: &str) -> Option<ObjectId> {
    world.objects().find(|o| o.label == label).map(|o| o.id)
}

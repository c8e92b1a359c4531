//! The two-step planner exchange: describe the scene and task, get steps
//! in words, then ask for code against the API. Uses a chat endpoint when
//! PLANNER_ENDPOINT is set, the scripted planner otherwise.

use skillplan::fixtures::scene;
use skillplan::planner::{
    build_step1_prompt, documented_names, request_plan, system_prompt, Conversation, HttpPlanner, HttpPlannerConfig,
    PlannerPort, Role, ScriptedPlanner,
};
use skillplan::skills::{render_api_doc, DocDetail, Robot, SkillLibrary};

fn main() {
    let mut port: Box<dyn PlannerPort> = match HttpPlannerConfig::from_env() {
        Ok(c) => Box::new(HttpPlanner::new(c).unwrap()),
        Err(_) => Box::new(ScriptedPlanner::default()),
    };
    let mut robot = Robot::new(scene("bottle_tray", 0).unwrap());
    let (_, desc) = robot.describe(true).unwrap();
    let api = render_api_doc(&SkillLibrary::new(), DocDetail::NameAndDocstring, &[]);
    let mut c = Conversation::new(Some(&system_prompt(&documented_names(&api))));
    c.push(Role::User, &build_step1_prompt(&desc.text, "put the bottle in the tray")).unwrap();
    let plan = request_plan(port.as_mut(), &mut c, &api).unwrap();
    println!("[{}] {}\n\n{}", port.name(), plan.nl_steps, plan.code);
    println!("{} messages exchanged", c.len());
}

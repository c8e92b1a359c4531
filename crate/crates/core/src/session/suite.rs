//! Evaluation suites: planner-only tasks scored on the plan text, and
//! simulated tasks scored on the final world.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{FeedbackMode, Session, SessionConfig, SessionError, SessionState};
use crate::fixtures::{rests_inside, scene, taught_skill, ExpertOperator, Watch};
use crate::plan::{parse, requested_skills, static_call_names};
use crate::planner::{build_step1_prompt, documented_names, request_plan, system_prompt, Conversation, PlannerPort, Role};
use crate::skills::{render_api_doc, DocDetail, GraspRegion, Robot, SkillLibrary, SkillRecord};
use crate::world::{FailureKind, ObjectId, WorldState};

pub const SUITE_SCHEMA: &str = "suite.v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteKind {
    /// Only the planner runs; predicates look at the plan.
    Llm,
    /// Full sessions on a bundled scene; predicates look at the world.
    Sim,
}

/// A skill the planner is told about without it being executable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeclaredSkill {
    pub name: String,
    pub arity: usize,
    pub docstring: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predicate {
    /// Checks on the plan's calls. `learns` requires (or forbids) any
    /// `learn_skill` call; `not_learns` forbids requesting those names.
    Plan {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        learns: Option<bool>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        calls: Vec<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        not_calls: Vec<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        not_learns: Vec<String>,
    },
    /// `alone` also requires nothing riding on or in the held object.
    Holding {
        object: String,
        #[serde(default)]
        alone: bool,
    },
    Inside { object: String, container: String },
    NotInside { object: String, container: String },
    LeftOf { object: String, reference: String },
    /// Objects with `label` form one stack, bottom to top in `order` of
    /// attributes when given.
    Stacked {
        label: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        order: Vec<String>,
    },
    GraspRegion { region: GraspRegion },
    /// A skill taught by the bundled demonstrator achieved its goal.
    SkillGoal { skill: String },
    Done,
    All { of: Vec<Predicate> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteTask {
    pub id: String,
    pub task: String,
    /// Scene description for planner-only tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Full step-one prompt, used verbatim instead of description + task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    /// Bundled scene for simulated tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<String>,
    #[serde(default)]
    pub skills: Vec<DeclaredSkill>,
    /// Skills taught from the bundled demonstrator before the task starts.
    #[serde(default)]
    pub learned: Vec<String>,
    #[serde(default)]
    pub feedback_mode: FeedbackMode,
    #[serde(default)]
    pub baseline: bool,
    /// Relations in the scene description.
    #[serde(default = "yes")]
    pub grounded: bool,
    /// Mistakes the scripted operator points out.
    #[serde(default)]
    pub watch: Vec<Watch>,
    #[serde(default)]
    pub grasp_slip: f64,
    #[serde(default)]
    pub place_topple: f64,
    pub predicate: Predicate,
    /// Published success rate for this task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported: Option<f64>,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    pub schema: String,
    pub name: String,
    /// Row label in reports.
    #[serde(default)]
    pub title: String,
    pub kind: SuiteKind,
    /// API detail levels to evaluate planner-only suites at.
    #[serde(default = "default_details")]
    pub details: Vec<DocDetail>,
    /// Rates published for this suite, keyed by detail level or "all".
    #[serde(default)]
    pub reported: IndexMap<String, f64>,
    #[serde(default)]
    pub skills: Vec<DeclaredSkill>,
    pub tasks: Vec<SuiteTask>,
}

const BUNDLED: [(&str, &str); 6] = [
    ("should_learn", include_str!("../../fixtures/suites/should_learn.json")),
    ("dont_learn", include_str!("../../fixtures/suites/dont_learn.json")),
    ("reuse", include_str!("../../fixtures/suites/reuse.json")),
    ("sim_basic", include_str!("../../fixtures/suites/sim_basic.json")),
    ("learn_tasks", include_str!("../../fixtures/suites/learn_tasks.json")),
    ("stack_slip", include_str!("../../fixtures/suites/stack_slip.json")),
];

fn default_details() -> Vec<DocDetail> {
    vec![DocDetail::NameAndDocstring]
}

impl Suite {
    pub fn from_json(text: &str) -> Result<Self, SessionError> {
        let s: Suite =
            serde_json::from_str(text).map_err(|e| SessionError::Io(format!("bad {SUITE_SCHEMA} file: {e}")))?;
        if s.schema != SUITE_SCHEMA {
            return Err(SessionError::Io(format!("schema {:?}, expected {SUITE_SCHEMA:?}", s.schema)));
        }
        if s.tasks.is_empty() {
            return Err(SessionError::Io(format!("suite {} has no tasks", s.name)));
        }
        for t in &s.tasks {
            if s.kind == SuiteKind::Sim && t.scene.as_deref().and_then(|n| scene(n, 0)).is_none() {
                return Err(SessionError::Io(format!("task {}: unknown scene {:?}", t.id, t.scene)));
            }
        }
        Ok(s)
    }

    /// Names of the suites shipped with the crate.
    pub fn bundled_names() -> Vec<&'static str> {
        BUNDLED.iter().map(|(n, _)| *n).collect()
    }

    pub fn bundled(name: &str) -> Option<Suite> {
        BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| Suite::from_json(text).expect("bundled suites are valid"))
    }

    /// The suites behind the learn_skill success table.
    pub fn llm_suites() -> Vec<Suite> {
        ["should_learn", "dont_learn", "reuse"].iter().filter_map(|n| Suite::bundled(n)).collect()
    }

    pub fn title(&self) -> &str {
        if self.title.is_empty() {
            &self.name
        } else {
            &self.title
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub id: String,
    pub task: String,
    pub successes: usize,
    pub trials: usize,
    pub rate: f64,
    /// Why the first few failed trials failed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<DocDetail>,
    pub tasks: Vec<TaskResult>,
    pub successes: usize,
    pub trials: usize,
    pub rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported: Option<f64>,
}

fn rate(s: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        s as f64 / n as f64
    }
}

fn resolve(world: &WorldState, label: &str) -> Option<ObjectId> {
    world.objects().find(|o| o.label == label).map(|o| o.id)
}

/// Checks a plan predicate against plan code.
pub fn check_plan(predicate: &Predicate, code: &str) -> Result<bool, String> {
    let program = parse(code).map_err(|e| e.to_string())?;
    let names = static_call_names(&program);
    let requested = requested_skills(&program);
    Ok(match predicate {
        Predicate::Plan { learns, calls, not_calls, not_learns } => {
            learns.is_none_or(|l| names.contains("learn_skill") == l)
                && calls.iter().all(|c| names.contains(c))
                && not_calls.iter().all(|c| !names.contains(c))
                && not_learns.iter().all(|c| !requested.contains(c))
        }
        Predicate::All { of } => {
            for p in of {
                if !check_plan(p, code)? {
                    return Ok(false);
                }
            }
            true
        }
        _ => return Err("not a plan predicate".into()),
    })
}

/// Checks a predicate against a finished session.
pub fn check_session(predicate: &Predicate, session: &Session) -> bool {
    let world = session.world();
    let id = |label: &str| resolve(world, label);
    match predicate {
        Predicate::Plan { .. } => session.code().is_some_and(|c| check_plan(predicate, c).unwrap_or(false)),
        Predicate::Holding { object, alone } => id(object)
            .is_some_and(|o| world.held().is_some_and(|h| h.object == o && (!alone || h.riders.is_empty()))),
        Predicate::Inside { object, container } => match (id(object), id(container)) {
            (Some(o), Some(c)) => world.held().is_none() && rests_inside(world, o, c),
            _ => false,
        },
        Predicate::NotInside { object, container } => match (id(object), id(container)) {
            (Some(o), Some(c)) => !rests_inside(world, o, c),
            _ => false,
        },
        Predicate::LeftOf { object, reference } => match (id(object), id(reference)) {
            (Some(o), Some(r)) => {
                world.held().is_none()
                    && world.objects().all(|c| c.id == o || !rests_inside(world, o, c.id))
                    && world.object(o).is_ok_and(|a| world.object(r).is_ok_and(|b| a.pose.position.x < b.pose.position.x))
            }
            _ => false,
        },
        Predicate::Stacked { label, order } => {
            let mut ids: Vec<ObjectId> = world.objects().filter(|o| &o.label == label).map(|o| o.id).collect();
            if order.is_empty() {
                ids.sort_by(|a, b| {
                    let z = |i: &ObjectId| world.object(*i).map_or(0.0, |o| o.pose.position.z);
                    z(a).total_cmp(&z(b))
                });
            } else {
                let mut sorted = vec![];
                for attr in order {
                    match world.objects().find(|o| &o.label == label && o.attributes.contains(attr)) {
                        Some(o) => sorted.push(o.id),
                        None => return false,
                    }
                }
                ids = sorted;
            }
            let mut robot = session.robot().clone();
            let Ok(perception) = robot.perception() else { return false };
            let rel = &perception.relations;
            ids.len() >= 2
                && world.held().is_none()
                && ids.windows(2).all(|w| rel.vertical_between(w[1], w[0]).is_some_and(|r| r.subject == w[1]))
        }
        Predicate::GraspRegion { region } => session.robot().last_grasp().is_some_and(|g| g.region == *region),
        Predicate::SkillGoal { skill } => {
            let Some((la, lb)) = crate::fixtures::skill_labels(skill) else { return false };
            match id(la) {
                Some(a) => crate::fixtures::skill_succeeded(skill, world, a, lb.and_then(id)),
                None => false,
            }
        }
        Predicate::Done => *session.state() == SessionState::Done,
        Predicate::All { of } => of.iter().all(|p| check_session(p, session)),
    }
}

fn declared_library(skills: &[&DeclaredSkill]) -> Result<SkillLibrary, SessionError> {
    let mut lib = SkillLibrary::new();
    for s in skills {
        lib.register(SkillRecord::declared(&s.name, s.arity, &s.docstring))
            .map_err(|e| SessionError::Io(format!("skill {}: {e}", s.name)))?;
    }
    Ok(lib)
}

fn llm_trial(
    suite: &Suite,
    task: &SuiteTask,
    detail: DocDetail,
    port: &mut dyn PlannerPort,
) -> Result<bool, String> {
    let skills: Vec<&DeclaredSkill> = suite.skills.iter().chain(&task.skills).collect();
    let library = declared_library(&skills).map_err(|e| e.to_string())?;
    let api_doc = render_api_doc(&library, detail, &[]);
    let mut conv = Conversation::new(Some(&system_prompt(&documented_names(&api_doc))));
    let prompt = match &task.prompt {
        Some(p) => p.clone(),
        None => build_step1_prompt(task.description.as_deref().unwrap_or_default(), &task.task),
    };
    conv.push(Role::User, &prompt).map_err(|e| e.to_string())?;
    let plan = request_plan(port, &mut conv, &api_doc).map_err(|e| format!("{}: {e}", e.code()))?;
    check_plan(&task.predicate, &plan.code)
}

fn sim_trial(
    task: &SuiteTask,
    seed: u64,
    config: &SessionConfig,
    port: Box<dyn PlannerPort>,
) -> Result<bool, String> {
    let name = task.scene.as_deref().unwrap_or_default();
    let mut world = scene(name, seed).ok_or_else(|| format!("unknown scene {name:?}"))?;
    world.inject_failure(FailureKind::GraspSlip, task.grasp_slip).map_err(|e| e.to_string())?;
    world.inject_failure(FailureKind::PlaceTopple, task.place_topple).map_err(|e| e.to_string())?;
    let mut library = SkillLibrary::new();
    for s in &task.learned {
        let record = taught_skill(s).ok_or_else(|| format!("no demonstrator for {s}"))?;
        library.register(record).map_err(|e| e.to_string())?;
    }
    let config = SessionConfig { baseline: task.baseline, grounded: task.grounded, ..config.clone() };
    let mut session = Session::new(Robot::new(world), library, port, config);
    let state = session.run_task(&task.task, task.feedback_mode, &mut ExpertOperator::new(seed, &task.watch)).map_err(|e| e.to_string())?;
    if check_session(&task.predicate, &session) {
        return Ok(true);
    }
    Err(match state {
        SessionState::Failed { code, .. } => code,
        other => format!("{} but the goal does not hold", other.name()),
    })
}

/// Runs every task `trials` times. Planner-only suites yield one report
/// per detail level; simulated trials use scene seeds `seed..seed+trials`.
pub fn evaluate_suite(
    suite: &Suite,
    trials: usize,
    seed: u64,
    config: &SessionConfig,
    planner: &mut dyn FnMut() -> Box<dyn PlannerPort>,
) -> Result<Vec<SuiteReport>, SessionError> {
    if suite.tasks.is_empty() || trials == 0 {
        return Err(SessionError::BadState("nothing to evaluate".into()));
    }
    let details: Vec<Option<DocDetail>> = match suite.kind {
        SuiteKind::Llm => suite.details.iter().copied().map(Some).collect(),
        SuiteKind::Sim => vec![None],
    };
    let mut reports = vec![];
    for detail in details {
        let mut results = vec![];
        for task in &suite.tasks {
            let (mut ok, mut failures) = (0, vec![]);
            let mut port = planner();
            for t in 0..trials {
                let outcome = match detail {
                    Some(d) => llm_trial(suite, task, d, port.as_mut()),
                    None => sim_trial(task, seed.wrapping_add(t as u64), config, planner()),
                };
                match outcome {
                    Ok(true) => ok += 1,
                    Ok(false) => failures.push("predicate does not hold".to_string()),
                    Err(e) => failures.push(e),
                }
            }
            failures.truncate(3);
            results.push(TaskResult {
                id: task.id.clone(),
                task: task.task.clone(),
                successes: ok,
                trials,
                rate: rate(ok, trials),
                failures,
                reported: task.reported,
            });
        }
        let successes = results.iter().map(|r| r.successes).sum();
        let n = results.iter().map(|r| r.trials).sum();
        let key = match detail {
            Some(DocDetail::NameOnly) => "name-only",
            Some(DocDetail::NameAndDocstring) => "name-and-docstring",
            None => "all",
        };
        reports.push(SuiteReport {
            suite: suite.name.clone(),
            title: suite.title().to_string(),
            detail: detail.filter(|_| suite.details.len() > 1),
            tasks: results,
            successes,
            trials: n,
            rate: rate(successes, n),
            reported: suite.reported.get(key).or_else(|| suite.reported.get("all")).copied(),
        });
    }
    Ok(reports)
}

fn detail_label(d: Option<DocDetail>) -> &'static str {
    match d {
        Some(DocDetail::NameOnly) => "Name only",
        Some(DocDetail::NameAndDocstring) => "Name + docstring",
        None => "--",
    }
}

/// Markdown table: one row per suite and detail level, then per-task rows.
pub fn render_markdown(reports: &[SuiteReport]) -> String {
    let mut out = String::from("| Evaluation | API detail | Success | Reported |\n|---|---|---|---|\n");
    for r in reports {
        let reported = r.reported.map_or("--".to_string(), |v| format!("{v:.2}"));
        out.push_str(&format!(
            "| {} | {} | {:.2} ({}/{}) | {reported} |\n",
            r.title,
            detail_label(r.detail),
            r.rate,
            r.successes,
            r.trials
        ));
    }
    for r in reports {
        out.push_str(&format!("\n### {} ({})\n\n| Task | Success | Reported |\n|---|---|---|\n", r.title, detail_label(r.detail)));
        for t in &r.tasks {
            let reported = t.reported.map_or("--".to_string(), |v| format!("{v:.2}"));
            out.push_str(&format!("| {} | {}/{} | {reported} |\n", t.id, t.successes, t.trials));
        }
    }
    out
}

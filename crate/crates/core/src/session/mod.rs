//! A task session: describe the scene, plan, run the plan a statement at a
//! time, take feedback, replan, and learn the skills the plan asks for.

mod suite;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::learning::{DemoFile, Demonstration, Teacher};
use crate::plan::{parse, Host, HostError, Interpreter, Status, Step, Suspension};
use crate::planner::{
    build_step1_prompt, documented_names, feedback_message, request_docstring, request_plan, synthesize_docstring,
    system_prompt, Conversation, FeedbackSource, PlannerError, PlannerPort, Role,
};
use crate::skills::{render_api_doc, valid_skill_name, DocDetail, ExecError, Robot, SkillLibrary, SkillRecord};
use crate::value::Value;
use crate::world::snapshot::snapshot;
use crate::world::WorldState;

pub use suite::*;

pub const EVENTS_SCHEMA: &str = "events.v1";
pub const SESSION_SCHEMA: &str = "session.v1";
pub const DEFAULT_MAX_REPLANS: usize = 3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackMode {
    #[default]
    None,
    Auto,
    Interactive,
}

impl FromStr for FeedbackMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(FeedbackMode::None),
            "auto" => Ok(FeedbackMode::Auto),
            "interactive" => Ok(FeedbackMode::Interactive),
            other => Err(format!("unknown feedback mode {other:?} (expected none, auto or interactive)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum SessionState {
    Idle,
    Planning,
    Executing,
    AwaitingFeedback { plan_finished: bool, step_failed: bool },
    Teaching { skill: String, demos: usize },
    Done,
    Failed { code: String, message: String },
}

impl SessionState {
    pub fn name(&self) -> &'static str {
        match self {
            SessionState::Idle => "idle",
            SessionState::Planning => "planning",
            SessionState::Executing => "executing",
            SessionState::AwaitingFeedback { .. } => "awaiting-feedback",
            SessionState::Teaching { .. } => "teaching",
            SessionState::Done => "done",
            SessionState::Failed { .. } => "failed",
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, SessionState::Done | SessionState::Failed { .. })
    }

    /// Whether the session is waiting on the operator.
    pub fn is_blocked(&self) -> bool {
        matches!(self, SessionState::AwaitingFeedback { .. } | SessionState::Teaching { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Task,
    SceneDescription,
    NlPlan,
    CodePlan,
    Step,
    ExecutionFeedback,
    HumanFeedback,
    SkillRequested,
    DemoRecorded,
    SkillFinalized,
    Replanned,
    TaskDone,
    TaskFailed,
}

impl EventKind {
    pub const ALL: [EventKind; 13] = [
        EventKind::Task,
        EventKind::SceneDescription,
        EventKind::NlPlan,
        EventKind::CodePlan,
        EventKind::Step,
        EventKind::ExecutionFeedback,
        EventKind::HumanFeedback,
        EventKind::SkillRequested,
        EventKind::DemoRecorded,
        EventKind::SkillFinalized,
        EventKind::Replanned,
        EventKind::TaskDone,
        EventKind::TaskFailed,
    ];
}

/// One `events.v1` record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub ts: u64,
    pub kind: EventKind,
    pub payload: serde_json::Value,
}

/// Event timestamps: the event's index (reproducible logs) or wall-clock
/// milliseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Clock {
    #[default]
    Logical,
    Wall,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("{0}")]
    BadState(String),
    #[error("the task is empty")]
    EmptyTask,
    #[error("planner failed: {0}")]
    PlannerFailure(PlannerError),
    #[error("gave up after {0} replans")]
    MaxReplansExceeded(usize),
    #[error("no demonstrations available for {0}")]
    DemoSourceUnavailable(String),
    #[error("a skill named {0} already exists")]
    DuplicateName(String),
    #[error("{0}")]
    InvalidDemo(String),
    #[error("{0}")]
    Io(String),
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::BadState(_) => "BadState",
            SessionError::EmptyTask => "EmptyTask",
            SessionError::PlannerFailure(_) => "PlannerFailure",
            SessionError::MaxReplansExceeded(_) => "MaxReplansExceeded",
            SessionError::DemoSourceUnavailable(_) => "DemoSourceUnavailable",
            SessionError::DuplicateName(_) => "DuplicateName",
            SessionError::InvalidDemo(_) => "InvalidDemo",
            SessionError::Io(_) => "IOError",
        }
    }

    fn exec_error(&self) -> ExecError {
        ExecError { code: self.code().into(), message: self.to_string() }
    }
}

#[derive(Clone, Debug)]
pub struct SessionConfig {
    /// Hide `learn_skill` from the planner.
    pub baseline: bool,
    pub max_replans: usize,
    /// How learned skills are documented to the planner. With
    /// `NameAndDocstring` the planner is also asked to write the docstring
    /// of each skill it requests.
    pub detail: DocDetail,
    /// Include relations in the scene description.
    pub grounded: bool,
    /// Directory searched for `<skill>.json` demonstration files.
    pub demo_dir: Option<PathBuf>,
    pub clock: Clock,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            baseline: false,
            max_replans: DEFAULT_MAX_REPLANS,
            detail: DocDetail::NameAndDocstring,
            grounded: true,
            demo_dir: None,
            clock: Clock::Logical,
        }
    }
}

/// The human side of a blocking [`Session::run_task`].
pub trait Operator {
    /// Feedback while the session awaits it; `None` or empty continues.
    fn feedback(&mut self, _session: &Session) -> Option<String> {
        None
    }

    /// Demonstrations for a requested skill; `None` when there are none.
    fn demonstrations(&mut self, _skill: &str, _session: &Session) -> Option<Vec<Demonstration>> {
        None
    }
}

/// An operator that never says anything.
pub struct Silent;

impl Operator for Silent {}

struct SessionHost<'a> {
    robot: &'a mut Robot,
    library: &'a mut SkillLibrary,
    hidden: &'a [&'static str],
    saved: &'a mut Option<Robot>,
}

impl Host for SessionHost<'_> {
    fn call(&mut self, name: &str, args: &[Value], kwargs: &[(String, Value)]) -> Result<Value, HostError> {
        if self.hidden.contains(&name) {
            return Err(HostError::Failed(ExecError { code: "UnknownSkill".into(), message: format!("no skill named {name}") }));
        }
        if name == "learn_skill" {
            return Err(HostError::Suspend);
        }
        match self.robot.call(self.library, name, args, kwargs) {
            Ok(v) => {
                self.library.note_use(name);
                Ok(v)
            }
            Err(e) => Err(HostError::Failed(ExecError { code: e.code(), message: e.to_string() })),
        }
    }

    fn checkpoint(&mut self) {
        *self.saved = Some(self.robot.clone());
    }

    fn rollback(&mut self) {
        if let Some(mut saved) = self.saved.take() {
            saved.world_mut().sync_failure_draws(self.robot.world());
            *self.robot = saved;
        }
    }
}

pub struct Session {
    config: SessionConfig,
    robot: Robot,
    library: SkillLibrary,
    planner: Box<dyn PlannerPort>,
    conversation: Conversation,
    state: SessionState,
    events: Vec<SessionEvent>,
    task: Option<String>,
    mode: FeedbackMode,
    interp: Option<Interpreter>,
    code: Option<String>,
    statement: Option<usize>,
    replans: usize,
    pending_feedback: Vec<(FeedbackSource, String)>,
    teacher: Teacher,
    suspension: Option<Suspension>,
    requested_doc: Option<String>,
    saved: Option<Robot>,
}

impl fmt::Debug for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Session").field("state", &self.state).field("task", &self.task).field("events", &self.events.len()).finish()
    }
}

#[derive(Serialize, Deserialize)]
struct SessionDoc {
    schema: String,
    library: Vec<SkillRecord>,
    events: Vec<SessionEvent>,
    conversation: Conversation,
}

impl Session {
    pub fn new(robot: Robot, library: SkillLibrary, planner: Box<dyn PlannerPort>, config: SessionConfig) -> Self {
        Self {
            config,
            robot,
            library,
            planner,
            conversation: Conversation::default(),
            state: SessionState::Idle,
            events: vec![],
            task: None,
            mode: FeedbackMode::None,
            interp: None,
            code: None,
            statement: None,
            replans: 0,
            pending_feedback: vec![],
            teacher: Teacher::default(),
            suspension: None,
            requested_doc: None,
            saved: None,
        }
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn events_since(&self, n: usize) -> &[SessionEvent] {
        &self.events[n.min(self.events.len())..]
    }

    pub fn conversation(&self) -> &Conversation {
        &self.conversation
    }

    pub fn library(&self) -> &SkillLibrary {
        &self.library
    }

    pub fn robot(&self) -> &Robot {
        &self.robot
    }

    pub fn world(&self) -> &WorldState {
        self.robot.world()
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn task(&self) -> Option<&str> {
        self.task.as_deref()
    }

    pub fn mode(&self) -> FeedbackMode {
        self.mode
    }

    /// Code of the plan being executed.
    pub fn code(&self) -> Option<&str> {
        self.code.as_deref()
    }

    /// Statement index of the last step event.
    pub fn current_statement(&self) -> Option<usize> {
        self.statement
    }

    pub fn replans(&self) -> usize {
        self.replans
    }

    pub fn pending_skill(&self) -> Option<&str> {
        self.teacher.pending().map(|p| p.name.as_str())
    }

    fn hidden(&self) -> &'static [&'static str] {
        if self.config.baseline {
            &["learn_skill"]
        } else {
            &[]
        }
    }

    /// API listing the planner sees.
    pub fn api_doc(&self) -> String {
        render_api_doc(&self.library, self.config.detail, self.hidden())
    }

    fn emit(&mut self, kind: EventKind, payload: serde_json::Value) {
        let ts = match self.config.clock {
            Clock::Logical => self.events.len() as u64,
            Clock::Wall => SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64),
        };
        self.events.push(SessionEvent { ts, kind, payload });
    }

    /// Starts a task; the session plans on the next [`Session::advance`].
    pub fn start_task(&mut self, task: &str, mode: FeedbackMode) -> Result<(), SessionError> {
        if !matches!(self.state, SessionState::Idle | SessionState::Done | SessionState::Failed { .. }) {
            return Err(SessionError::BadState(format!("cannot start a task while {}", self.state.name())));
        }
        let task = task.trim();
        if task.is_empty() {
            return Err(SessionError::EmptyTask);
        }
        let names = documented_names(&self.api_doc());
        self.conversation = Conversation::new(Some(&system_prompt(&names)));
        self.task = Some(task.to_string());
        self.mode = mode;
        self.replans = 0;
        self.pending_feedback.clear();
        self.interp = None;
        self.code = None;
        self.statement = None;
        self.robot.reset_phase();
        self.emit(EventKind::Task, json!({"task": task, "feedback_mode": mode, "baseline": self.config.baseline}));
        self.state = SessionState::Planning;
        Ok(())
    }

    /// Makes one unit of progress: a planning round or one statement.
    /// Returns false when the session is blocked or finished.
    pub fn advance(&mut self) -> bool {
        match self.state {
            SessionState::Planning => {
                self.plan();
                true
            }
            SessionState::Executing => {
                self.execute_step();
                true
            }
            _ => false,
        }
    }

    pub fn advance_until_blocked(&mut self) -> &SessionState {
        while self.advance() {}
        &self.state
    }

    fn fail(&mut self, code: &str, message: &str) {
        self.emit(EventKind::TaskFailed, json!({"code": code, "message": message, "replans": self.replans}));
        self.teacher.cancel();
        self.interp = None;
        self.state = SessionState::Failed { code: code.into(), message: message.into() };
    }

    fn finish(&mut self) {
        self.emit(EventKind::TaskDone, json!({"replans": self.replans, "library_version": self.library.version()}));
        self.interp = None;
        self.state = SessionState::Done;
    }

    fn plan(&mut self) {
        let task = self.task.clone().unwrap_or_default();
        let desc = match self.robot.describe(self.config.grounded) {
            Ok((_, d)) => d,
            Err(e) => return self.fail(&e.code(), &e.to_string()),
        };
        self.emit(
            EventKind::SceneDescription,
            json!({"text": desc.text, "mentions": desc.mentions, "grounded": self.config.grounded}),
        );
        let mut message: Vec<String> =
            self.pending_feedback.drain(..).map(|(s, t)| feedback_message(&t, s)).collect();
        message.push(build_step1_prompt(&desc.text, &task));
        if let Err(e) = self.conversation.push(Role::User, &message.join("\n")) {
            return self.fail("PlannerFailure", &e.to_string());
        }
        let version = self.library.version();
        let api_doc = self.api_doc();
        let plan = match request_plan(self.planner.as_mut(), &mut self.conversation, &api_doc) {
            Ok(p) => p,
            Err(e) => return self.fail(SessionError::PlannerFailure(e.clone()).code(), &format!("{}: {e}", e.code())),
        };
        self.emit(EventKind::NlPlan, json!({"text": plan.nl_steps}));
        self.emit(
            EventKind::CodePlan,
            json!({"code": plan.code, "attempt": self.replans, "library_version": version}),
        );
        self.code = Some(plan.code.clone());
        self.statement = None;
        match parse(&plan.code) {
            Ok(program) => {
                self.interp = Some(Interpreter::new(&program).with_source(&plan.code));
                self.robot.reset_phase();
                self.state = SessionState::Executing;
            }
            Err(e) => {
                let text = format!("the code did not parse: {e}");
                self.emit(EventKind::ExecutionFeedback, json!({"text": text, "code": "SyntaxError"}));
                self.pending_feedback.push((FeedbackSource::Execution, text.clone()));
                self.replan_or_fail("SyntaxError", &text);
            }
        }
    }

    fn replan_or_fail(&mut self, code: &str, message: &str) {
        if self.mode == FeedbackMode::None {
            return self.fail(code, message);
        }
        if self.replans >= self.config.max_replans {
            let e = SessionError::MaxReplansExceeded(self.replans);
            return self.fail(e.code(), &e.to_string());
        }
        self.replans += 1;
        let feedback: Vec<&str> = self.pending_feedback.iter().map(|(_, t)| t.as_str()).collect();
        let payload = json!({"attempt": self.replans, "feedback": feedback});
        self.emit(EventKind::Replanned, payload);
        self.interp = None;
        self.state = SessionState::Planning;
    }

    fn execute_step(&mut self) {
        let Some(mut interp) = self.interp.take() else {
            return self.fail("BadState", "no plan to execute");
        };
        let hidden = self.hidden();
        let step = {
            let mut host =
                SessionHost { robot: &mut self.robot, library: &mut self.library, hidden, saved: &mut self.saved };
            interp.step(&mut host)
        };
        let status = interp.status().clone();
        let at_end = interp.is_at_end();
        self.interp = Some(interp);
        match step {
            Step::Event(e) => {
                self.statement = Some(e.statement);
                self.emit(EventKind::Step, e.to_json());
                if let Some(err) = &e.result.error {
                    let what = e.call_name().unwrap_or("statement");
                    let text = format!("{what} failed: {}: {}", err.code, err.message);
                    self.emit(
                        EventKind::ExecutionFeedback,
                        json!({"text": text, "code": err.code, "statement": e.statement}),
                    );
                    self.pending_feedback.push((FeedbackSource::Execution, text.clone()));
                    if self.mode == FeedbackMode::Interactive {
                        self.state = SessionState::AwaitingFeedback { plan_finished: false, step_failed: true };
                    } else {
                        let code = err.code.clone();
                        self.replan_or_fail(&code, &text);
                    }
                } else if self.mode == FeedbackMode::Interactive {
                    self.state = SessionState::AwaitingFeedback { plan_finished: at_end, step_failed: false };
                } else if at_end {
                    self.finish();
                }
            }
            Step::Suspended(s) => self.on_learn_skill(s),
            Step::Done => match status {
                Status::Failed(e) => self.fail(&e.code, &e.message),
                _ if self.mode == FeedbackMode::Interactive => {
                    self.state = SessionState::AwaitingFeedback { plan_finished: true, step_failed: false }
                }
                _ => self.finish(),
            },
        }
    }

    fn resume(&mut self, result: Result<Value, ExecError>) {
        if let Some(interp) = self.interp.as_mut() {
            interp.resume(result);
        }
        self.suspension = None;
        self.requested_doc = None;
        self.state = SessionState::Executing;
    }

    fn on_learn_skill(&mut self, s: Suspension) {
        let name = match s.args.first() {
            Some(Value::Str(n)) => n.clone(),
            _ => {
                let e = ExecError { code: "TypeError".into(), message: "learn_skill takes the skill name as a string".into() };
                return self.resume(Err(e));
            }
        };
        if !valid_skill_name(&name) {
            let e = ExecError { code: "InvalidArgument".into(), message: format!("{name:?} is not a valid skill name") };
            return self.resume(Err(e));
        }
        if self.library.contains(&name) {
            return self.resume(Err(SessionError::DuplicateName(name).exec_error()));
        }
        self.teacher.request(&name);
        self.suspension = Some(s);
        self.requested_doc = match self.config.detail {
            DocDetail::NameAndDocstring => {
                request_docstring(self.planner.as_mut(), &mut self.conversation, &name).ok().filter(|d| !d.is_empty())
            }
            DocDetail::NameOnly => None,
        };
        self.emit(EventKind::SkillRequested, json!({"skill": name, "docstring": self.requested_doc}));
        self.state = SessionState::Teaching { skill: name.clone(), demos: 0 };
        if let Some(path) = self.config.demo_dir.as_ref().map(|d| d.join(format!("{name}.json"))) {
            if path.exists() {
                let loaded = std::fs::read_to_string(&path)
                    .map_err(|e| SessionError::Io(format!("{}: {e}", path.display())))
                    .and_then(|t| DemoFile::from_json(&t).map_err(|e| SessionError::InvalidDemo(e.to_string())));
                let outcome = loaded.and_then(|f| {
                    self.submit_demo_file(&f)?;
                    self.finalize_skill()
                });
                if let Err(e) = outcome {
                    self.abort_teaching(e);
                }
            }
        }
    }

    pub fn submit_demo(&mut self, demo: Demonstration) -> Result<usize, SessionError> {
        let SessionState::Teaching { skill, .. } = &self.state else {
            return Err(SessionError::BadState(format!("no skill is being taught ({})", self.state.name())));
        };
        let skill = skill.clone();
        self.teacher.add_demo(demo).map_err(|e| SessionError::InvalidDemo(e.to_string()))?;
        let count = self.teacher.pending().map_or(0, |p| p.demos.len());
        self.emit(EventKind::DemoRecorded, json!({"skill": skill, "count": count}));
        self.state = SessionState::Teaching { skill, demos: count };
        Ok(count)
    }

    /// Adds every demonstration of a `demos.v1` file.
    pub fn submit_demo_file(&mut self, file: &DemoFile) -> Result<usize, SessionError> {
        if self.pending_skill().is_some_and(|s| s != file.skill) {
            return Err(SessionError::InvalidDemo(format!(
                "demonstrations are for {}, but {} is being taught",
                file.skill,
                self.pending_skill().unwrap_or_default()
            )));
        }
        let mut n = 0;
        for d in file.demonstrations() {
            n = self.submit_demo(d)?;
        }
        Ok(n)
    }

    /// Fits and registers the skill being taught, then resumes the plan
    /// with `(skill, docstring)`.
    pub fn finalize_skill(&mut self) -> Result<(), SessionError> {
        let SessionState::Teaching { skill, .. } = &self.state else {
            return Err(SessionError::BadState(format!("no skill is being taught ({})", self.state.name())));
        };
        let skill = skill.clone();
        let template = self.teacher.fit().map_err(|e| SessionError::InvalidDemo(e.to_string()))?;
        let demos = template.demo_count;
        let arity = template.arity;
        let doc = self.requested_doc.clone().unwrap_or_else(|| synthesize_docstring(&skill, arity));
        self.library
            .register(SkillRecord::learned(&skill, template, &doc))
            .map_err(|_| SessionError::DuplicateName(skill.clone()))?;
        self.teacher.cancel();
        self.emit(
            EventKind::SkillFinalized,
            json!({"skill": skill, "arity": arity, "demos": demos, "library_version": self.library.version()}),
        );
        self.resume(Ok(Value::Tuple(vec![Value::Skill(skill), Value::Str(doc)])));
        Ok(())
    }

    /// Gives up teaching; the `learn_skill` call fails with `reason`.
    pub fn abort_teaching(&mut self, reason: SessionError) {
        if matches!(self.state, SessionState::Teaching { .. }) {
            self.teacher.cancel();
            self.resume(Err(reason.exec_error()));
        }
    }

    /// Operator feedback. Empty text continues; anything else triggers a
    /// replan.
    pub fn submit_feedback(&mut self, text: &str) -> Result<(), SessionError> {
        let plan_finished = match &self.state {
            SessionState::AwaitingFeedback { plan_finished, .. } => *plan_finished,
            SessionState::Executing if self.mode == FeedbackMode::Interactive => false,
            other => return Err(SessionError::BadState(format!("feedback is not accepted while {}", other.name()))),
        };
        let text = text.trim();
        if !text.is_empty() {
            self.emit(EventKind::HumanFeedback, json!({"text": text}));
            self.pending_feedback.push((FeedbackSource::Human, text.to_string()));
        }
        if self.pending_feedback.is_empty() {
            if plan_finished {
                self.finish();
            } else {
                self.state = SessionState::Executing;
            }
            return Ok(());
        }
        let code = if text.is_empty() { "ExecutionFailed" } else { "HumanFeedback" };
        self.replan_or_fail(code, text);
        Ok(())
    }

    /// Runs a task to a terminal state, asking `operator` whenever the
    /// session blocks.
    pub fn run_task(&mut self, task: &str, mode: FeedbackMode, operator: &mut dyn Operator) -> Result<SessionState, SessionError> {
        self.start_task(task, mode)?;
        loop {
            self.advance_until_blocked();
            match self.state.clone() {
                SessionState::AwaitingFeedback { .. } => {
                    let text = operator.feedback(self).unwrap_or_default();
                    self.submit_feedback(&text)?;
                }
                SessionState::Teaching { skill, .. } => match operator.demonstrations(&skill, self) {
                    Some(demos) => {
                        let outcome = demos.into_iter().try_for_each(|d| self.submit_demo(d).map(|_| ()));
                        if let Err(e) = outcome.and_then(|_| self.finalize_skill()) {
                            self.abort_teaching(e);
                        }
                    }
                    None => self.abort_teaching(SessionError::DemoSourceUnavailable(skill)),
                },
                s if s.is_terminal() => return Ok(s),
                s => return Err(SessionError::BadState(format!("stuck while {}", s.name()))),
            }
        }
    }

    /// Everything a viewer needs to draw the session.
    pub fn state_json(&self) -> serde_json::Value {
        let records: Vec<&SkillRecord> = self.library.records().collect();
        json!({
            "state": self.state,
            "task": self.task,
            "feedback_mode": self.mode,
            "world": snapshot(self.robot.world()),
            "library": records,
            "library_version": self.library.version(),
            "conversation": self.conversation,
            "code": self.code,
            "current_statement": self.statement,
            "pending_skill": self.teacher.pending().map(|p| json!({"skill": p.name, "demos": p.demos.len()})),
            "events": self.events.len(),
        })
    }

    /// Writes the event log as `events.v1` JSON lines.
    pub fn write_event_log(&self, path: &Path) -> Result<(), SessionError> {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| SessionError::Io(format!("{}: {e}", path.display())))
    }

    pub fn read_event_log(path: &Path) -> Result<Vec<SessionEvent>, SessionError> {
        let text = std::fs::read_to_string(path).map_err(|e| SessionError::Io(format!("{}: {e}", path.display())))?;
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| SessionError::Io(format!("{}: {e}", path.display()))))
            .collect()
    }

    /// Saves the library, event log and conversation.
    pub fn persist(&self, path: &Path) -> Result<(), SessionError> {
        let doc = SessionDoc {
            schema: SESSION_SCHEMA.into(),
            library: self.library.records().cloned().collect(),
            events: self.events.clone(),
            conversation: self.conversation.clone(),
        };
        let text = serde_json::to_string_pretty(&doc).expect("session serializes");
        std::fs::write(path, text).map_err(|e| SessionError::Io(format!("{}: {e}", path.display())))
    }

    /// Restores a persisted session around a fresh robot; the restored
    /// session is idle.
    pub fn load(path: &Path, robot: Robot, planner: Box<dyn PlannerPort>, config: SessionConfig) -> Result<Self, SessionError> {
        let io = |e: String| SessionError::Io(format!("{}: {e}", path.display()));
        let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
        let doc: SessionDoc = serde_json::from_str(&text).map_err(|e| io(e.to_string()))?;
        if doc.schema != SESSION_SCHEMA {
            return Err(io(format!("schema {:?}, expected {SESSION_SCHEMA:?}", doc.schema)));
        }
        let records = serde_json::to_string(&doc.library).expect("records serialize");
        let library = SkillLibrary::from_json(&records).map_err(|e| io(e.to_string()))?;
        let mut s = Session::new(robot, library, planner, config);
        s.events = doc.events;
        s.conversation = doc.conversation;
        Ok(s)
    }
}

#[cfg(test)]
mod tests;

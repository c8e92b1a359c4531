use indexmap::IndexMap;
use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use super::{
    documented_names, extract_code, split_feedback, split_step1_prompt, synthesize_docstring, Conversation, Message,
    PlannerError, PlannerPort, Role, CODE_INSTRUCTION, DOCSTRING_REQUEST, STEP1_QUESTION,
};
use crate::plan::{parse, requested_skills, static_call_names, static_calls};

pub const PLANS_SCHEMA: &str = "plans.v1";

/// Names a plan may call without them being documented.
const ALWAYS_AVAILABLE: [&str; 2] = ["print", "len"];

/// One canned answer: chosen when the task matches `task`, every word in
/// `scene` occurs in the scene description, and (if set) the latest
/// feedback matches `feedback`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub id: String,
    pub task: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scene: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<String>,
    pub nl_steps: String,
    pub code: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanTable {
    pub schema: String,
    pub plans: Vec<PlanEntry>,
    #[serde(default)]
    pub docstrings: IndexMap<String, String>,
}

fn pattern(p: &str) -> Result<Regex, PlannerError> {
    RegexBuilder::new(p).case_insensitive(true).build().map_err(|e| PlannerError::Config(e.to_string()))
}

impl PlanTable {
    pub fn from_json(text: &str) -> Result<Self, PlannerError> {
        let t: PlanTable =
            serde_json::from_str(text).map_err(|e| PlannerError::Config(format!("bad {PLANS_SCHEMA} file: {e}")))?;
        if t.schema != PLANS_SCHEMA {
            return Err(PlannerError::Config(format!("expected schema {PLANS_SCHEMA}, found {}", t.schema)));
        }
        for e in &t.plans {
            pattern(&e.task)?;
            if let Some(f) = &e.feedback {
                pattern(f)?;
            }
            parse(&e.code).map_err(|err| PlannerError::Config(format!("plan {}: {err}", e.id)))?;
        }
        Ok(t)
    }

    /// The table shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_json(include_str!("../../fixtures/plans.v1.json")).expect("bundled plans are valid")
    }
}

struct Compiled {
    task: Regex,
    feedback: Option<Regex>,
    /// Calls the code makes that must already be documented.
    needs: Vec<String>,
    learns: Vec<String>,
}

/// Table-driven planner. Answers are a pure function of the conversation.
pub struct ScriptedPlanner {
    table: PlanTable,
    compiled: Vec<Compiled>,
}

impl Default for ScriptedPlanner {
    fn default() -> Self {
        Self::new(PlanTable::bundled())
    }
}

struct Request<'a> {
    task: String,
    description: String,
    feedback: Vec<&'a str>,
    available: Vec<String>,
}

fn step1_part(m: &Message) -> Option<(String, String)> {
    if m.role != Role::User {
        return None;
    }
    let body: Vec<&str> = m.content.lines().filter(|l| split_feedback(l).is_none()).collect();
    split_step1_prompt(&body.join("\n"))
}

fn system_names(m: &Message) -> Vec<String> {
    let Some((_, list)) = m.content.split_once("functions: ") else { return vec![] };
    list.trim_end().trim_end_matches('.').split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

impl ScriptedPlanner {
    pub fn new(table: PlanTable) -> Self {
        let compiled = table
            .plans
            .iter()
            .map(|e| {
                let program = parse(&e.code).expect("validated on load");
                let learns = requested_skills(&program);
                let needs = static_call_names(&program)
                    .into_iter()
                    .filter(|n| !learns.contains(n) && !ALWAYS_AVAILABLE.contains(&n.as_str()))
                    .collect();
                Compiled {
                    task: pattern(&e.task).expect("validated on load"),
                    feedback: e.feedback.as_deref().map(|f| pattern(f).expect("validated on load")),
                    needs,
                    learns,
                }
            })
            .collect();
        Self { table, compiled }
    }

    pub fn table(&self) -> &PlanTable {
        &self.table
    }

    fn request<'a>(&self, messages: &'a [Message]) -> Option<Request<'a>> {
        let k = messages.iter().rposition(|m| step1_part(m).is_some())?;
        let (description, task) = step1_part(&messages[k])?;
        let feedback = messages[k..]
            .iter()
            .filter(|m| m.role == Role::User)
            .flat_map(|m| m.content.lines())
            .filter_map(|l| split_feedback(l).map(|(_, t)| t))
            .collect();
        let mut available = vec![];
        for m in messages {
            match m.role {
                Role::System => available.extend(system_names(m)),
                Role::User if m.content.ends_with(CODE_INSTRUCTION) => available.extend(documented_names(&m.content)),
                _ => {}
            }
        }
        Some(Request { task, description: description.to_lowercase(), feedback, available })
    }

    fn eligible(&self, i: usize, req: &Request) -> bool {
        let (e, c) = (&self.table.plans[i], &self.compiled[i]);
        c.task.is_match(&req.task)
            && e.scene.iter().all(|w| req.description.contains(&w.to_lowercase()))
            && c.needs.iter().all(|n| req.available.contains(n))
            && c.learns.iter().all(|n| !req.available.contains(n))
    }

    /// Index of the entry answering the conversation, if any.
    pub fn select(&self, messages: &[Message]) -> Option<usize> {
        let req = self.request(messages)?;
        for line in req.feedback.iter().rev() {
            let hit = (0..self.compiled.len())
                .find(|&i| self.compiled[i].feedback.as_ref().is_some_and(|f| f.is_match(line)) && self.eligible(i, &req));
            if hit.is_some() {
                return hit;
            }
        }
        (0..self.compiled.len()).find(|&i| self.compiled[i].feedback.is_none() && self.eligible(i, &req))
    }

    fn docstring(&self, messages: &[Message], request: &str) -> String {
        let name = request
            .trim_start_matches(DOCSTRING_REQUEST)
            .trim()
            .split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .next()
            .unwrap_or_default()
            .to_string();
        if let Some(d) = self.table.docstrings.get(&name) {
            return d.clone();
        }
        let arity = messages
            .iter()
            .rev()
            .filter(|m| m.role == Role::Assistant)
            .find_map(|m| {
                let program = parse(&extract_code(&m.content).ok()?).ok()?;
                static_calls(&program).into_iter().find(|c| c.name == name).map(|c| c.args.len())
            })
            .unwrap_or(1);
        synthesize_docstring(&name, arity.clamp(1, 2))
    }
}

const NO_PLAN: &str = "I cannot find a way to do this with the functions available.";

impl PlannerPort for ScriptedPlanner {
    fn name(&self) -> &str {
        "scripted"
    }

    fn respond(&mut self, conversation: &Conversation) -> Result<String, PlannerError> {
        let messages = conversation.messages();
        let last = match messages.last() {
            Some(m) if m.role == Role::User => m,
            _ => return Err(PlannerError::Config("the conversation must end with a user message".into())),
        };
        if last.content.starts_with(DOCSTRING_REQUEST) {
            return Ok(self.docstring(messages, &last.content));
        }
        if last.content.ends_with(CODE_INSTRUCTION) {
            // answer with the code of the entry that produced the steps
            let prefix = &messages[..messages.len().saturating_sub(2)];
            return Ok(match self.select(prefix) {
                Some(i) => format!("```python\n{}```", self.table.plans[i].code),
                None => NO_PLAN.to_string(),
            });
        }
        if self.request(messages).is_none() {
            let head = STEP1_QUESTION.split("{task}").next().unwrap_or_default();
            return Err(PlannerError::Config(format!("no step-one prompt (\"{head}...\") in the conversation")));
        }
        Ok(match self.select(messages) {
            Some(i) => self.table.plans[i].nl_steps.clone(),
            None => NO_PLAN.to_string(),
        })
    }
}

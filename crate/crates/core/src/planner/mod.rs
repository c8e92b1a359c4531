//! Two-round planning over a chat conversation: natural-language steps
//! first, then code against the skill API.

mod http;
mod scripted;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan::{parse, Program, StmtKind};

pub use http::{HttpPlanner, HttpPlannerConfig, DEFAULT_TIMEOUT};
pub use scripted::{PlanEntry, PlanTable, ScriptedPlanner, PLANS_SCHEMA};

/// The step-one question, verbatim prompt data.
pub const STEP1_QUESTION: &str = "If you are commanding a robot, tell me in words the steps to {task}?";

pub const CODE_INSTRUCTION: &str = "Using only the functions documented above, write the code that carries out the steps you described. \
Reply with a single ``` fenced code block. Object ids come from the functions, never from guesses.";

pub const DOCSTRING_REQUEST: &str = "Write the docstring for the new skill";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackSource {
    Execution,
    Human,
}

impl FeedbackSource {
    pub fn tag(self) -> &'static str {
        match self {
            FeedbackSource::Execution => "[execution feedback]",
            FeedbackSource::Human => "[human feedback]",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConversationError {
    #[error("a {0:?} message cannot follow a {1:?} message")]
    RoleOrder(Role, Role),
}

/// Append-only chat history. After the optional system message, user and
/// assistant messages alternate, starting with the user.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Conversation {
    messages: Vec<Message>,
    /// Upper bound on characters sent to a remote planner; the oldest
    /// non-system messages are left out first. The history itself keeps
    /// everything.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_chars: Option<usize>,
}

impl Conversation {
    pub fn new(system: Option<&str>) -> Self {
        let messages = system.map(|s| vec![Message { role: Role::System, content: s.into() }]).unwrap_or_default();
        Self { messages, budget_chars: None }
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn last(&self) -> Option<&Message> {
        self.messages.last()
    }

    pub fn push(&mut self, role: Role, content: &str) -> Result<(), ConversationError> {
        let prev = self.messages.last().map(|m| m.role);
        let ok = match (prev, role) {
            (_, Role::System) => prev.is_none(),
            (None | Some(Role::System) | Some(Role::Assistant), Role::User) => true,
            (Some(Role::User), Role::Assistant) => true,
            _ => false,
        };
        if !ok {
            return Err(ConversationError::RoleOrder(role, prev.unwrap_or(Role::System)));
        }
        self.messages.push(Message { role, content: content.into() });
        Ok(())
    }

    /// Messages to send under the character budget: the system message and
    /// the longest suffix that fits (at least the last message).
    pub fn window(&self) -> Vec<&Message> {
        let Some(budget) = self.budget_chars else { return self.messages.iter().collect() };
        let (system, rest): (Vec<&Message>, Vec<&Message>) = self.messages.iter().partition(|m| m.role == Role::System);
        let mut used: usize = system.iter().map(|m| m.content.len()).sum();
        let mut start = rest.len();
        while start > 0 && (start == rest.len() || used + rest[start - 1].content.len() <= budget) {
            used += rest[start - 1].content.len();
            start -= 1;
        }
        // a window never opens on an assistant reply
        while start < rest.len().saturating_sub(1) && rest[start].role == Role::Assistant {
            start += 1;
        }
        system.into_iter().chain(rest[start..].iter().copied()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("planner request timed out")]
    PortTimeout,
    #[error("planner endpoint answered with HTTP status {0}")]
    PortHttpError(u16),
    #[error("no code found in the planner's answer")]
    NoCodeFound,
    #[error("planner transport failed: {0}")]
    Transport(String),
    #[error("planner configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Conversation(#[from] ConversationError),
}

impl PlannerError {
    pub fn code(&self) -> &'static str {
        match self {
            PlannerError::PortTimeout => "PortTimeout",
            PlannerError::PortHttpError(_) => "PortHTTPError",
            PlannerError::NoCodeFound => "NoCodeFound",
            PlannerError::Transport(_) => "Transport",
            PlannerError::Config(_) => "Config",
            PlannerError::Conversation(_) => "Conversation",
        }
    }
}

/// Something that answers the next turn of a conversation.
pub trait PlannerPort: Send {
    fn name(&self) -> &str;
    fn respond(&mut self, conversation: &Conversation) -> Result<String, PlannerError>;
}

pub fn build_step1_prompt(description: &str, task: &str) -> String {
    let question = STEP1_QUESTION.replace("{task}", task.trim());
    if description.trim().is_empty() {
        question
    } else {
        format!("{} {question}", description.trim_end())
    }
}

pub fn build_step2_prompt(api_doc: &str) -> String {
    format!("{}\n{CODE_INSTRUCTION}", api_doc.trim_end_matches('\n').to_string() + "\n")
}

pub fn build_docstring_prompt(skill: &str) -> String {
    format!("{DOCSTRING_REQUEST} {skill}: what it does, its arguments, and when it should not be used.")
}

/// Splits a step-one prompt back into scene description and task.
pub fn split_step1_prompt(prompt: &str) -> Option<(String, String)> {
    let (head, _) = STEP1_QUESTION.split_once("{task}")?;
    let (desc, rest) = match prompt.rfind(head) {
        Some(i) => (&prompt[..i], &prompt[i + head.len()..]),
        // the published fixtures also phrase it "in the words"
        None => {
            let alt = head.replace("in words", "in the words");
            let i = prompt.rfind(&alt)?;
            (&prompt[..i], &prompt[i + alt.len()..])
        }
    };
    let task = rest.trim().trim_end_matches('?').trim();
    Some((desc.trim().to_string(), task.to_string()))
}

pub fn feedback_message(text: &str, source: FeedbackSource) -> String {
    format!("{} {}", source.tag(), text.trim())
}

/// Parses a tagged feedback message.
pub fn split_feedback(message: &str) -> Option<(FeedbackSource, &str)> {
    [FeedbackSource::Execution, FeedbackSource::Human]
        .into_iter()
        .find_map(|s| message.strip_prefix(s.tag()).map(|rest| (s, rest.trim())))
}

/// Appends outcome or execution feedback as a user message.
pub fn inject_feedback(conversation: &mut Conversation, text: &str, source: FeedbackSource) -> Result<(), PlannerError> {
    conversation.push(Role::User, &feedback_message(text, source))?;
    Ok(())
}

fn has_code(p: &Program) -> bool {
    p.body.iter().any(|s| !matches!(s.kind, StmtKind::Comment(_)))
}

/// The first fenced block, or failing that the longest run of trailing
/// lines that parses as a plan.
pub fn extract_code(response: &str) -> Result<String, PlannerError> {
    let lines: Vec<&str> = response.lines().collect();
    if let Some(open) = lines.iter().position(|l| l.trim_start().starts_with("```")) {
        let close = lines[open + 1..].iter().position(|l| l.trim_start().starts_with("```")).map(|c| c + open + 1);
        let body = &lines[open + 1..close.unwrap_or(lines.len())];
        let code = body.join("\n");
        if !code.trim().is_empty() {
            return Ok(code + "\n");
        }
    }
    for start in 0..lines.len() {
        let candidate = lines[start..].join("\n");
        if let Ok(p) = parse(&candidate) {
            if has_code(&p) {
                return Ok(candidate + "\n");
            }
        }
    }
    Err(PlannerError::NoCodeFound)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanText {
    pub nl_steps: String,
    pub code: String,
}

/// Runs both rounds. The conversation must end with the user message the
/// planner should answer first (a step-one prompt or feedback).
pub fn request_plan(port: &mut dyn PlannerPort, conversation: &mut Conversation, api_doc: &str) -> Result<PlanText, PlannerError> {
    let nl_steps = port.respond(conversation)?;
    conversation.push(Role::Assistant, &nl_steps)?;
    conversation.push(Role::User, &build_step2_prompt(api_doc))?;
    let answer = port.respond(conversation)?;
    conversation.push(Role::Assistant, &answer)?;
    let code = extract_code(&answer)?;
    Ok(PlanText { nl_steps, code })
}

/// Asks the planner for a new skill's docstring.
pub fn request_docstring(port: &mut dyn PlannerPort, conversation: &mut Conversation, skill: &str) -> Result<String, PlannerError> {
    conversation.push(Role::User, &build_docstring_prompt(skill))?;
    let answer = port.respond(conversation)?;
    conversation.push(Role::Assistant, &answer)?;
    Ok(strip_fences(&answer))
}

fn strip_fences(text: &str) -> String {
    text.lines().filter(|l| !l.trim_start().starts_with("```")).collect::<Vec<_>>().join("\n").trim().to_string()
}

/// Docstring made from a skill's name alone.
pub fn synthesize_docstring(skill: &str, arity: usize) -> String {
    let mut doc = format!("performs `{}` with the given objects\nArguments:\n", skill.replace('_', " "));
    doc.push_str("    object_id_1: int\n        id of the object to act upon\n");
    if arity > 1 {
        doc.push_str("    object_id_2: int\n        id of the object to act relative to\n");
    }
    doc.push_str("Returns:\n    None");
    doc
}

/// Skill names documented in an API listing (unindented headers).
pub fn documented_names(api_doc: &str) -> Vec<String> {
    api_doc
        .lines()
        .filter(|l| !l.starts_with(' ') && !l.starts_with('\t'))
        .filter_map(|l| l.split_once('(').map(|(n, _)| n.trim()))
        .filter(|n| !n.is_empty() && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
        .map(str::to_string)
        .collect()
}

pub fn system_prompt(names: &[String]) -> String {
    format!(
        "You plan tasks for a robot arm working on a tabletop. The robot is driven through these functions: {}.",
        names.join(", ")
    )
}

#[cfg(test)]
mod tests;

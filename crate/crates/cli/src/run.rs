use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::Args;
use skillplan::fixtures::ExpertOperator;
use skillplan::learning::{DemoFile, Demonstration};
use skillplan::session::{
    EventKind, FeedbackMode, Operator, Session, SessionConfig, SessionError, SessionEvent, SessionState, Silent,
};
use skillplan::world::FailureKind;

use crate::config::{
    config_err, load_library, load_scene, load_thresholds, robot, save_library, CliError, DetailChoice, PlannerArgs,
    PlannerChoice,
};

#[derive(Args, Clone, Debug)]
pub struct RunArgs {
    /// scene.v1 file or bundled scene name.
    #[arg(long)]
    pub scene: String,
    #[arg(long)]
    pub task: String,
    #[command(flatten)]
    pub planner: PlannerArgs,
    /// Skill library (skills.v1); learned skills are written back.
    #[arg(long, value_name = "FILE")]
    pub skills: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub thresholds: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "none", value_parser = parse_mode)]
    pub feedback: FeedbackMode,
    /// Event log (events.v1 JSON lines).
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
    /// Directory of `<skill>.json` demonstration files.
    #[arg(long, value_name = "DIR")]
    pub demos: Option<PathBuf>,
    /// Hide learn_skill from the planner.
    #[arg(long)]
    pub baseline: bool,
    /// Describe the scene without relations.
    #[arg(long)]
    pub ungrounded: bool,
    #[arg(long, value_enum, default_value = "name-and-docstring")]
    pub detail: DetailChoice,
    #[arg(long)]
    pub max_replans: Option<usize>,
    /// Answer feedback and skill requests with the scripted expert.
    #[arg(long)]
    pub expert: bool,
    /// Probability that a grasped object slips.
    #[arg(long, default_value_t = 0.0)]
    pub slip: f64,
    /// Probability that a placed object topples.
    #[arg(long, default_value_t = 0.0)]
    pub topple: f64,
    /// Only print the final state.
    #[arg(long, short)]
    pub quiet: bool,
}

pub(crate) fn parse_mode(s: &str) -> Result<FeedbackMode, String> {
    s.parse()
}

/// Asks a person on a terminal.
pub struct PromptOperator<R, W> {
    input: R,
    out: W,
}

impl<R: BufRead, W: Write> PromptOperator<R, W> {
    pub fn new(input: R, out: W) -> Self {
        Self { input, out }
    }

    fn ask(&mut self, prompt: &str) -> Option<String> {
        let _ = write!(self.out, "{prompt}");
        let _ = self.out.flush();
        let mut line = String::new();
        match self.input.read_line(&mut line) {
            Ok(0) | Err(_) => None,
            Ok(_) => Some(line.trim().to_string()),
        }
    }
}

impl<R: BufRead, W: Write> Operator for PromptOperator<R, W> {
    fn feedback(&mut self, session: &Session) -> Option<String> {
        let what = match session.state() {
            SessionState::AwaitingFeedback { plan_finished: true, .. } => "plan finished",
            SessionState::AwaitingFeedback { step_failed: true, .. } => "step failed",
            _ => "step done",
        };
        self.ask(&format!("[{what}] feedback (empty to continue): "))
    }

    fn demonstrations(&mut self, skill: &str, _session: &Session) -> Option<Vec<Demonstration>> {
        loop {
            let path = self.ask(&format!("demonstrations for {skill} (demos.v1 file, empty to give up): "))?;
            if path.is_empty() {
                return None;
            }
            match std::fs::read_to_string(&path).map_err(|e| e.to_string()).and_then(|t| {
                DemoFile::from_json(&t).map_err(|e| e.to_string())
            }) {
                Ok(f) if f.skill == skill => return Some(f.demonstrations()),
                Ok(f) => {
                    let _ = writeln!(self.out, "{path} holds demonstrations for {}", f.skill);
                }
                Err(e) => {
                    let _ = writeln!(self.out, "{path}: {e}");
                }
            }
        }
    }
}

fn clip(s: &str, n: usize) -> String {
    let line = s.lines().find(|l| !l.trim().is_empty()).unwrap_or("").trim();
    let more = s.trim().lines().count() > 1 || line.chars().count() > n;
    let mut out: String = line.chars().take(n).collect();
    if more {
        out.push_str(" ...");
    }
    out
}

pub fn kind_name(kind: EventKind) -> String {
    serde_json::to_value(kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

/// One line per event.
pub fn summarize(e: &SessionEvent) -> String {
    let p = &e.payload;
    let s = |k: &str| p[k].as_str().unwrap_or("").to_string();
    let kind = kind_name(e.kind);
    let detail = match kind.as_str() {
        "task" => s("task"),
        "scene-description" | "nl-plan" | "execution-feedback" | "human-feedback" => clip(&s("text"), 72),
        "code-plan" => format!("attempt {}: {}", p["attempt"], clip(&s("code"), 60)),
        "step" => {
            let status = p["result"]["error"]["code"].as_str().unwrap_or("ok");
            format!("#{} {} [{status}]", p["statement"], clip(&s("source"), 60))
        }
        "skill-requested" | "skill-finalized" => s("skill"),
        "demo-recorded" => format!("{} ({})", s("skill"), p["count"]),
        "replanned" => format!("attempt {}", p["attempt"]),
        "task-done" => format!("replans {}", p["replans"]),
        "task-failed" => format!("{}: {}", s("code"), clip(&s("message"), 60)),
        _ => String::new(),
    };
    format!("{:>4} {:<19}{}", e.ts, kind, detail)
}

/// Runs one task; `Ok` with the terminal session.
pub fn run_session(args: &RunArgs, operator: Option<&mut dyn Operator>) -> Result<Session, CliError> {
    let mut world = load_scene(&args.scene, args.seed)?;
    for (kind, p) in [(FailureKind::GraspSlip, args.slip), (FailureKind::PlaceTopple, args.topple)] {
        if p > 0.0 {
            world.inject_failure(kind, p).map_err(|e| CliError::Config(e.to_string()))?;
        }
    }
    let thresholds = load_thresholds(args.thresholds.as_deref())?;
    let library = load_library(args.skills.as_deref())?;
    if let Some(d) = &args.demos {
        if !d.is_dir() {
            return Err(config_err(d, "not a directory"));
        }
    }
    let planner = args.planner.factory(PlannerChoice::Scripted)?.build();
    let mut config = SessionConfig {
        baseline: args.baseline,
        detail: args.detail.into(),
        grounded: !args.ungrounded,
        demo_dir: args.demos.clone(),
        ..SessionConfig::default()
    };
    if let Some(m) = args.max_replans {
        config.max_replans = m;
    }
    let mut session = Session::new(robot(world, thresholds), library, planner, config);
    let mut expert = ExpertOperator::watchful(args.seed.unwrap_or(0));
    let mut prompt = PromptOperator::new(std::io::stdin().lock(), std::io::stderr());
    let op: &mut dyn Operator = match operator {
        Some(op) => op,
        None if args.expert => &mut expert,
        None if args.feedback == FeedbackMode::Interactive => &mut prompt,
        None => &mut Silent,
    };
    let outcome = session.run_task(&args.task, args.feedback, op);
    if let Some(log) = &args.log {
        session.write_event_log(log).map_err(|e| CliError::Config(e.to_string()))?;
    }
    if let Some(path) = &args.skills {
        save_library(path, session.library())?;
    }
    match outcome {
        Ok(_) => Ok(session),
        Err(SessionError::EmptyTask) => Err(CliError::Config("the task is empty".into())),
        Err(e) => Err(CliError::Failed(e.to_string())),
    }
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let session = run_session(args, None)?;
    if !args.quiet {
        for e in session.events() {
            println!("{}", summarize(e));
        }
    }
    match session.state() {
        SessionState::Done => {
            println!("done");
            Ok(())
        }
        SessionState::Failed { code, message } => Err(CliError::Failed(format!("task failed: {code}: {message}"))),
        other => Err(CliError::Failed(format!("task stopped while {}", other.name()))),
    }
}

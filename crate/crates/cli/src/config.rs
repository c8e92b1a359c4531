use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use skillplan::fixtures::{scene, SCENE_NAMES};
use skillplan::planner::{HttpPlanner, PlanTable, PlannerPort, ScriptedPlanner};
use skillplan::skills::{DocDetail, Robot, SkillLibrary};
use skillplan::thresholds::Thresholds;
use skillplan::world::snapshot::load_json;
use skillplan::world::WorldState;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, missing or malformed input files. Exit code 2.
    #[error("{0}")]
    Config(String),
    /// The task or evaluation ran and failed. Exit code 1.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

pub(crate) fn config_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlannerChoice {
    /// Canned responses from a plan table.
    Scripted,
    /// Chat endpoint from PLANNER_ENDPOINT, PLANNER_MODEL, PLANNER_API_KEY.
    Llm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DetailChoice {
    NameOnly,
    NameAndDocstring,
}

impl From<DetailChoice> for DocDetail {
    fn from(d: DetailChoice) -> Self {
        match d {
            DetailChoice::NameOnly => DocDetail::NameOnly,
            DetailChoice::NameAndDocstring => DocDetail::NameAndDocstring,
        }
    }
}

/// Planner selection shared by every command.
#[derive(Args, Clone, Debug, Default)]
pub struct PlannerArgs {
    #[arg(long, value_enum)]
    pub planner: Option<PlannerChoice>,
    /// Plan table (plans.v1) for the scripted planner; defaults to the
    /// bundled table.
    #[arg(long, value_name = "FILE")]
    pub plans: Option<PathBuf>,
}

impl PlannerArgs {
    pub fn choice(&self, default: PlannerChoice) -> PlannerChoice {
        self.planner.unwrap_or(default)
    }

    /// Checks that a planner of this choice can be built.
    pub fn factory(&self, default: PlannerChoice) -> Result<PlannerFactory, CliError> {
        match self.choice(default) {
            PlannerChoice::Scripted => {
                let table = match &self.plans {
                    Some(p) => {
                        let text = std::fs::read_to_string(p).map_err(|e| config_err(p, e))?;
                        PlanTable::from_json(&text).map_err(|e| config_err(p, e))?
                    }
                    None => PlanTable::bundled(),
                };
                Ok(PlannerFactory::Scripted(table))
            }
            PlannerChoice::Llm => {
                HttpPlanner::from_env().map_err(|e| CliError::Config(e.to_string()))?;
                Ok(PlannerFactory::Llm)
            }
        }
    }
}

/// Builds fresh planners of one kind.
#[derive(Clone, Debug)]
pub enum PlannerFactory {
    Scripted(PlanTable),
    Llm,
}

impl PlannerFactory {
    pub fn build(&self) -> Box<dyn PlannerPort> {
        match self {
            PlannerFactory::Scripted(t) => Box::new(ScriptedPlanner::new(t.clone())),
            PlannerFactory::Llm => Box::new(HttpPlanner::from_env().expect("checked when the factory was made")),
        }
    }
}

/// A scene file (scene.v1) or the name of a bundled scene. A `--seed`
/// reseeds the world's failure draws; bundled scenes are built with it.
pub fn load_scene(spec: &str, seed: Option<u64>) -> Result<WorldState, CliError> {
    let path = Path::new(spec);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(path, e))?;
        let mut w = load_json(&text).map_err(|e| config_err(path, e))?;
        if let Some(s) = seed {
            w.reseed(s);
        }
        return Ok(w);
    }
    scene(spec, seed.unwrap_or(0)).ok_or_else(|| {
        CliError::Config(format!("scene file {spec} not found (bundled scenes: {})", SCENE_NAMES.join(", ")))
    })
}

pub fn load_thresholds(path: Option<&Path>) -> Result<Thresholds, CliError> {
    match path {
        None => Ok(Thresholds::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| config_err(p, e))?;
            Thresholds::from_json(&text).map_err(|e| config_err(p, e))
        }
    }
}

/// Library at `path`; a missing file is an empty library that will be
/// created on save.
pub fn load_library(path: Option<&Path>) -> Result<SkillLibrary, CliError> {
    match path {
        Some(p) if p.exists() => {
            let text = std::fs::read_to_string(p).map_err(|e| config_err(p, e))?;
            SkillLibrary::from_json(&text).map_err(|e| config_err(p, e))
        }
        _ => Ok(SkillLibrary::new()),
    }
}

pub fn save_library(path: &Path, library: &SkillLibrary) -> Result<(), CliError> {
    std::fs::write(path, library.to_json()).map_err(|e| config_err(path, e))
}

pub fn robot(world: WorldState, thresholds: Thresholds) -> Robot {
    Robot::new(world).with_thresholds(thresholds)
}

use std::path::PathBuf;

use clap::{Args, Subcommand};
use skillplan::fixtures::{taught_skill, TAUGHT_SKILLS};
use skillplan::learning::{fit_template, DemoFile};
use skillplan::planner::synthesize_docstring;
use skillplan::session::SESSION_SCHEMA;
use skillplan::skills::{SkillLibrary, SkillRecord};

use crate::config::{config_err, load_library, save_library, CliError};

#[derive(Subcommand, Clone, Debug)]
pub enum SkillsCommand {
    /// Write the learned skills of a library or saved session as skills.v1.
    Export(ExportArgs),
    /// Merge skills.v1 files into a library.
    Import(ImportArgs),
    /// Fit a skill from a demos.v1 file and add it to a library.
    Teach(TeachArgs),
}

#[derive(Args, Clone, Debug)]
pub struct ExportArgs {
    /// Library file (skills.v1).
    #[arg(long, value_name = "FILE", conflicts_with_all = ["session", "bundled"])]
    pub skills: Option<PathBuf>,
    /// Saved session (session.v1).
    #[arg(long, value_name = "FILE")]
    pub session: Option<PathBuf>,
    /// The skills taught by the bundled expert demonstrations.
    #[arg(long)]
    pub bundled: bool,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
pub struct ImportArgs {
    /// skills.v1 files to merge.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Target library; created when missing.
    #[arg(long, value_name = "FILE")]
    pub skills: PathBuf,
}

#[derive(Args, Clone, Debug)]
pub struct TeachArgs {
    /// demos.v1 file.
    pub demos: PathBuf,
    #[arg(long)]
    pub docstring: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub skills: PathBuf,
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| config_err(path, e))
}

pub fn export(args: &ExportArgs) -> Result<String, CliError> {
    let library = if let Some(p) = &args.session {
        let text = read(p)?;
        let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| config_err(p, e))?;
        if doc["schema"] != SESSION_SCHEMA {
            return Err(config_err(p, format!("not a {} document", SESSION_SCHEMA)));
        }
        SkillLibrary::from_json(&doc["library"].to_string()).map_err(|e| config_err(p, e))?
    } else if args.bundled {
        let mut lib = SkillLibrary::new();
        for s in TAUGHT_SKILLS {
            lib.register(taught_skill(s).expect("bundled skill fits")).expect("distinct names");
        }
        lib
    } else if let Some(p) = &args.skills {
        if !p.exists() {
            return Err(config_err(p, "no such file"));
        }
        load_library(Some(p))?
    } else {
        return Err(CliError::Config("one of --skills, --session or --bundled is required".into()));
    };
    Ok(library.to_json())
}

pub fn import(args: &ImportArgs) -> Result<Vec<String>, CliError> {
    let mut library = load_library(Some(&args.skills))?;
    let mut added = vec![];
    for f in &args.files {
        added.extend(library.import_json(&read(f)?).map_err(|e| config_err(f, e))?);
    }
    save_library(&args.skills, &library)?;
    Ok(added)
}

pub fn teach(args: &TeachArgs) -> Result<SkillRecord, CliError> {
    let file = DemoFile::from_json(&read(&args.demos)?).map_err(|e| config_err(&args.demos, e))?;
    let template = fit_template(&file.demonstrations()).map_err(|e| config_err(&args.demos, e))?;
    let doc = args.docstring.clone().unwrap_or_else(|| synthesize_docstring(&file.skill, template.arity));
    let mut library = load_library(Some(&args.skills))?;
    let record = library
        .register(SkillRecord::learned(&file.skill, template, &doc))
        .map_err(|e| CliError::Config(e.to_string()))?
        .clone();
    save_library(&args.skills, &library)?;
    Ok(record)
}

pub fn cmd_skills(cmd: &SkillsCommand) -> Result<(), CliError> {
    match cmd {
        SkillsCommand::Export(a) => {
            let text = export(a)?;
            match &a.out {
                Some(p) => std::fs::write(p, text).map_err(|e| config_err(p, e))?,
                None => println!("{text}"),
            }
        }
        SkillsCommand::Import(a) => {
            let added = import(a)?;
            println!("imported {} skill(s){}{}", added.len(), if added.is_empty() { "" } else { ": " }, added.join(", "));
        }
        SkillsCommand::Teach(a) => {
            let r = teach(a)?;
            println!("learned {} from {} demonstrations", r.name, r.template.as_ref().map_or(0, |t| t.demo_count));
        }
    }
    Ok(())
}

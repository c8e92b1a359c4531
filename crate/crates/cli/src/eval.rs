use std::path::{Path, PathBuf};

use clap::Args;
use skillplan::session::{evaluate_suite, render_markdown, SessionConfig, Suite, SuiteKind, SuiteReport};

use crate::config::{config_err, CliError, PlannerArgs, PlannerChoice};

#[derive(Args, Clone, Debug)]
pub struct EvalArgs {
    /// suite.v1 file or bundled suite name; repeatable.
    #[arg(long, required_unless_present = "learn_skill_suites")]
    pub suite: Vec<String>,
    /// Every planner-only bundled suite.
    #[arg(long)]
    pub learn_skill_suites: bool,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Planner-only suites default to the chat endpoint, simulated ones to
    /// the scripted planner.
    #[command(flatten)]
    pub planner: PlannerArgs,
    /// Report path without extension; `.md` and `.json` are written.
    #[arg(long, default_value = "report")]
    pub out: PathBuf,
}

pub fn load_suite(spec: &str) -> Result<Suite, CliError> {
    let path = Path::new(spec);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(path, e))?;
        return Suite::from_json(&text).map_err(|e| config_err(path, e));
    }
    Suite::bundled(spec).ok_or_else(|| {
        CliError::Config(format!("suite file {spec} not found (bundled suites: {})", Suite::bundled_names().join(", ")))
    })
}

pub fn evaluate(args: &EvalArgs) -> Result<Vec<SuiteReport>, CliError> {
    if args.trials == 0 {
        return Err(CliError::Config("--trials must be positive".into()));
    }
    let mut suites = args.suite.iter().map(|s| load_suite(s)).collect::<Result<Vec<_>, _>>()?;
    if args.learn_skill_suites {
        suites.extend(Suite::llm_suites());
    }
    let default = if suites.iter().any(|s| s.kind == SuiteKind::Llm) { PlannerChoice::Llm } else { PlannerChoice::Scripted };
    let factory = args.planner.factory(default)?;
    let mut reports = vec![];
    for suite in &suites {
        let r = evaluate_suite(suite, args.trials, args.seed, &SessionConfig::default(), &mut || factory.build())
            .map_err(|e| CliError::Failed(format!("{}: {e}", suite.name)))?;
        reports.extend(r);
    }
    Ok(reports)
}

pub fn write_reports(out: &Path, reports: &[SuiteReport]) -> Result<(PathBuf, PathBuf), CliError> {
    let md = out.with_extension("md");
    let json = out.with_extension("json");
    std::fs::write(&md, render_markdown(reports)).map_err(|e| config_err(&md, e))?;
    let text = serde_json::to_string_pretty(reports).expect("reports serialize");
    std::fs::write(&json, text).map_err(|e| config_err(&json, e))?;
    Ok((md, json))
}

pub fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    let reports = evaluate(args)?;
    let (md, json) = write_reports(&args.out, &reports)?;
    print!("{}", render_markdown(&reports));
    println!("\nwrote {} and {}", md.display(), json.display());
    Ok(())
}

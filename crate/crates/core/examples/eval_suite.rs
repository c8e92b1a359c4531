//! Evaluate a bundled suite with the scripted planner and print the
//! markdown table.
//!
//!     cargo run --example eval_suite -- learn_tasks 2

use skillplan::planner::{PlannerPort, ScriptedPlanner};
use skillplan::session::{evaluate_suite, render_markdown, SessionConfig, Suite};

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "learn_tasks".into());
    let trials = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let Some(suite) = Suite::bundled(&name) else {
        eprintln!("unknown suite {name}; bundled: {}", Suite::bundled_names().join(", "));
        std::process::exit(2);
    };
    let mut planner = || Box::new(ScriptedPlanner::default()) as Box<dyn PlannerPort>;
    let reports = evaluate_suite(&suite, trials, 0, &SessionConfig::default(), &mut planner).unwrap();
    print!("{}", render_markdown(&reports));
}

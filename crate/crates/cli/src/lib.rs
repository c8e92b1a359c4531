//! Command line entry points and the HTTP server that hosts sessions.

pub mod config;
pub mod eval;
pub mod run;
pub mod serve;
pub mod skills;

use std::ffi::OsString;

use clap::{Parser, Subcommand};

pub use config::CliError;

#[derive(Parser, Debug)]
#[command(name = "skillplan", version, about = "Plan, execute and teach tabletop skills")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one task to completion.
    Run(run::RunArgs),
    /// Evaluate task suites and write a success table.
    Eval(eval::EvalArgs),
    /// Host sessions over HTTP.
    Serve(serve::ServeArgs),
    /// Manage skill libraries.
    #[command(subcommand)]
    Skills(skills::SkillsCommand),
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(a) => run::cmd_run(a),
        Command::Eval(a) => eval::cmd_eval(a),
        Command::Serve(a) => serve::cmd_serve(a),
        Command::Skills(c) => skills::cmd_skills(c),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! The plan language: a small statement language in Python surface syntax
//! (assignments, calls, `for`, `if`), its parser, canonical printer and a
//! step-wise interpreter over a skill host.

mod ast;
pub mod gen;
mod interp;
mod lexer;
mod parser;
mod unparse;

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

pub use ast::{is_identifier, BoolOp, CmpOp, Expr, Program, Span, Stmt, StmtKind, Target, KEYWORDS};
pub use interp::{CallTrace, Host, HostError, Interpreter, Status, Step, StepEvent, Suspension};
pub use parser::parse;
pub use unparse::{expr as unparse_expr, header, quote, unparse};

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize)]
#[error("line {line}, column {column}: {message} (at {token})")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub token: String,
    pub message: String,
}

/// A call site with its argument expressions.
#[derive(Clone, Debug, PartialEq)]
pub struct StaticCall {
    pub name: String,
    pub args: Vec<Expr>,
    pub kwargs: Vec<(String, Expr)>,
}

impl StaticCall {
    /// First positional argument when it is a string literal.
    pub fn literal_arg(&self) -> Option<&str> {
        match self.args.first() {
            Some(Expr::Str(s)) => Some(s),
            _ => None,
        }
    }
}

fn walk_expr(e: &Expr, out: &mut Vec<StaticCall>) {
    match e {
        Expr::Call { name, args, kwargs } => {
            out.push(StaticCall { name: name.clone(), args: args.clone(), kwargs: kwargs.clone() });
            args.iter().for_each(|a| walk_expr(a, out));
            kwargs.iter().for_each(|(_, a)| walk_expr(a, out));
        }
        Expr::List(xs) | Expr::Tuple(xs) => xs.iter().for_each(|x| walk_expr(x, out)),
        Expr::Index { value, index } => {
            walk_expr(value, out);
            walk_expr(index, out);
        }
        Expr::Compare { left, ops } => {
            walk_expr(left, out);
            ops.iter().for_each(|(_, x)| walk_expr(x, out));
        }
        Expr::BoolOp { values, .. } => values.iter().for_each(|x| walk_expr(x, out)),
        Expr::Not(x) => walk_expr(x, out),
        _ => {}
    }
}

fn walk_stmts(body: &[Stmt], out: &mut Vec<StaticCall>) {
    for s in body {
        match &s.kind {
            StmtKind::Assign { value, .. } | StmtKind::Expr(value) => walk_expr(value, out),
            StmtKind::For { iter, body, .. } => {
                walk_expr(iter, out);
                walk_stmts(body, out);
            }
            StmtKind::If { branches, orelse } => {
                for (c, b) in branches {
                    walk_expr(c, out);
                    walk_stmts(b, out);
                }
                if let Some(b) = orelse {
                    walk_stmts(b, out);
                }
            }
            StmtKind::Pass | StmtKind::Comment(_) => {}
        }
    }
}

/// Every call site in source order, nested calls after their parent.
pub fn static_calls(program: &Program) -> Vec<StaticCall> {
    let mut out = vec![];
    walk_stmts(&program.body, &mut out);
    out
}

pub fn static_call_names(program: &Program) -> BTreeSet<String> {
    static_calls(program).into_iter().map(|c| c.name).collect()
}

/// Skill names requested through `learn_skill("...")` literals.
pub fn requested_skills(program: &Program) -> Vec<String> {
    static_calls(program)
        .into_iter()
        .filter(|c| c.name == "learn_skill")
        .filter_map(|c| c.literal_arg().map(str::to_string))
        .collect()
}

#[cfg(test)]
mod tests;

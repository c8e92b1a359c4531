use super::ast::{BoolOp, Expr, Program, Stmt, StmtKind, Target};

const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_NOT: u8 = 3;
const PREC_CMP: u8 = 4;
const PREC_ATOM: u8 = 5;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::BoolOp { op: BoolOp::Or, .. } => PREC_OR,
        Expr::BoolOp { op: BoolOp::And, .. } => PREC_AND,
        Expr::Not(_) => PREC_NOT,
        Expr::Compare { .. } => PREC_CMP,
        _ => PREC_ATOM,
    }
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            '\0' => out.push_str("\\0"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn wrap(e: &Expr, paren_at_or_below: u8) -> String {
    let s = expr(e);
    if prec(e) <= paren_at_or_below {
        format!("({s})")
    } else {
        s
    }
}

fn float(f: f64) -> String {
    let s = format!("{f:?}");
    if s.contains(['.', 'e', 'E']) || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

fn join(items: &[Expr]) -> String {
    items.iter().map(expr).collect::<Vec<_>>().join(", ")
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::None => "None".into(),
        Expr::Bool(true) => "True".into(),
        Expr::Bool(false) => "False".into(),
        Expr::Int(i) => i.to_string(),
        Expr::Float(f) => float(*f),
        Expr::Str(s) => quote(s),
        Expr::Name(n) => n.clone(),
        Expr::List(items) => format!("[{}]", join(items)),
        Expr::Tuple(items) if items.len() == 1 => format!("({},)", expr(&items[0])),
        Expr::Tuple(items) => format!("({})", join(items)),
        Expr::Call { name, args, kwargs } => {
            let mut parts: Vec<String> = args.iter().map(expr).collect();
            parts.extend(kwargs.iter().map(|(k, v)| format!("{k}={}", expr(v))));
            format!("{name}({})", parts.join(", "))
        }
        Expr::Index { value, index } => format!("{}[{}]", wrap(value, PREC_CMP), expr(index)),
        Expr::Compare { left, ops } => {
            let mut s = wrap(left, PREC_CMP);
            for (op, right) in ops {
                s.push_str(&format!(" {} {}", op.symbol(), wrap(right, PREC_CMP)));
            }
            s
        }
        Expr::BoolOp { op, values } => {
            let (kw, p) = match op {
                BoolOp::And => (" and ", PREC_AND),
                BoolOp::Or => (" or ", PREC_OR),
            };
            values.iter().map(|v| wrap(v, p)).collect::<Vec<_>>().join(kw)
        }
        Expr::Not(inner) => format!("not {}", wrap(inner, PREC_AND)),
    }
}

fn stmt(s: &Stmt, depth: usize, out: &mut Vec<String>) {
    let pad = "    ".repeat(depth);
    match &s.kind {
        StmtKind::Assign { target: Target::Name(n), value } => out.push(format!("{pad}{n} = {}", expr(value))),
        StmtKind::Assign { target: Target::Pair(a, b), value } => out.push(format!("{pad}{a}, {b} = {}", expr(value))),
        StmtKind::Expr(e) => out.push(format!("{pad}{}", expr(e))),
        StmtKind::Pass => out.push(format!("{pad}pass")),
        StmtKind::Comment(c) if c.is_empty() => out.push(format!("{pad}#")),
        StmtKind::Comment(c) => out.push(format!("{pad}# {c}")),
        StmtKind::For { var, iter, body } => {
            out.push(format!("{pad}for {var} in {}:", expr(iter)));
            block(body, depth + 1, out);
        }
        StmtKind::If { branches, orelse } => {
            for (k, (cond, body)) in branches.iter().enumerate() {
                let kw = if k == 0 { "if" } else { "elif" };
                out.push(format!("{pad}{kw} {}:", expr(cond)));
                block(body, depth + 1, out);
            }
            if let Some(body) = orelse {
                out.push(format!("{pad}else:"));
                block(body, depth + 1, out);
            }
        }
    }
}

fn block(body: &[Stmt], depth: usize, out: &mut Vec<String>) {
    for s in body {
        stmt(s, depth, out);
    }
}

/// One-line rendering of a statement (compound statements: the header).
pub fn header(s: &Stmt) -> String {
    let mut out = vec![];
    stmt(s, 0, &mut out);
    out.into_iter().next().unwrap_or_default()
}

/// Canonical source: 4-space indentation, double-quoted strings, minimal
/// parentheses.
pub fn unparse(program: &Program) -> String {
    let mut out = vec![];
    block(&program.body, 0, &mut out);
    if out.is_empty() {
        String::new()
    } else {
        out.join("\n") + "\n"
    }
}

use indexmap::IndexMap;
use serde::Serialize;

use super::ast::{CmpOp, Expr, Program, Span, Stmt, StmtKind, Target};
use super::unparse::header;
use crate::skills::{ExecError, ExecResult};
use crate::value::Value;

/// One call made while executing a statement, rendered like source.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CallTrace {
    pub name: String,
    pub rendered: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepEvent {
    /// Position of this event in the run.
    pub seq: usize,
    /// Preorder index of the statement in the program.
    pub statement: usize,
    pub span: Span,
    pub source: String,
    pub calls: Vec<CallTrace>,
    /// Lines written by `print`.
    pub output: Vec<String>,
    pub result: ExecResult,
}

impl StepEvent {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "seq": self.seq,
            "statement": self.statement,
            "span": self.span,
            "source": self.source,
            "calls": self.calls,
            "output": self.output,
            "result": self.result.to_json(),
        })
    }

    /// Name of the last call the statement made.
    pub fn call_name(&self) -> Option<&str> {
        self.calls.last().map(|c| c.name.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Suspension {
    pub function: String,
    pub args: Vec<Value>,
    pub statement: usize,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum HostError {
    Failed(ExecError),
    /// Pause the program until [`Interpreter::resume`] supplies the result.
    Suspend,
}

/// The skills a plan may call. Nothing else is reachable from plan code.
pub trait Host {
    fn call(&mut self, name: &str, args: &[Value], kwargs: &[(String, Value)]) -> Result<Value, HostError>;

    /// Called before a statement first runs.
    fn checkpoint(&mut self) {}

    /// Called when a statement fails; undoes its effects.
    fn rollback(&mut self) {}
}

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Event(StepEvent),
    Suspended(Suspension),
    Done,
}

fn exec_error(code: &str, message: impl Into<String>) -> ExecError {
    ExecError { code: code.to_string(), message: message.into() }
}

enum Flow {
    Error(ExecError),
    Suspend(Suspension),
}

impl From<ExecError> for Flow {
    fn from(e: ExecError) -> Self {
        Flow::Error(e)
    }
}

#[derive(Clone, Debug)]
struct Frame {
    stmts: Vec<Stmt>,
    pc: usize,
    next_id: usize,
    looping: Option<LoopState>,
}

#[derive(Clone, Debug)]
struct LoopState {
    var: String,
    items: Vec<Value>,
    idx: usize,
    first_id: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Running,
    Finished,
    Failed(ExecError),
}

/// Pull-driven interpreter: each [`Interpreter::step`] executes one
/// statement. A suspended statement is re-evaluated on resume, replaying
/// the results of calls it already made.
#[derive(Clone, Debug)]
pub struct Interpreter {
    lines: Option<Vec<String>>,
    frames: Vec<Frame>,
    env: IndexMap<String, Value>,
    seq: usize,
    status: Status,
    memo: Vec<Value>,
    cursor: usize,
    calls: Vec<CallTrace>,
    output: Vec<String>,
    in_statement: bool,
    resume_error: Option<ExecError>,
    suspended: bool,
}

impl Interpreter {
    pub fn new(program: &Program) -> Self {
        Self {
            lines: None,
            frames: vec![Frame { stmts: program.body.clone(), pc: 0, next_id: 0, looping: None }],
            env: IndexMap::new(),
            seq: 0,
            status: Status::Running,
            memo: vec![],
            cursor: 0,
            calls: vec![],
            output: vec![],
            in_statement: false,
            resume_error: None,
            suspended: false,
        }
    }

    /// Keeps the original text so events quote it instead of the
    /// canonical rendering.
    pub fn with_source(mut self, source: &str) -> Self {
        self.lines = Some(source.lines().map(str::to_string).collect());
        self
    }

    pub fn with_env(mut self, env: IndexMap<String, Value>) -> Self {
        self.env = env;
        self
    }

    pub fn env(&self) -> &IndexMap<String, Value> {
        &self.env
    }

    pub fn status(&self) -> &Status {
        &self.status
    }

    pub fn is_suspended(&self) -> bool {
        self.suspended
    }

    /// Supplies the result of the call that suspended the program.
    pub fn resume(&mut self, result: Result<Value, ExecError>) {
        if !self.suspended {
            return;
        }
        self.suspended = false;
        match result {
            Ok(v) => self.memo.push(v),
            Err(e) => self.resume_error = Some(e),
        }
    }

    fn source_of(&self, s: &Stmt) -> String {
        match &self.lines {
            Some(lines) if s.span.start_line >= 1 && s.span.end_line <= lines.len() => {
                let text: Vec<&str> =
                    lines[s.span.start_line - 1..s.span.end_line].iter().map(|l| l.trim()).collect();
                text.join(" ")
            }
            _ => header(s),
        }
    }

    /// Whether no statements are left to run.
    pub fn is_at_end(&self) -> bool {
        if self.status != Status::Running {
            return true;
        }
        let mut probe = self.clone();
        loop {
            match probe.current() {
                None => return true,
                Some((s, _)) if matches!(s.kind, StmtKind::Comment(_) | StmtKind::Pass) => probe.advance(1),
                Some(_) => return false,
            }
        }
    }

    fn current(&mut self) -> Option<(Stmt, usize)> {
        loop {
            let frame = self.frames.last_mut()?;
            if frame.pc < frame.stmts.len() {
                return Some((frame.stmts[frame.pc].clone(), frame.next_id));
            }
            if let Some(l) = frame.looping.as_mut() {
                if l.idx + 1 < l.items.len() {
                    l.idx += 1;
                    let (var, item, first) = (l.var.clone(), l.items[l.idx].clone(), l.first_id);
                    frame.pc = 0;
                    frame.next_id = first;
                    self.env.insert(var, item);
                    continue;
                }
            }
            self.frames.pop();
        }
    }

    fn advance(&mut self, size: usize) {
        if let Some(f) = self.frames.last_mut() {
            f.pc += 1;
            f.next_id += size;
        }
    }

    pub fn step(&mut self, host: &mut dyn Host) -> Step {
        if self.status != Status::Running {
            return Step::Done;
        }
        if self.suspended {
            return Step::Done;
        }
        let (stmt, id) = loop {
            match self.current() {
                None => {
                    self.status = Status::Finished;
                    return Step::Done;
                }
                Some((s, _)) if matches!(s.kind, StmtKind::Comment(_) | StmtKind::Pass) => self.advance(1),
                Some(x) => break x,
            }
        };
        if !self.in_statement {
            self.in_statement = true;
            self.memo.clear();
            self.calls.clear();
            self.output.clear();
            host.checkpoint();
        }
        self.cursor = 0;
        let outcome = match self.resume_error.take() {
            Some(e) => Err(Flow::Error(e)),
            None => self.exec(&stmt, id, host),
        };
        match outcome {
            Err(Flow::Suspend(s)) => {
                self.suspended = true;
                Step::Suspended(s)
            }
            Ok(value) => Step::Event(self.finish(&stmt, id, ExecResult::ok(value))),
            Err(Flow::Error(e)) => {
                host.rollback();
                self.status = Status::Failed(e.clone());
                let ev = self.finish(&stmt, id, ExecResult { ok: false, value: None, error: Some(e) });
                Step::Event(ev)
            }
        }
    }

    fn finish(&mut self, stmt: &Stmt, id: usize, result: ExecResult) -> StepEvent {
        self.in_statement = false;
        let ev = StepEvent {
            seq: self.seq,
            statement: id,
            span: stmt.span,
            source: self.source_of(stmt),
            calls: std::mem::take(&mut self.calls),
            output: std::mem::take(&mut self.output),
            result,
        };
        self.seq += 1;
        ev
    }

    fn exec(&mut self, stmt: &Stmt, id: usize, host: &mut dyn Host) -> Result<Value, Flow> {
        match &stmt.kind {
            StmtKind::Assign { target, value } => {
                let v = self.eval(value, id, stmt.span, host)?;
                match target {
                    Target::Name(n) => {
                        self.env.insert(n.clone(), v.clone());
                    }
                    Target::Pair(a, b) => match &v {
                        Value::List(xs) | Value::Tuple(xs) if xs.len() == 2 => {
                            self.env.insert(a.clone(), xs[0].clone());
                            self.env.insert(b.clone(), xs[1].clone());
                        }
                        other => {
                            return Err(exec_error("ValueError", format!("cannot unpack {other} into two names")).into())
                        }
                    },
                }
                self.advance(1);
                Ok(v)
            }
            StmtKind::Expr(e) => {
                let v = self.eval(e, id, stmt.span, host)?;
                self.advance(1);
                Ok(v)
            }
            StmtKind::For { var, iter, body } => {
                let items = match self.eval(iter, id, stmt.span, host)? {
                    Value::List(xs) | Value::Tuple(xs) => xs,
                    Value::Str(s) => s.chars().map(|c| Value::Str(c.to_string())).collect(),
                    other => {
                        return Err(exec_error("TypeError", format!("'{}' object is not iterable", other.type_name())).into())
                    }
                };
                self.advance(stmt.size());
                if let Some(first) = items.first() {
                    self.env.insert(var.clone(), first.clone());
                    self.frames.push(Frame {
                        stmts: body.clone(),
                        pc: 0,
                        next_id: id + 1,
                        looping: Some(LoopState { var: var.clone(), items, idx: 0, first_id: id + 1 }),
                    });
                }
                Ok(Value::None)
            }
            StmtKind::If { branches, orelse } => {
                let mut offset = id + 1;
                let mut chosen = None;
                for (cond, body) in branches {
                    if self.eval(cond, id, stmt.span, host)?.truthy() {
                        chosen = Some((body.clone(), offset));
                        break;
                    }
                    offset += body.iter().map(Stmt::size).sum::<usize>();
                }
                if chosen.is_none() {
                    chosen = orelse.as_ref().map(|b| (b.clone(), offset));
                }
                self.advance(stmt.size());
                if let Some((stmts, first)) = chosen {
                    self.frames.push(Frame { stmts, pc: 0, next_id: first, looping: None });
                }
                Ok(Value::None)
            }
            StmtKind::Pass | StmtKind::Comment(_) => {
                self.advance(1);
                Ok(Value::None)
            }
        }
    }

    fn eval(&mut self, e: &Expr, id: usize, span: Span, host: &mut dyn Host) -> Result<Value, Flow> {
        Ok(match e {
            Expr::None => Value::None,
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Int(i) => Value::Int(*i),
            Expr::Float(f) => Value::Float(*f),
            Expr::Str(s) => Value::Str(s.clone()),
            Expr::Name(n) => self
                .env
                .get(n)
                .cloned()
                .or_else(|| matches!(n.as_str(), "print" | "len").then(|| Value::Skill(n.clone())))
                .ok_or_else(|| exec_error("NameError", format!("name '{n}' is not defined")))?,
            Expr::List(items) => Value::List(self.eval_all(items, id, span, host)?),
            Expr::Tuple(items) => Value::Tuple(self.eval_all(items, id, span, host)?),
            Expr::Index { value, index } => {
                let v = self.eval(value, id, span, host)?;
                let i = self.eval(index, id, span, host)?;
                index_value(&v, &i)?
            }
            Expr::Compare { left, ops } => {
                let mut l = self.eval(left, id, span, host)?;
                for (op, right) in ops {
                    let r = self.eval(right, id, span, host)?;
                    if !compare(*op, &l, &r)? {
                        return Ok(Value::Bool(false));
                    }
                    l = r;
                }
                Value::Bool(true)
            }
            Expr::BoolOp { op, values } => {
                let mut last = Value::None;
                for v in values {
                    last = self.eval(v, id, span, host)?;
                    let stop = match op {
                        super::ast::BoolOp::And => !last.truthy(),
                        super::ast::BoolOp::Or => last.truthy(),
                    };
                    if stop {
                        break;
                    }
                }
                last
            }
            Expr::Not(inner) => Value::Bool(!self.eval(inner, id, span, host)?.truthy()),
            Expr::Call { name, args, kwargs } => {
                let a = self.eval_all(args, id, span, host)?;
                let mut kw = vec![];
                for (k, v) in kwargs {
                    kw.push((k.clone(), self.eval(v, id, span, host)?));
                }
                self.call(name, a, kw, id, span, host)?
            }
        })
    }

    fn eval_all(&mut self, items: &[Expr], id: usize, span: Span, host: &mut dyn Host) -> Result<Vec<Value>, Flow> {
        items.iter().map(|x| self.eval(x, id, span, host)).collect()
    }

    fn call(
        &mut self,
        name: &str,
        args: Vec<Value>,
        kwargs: Vec<(String, Value)>,
        id: usize,
        span: Span,
        host: &mut dyn Host,
    ) -> Result<Value, Flow> {
        let ordinal = self.cursor;
        self.cursor += 1;
        if let Some(v) = self.memo.get(ordinal) {
            return Ok(v.clone());
        }
        let target = match self.env.get(name) {
            Some(Value::Skill(s)) => s.clone(),
            Some(other) => {
                return Err(exec_error("TypeError", format!("'{}' object is not callable", other.type_name())).into())
            }
            None => name.to_string(),
        };
        let mut parts: Vec<String> = args.iter().map(Value::to_string).collect();
        parts.extend(kwargs.iter().map(|(k, v)| format!("{k}={v}")));
        self.calls.push(CallTrace { name: target.clone(), rendered: format!("{target}({})", parts.join(", ")) });
        let result = match target.as_str() {
            "print" => {
                let line: Vec<String> = args
                    .iter()
                    .map(|v| match v {
                        Value::Str(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                self.output.push(line.join(" "));
                Ok(Value::None)
            }
            "len" => match (args.as_slice(), kwargs.is_empty()) {
                ([Value::List(xs) | Value::Tuple(xs)], true) => Ok(Value::Int(xs.len() as i64)),
                ([Value::Str(s)], true) => Ok(Value::Int(s.chars().count() as i64)),
                ([other], true) => {
                    Err(exec_error("TypeError", format!("object of type '{}' has no len()", other.type_name())))
                }
                _ => Err(exec_error("ArityError", "len() takes exactly one argument")),
            },
            _ => match host.call(&target, &args, &kwargs) {
                Ok(v) => Ok(v),
                Err(HostError::Failed(e)) => Err(e),
                Err(HostError::Suspend) => {
                    return Err(Flow::Suspend(Suspension { function: target, args, statement: id, span }))
                }
            },
        };
        let v = result?;
        self.memo.push(v.clone());
        Ok(v)
    }

    /// Runs until the program ends, fails or suspends.
    pub fn run(&mut self, host: &mut dyn Host) -> (Vec<StepEvent>, Option<Suspension>) {
        let mut events = vec![];
        loop {
            match self.step(host) {
                Step::Event(e) => events.push(e),
                Step::Suspended(s) => return (events, Some(s)),
                Step::Done => return (events, None),
            }
        }
    }
}

fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(_) | Value::Float(_) | Value::Bool(_), Value::Int(_) | Value::Float(_) | Value::Bool(_)) => {
            numeric(a) == numeric(b)
        }
        (Value::List(x), Value::List(y)) | (Value::Tuple(x), Value::Tuple(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| values_equal(p, q))
        }
        _ => a == b,
    }
}

fn numeric(v: &Value) -> Option<f64> {
    match v {
        Value::Bool(b) => Some(f64::from(u8::from(*b))),
        other => other.as_f64(),
    }
}

fn compare(op: CmpOp, l: &Value, r: &Value) -> Result<bool, ExecError> {
    let order = || -> Result<std::cmp::Ordering, ExecError> {
        match (l, r) {
            (Value::Int(a), Value::Int(b)) => Ok(a.cmp(b)),
            (Value::Str(a), Value::Str(b)) => Ok(a.cmp(b)),
            _ => match (numeric(l), numeric(r)) {
                (Some(a), Some(b)) => {
                    a.partial_cmp(&b).ok_or_else(|| exec_error("ValueError", "comparison with NaN"))
                }
                _ => Err(exec_error(
                    "TypeError",
                    format!("'{}' not supported between '{}' and '{}'", op.symbol(), l.type_name(), r.type_name()),
                )),
            },
        }
    };
    let contains = || -> Result<bool, ExecError> {
        match (l, r) {
            (_, Value::List(xs) | Value::Tuple(xs)) => Ok(xs.iter().any(|x| values_equal(l, x))),
            (Value::Str(a), Value::Str(b)) => Ok(b.contains(a.as_str())),
            _ => Err(exec_error("TypeError", format!("argument of type '{}' is not iterable", r.type_name()))),
        }
    };
    Ok(match op {
        CmpOp::Eq => values_equal(l, r),
        CmpOp::NotEq => !values_equal(l, r),
        CmpOp::Lt => order()?.is_lt(),
        CmpOp::LtE => order()?.is_le(),
        CmpOp::Gt => order()?.is_gt(),
        CmpOp::GtE => order()?.is_ge(),
        CmpOp::In => contains()?,
        CmpOp::NotIn => !contains()?,
        CmpOp::Is => is_same(l, r),
        CmpOp::IsNot => !is_same(l, r),
    })
}

fn is_same(l: &Value, r: &Value) -> bool {
    match (l, r) {
        (Value::None, Value::None) => true,
        (Value::Bool(a), Value::Bool(b)) => a == b,
        (Value::None, _) | (_, Value::None) | (Value::Bool(_), _) | (_, Value::Bool(_)) => false,
        _ => values_equal(l, r),
    }
}

fn index_value(v: &Value, i: &Value) -> Result<Value, ExecError> {
    let Value::Int(k) = i else {
        return Err(exec_error("TypeError", format!("indices must be integers, not {}", i.type_name())));
    };
    let pick = |len: usize| -> Result<usize, ExecError> {
        let idx = if *k < 0 { *k + len as i64 } else { *k };
        if idx < 0 || idx >= len as i64 {
            Err(exec_error("IndexError", format!("index {k} out of range")))
        } else {
            Ok(idx as usize)
        }
    };
    match v {
        Value::List(xs) | Value::Tuple(xs) => Ok(xs[pick(xs.len())?].clone()),
        Value::Str(s) => {
            let chars: Vec<char> = s.chars().collect();
            Ok(Value::Str(chars[pick(chars.len())?].to_string()))
        }
        other => Err(exec_error("TypeError", format!("'{}' object is not subscriptable", other.type_name()))),
    }
}

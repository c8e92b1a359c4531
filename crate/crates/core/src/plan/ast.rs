use serde::{Deserialize, Serialize};

/// 1-based inclusive line range of a statement's header.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start_line: usize,
    pub end_line: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    NotEq,
    Lt,
    LtE,
    Gt,
    GtE,
    In,
    NotIn,
    Is,
    IsNot,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::NotEq => "!=",
            CmpOp::Lt => "<",
            CmpOp::LtE => "<=",
            CmpOp::Gt => ">",
            CmpOp::GtE => ">=",
            CmpOp::In => "in",
            CmpOp::NotIn => "not in",
            CmpOp::Is => "is",
            CmpOp::IsNot => "is not",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoolOp {
    And,
    Or,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    None,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Name(String),
    List(Vec<Expr>),
    Tuple(Vec<Expr>),
    Call { name: String, args: Vec<Expr>, kwargs: Vec<(String, Expr)> },
    Index { value: Box<Expr>, index: Box<Expr> },
    /// `left op1 c1 op2 c2 ...`, evaluated pairwise and joined with `and`.
    Compare { left: Box<Expr>, ops: Vec<(CmpOp, Expr)> },
    BoolOp { op: BoolOp, values: Vec<Expr> },
    Not(Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Name(String),
    Pair(String, String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StmtKind {
    Assign { target: Target, value: Expr },
    Expr(Expr),
    For { var: String, iter: Expr, body: Vec<Stmt> },
    If { branches: Vec<(Expr, Vec<Stmt>)>, orelse: Option<Vec<Stmt>> },
    Pass,
    Comment(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Self { kind, span: Span::default() }
    }

    /// Number of statements in this subtree, itself included.
    pub fn size(&self) -> usize {
        1 + self.children().map(|b| b.iter().map(Stmt::size).sum::<usize>()).sum::<usize>()
    }

    /// Nested blocks in source order.
    pub fn children(&self) -> impl Iterator<Item = &Vec<Stmt>> {
        let v: Vec<&Vec<Stmt>> = match &self.kind {
            StmtKind::For { body, .. } => vec![body],
            StmtKind::If { branches, orelse } => branches.iter().map(|(_, b)| b).chain(orelse.iter()).collect(),
            _ => vec![],
        };
        v.into_iter()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub body: Vec<Stmt>,
}

fn strip(stmts: &mut [Stmt]) {
    for s in stmts {
        s.span = Span::default();
        match &mut s.kind {
            StmtKind::For { body, .. } => strip(body),
            StmtKind::If { branches, orelse } => {
                for (_, b) in branches.iter_mut() {
                    strip(b);
                }
                if let Some(b) = orelse {
                    strip(b);
                }
            }
            _ => {}
        }
    }
}

impl Program {
    /// Copy with all spans zeroed, for structural comparison.
    pub fn without_spans(&self) -> Program {
        let mut p = self.clone();
        strip(&mut p.body);
        p
    }

    pub fn len(&self) -> usize {
        self.body.iter().map(Stmt::size).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }
}

pub const KEYWORDS: [&str; 13] = ["for", "in", "if", "elif", "else", "and", "or", "not", "is", "None", "True", "False", "pass"];

/// Python keywords outside the plan language; reported as unsupported.
pub const UNSUPPORTED: [&str; 20] = [
    "def", "class", "while", "import", "from", "return", "try", "except", "finally", "with", "lambda", "yield", "global",
    "nonlocal", "del", "raise", "assert", "async", "await", "break",
];

pub fn is_identifier(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch == '_' || ch.is_ascii_alphabetic())
        && c.all(|ch| ch == '_' || ch.is_ascii_alphanumeric())
        && !KEYWORDS.contains(&s)
        && !UNSUPPORTED.contains(&s)
        && s != "continue"
}

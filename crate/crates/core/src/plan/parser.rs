use super::ast::{BoolOp, CmpOp, Expr, Program, Span, Stmt, StmtKind, Target};
use super::lexer::{tokenize, Tok, Token};
use super::SyntaxError;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn token(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> SyntaxError {
        let t = self.token();
        SyntaxError { line: t.line, column: t.col, token: t.tok.describe(), message: message.into() }
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.peek(), Tok::Op(o) if *o == op)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Keyword(k) if *k == kw)
    }

    fn expect_op(&mut self, op: &str) -> Result<Token, SyntaxError> {
        if self.is_op(op) {
            Ok(self.bump())
        } else {
            Err(self.error(format!("expected '{op}'")))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), SyntaxError> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected '{kw}'")))
        }
    }

    fn name(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Name(n) => {
                self.bump();
                Ok(n)
            }
            _ => Err(self.error("expected a name")),
        }
    }

    fn newline(&mut self) -> Result<(), SyntaxError> {
        match self.peek() {
            Tok::Newline => {
                self.bump();
                Ok(())
            }
            _ => Err(self.error("expected end of line")),
        }
    }

    fn program(&mut self) -> Result<Program, SyntaxError> {
        let mut body = vec![];
        while *self.peek() != Tok::Eof {
            body.push(self.statement()?);
        }
        Ok(Program { body })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, SyntaxError> {
        if *self.peek() != Tok::Newline {
            let s = self.simple()?;
            self.newline()?;
            return Ok(vec![s]);
        }
        self.bump();
        if *self.peek() != Tok::Indent {
            return Err(self.error("expected an indented block"));
        }
        self.bump();
        let mut body = vec![];
        while !matches!(self.peek(), Tok::Dedent | Tok::Eof) {
            body.push(self.statement()?);
        }
        if *self.peek() == Tok::Dedent {
            self.bump();
        }
        Ok(body)
    }

    fn span_from(&self, start: usize) -> Span {
        let end = self.toks[self.pos.saturating_sub(1).max(start)].line;
        Span { start_line: self.toks[start].line, end_line: end }
    }

    fn statement(&mut self) -> Result<Stmt, SyntaxError> {
        let start = self.pos;
        match self.peek().clone() {
            Tok::Comment(text) => {
                self.bump();
                let span = self.span_from(start);
                self.newline()?;
                Ok(Stmt { kind: StmtKind::Comment(text), span })
            }
            Tok::Keyword("for") => {
                self.bump();
                let var = self.name()?;
                self.expect_kw("in")?;
                let iter = self.expression()?;
                self.expect_op(":")?;
                let span = self.span_from(start);
                let body = self.block()?;
                Ok(Stmt { kind: StmtKind::For { var, iter, body }, span })
            }
            Tok::Keyword("if") => {
                self.bump();
                let cond = self.expression()?;
                self.expect_op(":")?;
                let span = self.span_from(start);
                let mut branches = vec![(cond, self.block()?)];
                let mut orelse = None;
                loop {
                    if self.is_kw("elif") {
                        self.bump();
                        let c = self.expression()?;
                        self.expect_op(":")?;
                        branches.push((c, self.block()?));
                    } else if self.is_kw("else") {
                        self.bump();
                        self.expect_op(":")?;
                        orelse = Some(self.block()?);
                        break;
                    } else {
                        break;
                    }
                }
                Ok(Stmt { kind: StmtKind::If { branches, orelse }, span })
            }
            Tok::Keyword(k @ ("elif" | "else")) => Err(self.error(format!("'{k}' without a matching 'if'"))),
            Tok::Indent => Err(self.error("unexpected indent")),
            _ => {
                let s = self.simple()?;
                self.newline()?;
                Ok(s)
            }
        }
    }

    fn simple(&mut self) -> Result<Stmt, SyntaxError> {
        let start = self.pos;
        let kind = if self.is_kw("pass") {
            self.bump();
            StmtKind::Pass
        } else if matches!(self.peek(), Tok::Name(_)) && matches!(self.peek_at(1), Tok::Op("=")) {
            let n = self.name()?;
            self.bump();
            StmtKind::Assign { target: Target::Name(n), value: self.expression()? }
        } else if matches!(self.peek(), Tok::Name(_))
            && matches!(self.peek_at(1), Tok::Op(","))
            && matches!(self.peek_at(2), Tok::Name(_))
            && matches!(self.peek_at(3), Tok::Op("=" | ","))
        {
            let a = self.name()?;
            self.bump();
            let b = self.name()?;
            if self.is_op(",") {
                return Err(self.error("only two-name unpacking is supported"));
            }
            self.bump();
            StmtKind::Assign { target: Target::Pair(a, b), value: self.expression()? }
        } else {
            let e = self.expression()?;
            if self.is_op("=") {
                return Err(self.error("can only assign to a name or a pair of names"));
            }
            if self.is_op(",") {
                return Err(self.error("bare tuples are not supported"));
            }
            StmtKind::Expr(e)
        };
        Ok(Stmt { kind, span: self.span_from(start) })
    }

    fn expression(&mut self) -> Result<Expr, SyntaxError> {
        self.bool_expr(BoolOp::Or)
    }

    fn bool_expr(&mut self, op: BoolOp) -> Result<Expr, SyntaxError> {
        let (kw, sub) = match op {
            BoolOp::Or => ("or", Some(BoolOp::And)),
            BoolOp::And => ("and", None),
        };
        let next = |p: &mut Self| match sub {
            Some(s) => p.bool_expr(s),
            None => p.not_expr(),
        };
        let first = next(self)?;
        if !self.is_kw(kw) {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.is_kw(kw) {
            self.bump();
            values.push(next(self)?);
        }
        Ok(Expr::BoolOp { op, values })
    }

    fn not_expr(&mut self) -> Result<Expr, SyntaxError> {
        if self.is_kw("not") {
            self.bump();
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.comparison()
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek() {
            Tok::Op("==") => CmpOp::Eq,
            Tok::Op("!=") => CmpOp::NotEq,
            Tok::Op("<") => CmpOp::Lt,
            Tok::Op("<=") => CmpOp::LtE,
            Tok::Op(">") => CmpOp::Gt,
            Tok::Op(">=") => CmpOp::GtE,
            Tok::Keyword("in") => CmpOp::In,
            Tok::Keyword("not") if matches!(self.peek_at(1), Tok::Keyword("in")) => {
                self.bump();
                CmpOp::NotIn
            }
            Tok::Keyword("is") if matches!(self.peek_at(1), Tok::Keyword("not")) => {
                self.bump();
                CmpOp::IsNot
            }
            Tok::Keyword("is") => CmpOp::Is,
            _ => return None,
        };
        self.bump();
        Some(op)
    }

    fn comparison(&mut self) -> Result<Expr, SyntaxError> {
        let left = self.postfix()?;
        let mut ops = vec![];
        while let Some(op) = self.cmp_op() {
            ops.push((op, self.postfix()?));
        }
        if ops.is_empty() {
            Ok(left)
        } else {
            Ok(Expr::Compare { left: Box::new(left), ops })
        }
    }

    fn postfix(&mut self) -> Result<Expr, SyntaxError> {
        let mut e = self.atom()?;
        loop {
            if self.is_op("(") {
                let Expr::Name(name) = e else {
                    return Err(self.error("only named functions can be called"));
                };
                self.bump();
                let (args, kwargs) = self.call_args()?;
                e = Expr::Call { name, args, kwargs };
            } else if self.is_op("[") {
                self.bump();
                let index = self.expression()?;
                if self.is_op(":") {
                    return Err(self.error("slices are not supported"));
                }
                self.expect_op("]")?;
                e = Expr::Index { value: Box::new(e), index: Box::new(index) };
            } else if self.is_op(".") {
                return Err(self.error("attribute access is not supported"));
            } else {
                return Ok(e);
            }
        }
    }

    fn call_args(&mut self) -> Result<(Vec<Expr>, Vec<(String, Expr)>), SyntaxError> {
        let mut args = vec![];
        let mut kwargs: Vec<(String, Expr)> = vec![];
        while !self.is_op(")") {
            if matches!(self.peek(), Tok::Name(_)) && matches!(self.peek_at(1), Tok::Op("=")) {
                let k = self.name()?;
                if kwargs.iter().any(|(n, _)| *n == k) {
                    return Err(self.error(format!("keyword argument {k} repeated")));
                }
                self.bump();
                kwargs.push((k, self.expression()?));
            } else {
                if !kwargs.is_empty() {
                    return Err(self.error("positional argument follows keyword argument"));
                }
                args.push(self.expression()?);
            }
            if !self.is_op(",") {
                break;
            }
            self.bump();
        }
        self.expect_op(")")?;
        Ok((args, kwargs))
    }

    fn atom(&mut self) -> Result<Expr, SyntaxError> {
        let t = self.token().clone();
        match t.tok {
            Tok::Name(n) => {
                self.bump();
                Ok(Expr::Name(n))
            }
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::Int(i))
            }
            Tok::Float(f) => {
                self.bump();
                Ok(Expr::Float(f))
            }
            Tok::Str(s) => {
                self.bump();
                let mut s = s;
                // adjacent literals concatenate
                while let Tok::Str(more) = self.peek().clone() {
                    self.bump();
                    s.push_str(&more);
                }
                Ok(Expr::Str(s))
            }
            Tok::Keyword("None") => {
                self.bump();
                Ok(Expr::None)
            }
            Tok::Keyword("True") => {
                self.bump();
                Ok(Expr::Bool(true))
            }
            Tok::Keyword("False") => {
                self.bump();
                Ok(Expr::Bool(false))
            }
            Tok::Op("-") => {
                self.bump();
                match self.peek().clone() {
                    Tok::Int(i) => {
                        self.bump();
                        Ok(Expr::Int(-i))
                    }
                    Tok::Float(f) => {
                        self.bump();
                        Ok(Expr::Float(-f))
                    }
                    _ => Err(self.error("'-' is only supported before a number")),
                }
            }
            Tok::Op("[") => {
                self.bump();
                let items = self.sequence("]")?.0;
                Ok(Expr::List(items))
            }
            Tok::Op("(") => {
                self.bump();
                let (items, trailing) = self.sequence(")")?;
                if items.len() == 1 && !trailing {
                    Ok(items.into_iter().next().expect("one item"))
                } else {
                    Ok(Expr::Tuple(items))
                }
            }
            _ => Err(self.error("expected an expression")),
        }
    }

    /// Comma-separated expressions up to `close`; reports a trailing comma.
    fn sequence(&mut self, close: &str) -> Result<(Vec<Expr>, bool), SyntaxError> {
        let mut items = vec![];
        let mut trailing = false;
        while !self.is_op(close) {
            items.push(self.expression()?);
            trailing = false;
            if !self.is_op(",") {
                break;
            }
            self.bump();
            trailing = true;
        }
        self.expect_op(close)?;
        Ok((items, trailing))
    }
}

pub fn parse(source: &str) -> Result<Program, SyntaxError> {
    let toks = tokenize(source)?;
    Parser { toks, pos: 0 }.program()
}

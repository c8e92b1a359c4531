use super::ast::{KEYWORDS, UNSUPPORTED};
use super::SyntaxError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Name(String),
    Keyword(&'static str),
    Int(i64),
    Float(f64),
    Str(String),
    Op(&'static str),
    Comment(String),
    Newline,
    Indent,
    Dedent,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Name(n) => n.clone(),
            Tok::Keyword(k) => (*k).to_string(),
            Tok::Int(i) => i.to_string(),
            Tok::Float(f) => f.to_string(),
            Tok::Str(s) => format!("{s:?}"),
            Tok::Op(o) => (*o).to_string(),
            Tok::Comment(_) => "comment".into(),
            Tok::Newline => "newline".into(),
            Tok::Indent => "indent".into(),
            Tok::Dedent => "dedent".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const OPS2: [&str; 4] = ["==", "!=", "<=", ">="];
const OPS1: [&str; 11] = ["(", ")", "[", "]", ",", ":", "=", "<", ">", "-", "."];

enum LogicalKind {
    Code(Vec<Token>),
    Comment(String),
}

struct Logical {
    indent: usize,
    line: usize,
    kind: LogicalKind,
}

fn indent_width(line: &str) -> usize {
    let mut w = 0;
    for ch in line.chars() {
        match ch {
            ' ' => w += 1,
            '\t' => w = (w / 4 + 1) * 4,
            _ => break,
        }
    }
    w
}

fn err(line: usize, col: usize, token: &str, message: impl Into<String>) -> SyntaxError {
    SyntaxError { line, column: col, token: token.to_string(), message: message.into() }
}

struct Scanner<'a> {
    lines: Vec<&'a str>,
    row: usize,
    col: usize,
}

impl Scanner<'_> {
    fn peek(&self) -> Option<char> {
        self.lines.get(self.row).and_then(|l| l[self.col..].chars().next())
    }

    fn peek2(&self) -> Option<char> {
        self.lines.get(self.row).and_then(|l| l[self.col..].chars().nth(1))
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.col += c.len_utf8();
        Some(c)
    }

    fn rest(&self) -> &str {
        self.lines.get(self.row).map(|l| &l[self.col..]).unwrap_or("")
    }

    fn eof_pos(&self) -> (usize, usize) {
        let last = self.lines.len().max(1);
        let col = self.lines.last().map(|l| l.chars().count() + 1).unwrap_or(1);
        (last, col)
    }

    fn string(&mut self, quote: char) -> Result<String, SyntaxError> {
        let (line, col) = (self.row + 1, self.col + 1);
        if self.rest().starts_with(&format!("{quote}{quote}{quote}")) {
            return Err(err(line, col, &format!("{quote}{quote}{quote}"), "triple-quoted strings are not supported"));
        }
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(err(line, col, &quote.to_string(), "unterminated string literal")),
                Some(c) if c == quote => return Ok(s),
                Some('\\') => match self.bump() {
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some('r') => s.push('\r'),
                    Some('0') => s.push('\0'),
                    Some(c @ ('\\' | '\'' | '"')) => s.push(c),
                    Some(c) => {
                        s.push('\\');
                        s.push(c);
                    }
                    None => return Err(err(line, col, &quote.to_string(), "unterminated string literal")),
                },
                Some(c) => s.push(c),
            }
        }
    }

    fn number(&mut self) -> Result<Tok, SyntaxError> {
        let (line, col) = (self.row + 1, self.col + 1);
        let start = self.col;
        let mut float = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                self.bump();
            } else if c == '.' && !float {
                float = true;
                self.bump();
            } else if (c == 'e' || c == 'E')
                && (self.peek2().is_some_and(|d| d.is_ascii_digit())
                    || (matches!(self.peek2(), Some('+' | '-'))
                        && self.rest()[2..].chars().next().is_some_and(|d| d.is_ascii_digit())))
            {
                float = true;
                self.bump();
                if matches!(self.peek(), Some('+' | '-')) {
                    self.bump();
                }
                while self.peek().is_some_and(|d| d.is_ascii_digit()) {
                    self.bump();
                }
                break;
            } else {
                break;
            }
        }
        let text = &self.lines[self.row][start..self.col];
        if self.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
            return Err(err(line, col, text, "invalid number literal"));
        }
        if float {
            text.parse().map(Tok::Float).map_err(|_| err(line, col, text, "invalid float literal"))
        } else {
            text.parse().map(Tok::Int).map_err(|_| err(line, col, text, "integer literal out of range"))
        }
    }
}

fn logical_lines(source: &str) -> Result<Vec<Logical>, SyntaxError> {
    let mut sc = Scanner { lines: source.lines().collect(), row: 0, col: 0 };
    let mut out = vec![];
    let mut brackets: Vec<(char, usize, usize)> = vec![];
    let mut current: Option<Logical> = None;
    while sc.row < sc.lines.len() {
        if current.is_none() {
            let line = sc.lines[sc.row];
            let trimmed = line.trim_start();
            if trimmed.is_empty() {
                sc.row += 1;
                continue;
            }
            let indent = indent_width(line);
            if let Some(text) = trimmed.strip_prefix('#') {
                out.push(Logical { indent, line: sc.row + 1, kind: LogicalKind::Comment(text.trim().to_string()) });
                sc.row += 1;
                continue;
            }
            sc.col = line.len() - trimmed.len();
            current = Some(Logical { indent, line: sc.row + 1, kind: LogicalKind::Code(vec![]) });
        }
        let Some(c) = sc.peek() else {
            sc.row += 1;
            sc.col = 0;
            if brackets.is_empty() {
                out.extend(current.take());
            }
            continue;
        };
        let (line, col) = (sc.row + 1, sc.col + 1);
        let tok = match c {
            ' ' | '\t' | '\r' => {
                sc.bump();
                continue;
            }
            '#' => {
                sc.col = sc.lines[sc.row].len();
                continue;
            }
            '\\' if sc.rest().trim_end() == "\\" => {
                sc.col = sc.lines[sc.row].len();
                sc.row += 1;
                sc.col = 0;
                continue;
            }
            '"' | '\'' => Tok::Str(sc.string(c)?),
            '0'..='9' => sc.number()?,
            '.' if sc.peek2().is_some_and(|d| d.is_ascii_digit()) => sc.number()?,
            c if c == '_' || c.is_alphabetic() => {
                let start = sc.col;
                while sc.peek().is_some_and(|d| d == '_' || d.is_alphanumeric()) {
                    sc.bump();
                }
                let word = &sc.lines[sc.row][start..sc.col];
                if let Some(k) = KEYWORDS.iter().find(|k| **k == word) {
                    Tok::Keyword(k)
                } else if UNSUPPORTED.contains(&word) || word == "continue" {
                    return Err(err(line, col, word, format!("'{word}' is not supported in plans")));
                } else {
                    Tok::Name(word.to_string())
                }
            }
            _ => {
                let rest = sc.rest();
                let op = OPS2.iter().chain(OPS1.iter()).find(|o| rest.starts_with(**o));
                let Some(op) = op else {
                    return Err(err(line, col, &c.to_string(), format!("unexpected character {c:?}")));
                };
                for _ in 0..op.len() {
                    sc.bump();
                }
                match *op {
                    "(" | "[" => brackets.push((c, line, col)),
                    ")" | "]" => {
                        let open = if *op == ")" { '(' } else { '[' };
                        match brackets.pop() {
                            Some((o, _, _)) if o == open => {}
                            _ => return Err(err(line, col, op, format!("unmatched '{op}'"))),
                        }
                    }
                    _ => {}
                }
                Tok::Op(op)
            }
        };
        if let Some(Logical { kind: LogicalKind::Code(toks), .. }) = current.as_mut() {
            toks.push(Token { tok, line, col });
        }
    }
    if let Some((o, _, _)) = brackets.last() {
        let (line, col) = sc.eof_pos();
        return Err(err(line, col, "end of input", format!("unexpected end of input, '{o}' was never closed")));
    }
    out.extend(current.take());
    Ok(out)
}

/// Tokens with NEWLINE/INDENT/DEDENT structure. A comment line takes the
/// indentation of the block it most plausibly belongs to, so stray comment
/// indentation never closes or opens a block on its own.
pub fn tokenize(source: &str) -> Result<Vec<Token>, SyntaxError> {
    let logical: Vec<Logical> = logical_lines(source)?
        .into_iter()
        .filter(|l| !matches!(&l.kind, LogicalKind::Code(t) if t.is_empty()))
        .collect();
    let mut out = vec![];
    let mut stack = vec![0usize];
    let mut opener = false;
    let next_code_indent = |i: usize| -> usize {
        logical[i + 1..]
            .iter()
            .find(|l| matches!(l.kind, LogicalKind::Code(_)))
            .map(|l| l.indent)
            .unwrap_or(0)
    };
    for (i, l) in logical.iter().enumerate() {
        let top = *stack.last().expect("nonempty");
        let level = match &l.kind {
            LogicalKind::Code(_) => l.indent,
            LogicalKind::Comment(_) => {
                let next = next_code_indent(i);
                if opener {
                    if next > top {
                        next
                    } else {
                        l.indent.max(top)
                    }
                } else if next >= l.indent {
                    next.min(top)
                } else {
                    *stack.iter().rev().find(|s| **s <= l.indent).unwrap_or(&0)
                }
            }
        };
        if level > top {
            if !opener {
                return Err(err(l.line, level + 1, "indent", "unexpected indent"));
            }
            stack.push(level);
            out.push(Token { tok: Tok::Indent, line: l.line, col: 1 });
        } else {
            if opener && matches!(l.kind, LogicalKind::Code(_)) {
                return Err(err(l.line, level + 1, "newline", "expected an indented block"));
            }
            while *stack.last().expect("nonempty") > level {
                stack.pop();
                out.push(Token { tok: Tok::Dedent, line: l.line, col: 1 });
            }
            if *stack.last().expect("nonempty") != level {
                return Err(err(l.line, level + 1, "dedent", "unindent does not match any outer indentation level"));
            }
        }
        match &l.kind {
            LogicalKind::Code(toks) => {
                out.extend(toks.iter().cloned());
                let last = toks.last().expect("code lines have tokens");
                opener = last.tok == Tok::Op(":");
                out.push(Token { tok: Tok::Newline, line: last.line, col: last.col + 1 });
            }
            LogicalKind::Comment(text) => {
                if level > top {
                    opener = false;
                }
                out.push(Token { tok: Tok::Comment(text.clone()), line: l.line, col: l.indent + 1 });
                out.push(Token { tok: Tok::Newline, line: l.line, col: l.indent + 1 });
            }
        }
    }
    let (line, col) = {
        let n = source.lines().count().max(1);
        (n, source.lines().last().map(|s| s.chars().count() + 1).unwrap_or(1))
    };
    if opener {
        return Err(err(line, col, "end of input", "expected an indented block"));
    }
    while stack.len() > 1 {
        stack.pop();
        out.push(Token { tok: Tok::Dedent, line, col });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

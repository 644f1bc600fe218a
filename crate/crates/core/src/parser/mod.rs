//! Recovery parser for the schema dialect.
//!
//! Grammar, one logical statement at a time:
//!
//! ```text
//! stmt      := IDENT '=' call | call | 'from' IDENT 'import' IDENT (',' IDENT)*
//!            | STRING                                  -- annotation block
//!            | class_def
//! call      := IDENT '(' [arg (',' arg)* [',']] ')'
//! arg       := [IDENT '='] value
//! value     := STRING | '[' [value (',' value)* [',']] ']' | call | IDENT
//! class_def := 'class' IDENT ['(' IDENT ')'] ':' member*   -- members indented
//! member    := STRING | 'pass'
//!            | 'def' '__init__' '(' 'self' (',' param)* [','] ')' ':'
//!            | 'self' '.' IDENT '=' IDENT
//!            | 'super' '(' ')' '.' '__init__' '(' [arg (',' arg)*] ')'
//! param     := IDENT ':' type ['=' value]
//! type      := IDENT ['[' type (',' type)* ']']
//! ```
//!
//! `#` comments and blank lines are ignored and brackets may span lines.
//! A statement that does not match is recorded as a skipped line; parsing
//! never aborts.

mod bind;
mod lexer;
mod region;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use bind::{bind, parse_import_completion, ImportCompletion};
pub use lexer::quote_string;
pub use region::{extract_code_region, truncate_at_next_instruction};

use lexer::{split_statements, tokenize, RawStatement, Split, Tok};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Str(String),
    List(Vec<Value>),
    Call(Call),
    Var(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arg {
    pub keyword: Option<String>,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Call {
    pub class_name: String,
    pub args: Vec<Arg>,
}

impl Call {
    pub fn keyword(&self, name: &str) -> Option<&Value> {
        self.args
            .iter()
            .find(|a| {
                a.keyword
                    .as_deref()
                    .is_some_and(|k| k.eq_ignore_ascii_case(name))
            })
            .map(|a| &a.value)
    }

    pub fn positional(&self) -> impl Iterator<Item = &Value> {
        self.args
            .iter()
            .filter(|a| a.keyword.is_none())
            .map(|a| &a.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeExpr {
    pub name: String,
    pub params: Vec<TypeExpr>,
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.params.is_empty() {
            f.write_str("[")?;
            for (i, p) in self.params.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{p}")?;
            }
            f.write_str("]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    pub name: String,
    pub ty: TypeExpr,
    pub default: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDef {
    pub name: String,
    pub base: Option<String>,
    pub doc: Option<String>,
    /// Constructor parameters after `self`.
    pub fields: Vec<Field>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Assign {
        target: String,
        call: Call,
    },
    Call(Call),
    Import {
        base: String,
        names: Vec<String>,
    },
    Class(ClassDef),
    /// A bare triple-quoted block, used for task instructions.
    Annotation(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Located {
    /// 1-based source line of the statement's first physical line.
    pub line: usize,
    pub statement: Statement,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DialectAst {
    pub statements: Vec<Located>,
}

impl DialectAst {
    /// Names of every class defined in the program, in order.
    pub fn class_names(&self) -> Vec<&str> {
        self.statements
            .iter()
            .filter_map(|s| match &s.statement {
                Statement::Class(c) => Some(c.name.as_str()),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BindError {
    /// Index into [`DialectAst::statements`].
    pub statement: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostics {
    pub skipped_lines: Vec<SkippedLine>,
    pub bind_errors: Vec<BindError>,
}

impl ParseDiagnostics {
    pub fn is_empty(&self) -> bool {
        self.skipped_lines.is_empty() && self.bind_errors.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.skipped_lines
            .iter()
            .map(|s| format!("line {}: {}", s.line, s.reason))
            .chain(
                self.bind_errors
                    .iter()
                    .map(|b| format!("statement {}: {}", b.statement, b.reason)),
            )
            .collect()
    }
}

/// Parses dialect code statement by statement, skipping what does not match.
pub fn parse_program(code: &str) -> (DialectAst, ParseDiagnostics) {
    let mut ast = DialectAst::default();
    let mut diags = ParseDiagnostics::default();
    let mut assigned: HashSet<String> = HashSet::new();

    let mut pieces = split_statements(code).into_iter().peekable();
    while let Some(piece) = pieces.next() {
        let raw = match piece {
            Split::Broken { line, reason } => {
                diags.skipped_lines.push(SkippedLine { line, reason });
                continue;
            }
            Split::Statement(raw) => raw,
        };
        let toks = match tokenize(&raw.text) {
            Ok(t) if t.is_empty() => continue,
            Ok(t) => t,
            Err(reason) => {
                diags.skipped_lines.push(SkippedLine {
                    line: raw.line,
                    reason,
                });
                continue;
            }
        };

        if raw.indent == 0 && toks.first() == Some(&Tok::Ident("class".into())) {
            let mut body: Vec<(RawStatement, Vec<Tok>)> = Vec::new();
            while let Some(Split::Statement(next)) = pieces.peek() {
                match tokenize(&next.text) {
                    Ok(t) if t.is_empty() => {
                        pieces.next();
                    }
                    Ok(t) if next.indent > 0 => {
                        let Some(Split::Statement(next)) = pieces.next() else {
                            unreachable!()
                        };
                        body.push((next, t));
                    }
                    Err(_) if next.indent > 0 => {
                        let Some(Split::Statement(next)) = pieces.next() else {
                            unreachable!()
                        };
                        body.push((next, Vec::new()));
                    }
                    _ => break,
                }
            }
            match parse_class(&toks, &body) {
                Ok(class) => ast.statements.push(Located {
                    line: raw.line,
                    statement: Statement::Class(class),
                }),
                Err((line, reason)) => diags.skipped_lines.push(SkippedLine {
                    line: line.unwrap_or(raw.line),
                    reason,
                }),
            }
            continue;
        }

        match parse_statement(&toks) {
            Ok(stmt) => {
                if let Some(undefined) = first_undefined_var(&stmt, &assigned) {
                    diags.skipped_lines.push(SkippedLine {
                        line: raw.line,
                        reason: format!("undefined variable {undefined}"),
                    });
                    continue;
                }
                if let Statement::Assign { target, .. } = &stmt {
                    assigned.insert(target.clone());
                }
                ast.statements.push(Located {
                    line: raw.line,
                    statement: stmt,
                });
            }
            Err(reason) => diags.skipped_lines.push(SkippedLine {
                line: raw.line,
                reason,
            }),
        }
    }
    (ast, diags)
}

fn first_undefined_var(stmt: &Statement, assigned: &HashSet<String>) -> Option<String> {
    fn in_value(v: &Value, assigned: &HashSet<String>) -> Option<String> {
        match v {
            Value::Var(name) if !assigned.contains(name) => Some(name.clone()),
            Value::Var(_) | Value::Str(_) => None,
            Value::List(items) => items.iter().find_map(|i| in_value(i, assigned)),
            Value::Call(call) => in_call(call, assigned),
        }
    }
    fn in_call(call: &Call, assigned: &HashSet<String>) -> Option<String> {
        call.args.iter().find_map(|a| in_value(&a.value, assigned))
    }
    match stmt {
        Statement::Assign { call, .. } | Statement::Call(call) => in_call(call, assigned),
        _ => None,
    }
}

struct Cursor<'a> {
    toks: &'a [Tok],
    pos: usize,
}

type PResult<T> = Result<T, String>;

impl<'a> Cursor<'a> {
    fn new(toks: &'a [Tok]) -> Self {
        Self { toks, pos: 0 }
    }

    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&'a Tok> {
        self.toks.get(self.pos + offset)
    }

    fn bump(&mut self) -> Option<&'a Tok> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok) -> PResult<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(format!(
                "expected {}, found {}",
                describe(Some(tok)),
                describe(self.peek())
            ))
        }
    }

    fn ident(&mut self) -> PResult<&'a str> {
        match self.peek() {
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(name)
            }
            other => Err(format!("expected identifier, found {}", describe(other))),
        }
    }

    fn keyword(&mut self, word: &str) -> PResult<()> {
        match self.peek() {
            Some(Tok::Ident(name)) if name == word => {
                self.pos += 1;
                Ok(())
            }
            other => Err(format!("expected `{word}`, found {}", describe(other))),
        }
    }

    fn finish(&self) -> PResult<()> {
        match self.peek() {
            None => Ok(()),
            other => Err(format!("unexpected trailing {}", describe(other))),
        }
    }
}

fn describe(tok: Option<&Tok>) -> String {
    match tok {
        None => "end of statement".into(),
        Some(Tok::Ident(s)) => format!("identifier `{s}`"),
        Some(Tok::Str(_)) => "string".into(),
        Some(Tok::LParen) => "`(`".into(),
        Some(Tok::RParen) => "`)`".into(),
        Some(Tok::LBracket) => "`[`".into(),
        Some(Tok::RBracket) => "`]`".into(),
        Some(Tok::Comma) => "`,`".into(),
        Some(Tok::Eq) => "`=`".into(),
        Some(Tok::Colon) => "`:`".into(),
        Some(Tok::Dot) => "`.`".into(),
    }
}

fn parse_statement(toks: &[Tok]) -> PResult<Statement> {
    let mut c = Cursor::new(toks);
    let stmt = match (c.peek(), c.peek_at(1)) {
        (Some(Tok::Str(text)), None) => {
            c.bump();
            Statement::Annotation(text.clone())
        }
        (Some(Tok::Ident(kw)), Some(Tok::Ident(_))) if kw == "from" => {
            c.bump();
            let base = c.ident()?.to_string();
            c.keyword("import")?;
            let mut names = vec![c.ident()?.to_string()];
            while c.eat(&Tok::Comma) {
                names.push(c.ident()?.to_string());
            }
            Statement::Import { base, names }
        }
        (Some(Tok::Ident(target)), Some(Tok::Eq)) => {
            c.pos += 2;
            let call = parse_call(&mut c)?;
            Statement::Assign {
                target: target.clone(),
                call,
            }
        }
        (Some(Tok::Ident(_)), Some(Tok::LParen)) => Statement::Call(parse_call(&mut c)?),
        (other, _) => return Err(format!("not a statement: starts with {}", describe(other))),
    };
    c.finish()?;
    Ok(stmt)
}

fn parse_call(c: &mut Cursor<'_>) -> PResult<Call> {
    let class_name = c.ident()?.to_string();
    c.expect(&Tok::LParen)?;
    let mut args = Vec::new();
    while !c.eat(&Tok::RParen) {
        let keyword = match (c.peek(), c.peek_at(1)) {
            (Some(Tok::Ident(k)), Some(Tok::Eq)) => {
                c.pos += 2;
                Some(k.clone())
            }
            _ => None,
        };
        let value = parse_value(c)?;
        args.push(Arg { keyword, value });
        if !c.eat(&Tok::Comma) {
            c.expect(&Tok::RParen)?;
            break;
        }
    }
    Ok(Call { class_name, args })
}

fn parse_value(c: &mut Cursor<'_>) -> PResult<Value> {
    match c.peek() {
        Some(Tok::Str(s)) => {
            c.bump();
            Ok(Value::Str(s.clone()))
        }
        Some(Tok::LBracket) => {
            c.bump();
            let mut items = Vec::new();
            while !c.eat(&Tok::RBracket) {
                items.push(parse_value(c)?);
                if !c.eat(&Tok::Comma) {
                    c.expect(&Tok::RBracket)?;
                    break;
                }
            }
            Ok(Value::List(items))
        }
        Some(Tok::Ident(name)) => {
            if c.peek_at(1) == Some(&Tok::LParen) {
                Ok(Value::Call(parse_call(c)?))
            } else {
                c.bump();
                Ok(Value::Var(name.clone()))
            }
        }
        other => Err(format!("expected value, found {}", describe(other))),
    }
}

fn parse_type(c: &mut Cursor<'_>) -> PResult<TypeExpr> {
    let name = c.ident()?.to_string();
    let mut params = Vec::new();
    if c.eat(&Tok::LBracket) {
        loop {
            params.push(parse_type(c)?);
            if !c.eat(&Tok::Comma) {
                break;
            }
        }
        c.expect(&Tok::RBracket)?;
    }
    Ok(TypeExpr { name, params })
}

fn parse_class(
    header: &[Tok],
    body: &[(RawStatement, Vec<Tok>)],
) -> Result<ClassDef, (Option<usize>, String)> {
    let mut c = Cursor::new(header);
    let head = (|| -> PResult<(String, Option<String>)> {
        c.keyword("class")?;
        let name = c.ident()?.to_string();
        let base = if c.eat(&Tok::LParen) {
            let base = c.ident()?.to_string();
            c.expect(&Tok::RParen)?;
            Some(base)
        } else {
            None
        };
        c.expect(&Tok::Colon)?;
        c.finish()?;
        Ok((name, base))
    })();
    let (name, base) = head.map_err(|e| (None, e))?;
    let mut class = ClassDef {
        name,
        base,
        doc: None,
        fields: Vec::new(),
    };
    let mut seen_init = false;
    for (raw, toks) in body {
        if toks.is_empty() {
            return Err((Some(raw.line), "malformed class member".into()));
        }
        parse_member(toks, &mut class, &mut seen_init).map_err(|e| (Some(raw.line), e))?;
    }
    Ok(class)
}

fn parse_member(toks: &[Tok], class: &mut ClassDef, seen_init: &mut bool) -> PResult<()> {
    let mut c = Cursor::new(toks);
    match c.peek() {
        Some(Tok::Str(doc)) => {
            c.bump();
            if class.doc.is_none() {
                class.doc = Some(doc.clone());
            }
        }
        Some(Tok::Ident(w)) if w == "pass" => {
            c.bump();
        }
        Some(Tok::Ident(w)) if w == "def" => {
            if *seen_init {
                return Err("duplicate constructor".into());
            }
            *seen_init = true;
            c.bump();
            c.keyword("__init__")?;
            c.expect(&Tok::LParen)?;
            c.keyword("self")?;
            while c.eat(&Tok::Comma) {
                if c.peek() == Some(&Tok::RParen) {
                    break;
                }
                let name = c.ident()?.to_string();
                c.expect(&Tok::Colon)?;
                let ty = parse_type(&mut c)?;
                let default = if c.eat(&Tok::Eq) {
                    Some(parse_value(&mut c)?)
                } else {
                    None
                };
                class.fields.push(Field { name, ty, default });
            }
            c.expect(&Tok::RParen)?;
            c.expect(&Tok::Colon)?;
        }
        Some(Tok::Ident(w)) if w == "self" => {
            c.bump();
            c.expect(&Tok::Dot)?;
            c.ident()?;
            c.expect(&Tok::Eq)?;
            c.ident()?;
        }
        Some(Tok::Ident(w)) if w == "super" => {
            c.bump();
            c.expect(&Tok::LParen)?;
            c.expect(&Tok::RParen)?;
            c.expect(&Tok::Dot)?;
            c.keyword("__init__")?;
            c.pos -= 1;
            parse_call(&mut c)?;
        }
        other => {
            return Err(format!(
                "unexpected class member starting with {}",
                describe(other)
            ))
        }
    }
    c.finish()
}

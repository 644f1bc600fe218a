//! Tokens of the schema dialect and the physical-line statement splitter.

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eq,
    Colon,
    Dot,
}

/// One logical statement: a run of physical lines with balanced brackets.
#[derive(Debug, Clone)]
pub(crate) struct RawStatement {
    /// 1-based line of the first physical line.
    pub line: usize,
    pub indent: usize,
    pub text: String,
}

#[derive(Debug, Clone)]
pub(crate) enum Split {
    Statement(RawStatement),
    /// A line that could not start a well-formed statement.
    Broken {
        line: usize,
        reason: String,
    },
}

#[derive(Clone, Copy, PartialEq)]
enum StrState {
    Out,
    Single(char),
    Triple(char),
}

enum LineEnd {
    Complete,
    Continue,
    Broken(&'static str),
}

/// Splits source text into logical statements. A statement continues across
/// lines while brackets are open or a triple-quoted string is unterminated.
/// When input ends inside an open statement, its first line is reported as
/// broken and splitting restarts on the next line.
pub(crate) fn split_statements(code: &str) -> Vec<Split> {
    let lines: Vec<&str> = code
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let start = i;
        let mut depth: i64 = 0;
        let mut state = StrState::Out;
        let mut end = None;
        let mut broken = None;
        let mut j = i;
        while j < lines.len() {
            match scan_line(lines[j], &mut depth, &mut state) {
                LineEnd::Complete if depth <= 0 && state == StrState::Out => {
                    end = Some(j);
                    break;
                }
                LineEnd::Broken(reason) => {
                    broken = Some(reason);
                    end = Some(j);
                    break;
                }
                _ => j += 1,
            }
        }
        match (end, broken) {
            (Some(e), None) => {
                let text = lines[start..=e].join("\n");
                let indent = lines[start]
                    .chars()
                    .take_while(|c| *c == ' ' || *c == '\t')
                    .count();
                out.push(Split::Statement(RawStatement {
                    line: start + 1,
                    indent,
                    text,
                }));
                i = e + 1;
            }
            (Some(e), Some(reason)) => {
                out.push(Split::Broken {
                    line: start + 1,
                    reason: reason.to_string(),
                });
                i = e.max(start) + 1;
            }
            (None, _) => {
                let reason = if state == StrState::Out {
                    "unbalanced brackets"
                } else {
                    "unterminated string"
                };
                out.push(Split::Broken {
                    line: start + 1,
                    reason: reason.to_string(),
                });
                i = start + 1;
            }
        }
    }
    out
}

fn scan_line(line: &str, depth: &mut i64, state: &mut StrState) -> LineEnd {
    let chars: Vec<char> = line.chars().collect();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        match *state {
            StrState::Out => match c {
                '#' => break,
                '(' | '[' => *depth += 1,
                ')' | ']' => *depth -= 1,
                '"' | '\'' => {
                    if chars.get(k + 1) == Some(&c) && chars.get(k + 2) == Some(&c) {
                        *state = StrState::Triple(c);
                        k += 2;
                    } else {
                        *state = StrState::Single(c);
                    }
                }
                _ => {}
            },
            StrState::Single(q) => {
                if c == '\\' {
                    k += 1;
                } else if c == q {
                    *state = StrState::Out;
                }
            }
            StrState::Triple(q) => {
                if c == '\\' {
                    k += 1;
                } else if c == q && chars.get(k + 1) == Some(&q) && chars.get(k + 2) == Some(&q) {
                    *state = StrState::Out;
                    k += 2;
                }
            }
        }
        k += 1;
    }
    match *state {
        StrState::Single(_) => {
            *state = StrState::Out;
            LineEnd::Broken("unterminated string")
        }
        StrState::Triple(_) => LineEnd::Continue,
        StrState::Out if *depth > 0 => LineEnd::Continue,
        StrState::Out => LineEnd::Complete,
    }
}

/// Tokenizes one logical statement. Newlines and comments are whitespace.
pub(crate) fn tokenize(text: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        match c {
            c if c.is_whitespace() => k += 1,
            '#' => {
                while k < chars.len() && chars[k] != '\n' {
                    k += 1;
                }
            }
            '(' => push(&mut toks, &mut k, Tok::LParen),
            ')' => push(&mut toks, &mut k, Tok::RParen),
            '[' => push(&mut toks, &mut k, Tok::LBracket),
            ']' => push(&mut toks, &mut k, Tok::RBracket),
            ',' => push(&mut toks, &mut k, Tok::Comma),
            '=' => push(&mut toks, &mut k, Tok::Eq),
            ':' => push(&mut toks, &mut k, Tok::Colon),
            '.' => push(&mut toks, &mut k, Tok::Dot),
            '"' | '\'' => {
                let (s, next) = lex_string(&chars, k)?;
                toks.push(Tok::Str(s));
                k = next;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = k;
                while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_') {
                    k += 1;
                }
                toks.push(Tok::Ident(chars[start..k].iter().collect()));
            }
            other => return Err(format!("unexpected character {other:?}")),
        }
    }
    Ok(toks)
}

fn push(toks: &mut Vec<Tok>, k: &mut usize, tok: Tok) {
    toks.push(tok);
    *k += 1;
}

fn lex_string(chars: &[char], start: usize) -> Result<(String, usize), String> {
    let q = chars[start];
    let triple = chars.get(start + 1) == Some(&q) && chars.get(start + 2) == Some(&q);
    let mut k = start + if triple { 3 } else { 1 };
    let mut out = String::new();
    loop {
        let Some(&c) = chars.get(k) else {
            return Err("unterminated string".into());
        };
        if c == '\\' {
            let Some(&e) = chars.get(k + 1) else {
                return Err("unterminated string".into());
            };
            k += 2;
            match e {
                'n' => out.push('\n'),
                't' => out.push('\t'),
                'r' => out.push('\r'),
                '0' => out.push('\0'),
                '\\' | '\'' | '"' => out.push(e),
                '\n' => {}
                'x' | 'u' | 'U' => {
                    let width = match e {
                        'x' => 2,
                        'u' => 4,
                        _ => 8,
                    };
                    let digits: String = chars
                        .get(k..k + width)
                        .map(|d| d.iter().collect())
                        .unwrap_or_default();
                    let decoded = u32::from_str_radix(&digits, 16)
                        .ok()
                        .and_then(char::from_u32);
                    match decoded {
                        Some(ch) if digits.len() == width => {
                            out.push(ch);
                            k += width;
                        }
                        _ => return Err(format!("invalid \\{e} escape")),
                    }
                }
                other => {
                    out.push('\\');
                    out.push(other);
                }
            }
            continue;
        }
        if triple {
            if c == q && chars.get(k + 1) == Some(&q) && chars.get(k + 2) == Some(&q) {
                return Ok((out, k + 3));
            }
        } else if c == q {
            return Ok((out, k + 1));
        } else if c == '\n' {
            return Err("unterminated string".into());
        }
        out.push(c);
        k += 1;
    }
}

/// Renders a double-quoted string literal that [`tokenize`] reads back to
/// exactly `s`.
pub fn quote_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 || c as u32 == 0x7f => {
                out.push_str(&format!("\\x{:02x}", c as u32))
            }
            c if c.is_control() || c == '\u{2028}' || c == '\u{2029}' => {
                out.push_str(&format!("\\u{:04x}", c as u32));
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

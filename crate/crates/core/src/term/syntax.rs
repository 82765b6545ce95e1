//! Textual term syntax.
//!
//! ```text
//! term := VAR | atom | atom '(' term (',' term)* ')'
//! VAR  := [A-Z_][A-Za-z0-9_]*
//! atom := [a-z][A-Za-z0-9_]*
//! ```
//!
//! Variables named `_G<ns>_<idx>` denote bank-issued variables, which is what
//! the formatter prints for them, so printing and re-parsing any term gives
//! back the same term.

use std::sync::Arc;

use thiserror::Error;

use super::{Symbol, Term, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at line {line}, column {column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Atom(String),
    Variable(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Arrow,
}

impl std::fmt::Display for Token {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Token::Atom(s) | Token::Variable(s) => write!(f, "`{s}`"),
            Token::LParen => f.write_str("`(`"),
            Token::RParen => f.write_str("`)`"),
            Token::Comma => f.write_str("`,`"),
            Token::Dot => f.write_str("`.`"),
            Token::Arrow => f.write_str("`<-`"),
        }
    }
}

/// Tokenizer plus recursive-descent term parser over one piece of text.
pub struct TokenStream<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    line_start: usize,
    column_offset: usize,
    peeked: Option<(Token, usize, usize)>,
}

pub(super) fn named_var_name(idx: u32) -> Arc<str> {
    Symbol::from_id(idx).name()
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

impl<'a> TokenStream<'a> {
    pub fn new(src: &'a str) -> Self {
        Self::at(src, 1, 0)
    }

    /// A stream whose positions are reported relative to `line` and an
    /// initial column offset, for parsing fragments of larger files.
    pub fn at(src: &'a str, line: usize, column_offset: usize) -> Self {
        TokenStream {
            src,
            pos: 0,
            line,
            line_start: 0,
            column_offset,
            peeked: None,
        }
    }

    fn column_at(&self, pos: usize) -> usize {
        let off = if self.line_start == 0 { self.column_offset } else { 0 };
        self.src[self.line_start..pos].chars().count() + 1 + off
    }

    pub fn error_here(&mut self, message: impl Into<String>) -> SyntaxError {
        let (line, column) = match &self.peeked {
            Some((_, l, c)) => (*l, *c),
            None => {
                self.skip_ws();
                (self.line, self.column_at(self.pos))
            }
        };
        SyntaxError {
            line,
            column,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c == '\n' {
                self.pos += 1;
                self.line += 1;
                self.line_start = self.pos;
            } else if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn lex(&mut self) -> Result<Option<(Token, usize, usize)>, SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        let line = self.line;
        let column = self.column_at(start);
        let rest = &self.src[start..];
        let Some(c) = rest.chars().next() else {
            return Ok(None);
        };
        let tok = match c {
            '(' => {
                self.pos += 1;
                Token::LParen
            }
            ')' => {
                self.pos += 1;
                Token::RParen
            }
            ',' => {
                self.pos += 1;
                Token::Comma
            }
            '.' => {
                self.pos += 1;
                Token::Dot
            }
            '<' if rest.starts_with("<-") => {
                self.pos += 2;
                Token::Arrow
            }
            c if c.is_ascii_lowercase() || c.is_ascii_uppercase() || c == '_' => {
                let len = rest.find(|ch: char| !is_ident_char(ch)).unwrap_or(rest.len());
                self.pos += len;
                let word = rest[..len].to_string();
                if c.is_ascii_lowercase() {
                    Token::Atom(word)
                } else {
                    Token::Variable(word)
                }
            }
            other => {
                return Err(SyntaxError {
                    line,
                    column,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        Ok(Some((tok, line, column)))
    }

    pub fn peek(&mut self) -> Result<Option<&Token>, SyntaxError> {
        if self.peeked.is_none() {
            self.peeked = self.lex()?;
        }
        Ok(self.peeked.as_ref().map(|(t, _, _)| t))
    }

    pub fn next_token(&mut self) -> Result<Option<Token>, SyntaxError> {
        match self.peeked.take() {
            Some((t, _, _)) => Ok(Some(t)),
            None => Ok(self.lex()?.map(|(t, _, _)| t)),
        }
    }

    pub fn expect(&mut self, want: &Token) -> Result<(), SyntaxError> {
        match self.peek()? {
            Some(t) if t == want => {
                self.next_token()?;
                Ok(())
            }
            Some(t) => {
                let msg = format!("expected {want}, found {t}");
                Err(self.error_here(msg))
            }
            None => {
                let msg = format!("expected {want}, found end of input");
                Err(self.error_here(msg))
            }
        }
    }

    pub fn at_end(&mut self) -> Result<bool, SyntaxError> {
        Ok(self.peek()?.is_none())
    }

    pub fn parse_term(&mut self) -> Result<Term, SyntaxError> {
        match self.peek()?.cloned() {
            Some(Token::Variable(name)) => {
                self.next_token()?;
                Ok(Term::Var(variable_from_name(&name)))
            }
            Some(Token::Atom(name)) => {
                self.next_token()?;
                if self.peek()? != Some(&Token::LParen) {
                    return Ok(Term::constant(&name));
                }
                self.next_token()?;
                let mut args = vec![self.parse_term()?];
                loop {
                    match self.peek()? {
                        Some(Token::Comma) => {
                            self.next_token()?;
                            args.push(self.parse_term()?);
                        }
                        Some(Token::RParen) => {
                            self.next_token()?;
                            break;
                        }
                        Some(t) => {
                            let msg = format!("expected `,` or `)`, found {t}");
                            return Err(self.error_here(msg));
                        }
                        None => return Err(self.error_here("unclosed `(`")),
                    }
                }
                Ok(Term::app(&name, args))
            }
            Some(t) => {
                let msg = format!("expected a term, found {t}");
                Err(self.error_here(msg))
            }
            None => Err(self.error_here("expected a term, found end of input")),
        }
    }
}

fn variable_from_name(name: &str) -> Var {
    // only the canonical spelling (no leading zeros, nonzero namespace) is a
    // bank variable
    let canonical = |s: &str| s.parse::<u32>().ok().filter(|n| n.to_string() == s);
    if let Some((ns, idx)) = name.strip_prefix("_G").and_then(|rest| rest.split_once('_')) {
        if let (Some(ns), Some(idx)) = (canonical(ns), canonical(idx)) {
            if ns > 0 {
                return Var::fresh(ns, idx);
            }
        }
    }
    Var::named(name)
}

/// Parses exactly one term; trailing input is an error.
pub fn parse_term(text: &str) -> Result<Term, SyntaxError> {
    let mut ts = TokenStream::new(text);
    let t = ts.parse_term()?;
    if !ts.at_end()? {
        return Err(ts.error_here("unexpected trailing input"));
    }
    Ok(t)
}

pub fn format_term(t: &Term) -> String {
    t.to_string()
}

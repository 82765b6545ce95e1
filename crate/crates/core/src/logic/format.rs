//! Line-oriented logic and problem files.
//!
//! ```text
//! # comment
//! logic <name> occurs_check=<on|off>
//! goal <term> .
//! rule <name>: <head> .
//! rule <name>: <head> <- <body> , <body> .
//! problem <id>: <ground-term> .
//! ```
//!
//! The `goal` line is optional and sets the goal template (a bare variable
//! when absent). Everything from `#` to the end of a line is ignored.

use std::path::Path;

use super::{InferenceRule, LogicDef, LogicError, Problem, ProblemSet};
use crate::term::{Term, Token, TokenStream};

fn is_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> LogicError {
    LogicError::Parse {
        line,
        message: message.into(),
    }
}

/// Splits `<keyword> <label>: <rest>` and returns the label and the rest
/// together with the column where the rest starts.
fn labelled<'a>(line_no: usize, line: &'a str, keyword: &str) -> Result<(&'a str, &'a str, usize), LogicError> {
    let after_kw = &line[keyword.len()..];
    let Some(colon) = after_kw.find(':') else {
        return Err(parse_error(line_no, format!("expected `{keyword} <name>: ...`")));
    };
    let label = after_kw[..colon].trim();
    if !is_name(label) {
        return Err(parse_error(line_no, format!("invalid {keyword} name `{label}`")));
    }
    let rest_start = keyword.len() + colon + 1;
    Ok((label, &line[rest_start..], rest_start))
}

fn read_dot_terminated(ts: &mut TokenStream<'_>) -> Result<(), LogicError> {
    ts.expect(&Token::Dot)?;
    if !ts.at_end()? {
        return Err(ts.error_here("unexpected input after `.`").into());
    }
    Ok(())
}

fn parse_rule_body(line_no: usize, text: &str, column: usize) -> Result<(Term, Vec<Term>), LogicError> {
    let mut ts = TokenStream::at(text, line_no, column);
    let head = ts.parse_term()?;
    let mut body = Vec::new();
    if ts.peek()? == Some(&Token::Arrow) {
        ts.next_token()?;
        body.push(ts.parse_term()?);
        while ts.peek()? == Some(&Token::Comma) {
            ts.next_token()?;
            body.push(ts.parse_term()?);
        }
    }
    read_dot_terminated(&mut ts)?;
    Ok((head, body))
}

/// Parses logic-file text and validates the result.
pub fn parse_logic(text: &str) -> Result<LogicDef, LogicError> {
    let mut header: Option<(String, bool)> = None;
    let mut goal: Option<Term> = None;
    let mut rules = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw);
        let trimmed = line.trim_start();
        if trimmed.is_empty() {
            continue;
        }
        let indent = line.len() - trimmed.len();
        let line = trimmed.trim_end();
        let word = line.split_whitespace().next().unwrap_or("");
        match word {
            "logic" => {
                if header.is_some() {
                    return Err(parse_error(line_no, "duplicate `logic` header"));
                }
                let parts: Vec<&str> = line.split_whitespace().collect();
                let [_, name, flag] = parts[..] else {
                    return Err(parse_error(line_no, "expected `logic <name> occurs_check=<on|off>`"));
                };
                if !is_name(name) {
                    return Err(parse_error(line_no, format!("invalid logic name `{name}`")));
                }
                let occurs = match flag {
                    "occurs_check=on" => true,
                    "occurs_check=off" => false,
                    _ => return Err(parse_error(line_no, format!("expected occurs_check=<on|off>, found `{flag}`"))),
                };
                header = Some((name.to_string(), occurs));
            }
            _ if header.is_none() => {
                return Err(parse_error(line_no, "expected `logic` header before anything else"));
            }
            "goal" => {
                if goal.is_some() {
                    return Err(parse_error(line_no, "duplicate `goal` line"));
                }
                let mut ts = TokenStream::at(&line[4..], line_no, indent + 4);
                let t = ts.parse_term()?;
                read_dot_terminated(&mut ts)?;
                goal = Some(t);
            }
            "rule" => {
                let (name, rest, col) = labelled(line_no, line, "rule")?;
                let (head, body) = parse_rule_body(line_no, rest, indent + col)?;
                rules.push(InferenceRule::new(name, head, body));
            }
            other => return Err(parse_error(line_no, format!("unknown directive `{other}`"))),
        }
    }
    let Some((name, occurs_check)) = header else {
        return Err(parse_error(1, "missing `logic` header"));
    };
    LogicDef::new(name, rules, occurs_check, goal.unwrap_or_else(|| Term::var("X")))
}

pub fn load_logic(path: impl AsRef<Path>) -> Result<LogicDef, LogicError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LogicError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_logic(&text)
}

/// Renders a logic in the file format; `parse_logic` reads it back unchanged.
pub fn format_logic(logic: &LogicDef) -> String {
    let mut out = format!(
        "logic {} occurs_check={}\n",
        logic.name,
        if logic.occurs_check { "on" } else { "off" }
    );
    if !logic.goal_template.is_var() {
        out.push_str(&format!("goal {} .\n", logic.goal_template));
    }
    for (i, rule) in logic.rules.iter().enumerate() {
        let name = rule.name.clone().unwrap_or_else(|| format!("r{i}"));
        out.push_str(&format!("rule {name}: {rule} .\n"));
    }
    out
}

pub fn parse_problems(name: &str, text: &str) -> Result<ProblemSet, LogicError> {
    let mut problems = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw);
        let trimmed = line.trim_start();
        if trimmed.is_empty() {
            continue;
        }
        let indent = line.len() - trimmed.len();
        let line = trimmed.trim_end();
        if line.split_whitespace().next() != Some("problem") {
            return Err(parse_error(line_no, "expected `problem <id>: <term> .`"));
        }
        let (id, rest, col) = labelled(line_no, line, "problem")?;
        let mut ts = TokenStream::at(rest, line_no, indent + col);
        let conjecture = ts.parse_term()?;
        read_dot_terminated(&mut ts)?;
        problems.push(Problem {
            id: id.to_string(),
            conjecture,
        });
    }
    ProblemSet::new(name, problems)
}

pub fn load_problems(path: impl AsRef<Path>) -> Result<ProblemSet, LogicError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LogicError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "problems".to_string());
    parse_problems(&name, &text)
}

pub fn format_problems(set: &ProblemSet) -> String {
    set.problems
        .iter()
        .map(|p| format!("problem {}: {} .\n", p.id, p.conjecture))
        .collect()
}

//! Text format for thread files.
//!
//! ```text
//! # comment
//! root X
//! X = Y <a> Z
//! Y = load:0 . X
//! Z = stop
//! ```
//!
//! One equation per line. Right hand sides are `stop`, `dead`,
//! `Y <action> Z`, or the prefix sugar `action . Y` (equivalent to
//! `Y <action> Y`). The `root` header is optional; without it the first
//! equation's left hand side is the root. Variable and action tokens carry no
//! whitespace; action names inside `<...>` may contain anything but `>`.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{LinearRhs, LinearSpec, ThreadHandle, VarId};

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum ThreadParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("duplicate equation for {0}")]
    Duplicate(VarId),
    #[error("no equations")]
    Empty,
    #[error(transparent)]
    Spec(#[from] super::SpecError),
}

fn syntax(line: usize, msg: impl Into<String>) -> ThreadParseError {
    ThreadParseError::Syntax { line, msg: msg.into() }
}

/// Parses the thread file format. Variables read back as plain base names.
pub fn parse_thread(input: &str) -> Result<ThreadHandle, ThreadParseError> {
    let mut root: Option<VarId> = None;
    let mut first_lhs: Option<VarId> = None;
    let mut eqs: BTreeMap<VarId, LinearRhs> = BTreeMap::new();

    for (i, raw) in input.lines().enumerate() {
        let ln = i + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("root") {
            if rest.starts_with(char::is_whitespace) {
                let name = rest.trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(syntax(ln, "expected `root <variable>`"));
                }
                if root.is_some() {
                    return Err(syntax(ln, "second root header"));
                }
                root = Some(VarId::new(name));
                continue;
            }
        }
        let (lhs, rhs) = line
            .split_once('=')
            .ok_or_else(|| syntax(ln, "expected `<variable> = <body>`"))?;
        let lhs = lhs.trim();
        if lhs.is_empty() || lhs.contains(char::is_whitespace) {
            return Err(syntax(ln, "bad left hand side"));
        }
        let var = VarId::new(lhs);
        let body = parse_rhs(rhs.trim(), ln)?;
        if eqs.insert(var.clone(), body).is_some() {
            return Err(ThreadParseError::Duplicate(var));
        }
        first_lhs.get_or_insert(var);
    }

    let root = root.or(first_lhs).ok_or(ThreadParseError::Empty)?;
    let spec = LinearSpec::new(eqs)?;
    Ok(ThreadHandle::new(root, Arc::new(spec))?)
}

fn parse_rhs(body: &str, ln: usize) -> Result<LinearRhs, ThreadParseError> {
    match body {
        "stop" => return Ok(LinearRhs::Stop),
        "dead" => return Ok(LinearRhs::Dead),
        _ => {}
    }
    if let Some(open) = body.find('<') {
        let close = body[open..]
            .find('>')
            .map(|p| open + p)
            .ok_or_else(|| syntax(ln, "unterminated `<action>`"))?;
        let yes = body[..open].trim();
        let action = &body[open + 1..close];
        let no = body[close + 1..].trim();
        if yes.is_empty() || no.is_empty() || action.is_empty() {
            return Err(syntax(ln, "expected `Y <action> Z`"));
        }
        if yes.contains(char::is_whitespace) || no.contains(char::is_whitespace) {
            return Err(syntax(ln, "branch variables carry no whitespace"));
        }
        return Ok(LinearRhs::post(yes, action, no));
    }
    let parts: Vec<&str> = body.split_whitespace().collect();
    if let [action, ".", cont] = parts.as_slice() {
        return Ok(LinearRhs::post(*cont, *action, *cont));
    }
    Err(syntax(ln, format!("unrecognized body `{body}`")))
}

/// Canonical printer: `root` header, then equations in variable order, always
/// in postconditional form. Output parses back to an isomorphic handle.
pub fn print_thread(h: &ThreadHandle) -> String {
    let mut out = format!("root {}\n", h.root());
    for (v, rhs) in h.spec().iter() {
        match rhs {
            LinearRhs::Stop => out.push_str(&format!("{v} = stop\n")),
            LinearRhs::Dead => out.push_str(&format!("{v} = dead\n")),
            LinearRhs::Post { yes, action, no } => {
                out.push_str(&format!("{v} = {yes} <{action}> {no}\n"))
            }
        }
    }
    out
}

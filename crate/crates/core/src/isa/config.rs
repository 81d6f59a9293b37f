//! Text format for strict load/store machine descriptions.
//!
//! ```text
//! # sizes
//! aw 1
//! wl 1
//! ous 2
//! nrpl 1
//! nrps 1
//!
//! dm flip
//! outputs ou[0] rr
//! row 0 0 0 -> 1 T
//! row 0 0 1 -> 1 T
//! row 0 1 0 -> 0 T
//! row 0 1 1 -> 0 T
//! row 1 0 0 -> 1 T
//! row 1 0 1 -> 1 T
//! row 1 1 0 -> 0 T
//! row 1 1 1 -> 0 T
//! end
//!
//! dm scramble
//! outputs sd[0]
//! random seed=7
//! end
//! ```
//!
//! The five size parameters come first, in any order, each exactly once.
//! Every later block names a data manipulation instruction, fixes its written
//! subset, and gives its table either row by row or as a seeded pseudorandom
//! table. A `row` line lists the readable subspace values (operating unit
//! bits, then load data registers, ascending) left of `->` and the written
//! values right of it, aligned with the `outputs` line; Booleans are written
//! `T` / `F`. Explicit tables must cover every readable subspace point
//! exactly once. `#` starts a comment.
//!
//! Printing always emits explicit rows in packed key order, parameters first,
//! blocks sorted by name: parsing the printed form reproduces the machine
//! exactly.

use std::collections::BTreeSet;
use std::fmt;

use crate::bta::ActionId;
use crate::maurer::{MemoryElement, ValueKind};

use super::{build_isa, random_dm_spec, DmTable, IsaParams, LsIsaMachine};

/// Parse failure with its 1-based line number (0 when the problem is with the
/// input as a whole).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ConfigError {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.msg)
        } else {
            write!(f, "line {}: {}", self.line, self.msg)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: usize, msg: impl Into<String>) -> ConfigError {
    ConfigError { line, msg: msg.into() }
}

fn fmt_val(kind: ValueKind, raw: u64) -> String {
    match kind {
        ValueKind::Bool => (if raw != 0 { "T" } else { "F" }).to_string(),
        ValueKind::Nat { .. } => raw.to_string(),
    }
}

fn parse_val(s: &str, kind: ValueKind) -> Option<u64> {
    match (kind, s) {
        (ValueKind::Bool, "T") => Some(1),
        (ValueKind::Bool, "F") => Some(0),
        (ValueKind::Bool, _) => None,
        (ValueKind::Nat { max }, _) => {
            let n: u64 = s.parse().ok()?;
            (n <= max).then_some(n)
        }
    }
}

/// Parses a description into parameters and tables, without building the
/// machine.
pub fn parse_config(input: &str) -> Result<(IsaParams, Vec<DmTable>), ConfigError> {
    let lines: Vec<(usize, &str)> = input
        .lines()
        .enumerate()
        .map(|(i, raw)| {
            let text = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            };
            (i + 1, text.trim())
        })
        .filter(|(_, l)| !l.is_empty())
        .collect();

    let mut nums: std::collections::BTreeMap<&str, u32> = Default::default();
    let mut i = 0;
    while i < lines.len() {
        let (ln, line) = lines[i];
        let mut tok = line.split_whitespace();
        let key = tok.next().unwrap();
        if key == "dm" {
            break;
        }
        if !["aw", "wl", "ous", "nrpl", "nrps"].contains(&key) {
            return Err(err(ln, format!("unknown parameter `{key}`")));
        }
        let val = tok
            .next()
            .and_then(|v| v.parse::<u32>().ok())
            .ok_or_else(|| err(ln, format!("`{key}` needs a nonnegative integer")))?;
        if tok.next().is_some() {
            return Err(err(ln, "trailing tokens after parameter value"));
        }
        if nums.insert(key, val).is_some() {
            return Err(err(ln, format!("`{key}` given twice")));
        }
        i += 1;
    }
    let take = |k: &str| nums.get(k).copied().ok_or_else(|| err(0, format!("missing parameter `{k}`")));
    let params = IsaParams {
        aw: take("aw")?,
        wl: take("wl")?,
        ous: take("ous")?,
        nrpl: take("nrpl")?,
        nrps: take("nrps")?,
    };
    params.validate().map_err(|e| err(0, e.to_string()))?;

    let readable = params.dm_readable();
    let row_count = params.dm_row_count().map_err(|e| err(0, e.to_string()))? as usize;

    let mut tables: Vec<DmTable> = Vec::new();
    while i < lines.len() {
        let (ln, line) = lines[i];
        i += 1;
        let mut tok = line.split_whitespace();
        if tok.next() != Some("dm") {
            return Err(err(ln, "expected `dm <name>`"));
        }
        let name = tok.next().ok_or_else(|| err(ln, "`dm` needs a name"))?;
        if tok.next().is_some() {
            return Err(err(ln, "trailing tokens after instruction name"));
        }
        if tables.iter().any(|t| t.id.as_str() == name) {
            return Err(err(ln, format!("instruction `{name}` defined twice")));
        }

        let (oln, oline) = *lines.get(i).ok_or_else(|| err(ln, "unterminated block"))?;
        i += 1;
        let mut otok = oline.split_whitespace();
        if otok.next() != Some("outputs") {
            return Err(err(oln, "expected `outputs ...`"));
        }
        let mut outputs: Vec<MemoryElement> = Vec::new();
        for t in otok {
            let e = MemoryElement::parse(t)
                .ok_or_else(|| err(oln, format!("unknown memory element `{t}`")))?;
            outputs.push(e);
        }

        let mut rows: Vec<Option<Vec<u64>>> = vec![None; row_count];
        let mut seed: Option<u64> = None;
        let mut saw_row = false;
        loop {
            let (rln, rline) = *lines.get(i).ok_or_else(|| err(ln, "unterminated block"))?;
            i += 1;
            if rline == "end" {
                break;
            }
            if let Some(rest) = rline.strip_prefix("random") {
                let rest = rest.trim();
                let n = rest
                    .strip_prefix("seed=")
                    .and_then(|v| v.parse::<u64>().ok())
                    .ok_or_else(|| err(rln, "expected `random seed=<n>`"))?;
                if seed.replace(n).is_some() {
                    return Err(err(rln, "more than one `random` line"));
                }
                continue;
            }
            let rest = match rline.strip_prefix("row") {
                Some(r) if rline.len() == 3 || rline.as_bytes()[3].is_ascii_whitespace() => r,
                _ => return Err(err(rln, "expected `row`, `random` or `end`")),
            };
            saw_row = true;
            let (lhs, rhs) = rest
                .split_once("->")
                .ok_or_else(|| err(rln, "expected `row <key> -> <values>`"))?;
            let key_toks: Vec<&str> = lhs.split_whitespace().collect();
            if key_toks.len() != readable.len() {
                return Err(err(
                    rln,
                    format!("key has {} values, expected {}", key_toks.len(), readable.len()),
                ));
            }
            let mut key = Vec::with_capacity(readable.len());
            for (t, &e) in key_toks.iter().zip(&readable) {
                let kind = params.kind_of(e);
                let v = parse_val(t, kind)
                    .ok_or_else(|| err(rln, format!("bad value `{t}` for {e}")))?;
                key.push(v);
            }
            let val_toks: Vec<&str> = rhs.split_whitespace().collect();
            if val_toks.len() != outputs.len() {
                return Err(err(
                    rln,
                    format!("{} written values, expected {}", val_toks.len(), outputs.len()),
                ));
            }
            let mut vals = Vec::with_capacity(outputs.len());
            for (t, &e) in val_toks.iter().zip(&outputs) {
                let kind = params.kind_of(e);
                let v = parse_val(t, kind)
                    .ok_or_else(|| err(rln, format!("bad value `{t}` for {e}")))?;
                vals.push(v);
            }
            let idx = params.dm_pack(&key) as usize;
            if rows[idx].replace(vals).is_some() {
                return Err(err(rln, "key given twice"));
            }
        }

        let table = match (seed, saw_row) {
            (Some(_), true) => {
                return Err(err(ln, "block mixes `random` with explicit rows"))
            }
            (Some(seed), false) => {
                let mut outs: BTreeSet<MemoryElement> = outputs.into_iter().collect();
                outs.remove(&MemoryElement::ReplyReg);
                random_dm_spec(&params, ActionId::new(name), &outs, seed)
                    .map_err(|e| err(ln, e.to_string()))?
            }
            (None, _) => {
                let mut full = Vec::with_capacity(row_count);
                for (idx, row) in rows.into_iter().enumerate() {
                    match row {
                        Some(r) => full.push(r),
                        None => {
                            let key = params.dm_unpack(idx as u64);
                            let shown: Vec<String> = key
                                .iter()
                                .zip(&readable)
                                .map(|(&v, &e)| fmt_val(params.kind_of(e), v))
                                .collect();
                            return Err(err(
                                ln,
                                format!("missing row for key `{}`", shown.join(" ")),
                            ));
                        }
                    }
                }
                DmTable { id: ActionId::new(name), outputs, rows: full }
            }
        };
        table.validate(&params).map_err(|e| err(ln, e.to_string()))?;
        tables.push(table);
    }

    Ok((params, tables))
}

/// Parses a description and builds the machine.
pub fn parse_machine(input: &str) -> Result<LsIsaMachine, ConfigError> {
    let (params, tables) = parse_config(input)?;
    build_isa(params, tables).map_err(|e| err(0, e.to_string()))
}

/// Canonical text form: parameters, then blocks sorted by instruction name
/// with explicit rows in packed key order.
pub fn print_config<'a>(
    params: &IsaParams,
    tables: impl IntoIterator<Item = &'a DmTable>,
) -> String {
    let mut out = String::new();
    out.push_str(&format!("aw {}\n", params.aw));
    out.push_str(&format!("wl {}\n", params.wl));
    out.push_str(&format!("ous {}\n", params.ous));
    out.push_str(&format!("nrpl {}\n", params.nrpl));
    out.push_str(&format!("nrps {}\n", params.nrps));
    let readable = params.dm_readable();
    let mut sorted: Vec<&DmTable> = tables.into_iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    for table in sorted {
        out.push('\n');
        out.push_str(&format!("dm {}\n", table.id));
        out.push_str("outputs");
        for e in &table.outputs {
            out.push_str(&format!(" {e}"));
        }
        out.push('\n');
        for (idx, row) in table.rows.iter().enumerate() {
            out.push_str("row");
            for (&v, &e) in params.dm_unpack(idx as u64).iter().zip(&readable) {
                out.push_str(&format!(" {}", fmt_val(params.kind_of(e), v)));
            }
            out.push_str(" ->");
            for (&v, &e) in row.iter().zip(&table.outputs) {
                out.push_str(&format!(" {}", fmt_val(params.kind_of(e), v)));
            }
            out.push('\n');
        }
        out.push_str("end\n");
    }
    out
}

/// Canonical text form of a built machine.
pub fn print_machine(m: &LsIsaMachine) -> String {
    print_config(m.params(), m.dm_tables())
}

//! Derivation scripts as s-expressions:
//!
//! ```text
//! (leaf 0 John.1)
//! (>T[S] (leaf 0 John.1))
//! (>RB left right)
//! (& left conj right)
//! ```

use std::fmt;

use thiserror::Error;

use crate::category::Category;
use crate::combinator::{BinaryRule, Direction, Variant};

#[derive(Clone, Debug, PartialEq)]
pub enum Script {
    Leaf { index: usize, entry: String },
    Raise { dir: Direction, target: Category, child: Box<Script> },
    Binary { rule: BinaryRule, variant: Variant, left: Box<Script>, right: Box<Script> },
    Conj { left: Box<Script>, conj: Box<Script>, right: Box<Script> },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("script syntax error at byte {pos}: {msg}")]
pub struct ScriptError {
    pub pos: usize,
    pub msg: String,
}

enum Sexp {
    Atom(usize, String),
    List(usize, Vec<Sexp>),
}

fn err(pos: usize, msg: impl Into<String>) -> ScriptError {
    ScriptError { pos, msg: msg.into() }
}

fn read(text: &str) -> Result<Sexp, ScriptError> {
    let b = text.as_bytes();
    let mut i = 0;
    let mut stack: Vec<(usize, Vec<Sexp>)> = Vec::new();
    let mut done: Option<Sexp> = None;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if done.is_some() {
            return Err(err(i, "trailing input after the derivation"));
        }
        match c {
            b'(' => {
                stack.push((i, Vec::new()));
                i += 1;
            }
            b')' => {
                let (start, items) = stack.pop().ok_or_else(|| err(i, "unbalanced `)`"))?;
                let list = Sexp::List(start, items);
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(list),
                    None => done = Some(list),
                }
                i += 1;
            }
            _ => {
                let start = i;
                let mut depth = 0usize;
                while i < b.len() {
                    match b[i] {
                        b'[' => depth += 1,
                        b']' => depth = depth.saturating_sub(1),
                        b'(' | b')' if depth == 0 => break,
                        c if c.is_ascii_whitespace() && depth == 0 => break,
                        _ => {}
                    }
                    i += 1;
                }
                let atom = Sexp::Atom(start, text[start..i].to_string());
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(atom),
                    None => return Err(err(start, "expected `(`")),
                }
            }
        }
    }
    if let Some((start, _)) = stack.last() {
        return Err(err(*start, "unbalanced `(`"));
    }
    done.ok_or_else(|| err(0, "empty script"))
}

fn convert(s: &Sexp) -> Result<Script, ScriptError> {
    let (pos, items) = match s {
        Sexp::List(p, items) => (*p, items),
        Sexp::Atom(p, a) => return Err(err(*p, format!("expected a list, found `{a}`"))),
    };
    let Some(Sexp::Atom(hpos, head)) = items.first() else {
        return Err(err(pos, "expected an operator name"));
    };
    let args = &items[1..];
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(err(*hpos, format!("`{head}` takes {n} arguments, found {}", args.len())))
        }
    };
    if head == "leaf" {
        arity(2)?;
        let (Sexp::Atom(ipos, index), Sexp::Atom(_, entry)) = (&args[0], &args[1]) else {
            return Err(err(pos, "leaf expects an index and an entry id"));
        };
        let index = index.parse().map_err(|_| err(*ipos, format!("bad token index `{index}`")))?;
        return Ok(Script::Leaf { index, entry: entry.clone() });
    }
    if head == "&" {
        arity(3)?;
        return Ok(Script::Conj {
            left: Box::new(convert(&args[0])?),
            conj: Box::new(convert(&args[1])?),
            right: Box::new(convert(&args[2])?),
        });
    }
    for (prefix, dir) in [(">T[", Direction::Forward), ("<T[", Direction::Backward)] {
        if let Some(rest) = head.strip_prefix(prefix) {
            let inner = rest.strip_suffix(']').ok_or_else(|| err(*hpos, "unterminated raising target"))?;
            let target = Category::parse(inner).map_err(|e| err(*hpos + prefix.len() + e.pos, e.msg))?;
            arity(1)?;
            return Ok(Script::Raise { dir, target, child: Box::new(convert(&args[0])?) });
        }
    }
    let (rule, variant) =
        BinaryRule::from_name(head).ok_or_else(|| err(*hpos, format!("unknown combinator `{head}`")))?;
    arity(2)?;
    Ok(Script::Binary { rule, variant, left: Box::new(convert(&args[0])?), right: Box::new(convert(&args[1])?) })
}

impl Script {
    pub fn parse(text: &str) -> Result<Script, ScriptError> {
        convert(&read(text)?)
    }

    /// Operator name as written in scripts.
    pub fn name(&self) -> String {
        match self {
            Script::Leaf { .. } => "leaf".into(),
            Script::Raise { dir, target, .. } => raise_name(*dir, target),
            Script::Binary { rule, variant, .. } => rule.name(*variant),
            Script::Conj { .. } => "&".into(),
        }
    }
}

pub fn raise_name(dir: Direction, target: &Category) -> String {
    let d = match dir {
        Direction::Forward => '>',
        Direction::Backward => '<',
    };
    format!("{d}T[{target}]")
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Script::Leaf { index, entry } => write!(f, "(leaf {index} {entry})"),
            Script::Raise { child, .. } => write!(f, "({} {child})", self.name()),
            Script::Binary { left, right, .. } => write!(f, "({} {left} {right})", self.name()),
            Script::Conj { left, conj, right } => write!(f, "(& {left} {conj} {right})"),
        }
    }
}

//! Lexicon files: one entry per line,
//!
//! ```text
//! token | category | semantics-or-ID [| id]
//! ```
//!
//! `#` starts a comment. Ids default to `token.N` where `N` counts the
//! token's entries from 1.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::category::{check_iso_principle, Category};
use crate::combinator::{Constituent, Semantics, Span};
use crate::penman;

#[derive(Clone, Debug, PartialEq)]
pub struct LexEntry {
    pub id: String,
    pub token: String,
    pub category: Category,
    pub semantics: Semantics,
}

impl LexEntry {
    pub fn constituent(&self, index: usize) -> Constituent {
        Constituent::new(Span::new(index, index + 1), self.category.clone(), self.semantics.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Problem {
    pub line: usize,
    pub id: Option<String>,
    pub message: String,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.id {
            Some(id) => write!(f, "line {} ({id}): {}", self.line, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{} invalid lexicon entr{}:\n{}", .0.len(), if .0.len() == 1 { "y" } else { "ies" }, .0.iter().map(|p| format!("  {p}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Problem>),
}

#[derive(Clone, Debug, Default)]
pub struct Lexicon {
    entries: Vec<LexEntry>,
    by_token: HashMap<String, Vec<usize>>,
    by_id: HashMap<String, usize>,
}

impl Lexicon {
    pub fn load(path: impl AsRef<Path>) -> Result<Lexicon, LexiconError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| LexiconError::Io { path: path.display().to_string(), source })?;
        Lexicon::parse_str(&text)
    }

    /// Parses and validates every line, reporting all problems at once.
    pub fn parse_str(text: &str) -> Result<Lexicon, LexiconError> {
        let mut lex = Lexicon::default();
        let mut problems = Vec::new();
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let fields: Vec<&str> = body.split('|').map(str::trim).collect();
            if !(3..=4).contains(&fields.len()) || fields.iter().any(|f| f.is_empty()) {
                problems.push(Problem {
                    line,
                    id: None,
                    message: "expected `token | category | semantics [| id]`".into(),
                });
                continue;
            }
            let token = fields[0].to_string();
            let n = counts.entry(token.clone()).or_insert(0);
            *n += 1;
            let id = fields.get(3).map(|s| s.to_string()).unwrap_or_else(|| format!("{token}.{n}"));
            let mut fail = |message: String| problems.push(Problem { line, id: Some(id.clone()), message });

            if token.contains(char::is_whitespace) {
                fail("token must not contain whitespace".into());
                continue;
            }
            let category = match Category::parse(fields[1]) {
                Ok(c) => c,
                Err(e) => {
                    fail(e.to_string());
                    continue;
                }
            };
            let semantics = if fields[2] == "ID" {
                Semantics::Identity
            } else {
                match penman::parse(fields[2]) {
                    Ok(g) => Semantics::Graph(g),
                    Err(e) => {
                        fail(e.to_string());
                        continue;
                    }
                }
            };
            let violations = check_iso_principle(&category, semantics.graph());
            if !violations.is_empty() {
                for v in violations {
                    fail(format!("{category}: {v}"));
                }
                continue;
            }
            if lex.by_id.contains_key(&id) {
                fail("duplicate entry id".into());
                continue;
            }
            let index = lex.entries.len();
            lex.by_id.insert(id.clone(), index);
            lex.by_token.entry(token.clone()).or_default().push(index);
            lex.entries.push(LexEntry { id, token, category, semantics });
        }
        if problems.is_empty() {
            Ok(lex)
        } else {
            Err(LexiconError::Invalid(problems))
        }
    }

    /// Entries for `token` in file order.
    pub fn lookup(&self, token: &str) -> Vec<&LexEntry> {
        self.by_token.get(token).map(|ix| ix.iter().map(|&i| &self.entries[i]).collect()).unwrap_or_default()
    }

    pub fn get(&self, id: &str) -> Option<&LexEntry> {
        self.by_id.get(id).map(|&i| &self.entries[i])
    }

    pub fn entries(&self) -> &[LexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_entries_and_defaults_ids() {
        let lex = Lexicon::parse_str(
            "# sample\nread | S\\NP/NP | (r/read-01 :ARG0 ?2 :ARG1 ?1)\nthe | NP/N | ID\n\
             to | (S[to]\\NP)/(S[b]\\NP) | ID | to.inf\n\
             to | ((S\\NP)\\(S\\NP))/(S[b]\\NP) | (?2 :ARG0 ?3 :purpose (?1 :ARG0 ?3))\n",
        )
        .unwrap();
        assert_eq!(lex.len(), 4);
        assert_eq!(lex.get("read.1").unwrap().category.arity(), 2);
        assert!(lex.get("the.1").unwrap().semantics.is_identity());
        assert_eq!(lex.lookup("to").len(), 2);
        assert!(lex.get("to.inf").is_some());
        assert!(lex.get("to.2").is_some());
        assert!(lex.lookup("unknownword").is_empty());
    }

    #[test]
    fn rejects_bad_entries_with_line_numbers() {
        let err = Lexicon::parse_str("ok | NP | (c/cat)\nbad | NP | (?1 :mod (b/bad))\nx | NP\n").unwrap_err();
        let LexiconError::Invalid(ps) = err else { panic!() };
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[0].line, 2);
        assert_eq!(ps[0].id.as_deref(), Some("bad.1"));
        assert_eq!(ps[1].line, 3);
    }

    #[test]
    fn rejects_duplicate_ids() {
        let err = Lexicon::parse_str("a | NP | (c/cat) | x\nb | NP | (d/dog) | x\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn identity_is_exempt_from_arity() {
        assert!(Lexicon::parse_str("it | NP | ID\n").is_ok());
        assert!(Lexicon::parse_str("three | S\\NP/NP | (t/t :a ?1 :b ?2 :c ?3)\n").is_err());
    }
}

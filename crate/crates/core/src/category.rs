//! CCG categories: parsing, printing, feature unification and the
//! functional-isomorphism check between a category and its semantics.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::graph::AmrSubgraph;

pub const BASES: &[&str] = &["S", "NP", "N", "PP", "Conj"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slash {
    Forward,
    Backward,
}

impl Slash {
    pub fn symbol(self) -> char {
        match self {
            Slash::Forward => '/',
            Slash::Backward => '\\',
        }
    }

    pub fn flip(self) -> Slash {
        match self {
            Slash::Forward => Slash::Backward,
            Slash::Backward => Slash::Forward,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Atom { base: String, feature: Option<String> },
    Functor { result: Box<Category>, slash: Slash, argument: Box<Category> },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("category syntax error at byte {pos}: {msg}")]
pub struct CategoryError {
    pub pos: usize,
    pub msg: String,
}

/// Features bound by unifying bare atoms against featured ones, keyed by
/// atom base.
pub type FeatureBinding = BTreeMap<String, String>;

impl Category {
    pub fn atom(base: &str) -> Category {
        Category::Atom { base: base.to_string(), feature: None }
    }

    pub fn featured(base: &str, feature: &str) -> Category {
        Category::Atom { base: base.to_string(), feature: Some(feature.to_string()) }
    }

    pub fn functor(result: Category, slash: Slash, argument: Category) -> Category {
        Category::Functor { result: Box::new(result), slash, argument: Box::new(argument) }
    }

    pub fn parse(text: &str) -> Result<Category, CategoryError> {
        let mut p = CatParser { s: text.as_bytes(), i: 0 };
        let c = p.category()?;
        p.skip_ws();
        if p.i < p.s.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(c)
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Category::Atom { .. })
    }

    pub fn base(&self) -> Option<&str> {
        match self {
            Category::Atom { base, .. } => Some(base),
            Category::Functor { .. } => None,
        }
    }

    /// `X|Y` split into `(X, |, Y)`.
    pub fn split(&self) -> Option<(&Category, Slash, &Category)> {
        match self {
            Category::Functor { result, slash, argument } => Some((result, *slash, argument)),
            Category::Atom { .. } => None,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Category::Atom { .. } => 0,
            Category::Functor { result, .. } => 1 + result.arity(),
        }
    }

    /// Copies the category, filling bare atoms from `binding`.
    pub fn with_binding(&self, binding: &FeatureBinding) -> Category {
        match self {
            Category::Atom { base, feature: None } => {
                Category::Atom { base: base.clone(), feature: binding.get(base).cloned() }
            }
            Category::Atom { .. } => self.clone(),
            Category::Functor { result, slash, argument } => {
                Category::functor(result.with_binding(binding), *slash, argument.with_binding(binding))
            }
        }
    }
}

/// Structural unification of `slot` (from a function category) with `cand`.
/// A bare atom in `slot` matching a featured atom records the feature in
/// `binding`; two different features never unify.
pub fn unify(slot: &Category, cand: &Category, binding: &mut FeatureBinding) -> bool {
    match (slot, cand) {
        (Category::Atom { base: b1, feature: f1 }, Category::Atom { base: b2, feature: f2 }) => {
            if b1 != b2 {
                return false;
            }
            match (f1, f2) {
                (Some(x), Some(y)) => x == y,
                (None, Some(y)) => match binding.get(b1) {
                    Some(bound) => bound == y,
                    None => {
                        binding.insert(b1.clone(), y.clone());
                        true
                    }
                },
                _ => true,
            }
        }
        (
            Category::Functor { result: r1, slash: s1, argument: a1 },
            Category::Functor { result: r2, slash: s2, argument: a2 },
        ) => s1 == s2 && unify(r1, r2, binding) && unify(a1, a2, binding),
        _ => false,
    }
}

/// Most specific common instance of two categories, if any.
pub fn unify_atoms(slot: &Category, cand: &Category) -> Option<Category> {
    fn meet(x: &Category, y: &Category) -> Option<Category> {
        match (x, y) {
            (Category::Atom { base: b1, feature: f1 }, Category::Atom { base: b2, feature: f2 }) => {
                if b1 != b2 {
                    return None;
                }
                let feature = match (f1, f2) {
                    (Some(a), Some(b)) if a != b => return None,
                    (Some(a), _) | (None, Some(a)) => Some(a.clone()),
                    (None, None) => None,
                };
                Some(Category::Atom { base: b1.clone(), feature })
            }
            (
                Category::Functor { result: r1, slash: s1, argument: a1 },
                Category::Functor { result: r2, slash: s2, argument: a2 },
            ) if s1 == s2 => Some(Category::functor(meet(r1, r2)?, *s1, meet(a1, a2)?)),
            _ => None,
        }
    }
    let mut binding = FeatureBinding::new();
    if !unify(slot, cand, &mut binding) {
        return None;
    }
    meet(slot, cand)
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Category::Atom { base, feature: None } => write!(f, "{base}"),
            Category::Atom { base, feature: Some(x) } => write!(f, "{base}[{x}]"),
            Category::Functor { result, slash, argument } => {
                write!(f, "{result}{}", slash.symbol())?;
                if argument.is_atom() {
                    write!(f, "{argument}")
                } else {
                    write!(f, "({argument})")
                }
            }
        }
    }
}

struct CatParser<'a> {
    s: &'a [u8],
    i: usize,
}

impl CatParser<'_> {
    fn err(&self, msg: &str) -> CategoryError {
        CategoryError { pos: self.i, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn category(&mut self) -> Result<Category, CategoryError> {
        let mut left = self.primary()?;
        loop {
            self.skip_ws();
            let slash = match self.s.get(self.i) {
                Some(b'/') => Slash::Forward,
                Some(b'\\') => Slash::Backward,
                _ => return Ok(left),
            };
            self.i += 1;
            let right = self.primary()?;
            left = Category::functor(left, slash, right);
        }
    }

    fn primary(&mut self) -> Result<Category, CategoryError> {
        self.skip_ws();
        match self.s.get(self.i) {
            Some(b'(') => {
                self.i += 1;
                let c = self.category()?;
                self.skip_ws();
                if self.s.get(self.i) != Some(&b')') {
                    return Err(self.err("expected `)`"));
                }
                self.i += 1;
                Ok(c)
            }
            Some(c) if c.is_ascii_alphabetic() => self.atom(),
            Some(_) => Err(self.err("expected an atom or `(`")),
            None => Err(self.err("unexpected end of category")),
        }
    }

    fn atom(&mut self) -> Result<Category, CategoryError> {
        let start = self.i;
        while self.i < self.s.len() && self.s[self.i].is_ascii_alphabetic() {
            self.i += 1;
        }
        let base = std::str::from_utf8(&self.s[start..self.i]).unwrap_or_default();
        if !BASES.contains(&base) {
            return Err(CategoryError { pos: start, msg: format!("unknown atom `{base}`") });
        }
        let mut feature = None;
        if self.s.get(self.i) == Some(&b'[') {
            self.i += 1;
            let fstart = self.i;
            while self.i < self.s.len() && self.s[self.i].is_ascii_alphanumeric() {
                self.i += 1;
            }
            if self.i == fstart || self.s.get(self.i) != Some(&b']') {
                return Err(self.err("malformed feature"));
            }
            feature = Some(String::from_utf8_lossy(&self.s[fstart..self.i]).into_owned());
            self.i += 1;
        }
        Ok(Category::Atom { base: base.to_string(), feature })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IsoViolation {
    TooManyFreeVariables { arity: usize, free: usize },
    MissingFreeVariable { arity: usize },
    FreeVariableOnAtom { free: usize },
}

impl fmt::Display for IsoViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IsoViolation::TooManyFreeVariables { arity, free } => {
                write!(f, "{free} free variables exceed category arity {arity}")
            }
            IsoViolation::MissingFreeVariable { arity } => {
                write!(f, "category of arity {arity} needs at least one free variable")
            }
            IsoViolation::FreeVariableOnAtom { free } => {
                write!(f, "atomic category cannot carry {free} free variables")
            }
        }
    }
}

/// Checks semantic arity against category arity. `None` stands for identity
/// semantics, which always passes.
pub fn check_iso_principle(cat: &Category, sem: Option<&AmrSubgraph>) -> Vec<IsoViolation> {
    let Some(g) = sem else { return Vec::new() };
    let arity = cat.arity();
    let free = g.fv().len();
    let mut out = Vec::new();
    if arity == 0 {
        if free > 0 {
            out.push(IsoViolation::FreeVariableOnAtom { free });
        }
    } else {
        if free > arity {
            out.push(IsoViolation::TooManyFreeVariables { arity, free });
        }
        if free == 0 {
            out.push(IsoViolation::MissingFreeVariable { arity });
        }
    }
    out
}

//! Scripted replay and chart search over the combinators.

mod chart;
mod script;

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::category::Category;
use crate::combinator::{self, BinaryRule, CombineError, Constituent, Direction, Semantics, Variant};
use crate::graph::{validate, Violation};
use crate::lexicon::Lexicon;

pub use chart::{cky_parse, ChartError, ChartResult, ParserConfig, RaiseRule};
pub use script::{raise_name, Script, ScriptError};

/// One node of an evaluated derivation.
#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Leaf { index: usize, entry: String },
    Raise { dir: Direction, target: Category },
    Binary { rule: BinaryRule, variant: Variant },
    Conj,
}

impl Step {
    pub fn name(&self) -> String {
        match self {
            Step::Leaf { .. } => "leaf".into(),
            Step::Raise { dir, target } => raise_name(*dir, target),
            Step::Binary { rule, variant } => rule.name(*variant),
            Step::Conj => "&".into(),
        }
    }
}

/// A derivation tree annotated with the constituent built at every node.
/// Conjunction nodes have three children: left, conjunction, right.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivation {
    pub step: Step,
    pub children: Vec<Derivation>,
    pub constituent: Constituent,
    pub notes: Vec<String>,
}

impl Derivation {
    pub fn semantics(&self) -> &Semantics {
        &self.constituent.semantics
    }

    /// Nodes in post-order, the order in which they were built.
    pub fn post_order(&self) -> Vec<&Derivation> {
        fn walk<'a>(d: &'a Derivation, out: &mut Vec<&'a Derivation>) {
            for c in &d.children {
                walk(c, out);
            }
            out.push(d);
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    pub fn to_script(&self) -> Script {
        let child = |i: usize| Box::new(self.children[i].to_script());
        match &self.step {
            Step::Leaf { index, entry } => Script::Leaf { index: *index, entry: entry.clone() },
            Step::Raise { dir, target } => Script::Raise { dir: *dir, target: target.clone(), child: child(0) },
            Step::Binary { rule, variant } => {
                Script::Binary { rule: *rule, variant: *variant, left: child(0), right: child(1) }
            }
            Step::Conj => Script::Conj { left: child(0), conj: child(1), right: child(2) },
        }
    }

    /// Variants used by binary steps, in post-order.
    pub fn variants(&self) -> Vec<(String, Variant)> {
        self.post_order()
            .into_iter()
            .filter_map(|d| match &d.step {
                Step::Binary { variant, .. } => Some((d.step.name(), *variant)),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReplayError {
    #[error("step {step} `{name}`: unknown lexical entry `{entry}`")]
    UnknownEntry { step: usize, name: String, entry: String },
    #[error("step {step} `{name}`: {source}")]
    Combine { step: usize, name: String, source: Box<CombineError> },
    #[error("step {step} `{name}`: {detail}")]
    WrongVariant { step: usize, name: String, detail: String },
}

impl ReplayError {
    pub fn step(&self) -> usize {
        match self {
            ReplayError::UnknownEntry { step, .. }
            | ReplayError::Combine { step, .. }
            | ReplayError::WrongVariant { step, .. } => *step,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ReplayOptions {
    pub strict_conjunction: bool,
    /// Overrides variant selection at the given post-order step indices and
    /// skips the check that the script names the selected variant.
    pub force: HashMap<usize, Variant>,
    /// Accept whichever variant the selection rule picks, whatever the
    /// script names.
    pub ignore_script_variants: bool,
}

/// Evaluates a script bottom-up, checking at each binary step that the
/// named variant is the one the selection rule picks.
pub fn replay(script: &Script, lex: &Lexicon) -> Result<Derivation, ReplayError> {
    replay_with(script, lex, &ReplayOptions::default())
}

pub fn replay_with(script: &Script, lex: &Lexicon, opts: &ReplayOptions) -> Result<Derivation, ReplayError> {
    let mut counter = 0;
    eval(script, lex, opts, &mut counter)
}

fn eval(s: &Script, lex: &Lexicon, opts: &ReplayOptions, counter: &mut usize) -> Result<Derivation, ReplayError> {
    let children: Vec<Derivation> = match s {
        Script::Leaf { .. } => Vec::new(),
        Script::Raise { child, .. } => vec![eval(child, lex, opts, counter)?],
        Script::Binary { left, right, .. } => vec![eval(left, lex, opts, counter)?, eval(right, lex, opts, counter)?],
        Script::Conj { left, conj, right } => {
            vec![eval(left, lex, opts, counter)?, eval(conj, lex, opts, counter)?, eval(right, lex, opts, counter)?]
        }
    };
    let step_no = *counter;
    *counter += 1;
    let name = s.name();
    let wrap =
        |source: CombineError| ReplayError::Combine { step: step_no, name: name.clone(), source: Box::new(source) };

    let (step, constituent, notes) = match s {
        Script::Leaf { index, entry } => {
            let e = lex.get(entry).ok_or_else(|| ReplayError::UnknownEntry {
                step: step_no,
                name: name.clone(),
                entry: entry.clone(),
            })?;
            (Step::Leaf { index: *index, entry: entry.clone() }, e.constituent(*index), Vec::new())
        }
        Script::Raise { dir, target, .. } => {
            let c = combinator::type_raise(&children[0].constituent, target, *dir).map_err(wrap)?;
            (Step::Raise { dir: *dir, target: target.clone() }, c, Vec::new())
        }
        Script::Conj { .. } => {
            let c = combinator::coordinate(
                &children[1].constituent,
                &children[0].constituent,
                &children[2].constituent,
                opts.strict_conjunction,
            )
            .map_err(wrap)?;
            (Step::Conj, c, Vec::new())
        }
        Script::Binary { rule, variant, .. } => {
            let (l, r) = (&children[0].constituent, &children[1].constituent);
            let forced = opts.force.get(&step_no).copied();
            let result = combinator::combine(*rule, l, r, forced).map_err(wrap)?;
            if forced.is_none() && !opts.ignore_script_variants && result.variant != *variant {
                let detail = variant_conflict(*rule, *variant, l, r, &result);
                return Err(ReplayError::WrongVariant { step: step_no, name, detail });
            }
            let step = Step::Binary { rule: *rule, variant: result.variant };
            (step, result.constituent, result.notes)
        }
    };
    Ok(Derivation { step, children, constituent, notes })
}

fn variant_conflict(
    rule: BinaryRule,
    requested: Variant,
    l: &Constituent,
    r: &Constituent,
    auto: &combinator::Combination,
) -> String {
    let requested_name = rule.name(requested);
    let auto_name = rule.name(auto.variant);
    let requested_reason = match combinator::combine(rule, l, r, Some(requested)) {
        Err(e) => e.to_string(),
        Ok(_) => match (&auto.matched, requested) {
            (Some(m), Variant::Regular) => format!(
                "the constituents share {} ({} / {}), so relation-wise combination is required",
                m.resolved_label, m.function_edge.role, m.argument_edge.role
            ),
            _ => "the selection rule picks the other variant".into(),
        },
    };
    let auto_reason = match &auto.matched {
        Some(m) => format!("applies through the shared {} relation", m.resolved_label),
        None => "applies by plain substitution".into(),
    };
    format!("`{requested_name}` rejected: {requested_reason}; `{auto_name}` {auto_reason}")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FinalViolation {
    FreeVariables(usize),
    Underspecified,
    NoGraph,
    Graph(Violation),
}

impl fmt::Display for FinalViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FinalViolation::FreeVariables(n) => write!(f, "{n} free variables remain"),
            FinalViolation::Underspecified => write!(f, "an underspecified :? edge remains"),
            FinalViolation::NoGraph => write!(f, "sentence has identity semantics"),
            FinalViolation::Graph(v) => write!(f, "{v}"),
        }
    }
}

/// Conditions a complete sentence graph must meet.
pub fn finalize_check(c: &Constituent) -> Vec<FinalViolation> {
    let Some(g) = c.semantics.graph() else {
        return vec![FinalViolation::NoGraph];
    };
    let mut out = Vec::new();
    if !g.fv().is_empty() {
        out.push(FinalViolation::FreeVariables(g.fv().len()));
    }
    if g.has_underspecified_edge() {
        out.push(FinalViolation::Underspecified);
    }
    out.extend(validate(g).into_iter().map(FinalViolation::Graph));
    out
}

/// One line per step: index, span, operator, category, variant, semantics.
pub fn trace(d: &Derivation) -> String {
    let nodes = d.post_order();
    let name_w = nodes.iter().map(|n| step_label(n).len()).max().unwrap_or(0);
    let cat_w = nodes.iter().map(|n| n.constituent.category.to_string().len()).max().unwrap_or(0);
    let mut out = String::new();
    for (i, n) in nodes.iter().enumerate() {
        let variant = match &n.step {
            Step::Binary { variant, .. } => variant.to_string(),
            _ => String::new(),
        };
        let _ = writeln!(
            out,
            "{i:>3}  {:<5}  {:<name_w$}  {:<cat_w$}  {:<13}  {}",
            n.constituent.span.to_string(),
            step_label(n),
            n.constituent.category.to_string(),
            variant,
            n.constituent.semantics,
        );
        for note in &n.notes {
            let _ = writeln!(out, "     note: {note}");
        }
    }
    out
}

fn step_label(d: &Derivation) -> String {
    match &d.step {
        Step::Leaf { entry, .. } => entry.clone(),
        other => other.name(),
    }
}

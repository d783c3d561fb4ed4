use std::cell::Cell;
use std::collections::HashMap;
use std::rc::Rc;

use thiserror::Error;

use super::{Derivation, Step};
use crate::category::{Category, Slash};
use crate::combinator::{self, BinaryRule, Constituent, Direction, Span, Variant};
use crate::graph::{iso_equal, iso_invariant};
use crate::lexicon::Lexicon;

pub const MAX_CELL_ENV: &str = "CCGAMR_MAX_CELL";

/// `source => target`, e.g. `NP => S/(S\NP)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RaiseRule {
    pub source: Category,
    pub target: Category,
}

impl RaiseRule {
    pub fn parse(text: &str) -> Result<RaiseRule, String> {
        let (s, t) = text.split_once("=>").ok_or_else(|| format!("expected `X => T/(T\\X)`, found `{text}`"))?;
        let source = Category::parse(s.trim()).map_err(|e| e.to_string())?;
        let target = Category::parse(t.trim()).map_err(|e| e.to_string())?;
        let ok = match target.split() {
            Some((t1, slash, inner)) => match inner.split() {
                Some((t2, s2, x)) => t1 == t2 && s2 == slash.flip() && *x == source,
                None => false,
            },
            None => false,
        };
        if !ok {
            return Err(format!("`{target}` is not a raising of `{source}`"));
        }
        Ok(RaiseRule { source, target })
    }

    fn direction(&self) -> Direction {
        match self.target.split().map(|(_, s, _)| s) {
            Some(Slash::Backward) => Direction::Backward,
            _ => Direction::Forward,
        }
    }

    fn result_atom(&self) -> &Category {
        self.target.split().map(|(t, _, _)| t).unwrap_or(&self.target)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParserConfig {
    pub rules: Vec<BinaryRule>,
    pub conjunction: bool,
    pub max_composition_order: u8,
    pub type_raise: Vec<RaiseRule>,
    pub strict_conjunction: bool,
    pub max_cell_items: usize,
    pub keep_forest: bool,
    /// Atom bases accepted for a complete parse.
    pub goal: Vec<String>,
}

impl Default for ParserConfig {
    fn default() -> Self {
        ParserConfig {
            rules: BinaryRule::all(2),
            conjunction: true,
            max_composition_order: 2,
            type_raise: Vec::new(),
            strict_conjunction: false,
            max_cell_items: 2000,
            keep_forest: false,
            goal: vec!["S".to_string()],
        }
    }
}

impl ParserConfig {
    /// Reads `key = value` lines. Unlisted keys keep their defaults.
    /// `type_raise` may repeat.
    pub fn parse(text: &str) -> Result<ParserConfig, String> {
        let mut cfg = ParserConfig::default();
        let mut listed: Option<Vec<BinaryRule>> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |m: String| format!("line {}: {m}", i + 1);
            let (key, value) = line.split_once('=').ok_or_else(|| at("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let flag = |v: &str| match v {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(at(format!("`{key}` must be true or false"))),
            };
            match key {
                "combinators" => {
                    let mut rules = Vec::new();
                    cfg.conjunction = false;
                    for name in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        if name == "&" {
                            cfg.conjunction = true;
                            continue;
                        }
                        let (rule, _) =
                            BinaryRule::from_name(name).ok_or_else(|| at(format!("unknown combinator `{name}`")))?;
                        if !rules.contains(&rule) {
                            rules.push(rule);
                        }
                    }
                    listed = Some(rules);
                }
                "max_composition_order" => {
                    let n: u8 = value.parse().map_err(|_| at(format!("bad order `{value}`")))?;
                    if !(1..=2).contains(&n) {
                        return Err(at("max_composition_order must be 1 or 2".into()));
                    }
                    cfg.max_composition_order = n;
                }
                "type_raise" => cfg.type_raise.push(RaiseRule::parse(value).map_err(at)?),
                "strict_conjunction" => cfg.strict_conjunction = flag(value)?,
                "keep_forest" => cfg.keep_forest = flag(value)?,
                "goal" => {
                    cfg.goal = value.split(',').map(|g| g.trim().to_string()).filter(|g| !g.is_empty()).collect();
                    if cfg.goal.is_empty() {
                        return Err(at("goal needs at least one category".into()));
                    }
                }
                "max_cell_items" => {
                    cfg.max_cell_items = value.parse().map_err(|_| at(format!("bad limit `{value}`")))?;
                }
                _ => return Err(at(format!("unknown key `{key}`"))),
            }
        }
        cfg.rules = listed.unwrap_or_else(|| BinaryRule::all(2));
        let order = cfg.max_composition_order;
        cfg.rules.retain(|r| !matches!(r, BinaryRule::Composition { order: o, .. } if *o > order));
        Ok(cfg)
    }

    /// The cell limit, overridden by the environment when set.
    pub fn effective_cell_limit(&self) -> usize {
        std::env::var(MAX_CELL_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(self.max_cell_items)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChartError {
    #[error("unknown token `{token}` at position {index}")]
    UnknownToken { token: String, index: usize },
    #[error("empty sentence")]
    Empty,
    #[error("chart cell {span} exceeds {limit} items")]
    CellOverflow { span: Span, limit: usize },
}

#[derive(Debug)]
enum Back {
    Leaf {
        index: usize,
        entry: String,
    },
    Raise {
        dir: Direction,
        target: Category,
        child: Rc<Item>,
    },
    Binary {
        rule: BinaryRule,
        variant: Variant,
        left: Rc<Item>,
        right: Rc<Item>,
        notes: Vec<String>,
    },
    /// Conjunction word joined with its right conjunct, waiting for the left.
    ConjPartial {
        conj: Rc<Item>,
        right: Rc<Item>,
    },
    Conj {
        left: Rc<Item>,
        partial: Rc<Item>,
    },
}

#[derive(Debug)]
struct Item {
    constituent: Constituent,
    back: Back,
    /// Number of derivations this item stands for.
    count: Cell<u128>,
    invariant: Option<u64>,
}

impl Item {
    fn new(constituent: Constituent, back: Back, count: u128) -> Item {
        let invariant = constituent.semantics.graph().map(iso_invariant);
        Item { constituent, back, count: Cell::new(count), invariant }
    }

    fn is_partial(&self) -> bool {
        matches!(self.back, Back::ConjPartial { .. })
    }

    fn to_derivation(&self) -> Derivation {
        let constituent = self.constituent.clone();
        let (step, children, notes) = match &self.back {
            Back::Leaf { index, entry } => (Step::Leaf { index: *index, entry: entry.clone() }, vec![], vec![]),
            Back::Raise { dir, target, child } => {
                (Step::Raise { dir: *dir, target: target.clone() }, vec![child.to_derivation()], vec![])
            }
            Back::Binary { rule, variant, left, right, notes } => (
                Step::Binary { rule: *rule, variant: *variant },
                vec![left.to_derivation(), right.to_derivation()],
                notes.clone(),
            ),
            Back::Conj { left, partial } => {
                let Back::ConjPartial { conj, right } = &partial.back else {
                    unreachable!("conjunction built from a non-partial item")
                };
                (Step::Conj, vec![left.to_derivation(), conj.to_derivation(), right.to_derivation()], vec![])
            }
            Back::ConjPartial { .. } => unreachable!("partial conjunctions are never exported"),
        };
        Derivation { step, children, constituent, notes }
    }
}

struct ChartCell {
    items: Vec<Rc<Item>>,
    index: HashMap<(bool, String, Option<u64>), Vec<usize>>,
    keep_forest: bool,
}

impl ChartCell {
    fn new(keep_forest: bool) -> ChartCell {
        ChartCell { items: Vec::new(), index: HashMap::new(), keep_forest }
    }

    /// Adds the item unless an equivalent one exists, in which case only
    /// the derivation count is merged. Returns the new item if added.
    fn add(&mut self, item: Item) -> Option<Rc<Item>> {
        let key = (item.is_partial(), item.constituent.category.to_string(), item.invariant);
        if !self.keep_forest {
            if let Some(ixs) = self.index.get(&key) {
                for &i in ixs {
                    let same = match (item.constituent.semantics.graph(), self.items[i].constituent.semantics.graph()) {
                        (Some(a), Some(b)) => iso_equal(a, b),
                        (None, None) => true,
                        _ => false,
                    };
                    if same {
                        let it = &self.items[i];
                        it.count.set(it.count.get().saturating_add(item.count.get()));
                        return None;
                    }
                }
            }
        }
        let rc = Rc::new(item);
        self.index.entry(key).or_default().push(self.items.len());
        self.items.push(rc.clone());
        Some(rc)
    }
}

#[derive(Debug, Clone)]
pub struct ChartResult {
    /// One representative per distinct (category, semantics) final item.
    pub derivations: Vec<Derivation>,
    /// Total number of complete derivations the representatives stand for.
    pub forest_size: u128,
    pub tokens: Vec<String>,
}

fn is_final(c: &Constituent, cfg: &ParserConfig) -> bool {
    c.category.base().is_some_and(|b| cfg.goal.iter().any(|g| g == b)) && super::finalize_check(c).is_empty()
}

fn raise_all(cell: &mut ChartCell, fresh: Vec<Rc<Item>>, cfg: &ParserConfig) {
    for item in fresh {
        if item.is_partial() || item.constituent.semantics.is_identity() {
            continue;
        }
        for rule in &cfg.type_raise {
            if let Ok(c) = combinator::apply_raise_rule(&item.constituent, &rule.source, &rule.target) {
                let back =
                    Back::Raise { dir: rule.direction(), target: rule.result_atom().clone(), child: item.clone() };
                cell.add(Item::new(c, back, item.count.get()));
            }
        }
    }
}

/// CKY over whitespace-separated tokens. Items in each cell are merged by
/// category and semantic isomorphism unless `keep_forest` is set.
#[allow(clippy::needless_range_loop)]
pub fn cky_parse(tokens: &[&str], lex: &Lexicon, cfg: &ParserConfig) -> Result<ChartResult, ChartError> {
    let n = tokens.len();
    if n == 0 {
        return Err(ChartError::Empty);
    }
    let limit = cfg.effective_cell_limit();
    let mut chart: Vec<Vec<Option<ChartCell>>> = (0..n).map(|_| (0..=n).map(|_| None).collect()).collect();

    for (i, tok) in tokens.iter().enumerate() {
        let entries = lex.lookup(tok);
        if entries.is_empty() {
            return Err(ChartError::UnknownToken { token: tok.to_string(), index: i });
        }
        let mut cell = ChartCell::new(cfg.keep_forest);
        let mut fresh = Vec::new();
        for e in entries {
            let back = Back::Leaf { index: i, entry: e.id.clone() };
            if let Some(rc) = cell.add(Item::new(e.constituent(i), back, 1)) {
                fresh.push(rc);
            }
        }
        raise_all(&mut cell, fresh, cfg);
        check_limit(&cell, Span::new(i, i + 1), limit)?;
        chart[i][i + 1] = Some(cell);
    }

    for len in 2..=n {
        for i in 0..=n - len {
            let j = i + len;
            let mut cell = ChartCell::new(cfg.keep_forest);
            let mut fresh = Vec::new();
            for k in i + 1..j {
                let lefts = chart[i][k].as_ref().map(|c| c.items.clone()).unwrap_or_default();
                let rights = chart[k][j].as_ref().map(|c| c.items.clone()).unwrap_or_default();
                for l in &lefts {
                    for r in &rights {
                        combine_pair(l, r, cfg, &mut cell, &mut fresh);
                        if cell.items.len() > limit {
                            return Err(ChartError::CellOverflow { span: Span::new(i, j), limit });
                        }
                    }
                }
            }
            raise_all(&mut cell, fresh, cfg);
            check_limit(&cell, Span::new(i, j), limit)?;
            chart[i][j] = Some(cell);
        }
    }

    let top = chart[0][n].take().map(|c| c.items).unwrap_or_default();
    let finals: Vec<&Rc<Item>> = top.iter().filter(|it| !it.is_partial() && is_final(&it.constituent, cfg)).collect();
    Ok(ChartResult {
        forest_size: finals.iter().map(|it| it.count.get()).sum(),
        derivations: finals.iter().map(|it| it.to_derivation()).collect(),
        tokens: tokens.iter().map(|s| s.to_string()).collect(),
    })
}

fn check_limit(cell: &ChartCell, span: Span, limit: usize) -> Result<(), ChartError> {
    if cell.items.len() > limit {
        Err(ChartError::CellOverflow { span, limit })
    } else {
        Ok(())
    }
}

fn combine_pair(l: &Rc<Item>, r: &Rc<Item>, cfg: &ParserConfig, cell: &mut ChartCell, fresh: &mut Vec<Rc<Item>>) {
    let count = l.count.get().saturating_mul(r.count.get());
    if l.is_partial() {
        return;
    }
    if r.is_partial() {
        if let Back::ConjPartial { conj, right } = &r.back {
            if let Ok(c) =
                combinator::coordinate(&conj.constituent, &l.constituent, &right.constituent, cfg.strict_conjunction)
            {
                if let Some(rc) = cell.add(Item::new(c, Back::Conj { left: l.clone(), partial: r.clone() }, count)) {
                    fresh.push(rc);
                }
            }
        }
        return;
    }
    if cfg.conjunction
        && l.constituent.category.base() == Some("Conj")
        && l.constituent.semantics.graph().is_some()
        && r.constituent.category.base() != Some("Conj")
        && r.constituent.semantics.graph().is_some()
    {
        let c = Constituent::new(
            Span::new(l.constituent.span.start, r.constituent.span.end),
            r.constituent.category.clone(),
            r.constituent.semantics.clone(),
        );
        cell.add(Item::new(c, Back::ConjPartial { conj: l.clone(), right: r.clone() }, count));
    }
    for &rule in &cfg.rules {
        if let Ok(res) = combinator::combine(rule, &l.constituent, &r.constituent, None) {
            let back = Back::Binary { rule, variant: res.variant, left: l.clone(), right: r.clone(), notes: res.notes };
            if let Some(rc) = cell.add(Item::new(res.constituent, back, count)) {
                fresh.push(rc);
            }
        }
    }
}

//! Binary and unary combinators over constituents.
//!
//! Every binary rule has a function constituent `f` and an argument `a`.
//! The semantic variant is chosen automatically: relation-wise when `f` and
//! `a` share a relation at the designated variables, regular substitution
//! otherwise. Identity semantics short-circuits both.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::category::{check_iso_principle, unify, unify_atoms, Category, FeatureBinding, IsoViolation, Slash};
use crate::graph::{substitute, AmrSubgraph, Edge, GraphError, NodeId, NodeKind, Role};
use crate::penman;

#[derive(Clone, Debug, PartialEq)]
pub enum Semantics {
    Graph(AmrSubgraph),
    Identity,
}

impl Semantics {
    pub fn graph(&self) -> Option<&AmrSubgraph> {
        match self {
            Semantics::Graph(g) => Some(g),
            Semantics::Identity => None,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Semantics::Identity)
    }
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Semantics::Graph(g) => f.write_str(&penman::serialize(g)),
            Semantics::Identity => f.write_str("ID"),
        }
    }
}

/// Half-open token range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Span {
        Span { start, end }
    }

    pub fn join(self, other: Span) -> Option<Span> {
        (self.end == other.start).then_some(Span::new(self.start, other.end))
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constituent {
    pub span: Span,
    pub category: Category,
    pub semantics: Semantics,
}

impl Constituent {
    pub fn new(span: Span, category: Category, semantics: Semantics) -> Constituent {
        Constituent { span, category, semantics }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn symbol(self) -> char {
        match self {
            Direction::Forward => '>',
            Direction::Backward => '<',
        }
    }

    fn slash(self) -> Slash {
        match self {
            Direction::Forward => Slash::Forward,
            Direction::Backward => Slash::Backward,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Regular,
    RelationWise,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Regular => "regular",
            Variant::RelationWise => "relation-wise",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Application,
    Composition,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryRule {
    Application(Direction),
    Composition { dir: Direction, order: u8, crossed: bool },
}

impl BinaryRule {
    /// Every rule up to the given composition order.
    pub fn all(max_order: u8) -> Vec<BinaryRule> {
        let mut out = Vec::new();
        for dir in [Direction::Forward, Direction::Backward] {
            out.push(BinaryRule::Application(dir));
            out.push(BinaryRule::Composition { dir, order: 1, crossed: false });
            out.push(BinaryRule::Composition { dir, order: 1, crossed: true });
            if max_order >= 2 {
                out.push(BinaryRule::Composition { dir, order: 2, crossed: false });
            }
        }
        out
    }

    pub fn direction(self) -> Direction {
        match self {
            BinaryRule::Application(d) | BinaryRule::Composition { dir: d, .. } => d,
        }
    }

    pub fn mode(self) -> Mode {
        match self {
            BinaryRule::Application(_) => Mode::Application,
            BinaryRule::Composition { .. } => Mode::Composition,
        }
    }

    /// Index of the argument's free variable that meets the function's first.
    pub fn designated_position(self) -> usize {
        match self {
            BinaryRule::Application(_) => 1,
            BinaryRule::Composition { order, .. } => order as usize + 1,
        }
    }

    /// Script name, e.g. `>`, `<R`, `>RB2`, `<Bx`.
    pub fn name(self, variant: Variant) -> String {
        let mut s = String::new();
        s.push(self.direction().symbol());
        if variant == Variant::RelationWise {
            s.push('R');
        }
        if let BinaryRule::Composition { order, crossed, .. } = self {
            s.push('B');
            if order == 2 {
                s.push('2');
            }
            if crossed {
                s.push('x');
            }
        }
        s
    }

    pub fn from_name(name: &str) -> Option<(BinaryRule, Variant)> {
        let mut rest = name;
        let dir = match rest.chars().next()? {
            '>' => Direction::Forward,
            '<' => Direction::Backward,
            _ => return None,
        };
        rest = &rest[1..];
        let variant = match rest.strip_prefix('R') {
            Some(r) => {
                rest = r;
                Variant::RelationWise
            }
            None => Variant::Regular,
        };
        let rule = match rest {
            "" => BinaryRule::Application(dir),
            "B" => BinaryRule::Composition { dir, order: 1, crossed: false },
            "Bx" => BinaryRule::Composition { dir, order: 1, crossed: true },
            "B2" => BinaryRule::Composition { dir, order: 2, crossed: false },
            _ => return None,
        };
        Some((rule, variant))
    }

    /// Splits `(left, right)` into `(function, argument)`.
    pub fn roles<'a, T>(self, left: &'a T, right: &'a T) -> (&'a T, &'a T) {
        match self.direction() {
            Direction::Forward => (left, right),
            Direction::Backward => (right, left),
        }
    }

    /// The syntactic half of the rule: the result category, if the rule
    /// applies to these function and argument categories.
    pub fn result_category(self, f: &Category, a: &Category) -> Option<Category> {
        let (x, slash, y) = f.split()?;
        let dir = self.direction();
        if slash != dir.slash() {
            return None;
        }
        let mut binding = FeatureBinding::new();
        match self {
            BinaryRule::Application(_) => {
                if !unify(y, a, &mut binding) {
                    return None;
                }
                Some(x.with_binding(&binding))
            }
            BinaryRule::Composition { order, crossed, .. } => {
                let want = if crossed { dir.slash().flip() } else { dir.slash() };
                let mut args = Vec::new();
                let mut core = a;
                for _ in 0..order {
                    let (r, s, z) = core.split()?;
                    if s != want {
                        return None;
                    }
                    args.push((s, z));
                    core = r;
                }
                if !unify(y, core, &mut binding) {
                    return None;
                }
                let mut out = x.with_binding(&binding);
                for (s, z) in args.into_iter().rev() {
                    out = Category::functor(out, s, z.clone());
                }
                Some(out)
            }
        }
    }
}

impl fmt::Display for BinaryRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name(Variant::Regular))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeSide {
    Source,
    Target,
}

/// A pair of edges identified by a relation-wise combination.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedEdgeMatch {
    pub function_edge: Edge,
    pub argument_edge: Edge,
    /// Endpoint of `function_edge` that is the function's first free variable.
    pub side: EdgeSide,
    pub resolved_label: Role,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CombineError {
    #[error("{rule} does not apply to {left} and {right}")]
    Syntax { rule: String, left: Category, right: Category },
    #[error("graph operation failed: {0}")]
    Graph(#[from] GraphError),
    #[error("no shared relation between function and argument")]
    NoSharedEdge,
    #[error("every shared-relation candidate failed to unify: {0}")]
    RelationWiseFailed(String),
    #[error("function has no free variable to fill")]
    NoFreeVariable,
    #[error("result {category} violates functional isomorphism: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    IsoPrinciple { category: Category, violations: Vec<IsoViolation> },
    #[error("identity semantics cannot be type-raised")]
    IdentityRaise,
    #[error("cannot raise {cat} to {target}")]
    RaiseCategory { cat: Category, target: Category },
    #[error("conjunction needs a Conj constituent, found {0}")]
    NotConj(Category),
    #[error("conjunct categories {0} and {1} do not unify")]
    ConjunctMismatch(Category, Category),
    #[error("conjuncts have {0} and {1} free variables")]
    ConjunctArity(usize, usize),
    #[error("strict conjunction allows at most one free variable per conjunct")]
    StrictConjunction,
    #[error("identity semantics cannot be conjoined")]
    IdentityConjunct,
}

/// Outcome of a binary combination.
#[derive(Clone, Debug)]
pub struct Combination {
    pub constituent: Constituent,
    pub variant: Variant,
    pub matched: Option<SharedEdgeMatch>,
    pub notes: Vec<String>,
}

fn side_of(e: &Edge, n: NodeId) -> EdgeSide {
    if e.source == n {
        EdgeSide::Source
    } else {
        EdgeSide::Target
    }
}

/// All shared-relation pairs in deterministic order: function edges in
/// insertion order, then argument edges in insertion order.
pub fn relation_wise_candidates(f: &AmrSubgraph, a: &AmrSubgraph, k: usize) -> Vec<SharedEdgeMatch> {
    let (Some(f1), Some(ak)) = (f.fv_at(1), a.fv_at(k)) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for fe in f.incident_edges(f1) {
        for ae in a.incident_edges(ak) {
            let resolved = match (&fe.role, &ae.role) {
                (_, Role::Underspecified) => continue,
                (Role::Underspecified, r) => r.clone(),
                (r1, r2) if r1 == r2 => r1.clone(),
                _ => continue,
            };
            out.push(SharedEdgeMatch {
                function_edge: fe.clone(),
                argument_edge: ae.clone(),
                side: side_of(fe, f1),
                resolved_label: resolved,
            });
        }
    }
    out
}

/// The first shared-relation pair, if any.
pub fn relation_wise_match(f: &AmrSubgraph, a: &AmrSubgraph, k: usize) -> Option<SharedEdgeMatch> {
    relation_wise_candidates(f, a, k).into_iter().next()
}

/// Tracks where original nodes of `f` and `a` ended up in a merged graph.
struct Images {
    f: HashMap<NodeId, NodeId>,
    a: HashMap<NodeId, NodeId>,
}

impl Images {
    fn redirect(&mut self, drop: NodeId, keep: NodeId) {
        for v in self.f.values_mut().chain(self.a.values_mut()) {
            if *v == drop {
                *v = keep;
            }
        }
    }
}

/// Keeps surviving free variables and removes repeats. `prefer_last`
/// keeps the last occurrence of a repeated node instead of the first.
fn clean_fv(g: &AmrSubgraph, list: Vec<NodeId>, prefer_last: bool) -> Vec<NodeId> {
    let live: Vec<NodeId> = list.into_iter().filter(|&n| matches!(g.kind(n), Some(NodeKind::FreeVariable))).collect();
    let mut out = Vec::new();
    if prefer_last {
        for (i, &n) in live.iter().enumerate() {
            if !live[i + 1..].contains(&n) {
                out.push(n);
            }
        }
    } else {
        for n in live {
            if !out.contains(&n) {
                out.push(n);
            }
        }
    }
    out
}

/// Identifies the two edges of `m`, unifying same-side endpoints.
pub fn relation_wise_combine(
    f: &AmrSubgraph,
    a: &AmrSubgraph,
    m: &SharedEdgeMatch,
    mode: Mode,
) -> Result<AmrSubgraph, GraphError> {
    let mut out = f.clone();
    let a_map = out.absorb(a);
    let mut img = Images { f: f.nodes().map(|(n, _)| (n, n)).collect(), a: a_map };
    out.remove_edge(&m.function_edge);
    let ae = &m.argument_edge;
    for (fn_, an) in [(m.function_edge.source, ae.source), (m.function_edge.target, ae.target)] {
        let keep = img.a[&an];
        let drop = img.f[&fn_];
        if keep != drop {
            out.merge_in_place(keep, drop)?;
            img.redirect(drop, keep);
        }
    }
    if !out.is_acyclic() {
        return Err(GraphError::Cycle(img.a[&ae.source]));
    }

    let f1 = f.fv_at(1).ok_or(GraphError::PositionOutOfRange { pos: 1, len: 0 })?;
    let partner = match m.side {
        EdgeSide::Source => ae.source,
        EdgeSide::Target => ae.target,
    };
    let root = if f.root() == f1 && partner != a.root() { img.a[&a.root()] } else { img.f[&f.root()] };
    out.set_root(root);

    let f_part: Vec<NodeId> = f.fv().iter().map(|n| img.f[n]).collect();
    let a_part: Vec<NodeId> = a.fv().iter().map(|n| img.a[n]).collect();
    let fv = match mode {
        Mode::Application => clean_fv(&out, f_part.into_iter().chain(a_part).collect(), false),
        Mode::Composition => clean_fv(&out, a_part.into_iter().chain(f_part).collect(), true),
    };
    out.set_fv(fv);
    Ok(out)
}

/// Plain substitution of `a`'s root into `f`'s first free variable.
pub fn regular_combine(f: &AmrSubgraph, a: &AmrSubgraph, mode: Mode) -> Result<AmrSubgraph, GraphError> {
    let s = substitute(f, 1, a)?;
    Ok(match mode {
        Mode::Application => s.function_first(),
        Mode::Composition => s.argument_first(),
    })
}

/// Combines two constituents with `rule`. `left` and `right` are in
/// surface order. `force` overrides automatic variant selection.
pub fn combine(
    rule: BinaryRule,
    left: &Constituent,
    right: &Constituent,
    force: Option<Variant>,
) -> Result<Combination, CombineError> {
    let (f, a) = rule.roles(left, right);
    let syntax_err =
        || CombineError::Syntax { rule: rule.to_string(), left: left.category.clone(), right: right.category.clone() };
    let span = left.span.join(right.span).ok_or_else(syntax_err)?;
    let category = rule.result_category(&f.category, &a.category).ok_or_else(syntax_err)?;

    let mut notes = Vec::new();
    let (semantics, variant, matched) = match (&f.semantics, &a.semantics) {
        (Semantics::Identity, other) | (other, Semantics::Identity) => {
            if force == Some(Variant::RelationWise) {
                return Err(CombineError::NoSharedEdge);
            }
            (other.clone(), Variant::Regular, None)
        }
        (Semantics::Graph(fg), Semantics::Graph(ag)) => {
            if fg.fv().is_empty() {
                return Err(CombineError::NoFreeVariable);
            }
            let k = rule.designated_position();
            let candidates = relation_wise_candidates(fg, ag, k);
            let mut chosen = None;
            let mut failures = Vec::new();
            if force != Some(Variant::Regular) {
                for m in &candidates {
                    match relation_wise_combine(fg, ag, m, rule.mode()) {
                        Ok(g) => {
                            chosen = Some((g, m.clone()));
                            break;
                        }
                        Err(e) => failures.push(e.to_string()),
                    }
                }
            }
            if candidates.len() > 1 && force != Some(Variant::Regular) {
                notes.push(format!("{} shared-relation candidates; took the first that unified", candidates.len()));
            }
            match (chosen, force) {
                (Some((g, m)), _) => (Semantics::Graph(g), Variant::RelationWise, Some(m)),
                (None, Some(Variant::RelationWise)) => {
                    return Err(if candidates.is_empty() {
                        CombineError::NoSharedEdge
                    } else {
                        CombineError::RelationWiseFailed(failures.join("; "))
                    });
                }
                (None, _) => {
                    if !failures.is_empty() {
                        notes.push(format!("relation-wise unification failed ({}); used regular", failures.join("; ")));
                    }
                    let g = regular_combine(fg, ag, rule.mode())?;
                    if ag.fv().contains(&ag.root()) {
                        notes.push("argument is rooted at a free variable".to_string());
                    }
                    (Semantics::Graph(g), Variant::Regular, None)
                }
            }
        }
    };

    let violations = check_iso_principle(&category, semantics.graph());
    if !violations.is_empty() {
        return Err(CombineError::IsoPrinciple { category, violations });
    }
    Ok(Combination { constituent: Constituent { span, category, semantics }, variant, matched, notes })
}

pub fn combine_application(
    dir: Direction,
    left: &Constituent,
    right: &Constituent,
) -> Result<Combination, CombineError> {
    combine(BinaryRule::Application(dir), left, right, None)
}

pub fn combine_composition(
    dir: Direction,
    order: u8,
    crossed: bool,
    left: &Constituent,
    right: &Constituent,
) -> Result<Combination, CombineError> {
    combine(BinaryRule::Composition { dir, order, crossed }, left, right, None)
}

/// New free-variable root with an underspecified edge to the old root.
pub fn raise_graph(g: &AmrSubgraph) -> AmrSubgraph {
    let mut out = g.clone();
    let x = out.add_node(NodeKind::FreeVariable);
    out.push_edge(Edge::new(x, Role::Underspecified, g.root()));
    out.set_root(x);
    out.set_fv(std::iter::once(x).chain(g.fv().iter().copied()).collect());
    out
}

/// `T/(T\X)` for forward raising, `T\(T/X)` for backward.
pub fn raised_category(x: &Category, t: &Category, dir: Direction) -> Category {
    let inner = dir.slash().flip();
    Category::functor(t.clone(), dir.slash(), Category::functor(t.clone(), inner, x.clone()))
}

pub fn type_raise(c: &Constituent, t: &Category, dir: Direction) -> Result<Constituent, CombineError> {
    let g = c.semantics.graph().ok_or(CombineError::IdentityRaise)?;
    Ok(Constituent::new(c.span, raised_category(&c.category, t, dir), Semantics::Graph(raise_graph(g))))
}

/// Applies an explicit raising rule `source => target` if `c` matches.
pub fn apply_raise_rule(c: &Constituent, source: &Category, target: &Category) -> Result<Constituent, CombineError> {
    let err = || CombineError::RaiseCategory { cat: c.category.clone(), target: target.clone() };
    let (t, slash, inner) = target.split().ok_or_else(err)?;
    let dir = match slash {
        Slash::Forward => Direction::Forward,
        Slash::Backward => Direction::Backward,
    };
    let (t2, inner_slash, x) = inner.split().ok_or_else(err)?;
    if t2 != t || inner_slash != slash.flip() || x != source || unify_atoms(source, &c.category).is_none() {
        return Err(err());
    }
    let raised = type_raise(c, t, dir)?;
    Ok(Constituent::new(raised.span, raised_category(&c.category, t, dir), raised.semantics))
}

/// `conj :op1 left :op2 right`, merging the conjuncts' free variables
/// position by position.
pub fn coordinate(
    conj: &Constituent,
    left: &Constituent,
    right: &Constituent,
    strict: bool,
) -> Result<Constituent, CombineError> {
    if conj.category.base() != Some("Conj") {
        return Err(CombineError::NotConj(conj.category.clone()));
    }
    let category = unify_atoms(&left.category, &right.category)
        .ok_or_else(|| CombineError::ConjunctMismatch(left.category.clone(), right.category.clone()))?;
    let (Some(lg), Some(rg)) = (left.semantics.graph(), right.semantics.graph()) else {
        return Err(CombineError::IdentityConjunct);
    };
    let cg = conj.semantics.graph().ok_or(CombineError::IdentityConjunct)?;
    if lg.fv().len() != rg.fv().len() {
        return Err(CombineError::ConjunctArity(lg.fv().len(), rg.fv().len()));
    }
    if strict && lg.fv().len() > 1 {
        return Err(CombineError::StrictConjunction);
    }
    let mut out = cg.clone();
    let lmap = out.absorb(lg);
    let rmap = out.absorb(rg);
    let root = out.root();
    out.push_edge(Edge::new(root, Role::concrete("op1"), lmap[&lg.root()]));
    out.push_edge(Edge::new(root, Role::concrete("op2"), rmap[&rg.root()]));
    let fv: Vec<NodeId> = lg.fv().iter().map(|n| lmap[n]).collect();
    let mut all = fv.clone();
    all.extend(rg.fv().iter().map(|n| rmap[n]));
    out.set_fv(all);
    for (l, r) in lg.fv().iter().zip(rg.fv()) {
        out.merge_in_place(lmap[l], rmap[r])?;
    }
    if !out.is_acyclic() {
        return Err(CombineError::Graph(GraphError::Cycle(root)));
    }
    out.set_fv(fv);
    let span = left
        .span
        .join(conj.span)
        .and_then(|s| s.join(right.span))
        .unwrap_or(Span::new(left.span.start.min(right.span.start), left.span.end.max(right.span.end)));
    let violations = check_iso_principle(&category, Some(&out));
    if !violations.is_empty() {
        return Err(CombineError::IsoPrinciple { category, violations });
    }
    Ok(Constituent::new(span, category, Semantics::Graph(out)))
}

//! PENMAN notation extended with free variables.
//!
//! ```text
//! node     := '(' head relation* ')' | head
//! head     := '?' INT | '"' literal '"' | var '/' concept | var | bareword
//! relation := role node
//! role     := ':' NAME | ':' NAME '-of' | ':?'
//! ```
//!
//! `?k` is the free variable at fv position `k`; repeated mentions are
//! reentrant. A bareword that is not a declared variable is a fresh
//! constant. Inverse roles are normalized on input, so `(a :r-of b)` is
//! stored as the edge `b :r a`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{validate, AmrSubgraph, Edge, GraphBuilder, NodeId, NodeKind, Role, Violation};

/// Role names whose canonical form ends in `-of` and are not inverses.
const NON_INVERSE_OF: &[&str] = &["consist-of", "prep-on-behalf-of", "prep-out-of"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PenmanError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("variable `{name}` defined twice (byte {pos})")]
    DuplicateVariable { name: String, pos: usize },
    #[error("free variable ?{index} given relations twice (byte {pos})")]
    DuplicateFreeVariable { index: usize, pos: usize },
    #[error("free variables must be numbered from 1 without gaps; ?{missing} is missing")]
    FreeVariableGap { missing: usize },
    #[error("invalid graph: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Open,
    Close,
    Slash,
    Role(String),
    Literal(String),
    Fv(usize),
    Name(String),
}

fn syntax(pos: usize, msg: impl Into<String>) -> PenmanError {
    PenmanError::Syntax { pos, msg: msg.into() }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, PenmanError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let is_delim = |c: u8| c.is_ascii_whitespace() || matches!(c, b'(' | b')' | b'/' | b'"');
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            _ if c.is_ascii_whitespace() => i += 1,
            b'(' => {
                out.push((i, Tok::Open));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::Close));
                i += 1;
            }
            b'/' => {
                out.push((i, Tok::Slash));
                i += 1;
            }
            b'"' => {
                let start = i;
                i += 1;
                while i < bytes.len() && bytes[i] != b'"' {
                    if bytes[i] == b'\\' {
                        i += 1;
                    }
                    i += 1;
                }
                if i >= bytes.len() {
                    return Err(syntax(start, "unterminated string literal"));
                }
                i += 1;
                out.push((start, Tok::Literal(text[start..i].to_string())));
            }
            b':' => {
                let start = i;
                i += 1;
                while i < bytes.len() && !is_delim(bytes[i]) {
                    i += 1;
                }
                let name = &text[start + 1..i];
                if name.is_empty() {
                    return Err(syntax(start, "empty role name"));
                }
                out.push((start, Tok::Role(name.to_string())));
            }
            b'?' => {
                let start = i;
                i += 1;
                while i < bytes.len() && !is_delim(bytes[i]) {
                    i += 1;
                }
                let digits = &text[start + 1..i];
                let index: usize =
                    digits.parse().map_err(|_| syntax(start, format!("bad free variable `?{digits}`")))?;
                if index == 0 {
                    return Err(syntax(start, "free variables are numbered from 1"));
                }
                out.push((start, Tok::Fv(index)));
            }
            _ => {
                let start = i;
                while i < bytes.len() && !is_delim(bytes[i]) {
                    i += 1;
                }
                out.push((start, Tok::Name(text[start..i].to_string())));
            }
        }
    }
    Ok(out)
}

fn parse_role(name: &str) -> (Role, bool) {
    if name == "?" {
        return (Role::Underspecified, false);
    }
    if name == "?-of" {
        return (Role::Underspecified, true);
    }
    if NON_INVERSE_OF.contains(&name) {
        return (Role::concrete(name), false);
    }
    match name.strip_suffix("-of") {
        Some(base) if !base.is_empty() => (Role::concrete(base), true),
        _ => (Role::concrete(name), false),
    }
}

fn role_text(role: &Role, inverse: bool) -> String {
    match (role, inverse) {
        (Role::Underspecified, false) => ":?".into(),
        (Role::Underspecified, true) => ":?-of".into(),
        (Role::Concrete(n), false) => format!(":{n}"),
        (Role::Concrete(n), true) => format!(":{n}-of"),
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    builder: GraphBuilder,
    vars: HashMap<String, NodeId>,
    fvs: BTreeMap<usize, NodeId>,
    fv_with_relations: HashSet<usize>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        self.at += 1;
        t
    }

    /// First pass: create a node for every `var/concept` so references may
    /// precede definitions.
    fn declare(&mut self) -> Result<(), PenmanError> {
        for i in 0..self.toks.len() {
            if let (Tok::Name(var), Some((_, Tok::Slash))) = (&self.toks[i].1, self.toks.get(i + 1)) {
                let concept = match self.toks.get(i + 2) {
                    Some((_, Tok::Name(c))) | Some((_, Tok::Literal(c))) => c.clone(),
                    _ => {
                        let p = self.toks.get(i + 1).map(|(p, _)| *p).unwrap_or(self.end);
                        return Err(syntax(p, "expected concept after `/`"));
                    }
                };
                if self.vars.contains_key(var) {
                    return Err(PenmanError::DuplicateVariable { name: var.clone(), pos: self.toks[i].0 });
                }
                let id = self.builder.constant(&concept);
                self.vars.insert(var.clone(), id);
            }
        }
        Ok(())
    }

    fn fv_node(&mut self, index: usize) -> NodeId {
        if let Some(&n) = self.fvs.get(&index) {
            return n;
        }
        let n = self.builder.free_variable();
        self.fvs.insert(index, n);
        n
    }

    /// Returns the head node and, for free variables, its index.
    fn head(&mut self) -> Result<(NodeId, Option<usize>), PenmanError> {
        let pos = self.pos();
        match self.next() {
            Some(Tok::Fv(k)) => Ok((self.fv_node(k), Some(k))),
            Some(Tok::Literal(lit)) => Ok((self.builder.constant(&lit), None)),
            Some(Tok::Name(name)) => {
                if self.peek() == Some(&Tok::Slash) {
                    self.at += 2; // slash and concept, validated in `declare`
                    return Ok((self.vars[&name], None));
                }
                match self.vars.get(&name) {
                    Some(&n) => Ok((n, None)),
                    None => Ok((self.builder.constant(&name), None)),
                }
            }
            Some(t) => Err(syntax(pos, format!("expected a node, found {}", describe(&t)))),
            None => Err(syntax(pos, "unexpected end of input")),
        }
    }

    fn node(&mut self) -> Result<NodeId, PenmanError> {
        if self.peek() != Some(&Tok::Open) {
            return Ok(self.head()?.0);
        }
        let open = self.pos();
        self.at += 1;
        let (n, fv_index) = self.head()?;
        let mut relations = 0;
        while let Some(Tok::Role(name)) = self.peek().cloned() {
            self.at += 1;
            let (role, inverse) = parse_role(&name);
            let child = self.node()?;
            if inverse {
                self.builder.edge(child, role, n);
            } else {
                self.builder.edge(n, role, child);
            }
            relations += 1;
        }
        match self.next() {
            Some(Tok::Close) => {}
            Some(t) => {
                return Err(syntax(self.toks[self.at - 1].0, format!("expected `)` or a role, found {}", describe(&t))))
            }
            None => return Err(syntax(open, "unbalanced `(`")),
        }
        if let (Some(k), true) = (fv_index, relations > 0) {
            if !self.fv_with_relations.insert(k) {
                return Err(PenmanError::DuplicateFreeVariable { index: k, pos: open });
            }
        }
        Ok(n)
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Open => "`(`".into(),
        Tok::Close => "`)`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Role(r) => format!("role `:{r}`"),
        Tok::Literal(l) => format!("literal {l}"),
        Tok::Fv(k) => format!("`?{k}`"),
        Tok::Name(n) => format!("`{n}`"),
    }
}

/// Parses PENMAN-FV text into a validated graph.
pub fn parse(text: &str) -> Result<AmrSubgraph, PenmanError> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(syntax(0, "empty input"));
    }
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
        builder: GraphBuilder::new(),
        vars: HashMap::new(),
        fvs: BTreeMap::new(),
        fv_with_relations: HashSet::new(),
    };
    p.declare()?;
    let root = p.node()?;
    if p.at < p.toks.len() {
        return Err(syntax(p.pos(), "trailing input after the root node"));
    }
    for (expected, &k) in (1..).zip(p.fvs.keys()) {
        if k != expected {
            return Err(PenmanError::FreeVariableGap { missing: expected });
        }
    }
    let fv: Vec<NodeId> = p.fvs.values().copied().collect();
    let g = p.builder.build(root, fv);
    let violations = validate(&g);
    if violations.is_empty() {
        Ok(g)
    } else {
        Err(PenmanError::Invalid(violations))
    }
}

enum Tree {
    Leaf(String),
    Node { head: String, relations: Vec<(String, Tree)> },
}

/// Depth-first layout of a graph as a PENMAN tree, plus the variable names
/// it assigned.
struct Layout<'a> {
    g: &'a AmrSubgraph,
    names: HashMap<NodeId, String>,
    counters: HashMap<char, usize>,
    visited: HashSet<NodeId>,
    emitted: HashSet<usize>,
    order: Vec<usize>,
    forward_reach: HashSet<NodeId>,
}

impl<'a> Layout<'a> {
    fn new(g: &'a AmrSubgraph) -> Layout<'a> {
        let mut forward_reach = HashSet::from([g.root()]);
        let mut stack = vec![g.root()];
        while let Some(n) = stack.pop() {
            for e in g.edges().iter().filter(|e| e.source == n) {
                if forward_reach.insert(e.target) {
                    stack.push(e.target);
                }
            }
        }
        Layout {
            g,
            names: HashMap::new(),
            counters: HashMap::new(),
            visited: HashSet::new(),
            emitted: HashSet::new(),
            order: Vec::new(),
            forward_reach,
        }
    }

    fn is_bare_literal(&self, n: NodeId) -> bool {
        match self.g.kind(n) {
            Some(NodeKind::Constant(c)) if c.starts_with('"') => {
                n != self.g.root()
                    && self.g.incident_edges(n).count() <= 1
                    && !self.g.edges().iter().any(|e| e.source == n)
            }
            _ => false,
        }
    }

    fn name_for(&mut self, n: NodeId, concept: &str) -> String {
        let letter =
            concept.chars().next().filter(|c| c.is_ascii_alphabetic()).map(|c| c.to_ascii_lowercase()).unwrap_or('x');
        let count = self.counters.entry(letter).or_insert(0);
        *count += 1;
        let name = if *count == 1 { letter.to_string() } else { format!("{letter}{count}") };
        self.names.insert(n, name.clone());
        name
    }

    fn reference(&self, n: NodeId) -> String {
        match self.g.kind(n) {
            Some(NodeKind::FreeVariable) => format!("?{}", self.g.fv_position(n).unwrap_or(0)),
            _ => self.names.get(&n).cloned().unwrap_or_default(),
        }
    }

    fn visit(&mut self, n: NodeId) -> Tree {
        self.visited.insert(n);
        let head = match self.g.kind(n) {
            Some(NodeKind::FreeVariable) => format!("?{}", self.g.fv_position(n).unwrap_or(0)),
            Some(NodeKind::Constant(c)) if self.is_bare_literal(n) => c.clone(),
            Some(NodeKind::Constant(c)) => {
                let c = c.clone();
                let v = self.name_for(n, &c);
                format!("{v}/{c}")
            }
            None => String::new(),
        };
        let mut relations = Vec::new();
        for (i, e) in self.g.edges().iter().enumerate() {
            if self.emitted.contains(&i) || !e.touches(n) {
                continue;
            }
            if e.source == n {
                self.emitted.insert(i);
                self.order.push(i);
                let child = if self.visited.contains(&e.target) {
                    Tree::Leaf(self.reference(e.target))
                } else {
                    self.visit(e.target)
                };
                relations.push((role_text(&e.role, false), child));
            } else if !self.visited.contains(&e.source) && !self.forward_reach.contains(&e.source) {
                self.emitted.insert(i);
                self.order.push(i);
                let child = self.visit(e.source);
                relations.push((role_text(&e.role, true), child));
            }
        }
        if relations.is_empty() {
            Tree::Leaf(head)
        } else {
            Tree::Node { head, relations }
        }
    }
}

fn layout(g: &AmrSubgraph) -> (Tree, HashMap<NodeId, String>) {
    let mut l = Layout::new(g);
    let tree = l.visit(g.root());
    (tree, l.names)
}

fn write_flat(t: &Tree, out: &mut String) {
    match t {
        Tree::Leaf(s) => out.push_str(s),
        Tree::Node { head, relations } => {
            out.push('(');
            out.push_str(head);
            for (role, child) in relations {
                out.push(' ');
                out.push_str(role);
                out.push(' ');
                write_flat(child, out);
            }
            out.push(')');
        }
    }
}

fn write_indented(t: &Tree, depth: usize, out: &mut String) {
    match t {
        Tree::Leaf(s) => out.push_str(s),
        Tree::Node { head, relations } => {
            out.push('(');
            out.push_str(head);
            for (role, child) in relations {
                let _ = write!(out, "\n{:width$}{role} ", "", width = 4 * (depth + 1));
                write_indented(child, depth + 1, out);
            }
            out.push(')');
        }
    }
}

fn root_text(g: &AmrSubgraph, tree: &Tree, indented: bool) -> String {
    let mut out = String::new();
    match tree {
        // A lone constant root is parenthesized; a lone free variable or
        // literal is not.
        Tree::Leaf(s) if s.contains('/') => {
            let _ = write!(out, "({s})");
        }
        _ if indented => write_indented(tree, 0, &mut out),
        _ => write_flat(tree, &mut out),
    }
    let _ = g;
    out
}

/// Deterministic single-line PENMAN-FV rendering.
pub fn serialize(g: &AmrSubgraph) -> String {
    let (tree, _) = layout(g);
    root_text(g, &tree, false)
}

/// Multi-line rendering, one relation per line.
pub fn serialize_indented(g: &AmrSubgraph) -> String {
    let (tree, _) = layout(g);
    root_text(g, &tree, true)
}

/// Variable names [`serialize`] assigns to constant nodes. Free variables
/// and bare literals have no entry.
pub fn variable_names(g: &AmrSubgraph) -> HashMap<NodeId, String> {
    layout(g).1
}

/// Edges in the order [`serialize`] writes them.
pub fn emission_order(g: &AmrSubgraph) -> Vec<Edge> {
    let mut l = Layout::new(g);
    l.visit(g.root());
    l.order.iter().map(|&i| g.edges()[i].clone()).collect()
}

/// Renders one edge with serializer variable names, e.g. `(r :ARG1 e)`.
pub fn edge_text(g: &AmrSubgraph, names: &HashMap<NodeId, String>, e: &Edge) -> String {
    let label = |n: NodeId| match g.kind(n) {
        Some(NodeKind::FreeVariable) => format!("?{}", g.fv_position(n).unwrap_or(0)),
        Some(NodeKind::Constant(c)) => match names.get(&n) {
            Some(v) => format!("{v}/{c}"),
            None => c.clone(),
        },
        None => "?".into(),
    };
    format!("({} {} {})", label(e.source), e.role, label(e.target))
}

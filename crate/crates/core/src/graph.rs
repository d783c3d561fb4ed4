//! AMR subgraphs with ordered free variables.
//!
//! An [`AmrSubgraph`] is a connected, rooted, labeled DAG together with an
//! ordered list of free-variable nodes. Position 1 of the list is the next
//! variable a combinator will consume. Every combinator is built from the two
//! primitives here: [`substitute`] (fill a free variable with the root of
//! another graph) and [`merge_nodes`] (unify two nodes of one graph).
//!
//! Values are immutable: every operation returns a new graph.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

mod iso;

pub use iso::{iso_equal, iso_invariant};

/// Identifier of a node, unique within one graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub(crate) u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    /// A concept such as `decide-01`, or a quoted literal such as `"John"`
    /// (stored with its quotes).
    Constant(String),
    FreeVariable,
}

impl NodeKind {
    pub fn is_free(&self) -> bool {
        matches!(self, NodeKind::FreeVariable)
    }

    pub fn concept(&self) -> Option<&str> {
        match self {
            NodeKind::Constant(c) => Some(c),
            NodeKind::FreeVariable => None,
        }
    }
}

/// An edge label. Always stored in canonical (non-inverse) direction.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    /// Role name without the leading colon, e.g. `ARG0`.
    Concrete(String),
    /// The `:?` label introduced by type raising.
    Underspecified,
}

impl Role {
    pub fn concrete(name: &str) -> Role {
        Role::Concrete(name.trim_start_matches(':').to_string())
    }

    pub fn is_underspecified(&self) -> bool {
        matches!(self, Role::Underspecified)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Concrete(name) => write!(f, ":{name}"),
            Role::Underspecified => f.write_str(":?"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub source: NodeId,
    pub role: Role,
    pub target: NodeId,
}

impl Edge {
    pub fn new(source: NodeId, role: Role, target: NodeId) -> Edge {
        Edge { source, role, target }
    }

    pub fn touches(&self, n: NodeId) -> bool {
        self.source == n || self.target == n
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("free-variable position {pos} out of range (graph has {len} free variables)")]
    PositionOutOfRange { pos: usize, len: usize },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("cannot merge node {0} with itself")]
    SelfMerge(NodeId),
    #[error("unification failure: concept `{0}` does not unify with `{1}`")]
    ConceptClash(String, String),
    #[error("operation would create a cycle through node {0}")]
    Cycle(NodeId),
}

/// A broken graph invariant, as reported by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    RootMissing(NodeId),
    EdgeEndpointMissing(Edge),
    DuplicateEdge(Edge),
    FvEntryMissing(NodeId),
    FvEntryNotFree(NodeId),
    DuplicateFvEntry(NodeId),
    FreeVariableNotInFv(NodeId),
    Disconnected(NodeId),
    Cycle(NodeId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RootMissing(n) => write!(f, "root: node {n} is not in the graph"),
            Violation::EdgeEndpointMissing(e) => {
                write!(f, "edges: ({} {} {}) has a missing endpoint", e.source, e.role, e.target)
            }
            Violation::DuplicateEdge(e) => {
                write!(f, "edges: ({} {} {}) appears twice", e.source, e.role, e.target)
            }
            Violation::FvEntryMissing(n) => write!(f, "fv: entry {n} is not a node of the graph"),
            Violation::FvEntryNotFree(n) => write!(f, "fv: entry {n} is not a free variable"),
            Violation::DuplicateFvEntry(n) => write!(f, "fv: entry {n} is listed more than once"),
            Violation::FreeVariableNotInFv(n) => {
                write!(f, "fv: free variable {n} is missing from the fv list")
            }
            Violation::Disconnected(n) => write!(f, "connectivity: node {n} is unreachable from the root"),
            Violation::Cycle(n) => write!(f, "acyclicity: node {n} lies on a directed cycle"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmrSubgraph {
    nodes: BTreeMap<NodeId, NodeKind>,
    edges: Vec<Edge>,
    root: NodeId,
    fv: Vec<NodeId>,
    next_id: u32,
}

impl AmrSubgraph {
    /// Single constant node.
    pub fn constant(concept: &str) -> AmrSubgraph {
        let mut b = GraphBuilder::new();
        let n = b.constant(concept);
        b.build(n, vec![])
    }

    /// Single free-variable node, which is also the root.
    pub fn free_variable() -> AmrSubgraph {
        let mut b = GraphBuilder::new();
        let n = b.free_variable();
        b.build(n, vec![n])
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn fv(&self) -> &[NodeId] {
        &self.fv
    }

    /// Free variable at 1-based position `pos`.
    pub fn fv_at(&self, pos: usize) -> Option<NodeId> {
        pos.checked_sub(1).and_then(|i| self.fv.get(i).copied())
    }

    pub fn fv_position(&self, n: NodeId) -> Option<usize> {
        self.fv.iter().position(|&x| x == n).map(|i| i + 1)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &NodeKind)> + '_ {
        self.nodes.iter().map(|(id, k)| (*id, k))
    }

    pub fn kind(&self, n: NodeId) -> Option<&NodeKind> {
        self.nodes.get(&n)
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.nodes.contains_key(&n)
    }

    /// Edges in insertion order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn has_edge(&self, e: &Edge) -> bool {
        self.edges.contains(e)
    }

    pub fn incident_edges(&self, n: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.touches(n))
    }

    pub fn has_underspecified_edge(&self) -> bool {
        self.edges.iter().any(|e| e.role.is_underspecified())
    }

    pub fn constant_count(&self) -> usize {
        self.nodes.values().filter(|k| !k.is_free()).count()
    }

    pub fn free_count(&self) -> usize {
        self.nodes.values().filter(|k| k.is_free()).count()
    }

    /// Same graph with a different free-variable order. The caller is
    /// responsible for keeping the list a permutation of the free variables.
    pub fn with_fv(&self, fv: Vec<NodeId>) -> AmrSubgraph {
        let mut g = self.clone();
        g.fv = fv;
        g
    }

    pub fn with_root(&self, root: NodeId) -> AmrSubgraph {
        let mut g = self.clone();
        g.root = root;
        g
    }

    fn fresh(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    pub(crate) fn add_node(&mut self, kind: NodeKind) -> NodeId {
        let id = self.fresh();
        self.nodes.insert(id, kind);
        id
    }

    /// Adds an edge unless the identical triple already exists.
    pub(crate) fn push_edge(&mut self, e: Edge) {
        if !self.edges.contains(&e) {
            self.edges.push(e);
        }
    }

    pub(crate) fn remove_edge(&mut self, e: &Edge) {
        self.edges.retain(|x| x != e);
    }

    /// Copies `other` into `self` under fresh ids and returns the id map.
    /// Root and fv of `self` are untouched.
    pub(crate) fn absorb(&mut self, other: &AmrSubgraph) -> HashMap<NodeId, NodeId> {
        let mut map = HashMap::with_capacity(other.nodes.len());
        for (id, kind) in &other.nodes {
            let new = self.add_node(kind.clone());
            map.insert(*id, new);
        }
        for e in &other.edges {
            self.push_edge(Edge::new(map[&e.source], e.role.clone(), map[&e.target]));
        }
        map
    }

    /// Identifies `drop` with `keep`. `keep` survives and becomes a constant
    /// if either node was one. Edges are re-pointed and duplicates collapse.
    /// If both were free variables, `drop`'s fv entry is removed; if the
    /// survivor is a constant, all fv entries of both are removed.
    pub(crate) fn merge_in_place(&mut self, keep: NodeId, drop: NodeId) -> Result<(), GraphError> {
        if keep == drop {
            return Err(GraphError::SelfMerge(keep));
        }
        let k = self.nodes.get(&keep).ok_or(GraphError::UnknownNode(keep))?.clone();
        let d = self.nodes.get(&drop).ok_or(GraphError::UnknownNode(drop))?.clone();
        let merged = match (k, d) {
            (NodeKind::Constant(a), NodeKind::Constant(b)) => {
                if a != b {
                    return Err(GraphError::ConceptClash(a, b));
                }
                NodeKind::Constant(a)
            }
            (NodeKind::Constant(a), NodeKind::FreeVariable) | (NodeKind::FreeVariable, NodeKind::Constant(a)) => {
                NodeKind::Constant(a)
            }
            (NodeKind::FreeVariable, NodeKind::FreeVariable) => NodeKind::FreeVariable,
        };
        let survivor_free = merged.is_free();
        self.nodes.remove(&drop);
        self.nodes.insert(keep, merged);

        let old = std::mem::take(&mut self.edges);
        for mut e in old {
            if e.source == drop {
                e.source = keep;
            }
            if e.target == drop {
                e.target = keep;
            }
            if e.source == e.target {
                return Err(GraphError::Cycle(keep));
            }
            self.push_edge(e);
        }
        if self.root == drop {
            self.root = keep;
        }
        self.fv.retain(|&x| x != drop);
        if !survivor_free {
            self.fv.retain(|&x| x != keep);
        }
        Ok(())
    }

    pub(crate) fn set_root(&mut self, root: NodeId) {
        self.root = root;
    }

    pub(crate) fn set_fv(&mut self, fv: Vec<NodeId>) {
        self.fv = fv;
    }

    pub fn is_acyclic(&self) -> bool {
        find_cycle(self).is_none()
    }
}

/// Incremental construction of a graph. `build` does not validate; call
/// [`validate`] on the result when the input is untrusted.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    nodes: BTreeMap<NodeId, NodeKind>,
    edges: Vec<Edge>,
    next_id: u32,
}

impl GraphBuilder {
    pub fn new() -> GraphBuilder {
        GraphBuilder::default()
    }

    fn add(&mut self, kind: NodeKind) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        self.nodes.insert(id, kind);
        id
    }

    pub fn constant(&mut self, concept: &str) -> NodeId {
        self.add(NodeKind::Constant(concept.to_string()))
    }

    pub fn free_variable(&mut self) -> NodeId {
        self.add(NodeKind::FreeVariable)
    }

    pub fn edge(&mut self, source: NodeId, role: Role, target: NodeId) -> &mut Self {
        let e = Edge::new(source, role, target);
        if !self.edges.contains(&e) {
            self.edges.push(e);
        }
        self
    }

    pub fn kind(&self, n: NodeId) -> Option<&NodeKind> {
        self.nodes.get(&n)
    }

    pub fn build(self, root: NodeId, fv: Vec<NodeId>) -> AmrSubgraph {
        AmrSubgraph { nodes: self.nodes, edges: self.edges, root, fv, next_id: self.next_id }
    }
}

/// Result of [`substitute`]: the combined graph plus the two remaining
/// free-variable sub-lists, expressed in the result's node ids.
#[derive(Clone, Debug)]
pub struct Substitution {
    /// Combined graph; its fv list is `g_remaining ++ h_remaining`.
    pub graph: AmrSubgraph,
    pub g_remaining: Vec<NodeId>,
    pub h_remaining: Vec<NodeId>,
    /// The node formed by identifying `g.fv[pos]` with `h.root`.
    pub merged: NodeId,
}

impl Substitution {
    /// Graph with fv ordered `g_remaining ++ h_remaining` (application).
    pub fn function_first(&self) -> AmrSubgraph {
        let fv = self.g_remaining.iter().chain(&self.h_remaining).copied().collect();
        self.graph.with_fv(fv)
    }

    /// Graph with fv ordered `h_remaining ++ g_remaining` (composition).
    pub fn argument_first(&self) -> AmrSubgraph {
        let fv = self.h_remaining.iter().chain(&self.g_remaining).copied().collect();
        self.graph.with_fv(fv)
    }
}

/// Fills the free variable at 1-based position `pos` of `g` with the root of
/// `h`. The result root is the image of `g`'s root.
pub fn substitute(g: &AmrSubgraph, pos: usize, h: &AmrSubgraph) -> Result<Substitution, GraphError> {
    let slot = g.fv_at(pos).ok_or(GraphError::PositionOutOfRange { pos, len: g.fv.len() })?;
    let mut out = g.clone();
    let map = out.absorb(h);
    let h_root = map[&h.root];
    // h.root's node survives so that a free-variable root keeps its place in
    // h's list.
    out.merge_in_place(h_root, slot)?;
    if find_cycle(&out).is_some() {
        return Err(GraphError::Cycle(h_root));
    }
    let g_remaining: Vec<NodeId> = g.fv.iter().filter(|&&x| x != slot).copied().collect();
    let h_remaining: Vec<NodeId> = h.fv.iter().map(|x| map[x]).collect();
    out.fv = g_remaining.iter().chain(&h_remaining).copied().collect();
    Ok(Substitution { graph: out, g_remaining, h_remaining, merged: h_root })
}

/// Unifies nodes `n1` and `n2`. The survivor keeps `n1`'s id and, when both
/// are free variables, `n1`'s fv position.
pub fn merge_nodes(g: &AmrSubgraph, n1: NodeId, n2: NodeId) -> Result<AmrSubgraph, GraphError> {
    let mut out = g.clone();
    out.merge_in_place(n1, n2)?;
    if let Some(n) = find_cycle(&out) {
        return Err(GraphError::Cycle(n));
    }
    Ok(out)
}

/// Checks every graph invariant; an empty list means the graph is valid.
pub fn validate(g: &AmrSubgraph) -> Vec<Violation> {
    let mut out = Vec::new();
    if !g.nodes.contains_key(&g.root) {
        out.push(Violation::RootMissing(g.root));
    }
    let mut seen_edges = HashSet::new();
    for e in &g.edges {
        if !g.nodes.contains_key(&e.source) || !g.nodes.contains_key(&e.target) {
            out.push(Violation::EdgeEndpointMissing(e.clone()));
        }
        if !seen_edges.insert(e) {
            out.push(Violation::DuplicateEdge(e.clone()));
        }
    }
    let mut seen_fv = HashSet::new();
    for &n in &g.fv {
        match g.nodes.get(&n) {
            None => out.push(Violation::FvEntryMissing(n)),
            Some(k) if !k.is_free() => out.push(Violation::FvEntryNotFree(n)),
            _ => {}
        }
        if !seen_fv.insert(n) {
            out.push(Violation::DuplicateFvEntry(n));
        }
    }
    for (&id, kind) in &g.nodes {
        if kind.is_free() && !seen_fv.contains(&id) {
            out.push(Violation::FreeVariableNotInFv(id));
        }
    }
    if g.nodes.contains_key(&g.root) {
        let reach = reachable_undirected(g, g.root);
        for &id in g.nodes.keys() {
            if !reach.contains(&id) {
                out.push(Violation::Disconnected(id));
            }
        }
    }
    if let Some(n) = find_cycle(g) {
        out.push(Violation::Cycle(n));
    }
    out
}

fn reachable_undirected(g: &AmrSubgraph, start: NodeId) -> HashSet<NodeId> {
    let mut adj: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    for e in &g.edges {
        adj.entry(e.source).or_default().push(e.target);
        adj.entry(e.target).or_default().push(e.source);
    }
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(n) = queue.pop_front() {
        for &m in adj.get(&n).into_iter().flatten() {
            if seen.insert(m) {
                queue.push_back(m);
            }
        }
    }
    seen
}

/// Returns some node on a directed cycle, if any.
fn find_cycle(g: &AmrSubgraph) -> Option<NodeId> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Fresh,
        Open,
        Done,
    }
    let mut out: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    for e in &g.edges {
        out.entry(e.source).or_default().push(e.target);
    }
    let mut mark: HashMap<NodeId, Mark> = g.nodes.keys().map(|&n| (n, Mark::Fresh)).collect();
    for &start in g.nodes.keys() {
        if mark[&start] != Mark::Fresh {
            continue;
        }
        // iterative DFS: (node, next child index)
        let mut stack = vec![(start, 0usize)];
        mark.insert(start, Mark::Open);
        while let Some(&mut (n, ref mut i)) = stack.last_mut() {
            let children = out.get(&n).map(Vec::as_slice).unwrap_or(&[]);
            if *i < children.len() {
                let c = children[*i];
                *i += 1;
                match mark.get(&c).copied().unwrap_or(Mark::Done) {
                    Mark::Open => return Some(c),
                    Mark::Fresh => {
                        mark.insert(c, Mark::Open);
                        stack.push((c, 0));
                    }
                    Mark::Done => {}
                }
            } else {
                mark.insert(n, Mark::Done);
                stack.pop();
            }
        }
    }
    None
}

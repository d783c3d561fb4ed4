//! Graph isomorphism for AMR subgraphs.
//!
//! Two graphs are equal when a node bijection preserves concepts, labeled
//! edges, the root and free-variable positions. Free variables are pinned by
//! their fv index, so only constants are ever searched over.

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet, VecDeque};
use std::hash::{Hash, Hasher};

use super::{AmrSubgraph, NodeId, NodeKind, Role};

/// Initial color: concept, or fv position for free variables.
fn base_color(g: &AmrSubgraph, n: NodeId) -> u64 {
    let mut h = DefaultHasher::new();
    match g.kind(n) {
        Some(NodeKind::Constant(c)) => {
            0u8.hash(&mut h);
            c.hash(&mut h);
        }
        Some(NodeKind::FreeVariable) => {
            1u8.hash(&mut h);
            g.fv_position(n).hash(&mut h);
        }
        None => 2u8.hash(&mut h),
    }
    (n == g.root()).hash(&mut h);
    h.finish()
}

/// Colors after `rounds` of neighborhood refinement.
fn refined_colors(g: &AmrSubgraph, rounds: usize) -> HashMap<NodeId, u64> {
    let mut colors: HashMap<NodeId, u64> = g.nodes().map(|(n, _)| (n, base_color(g, n))).collect();
    for _ in 0..rounds {
        let mut next = HashMap::with_capacity(colors.len());
        for (n, _) in g.nodes() {
            let mut sig: Vec<(u8, &Role, u64)> = g
                .incident_edges(n)
                .map(|e| if e.source == n { (0, &e.role, colors[&e.target]) } else { (1, &e.role, colors[&e.source]) })
                .collect();
            sig.sort();
            let mut h = DefaultHasher::new();
            colors[&n].hash(&mut h);
            sig.hash(&mut h);
            next.insert(n, h.finish());
        }
        colors = next;
    }
    colors
}

/// A hash that is equal for isomorphic graphs. Used to bucket graphs before
/// calling [`iso_equal`].
pub fn iso_invariant(g: &AmrSubgraph) -> u64 {
    let colors = refined_colors(g, 3);
    let mut all: Vec<u64> = colors.values().copied().collect();
    all.sort_unstable();
    let mut h = DefaultHasher::new();
    all.hash(&mut h);
    g.edges().len().hash(&mut h);
    g.fv().len().hash(&mut h);
    colors.get(&g.root()).hash(&mut h);
    h.finish()
}

struct Index<'a> {
    g: &'a AmrSubgraph,
    edges: HashSet<(NodeId, &'a Role, NodeId)>,
    adj: HashMap<NodeId, Vec<(NodeId, &'a Role, bool)>>,
    colors: HashMap<NodeId, u64>,
}

impl<'a> Index<'a> {
    fn new(g: &'a AmrSubgraph) -> Index<'a> {
        let mut adj: HashMap<NodeId, Vec<(NodeId, &Role, bool)>> = HashMap::new();
        let mut edges = HashSet::new();
        for e in g.edges() {
            edges.insert((e.source, &e.role, e.target));
            adj.entry(e.source).or_default().push((e.target, &e.role, true));
            adj.entry(e.target).or_default().push((e.source, &e.role, false));
        }
        Index { g, edges, adj, colors: refined_colors(g, 2) }
    }

    fn neighbors(&self, n: NodeId) -> &[(NodeId, &'a Role, bool)] {
        self.adj.get(&n).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// True iff the graphs are isomorphic (see module docs).
pub fn iso_equal(g1: &AmrSubgraph, g2: &AmrSubgraph) -> bool {
    if g1.node_count() != g2.node_count() || g1.edges().len() != g2.edges().len() || g1.fv().len() != g2.fv().len() {
        return false;
    }
    let a = Index::new(g1);
    let b = Index::new(g2);

    let mut hist_a: Vec<u64> = a.colors.values().copied().collect();
    let mut hist_b: Vec<u64> = b.colors.values().copied().collect();
    hist_a.sort_unstable();
    hist_b.sort_unstable();
    if hist_a != hist_b {
        return false;
    }

    // Visit order: BFS from the root, so each node after the first has an
    // already-mapped neighbor that constrains its candidates.
    let mut order = Vec::with_capacity(g1.node_count());
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([g1.root()]);
    seen.insert(g1.root());
    while let Some(n) = queue.pop_front() {
        order.push(n);
        for &(m, _, _) in a.neighbors(n) {
            if seen.insert(m) {
                queue.push_back(m);
            }
        }
    }
    // Disconnected leftovers (invalid graphs) are appended so the search
    // still terminates with a sound answer.
    for (n, _) in g1.nodes() {
        if seen.insert(n) {
            order.push(n);
        }
    }

    let mut fwd: HashMap<NodeId, NodeId> = HashMap::new();
    let mut back: HashMap<NodeId, NodeId> = HashMap::new();
    if a.colors[&g1.root()] != b.colors[&g2.root()] {
        return false;
    }
    search(&a, &b, &order, 0, &mut fwd, &mut back)
}

fn search(
    a: &Index<'_>,
    b: &Index<'_>,
    order: &[NodeId],
    depth: usize,
    fwd: &mut HashMap<NodeId, NodeId>,
    back: &mut HashMap<NodeId, NodeId>,
) -> bool {
    let Some(&u) = order.get(depth) else {
        return true;
    };
    let candidates: Vec<NodeId> = if depth == 0 {
        vec![b.g.root()]
    } else if let Some(&(m, _, _)) = a.neighbors(u).iter().find(|(m, _, _)| fwd.contains_key(m)) {
        let anchor = fwd[&m];
        let mut c: Vec<NodeId> = b.neighbors(anchor).iter().map(|&(x, _, _)| x).collect();
        c.sort();
        c.dedup();
        c
    } else {
        b.g.nodes().map(|(n, _)| n).collect()
    };

    for v in candidates {
        if back.contains_key(&v) || a.colors[&u] != b.colors[&v] {
            continue;
        }
        if !consistent(a, b, u, v, fwd, back) {
            continue;
        }
        fwd.insert(u, v);
        back.insert(v, u);
        if search(a, b, order, depth + 1, fwd, back) {
            return true;
        }
        fwd.remove(&u);
        back.remove(&v);
    }
    false
}

/// Every edge between `u` and a mapped node must have an image between `v`
/// and that node's image, and the number of such edges must agree.
fn consistent(
    a: &Index<'_>,
    b: &Index<'_>,
    u: NodeId,
    v: NodeId,
    fwd: &HashMap<NodeId, NodeId>,
    back: &HashMap<NodeId, NodeId>,
) -> bool {
    let mut count_a = 0;
    for &(m, role, out) in a.neighbors(u) {
        let Some(&mv) = fwd.get(&m) else { continue };
        count_a += 1;
        let key = if out { (v, role, mv) } else { (mv, role, v) };
        if !b.edges.contains(&key) {
            return false;
        }
    }
    let count_b = b.neighbors(v).iter().filter(|(m, _, _)| back.contains_key(m)).count();
    count_a == count_b
}

//! Fixtures and independent oracles shared by the integration tests and the
//! acceptance runner.
#![allow(dead_code)]

pub mod props;

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;

use ccgamr::category::Category;
use ccgamr::combinator::{self, Constituent, Semantics, Span};
use ccgamr::derivation::{finalize_check, replay, Derivation, ParserConfig, Script};
use ccgamr::graph::{iso_equal, AmrSubgraph, GraphBuilder, NodeId, NodeKind, Role};
use ccgamr::lexicon::Lexicon;
use ccgamr::penman;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn lexicon() -> Lexicon {
    Lexicon::load(fixture("lexicon.txt")).expect("fixture lexicon loads")
}

pub fn gold(name: &str) -> AmrSubgraph {
    let text = std::fs::read_to_string(fixture(&format!("gold/{name}.amr"))).unwrap();
    penman::parse(text.trim()).unwrap()
}

pub fn script(name: &str) -> Script {
    let text = std::fs::read_to_string(fixture(&format!("derivations/{name}.deriv"))).unwrap();
    Script::parse(&text).unwrap()
}

pub fn config(name: Option<&str>) -> ParserConfig {
    match name {
        None => ParserConfig::default(),
        Some(n) => ParserConfig::parse(&std::fs::read_to_string(fixture(n)).unwrap()).unwrap(),
    }
}

pub struct Figure {
    pub name: &'static str,
    pub sentence: &'static str,
    pub config: Option<&'static str>,
}

/// Worked derivations whose output matches the published final line.
pub const FIGURES: &[Figure] = &[
    Figure { name: "like_cat", sentence: "John likes the cat", config: None },
    Figure { name: "coordination", sentence: "John likes and Mary hates cats", config: Some("raising.cfg") },
    Figure { name: "passive", sentence: "John was eaten by bears", config: None },
    Figure { name: "wh_control", sentence: "What did you decide to eat yesterday", config: None },
    Figure { name: "math_teachers", sentence: "math teachers", config: Some("np.cfg") },
    Figure { name: "people_who_teach_math", sentence: "people who teach math", config: Some("np.cfg") },
    Figure { name: "light_verb", sentence: "John made a decision on his major", config: None },
    Figure { name: "raising", sentence: "Mary seems to practice guitar often", config: None },
    Figure { name: "subject_control", sentence: "Mary wants to practice guitar", config: None },
    Figure { name: "object_control", sentence: "Mary persuaded John to practice guitar", config: None },
    Figure { name: "object_control_wh", sentence: "Who did you persuade to smile", config: None },
    Figure { name: "to_purpose", sentence: "Mary bought a ticket to see the movie", config: None },
];

/// Derivations whose output the published figures mark as wrong.
pub const DIVERGENCES: &[Figure] = &[
    Figure { name: "modal", sentence: "Tomorrow John may eat rice", config: None },
    Figure { name: "coord_purpose", sentence: "John arrived to eat and to party", config: None },
    Figure { name: "rnr", sentence: "I should and you may eat", config: Some("raising.cfg") },
];

pub fn replay_fixture(name: &str, lex: &Lexicon) -> Derivation {
    replay(&script(name), lex).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn final_graph(d: &Derivation) -> &AmrSubgraph {
    d.semantics().graph().expect("graph semantics")
}

/// Binary-step operator names in a script, in post-order.
pub fn script_binary_names(s: &Script) -> Vec<String> {
    fn walk(s: &Script, out: &mut Vec<String>) {
        match s {
            Script::Leaf { .. } => {}
            Script::Raise { child, .. } => walk(child, out),
            Script::Binary { left, right, .. } => {
                walk(left, out);
                walk(right, out);
                out.push(s.name());
            }
            Script::Conj { left, conj, right } => {
                walk(left, out);
                walk(conj, out);
                walk(right, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(s, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Brute-force chart oracle: every binary bracketing, no sharing, no merging.

#[derive(Clone)]
enum Piece {
    Whole(Constituent),
    ConjWithRight(Constituent, Constituent),
}

fn raise_closure(items: &mut Vec<Piece>, cfg: &ParserConfig) {
    let mut extra = Vec::new();
    for p in items.iter() {
        if let Piece::Whole(c) = p {
            if c.semantics.is_identity() {
                continue;
            }
            for rule in &cfg.type_raise {
                if let Ok(r) = combinator::apply_raise_rule(c, &rule.source, &rule.target) {
                    extra.push(Piece::Whole(r));
                }
            }
        }
    }
    items.extend(extra);
}

fn span_items(
    i: usize,
    j: usize,
    leaves: &[Vec<Constituent>],
    cfg: &ParserConfig,
    memo: &mut HashMap<(usize, usize), Vec<Piece>>,
) -> Vec<Piece> {
    if let Some(v) = memo.get(&(i, j)) {
        return v.clone();
    }
    let mut out: Vec<Piece> = Vec::new();
    if j == i + 1 {
        out.extend(leaves[i].iter().cloned().map(Piece::Whole));
    } else {
        for k in i + 1..j {
            let lefts = span_items(i, k, leaves, cfg, memo);
            let rights = span_items(k, j, leaves, cfg, memo);
            for l in &lefts {
                let Piece::Whole(lc) = l else { continue };
                for r in &rights {
                    match r {
                        Piece::ConjWithRight(conj, right) => {
                            if let Ok(c) = combinator::coordinate(conj, lc, right, cfg.strict_conjunction) {
                                out.push(Piece::Whole(c));
                            }
                        }
                        Piece::Whole(rc) => {
                            if cfg.conjunction
                                && lc.category.base() == Some("Conj")
                                && !lc.semantics.is_identity()
                                && rc.category.base() != Some("Conj")
                                && !rc.semantics.is_identity()
                            {
                                out.push(Piece::ConjWithRight(lc.clone(), rc.clone()));
                            }
                            for &rule in &cfg.rules {
                                if let Ok(res) = combinator::combine(rule, lc, rc, None) {
                                    out.push(Piece::Whole(res.constituent));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    raise_closure(&mut out, cfg);
    memo.insert((i, j), out.clone());
    out
}

/// Distinct final graphs over all bracketings.
pub fn brute_force_classes(tokens: &[&str], lex: &Lexicon, cfg: &ParserConfig) -> Vec<AmrSubgraph> {
    let leaves: Vec<Vec<Constituent>> =
        tokens.iter().enumerate().map(|(i, t)| lex.lookup(t).into_iter().map(|e| e.constituent(i)).collect()).collect();
    let mut memo = HashMap::new();
    let top = span_items(0, tokens.len(), &leaves, cfg, &mut memo);
    let mut classes: Vec<AmrSubgraph> = Vec::new();
    for p in top {
        let Piece::Whole(c) = p else { continue };
        let goal = c.category.base().is_some_and(|b| cfg.goal.iter().any(|g| g == b));
        if !goal || !finalize_check(&c).is_empty() {
            continue;
        }
        let g = c.semantics.graph().unwrap().clone();
        if !classes.iter().any(|x| iso_equal(x, &g)) {
            classes.push(g);
        }
    }
    classes
}

pub fn same_classes(a: &[AmrSubgraph], b: &[AmrSubgraph]) -> bool {
    a.len() == b.len() && a.iter().all(|x| b.iter().any(|y| iso_equal(x, y)))
}

// ---------------------------------------------------------------------------
// Random graphs.

pub const CONCEPTS: &[&str] = &["a", "b", "c", "d"];
pub const LABELS: &[&str] = &["ARG0", "ARG1", "mod", "op1"];

/// Tree over `n` nodes plus extra forward edges; `n_fv` nodes become free
/// variables in random order.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, n_fv: usize) -> AmrSubgraph {
    assert!(n >= 1 && n_fv <= n);
    let mut kinds: Vec<Option<&str>> = (0..n).map(|i| Some(CONCEPTS[i % CONCEPTS.len()])).collect();
    kinds.shuffle(rng);
    let mut fv_slots: Vec<usize> = (0..n).collect();
    fv_slots.shuffle(rng);
    fv_slots.truncate(n_fv);
    for &s in &fv_slots {
        kinds[s] = None;
    }
    let mut b = GraphBuilder::new();
    let ids: Vec<NodeId> = kinds
        .iter()
        .map(|k| match k {
            Some(c) => b.constant(c),
            None => b.free_variable(),
        })
        .collect();
    let label = |rng: &mut R| Role::concrete(LABELS[rng.gen_range(0..LABELS.len())]);
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        let l = label(rng);
        b.edge(ids[parent], l, ids[i]);
    }
    for _ in 0..rng.gen_range(0..=n / 2) {
        let x = rng.gen_range(0..n);
        let y = rng.gen_range(0..n);
        if x < y {
            let l = label(rng);
            b.edge(ids[x], l, ids[y]);
        }
    }
    b.build(ids[0], fv_slots.iter().map(|&s| ids[s]).collect())
}

/// The same graph rebuilt with nodes inserted in a random order.
pub fn shuffled_copy<R: Rng>(rng: &mut R, g: &AmrSubgraph) -> AmrSubgraph {
    let mut order: Vec<NodeId> = g.nodes().map(|(n, _)| n).collect();
    order.shuffle(rng);
    let mut b = GraphBuilder::new();
    let mut map = HashMap::new();
    for n in order {
        let id = match g.kind(n).unwrap() {
            NodeKind::Constant(c) => b.constant(c),
            NodeKind::FreeVariable => b.free_variable(),
        };
        map.insert(n, id);
    }
    let mut edges: Vec<_> = g.edges().to_vec();
    edges.shuffle(rng);
    for e in edges {
        b.edge(map[&e.source], e.role.clone(), map[&e.target]);
    }
    b.build(map[&g.root()], g.fv().iter().map(|n| map[n]).collect())
}

/// Replaces free variables by constants named after their fv position.
pub fn name_variables(g: &AmrSubgraph, names: &[String]) -> AmrSubgraph {
    let mut b = GraphBuilder::new();
    let mut map = HashMap::new();
    for (n, kind) in g.nodes() {
        let id = match kind {
            NodeKind::Constant(c) => b.constant(c),
            NodeKind::FreeVariable => b.constant(&names[g.fv_position(n).unwrap() - 1]),
        };
        map.insert(n, id);
    }
    for e in g.edges() {
        b.edge(map[&e.source], e.role.clone(), map[&e.target]);
    }
    b.build(map[&g.root()], Vec::new())
}

/// Naive filling of `f.fv[1]` with `a.root`, with every other variable
/// written as a constant `F{i}` or `A{j}`.
pub fn naive_fill(f: &AmrSubgraph, a: &AmrSubgraph) -> AmrSubgraph {
    let slot = f.fv()[0];
    let mut b = GraphBuilder::new();
    let mut amap = HashMap::new();
    for (n, kind) in a.nodes() {
        let id = match kind {
            NodeKind::Constant(c) => b.constant(c),
            NodeKind::FreeVariable => b.constant(&format!("A{}", a.fv_position(n).unwrap())),
        };
        amap.insert(n, id);
    }
    let mut fmap = HashMap::new();
    for (n, kind) in f.nodes() {
        let id = if n == slot {
            amap[&a.root()]
        } else {
            match kind {
                NodeKind::Constant(c) => b.constant(c),
                NodeKind::FreeVariable => b.constant(&format!("F{}", f.fv_position(n).unwrap())),
            }
        };
        fmap.insert(n, id);
    }
    for e in a.edges() {
        b.edge(amap[&e.source], e.role.clone(), amap[&e.target]);
    }
    for e in f.edges() {
        b.edge(fmap[&e.source], e.role.clone(), fmap[&e.target]);
    }
    b.build(fmap[&f.root()], Vec::new())
}

pub fn expected_names(f: &AmrSubgraph, a: &AmrSubgraph, function_first: bool) -> Vec<String> {
    let fs: Vec<String> = (2..=f.fv().len()).map(|i| format!("F{i}")).collect();
    let as_: Vec<String> = (1..=a.fv().len()).map(|j| format!("A{j}")).collect();
    if function_first {
        fs.into_iter().chain(as_).collect()
    } else {
        as_.into_iter().chain(fs).collect()
    }
}

// ---------------------------------------------------------------------------
// Brute-force isomorphism: try every label-preserving bijection.

fn node_label(g: &AmrSubgraph, n: NodeId) -> String {
    match g.kind(n).unwrap() {
        NodeKind::Constant(c) => format!("c:{c}"),
        NodeKind::FreeVariable => format!("v:{}", g.fv_position(n).unwrap()),
    }
}

struct Bijections<'a> {
    g1: &'a AmrSubgraph,
    g2: &'a AmrSubgraph,
    n1: Vec<NodeId>,
    n2: Vec<NodeId>,
    edges2: HashSet<(NodeId, Role, NodeId)>,
}

impl Bijections<'_> {
    fn extend(&self, k: usize, used: &mut [bool], map: &mut HashMap<NodeId, NodeId>) -> bool {
        if k == self.n1.len() {
            return map[&self.g1.root()] == self.g2.root()
                && self
                    .g1
                    .edges()
                    .iter()
                    .all(|e| self.edges2.contains(&(map[&e.source], e.role.clone(), map[&e.target])));
        }
        let u = self.n1[k];
        let lu = node_label(self.g1, u);
        for (i, &v) in self.n2.iter().enumerate() {
            if used[i] || node_label(self.g2, v) != lu {
                continue;
            }
            used[i] = true;
            map.insert(u, v);
            if self.extend(k + 1, used, map) {
                return true;
            }
            used[i] = false;
            map.remove(&u);
        }
        false
    }
}

pub fn brute_force_iso(g1: &AmrSubgraph, g2: &AmrSubgraph) -> bool {
    let n1: Vec<NodeId> = g1.nodes().map(|(n, _)| n).collect();
    let n2: Vec<NodeId> = g2.nodes().map(|(n, _)| n).collect();
    if n1.len() != n2.len() || g1.edges().len() != g2.edges().len() || g1.fv().len() != g2.fv().len() {
        return false;
    }
    let edges2 = g2.edges().iter().map(|e| (e.source, e.role.clone(), e.target)).collect();
    let mut used = vec![false; n2.len()];
    let search = Bijections { g1, g2, n1, n2, edges2 };
    search.extend(0, &mut used, &mut HashMap::new())
}

/// A copy with one random structural change.
pub fn mutate<R: Rng>(rng: &mut R, g: &AmrSubgraph) -> AmrSubgraph {
    let nodes: Vec<NodeId> = g.nodes().map(|(n, _)| n).collect();
    let mut b = GraphBuilder::new();
    let mut map = HashMap::new();
    let relabel = rng.gen_range(0..3);
    let victim = nodes[rng.gen_range(0..nodes.len())];
    for &n in &nodes {
        let id = match g.kind(n).unwrap() {
            NodeKind::Constant(c) if relabel == 0 && n == victim => {
                b.constant(CONCEPTS[(CONCEPTS.iter().position(|x| x == c).unwrap_or(0) + 1) % CONCEPTS.len()])
            }
            NodeKind::Constant(c) => b.constant(c),
            NodeKind::FreeVariable => b.free_variable(),
        };
        map.insert(n, id);
    }
    let edges = g.edges();
    let e_ix = rng.gen_range(0..edges.len().max(1));
    for (i, e) in edges.iter().enumerate() {
        let role = if relabel == 1 && i == e_ix {
            let pos = LABELS.iter().position(|l| Role::concrete(l) == e.role).unwrap_or(0);
            Role::concrete(LABELS[(pos + 1) % LABELS.len()])
        } else {
            e.role.clone()
        };
        b.edge(map[&e.source], role, map[&e.target]);
    }
    let root = if relabel == 2 { victim } else { g.root() };
    b.build(map[&root], g.fv().iter().map(|n| map[n]).collect())
}

pub fn leaf(i: usize, cat: &str, sem: Semantics) -> Constituent {
    Constituent::new(Span::new(i, i + 1), Category::parse(cat).unwrap(), sem)
}

//! Seeded property checks. Each returns `Err` with a counterexample.

use ccgamr::category::Category;
use ccgamr::combinator::{self, BinaryRule, Direction, Mode, Semantics, Variant};
use ccgamr::graph::{iso_equal, iso_invariant, validate, AmrSubgraph, GraphBuilder, Role};
use ccgamr::penman;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

pub type Check = fn(u64) -> Result<(), String>;

pub const CHECKS: &[(&str, Check)] = &[
    ("fv order of regular application and composition", fv_order),
    ("raise then relation-wise equals plain application", raise_then_apply),
    ("identity absorption", identity_absorption),
    ("PENMAN round trip", penman_round_trip),
    ("iso_equal agrees with brute-force bijections", iso_vs_brute_force),
];

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn show(g: &AmrSubgraph) -> String {
    penman::serialize(g)
}

/// `S/NP/.../NP` with `k` arguments, or `NP` when `k` is zero.
fn category_with_arity(k: usize) -> Category {
    let mut c = Category::atom(if k == 0 { "NP" } else { "S" });
    for _ in 0..k {
        c = Category::parse(&format!("({c})/NP")).unwrap();
    }
    c
}

pub fn fv_order(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let nf = r.gen_range(1..=4);
    let kf = r.gen_range(1..=nf.min(3));
    let f = random_graph(&mut r, nf, kf);
    let na = r.gen_range(1..=4);
    let ka = r.gen_range(0..=na.min(2));
    let a = random_graph(&mut r, na, ka);
    let naive = naive_fill(&f, &a);
    for (mode, function_first) in [(Mode::Application, true), (Mode::Composition, false)] {
        let got = combinator::regular_combine(&f, &a, mode).map_err(|e| e.to_string())?;
        let named = name_variables(&got, &expected_names(&f, &a, function_first));
        if !iso_equal(&named, &naive) {
            return Err(format!("{mode:?}: f={} a={} got={}", show(&f), show(&a), show(&got)));
        }
    }
    Ok(())
}

/// A verb-like graph whose single free variable is a leaf with one or two
/// incoming edges.
fn subject_taker<R: Rng>(r: &mut R) -> AmrSubgraph {
    let n = r.gen_range(1..=4);
    let body = random_graph(r, n, 0);
    let mut b = GraphBuilder::new();
    let mut map = std::collections::HashMap::new();
    for (id, kind) in body.nodes() {
        map.insert(id, b.constant(kind.concept().unwrap()));
    }
    for e in body.edges() {
        b.edge(map[&e.source], e.role.clone(), map[&e.target]);
    }
    let s = b.free_variable();
    let ids: Vec<_> = body.nodes().map(|(n, _)| map[&n]).collect();
    for _ in 0..r.gen_range(1..=2) {
        let p = ids[r.gen_range(0..ids.len())];
        b.edge(p, Role::concrete(LABELS[r.gen_range(0..LABELS.len())]), s);
    }
    b.build(map[&body.root()], vec![s])
}

pub fn raise_then_apply(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let verb = subject_taker(&mut r);
    let nx = r.gen_range(1..=3);
    let subj = random_graph(&mut r, nx, 0);
    let x = leaf(0, "NP", Semantics::Graph(subj.clone()));
    let v = leaf(1, "S\\NP", Semantics::Graph(verb.clone()));
    let plain =
        combinator::combine(BinaryRule::Application(Direction::Backward), &x, &v, None).map_err(|e| e.to_string())?;
    let raised = combinator::type_raise(&x, &Category::atom("S"), Direction::Forward).map_err(|e| e.to_string())?;
    let via = combinator::combine(BinaryRule::Application(Direction::Forward), &raised, &v, None)
        .map_err(|e| e.to_string())?;
    let (pg, vg) = (plain.constituent.semantics.graph().unwrap(), via.constituent.semantics.graph().unwrap());
    if via.variant != Variant::RelationWise || plain.constituent.category != via.constituent.category {
        return Err(format!("wrong variant or category: {} {}", via.variant, via.constituent.category));
    }
    if !iso_equal(pg, vg) || vg.has_underspecified_edge() {
        return Err(format!("verb={} subj={} plain={} raised={}", show(&verb), show(&subj), show(pg), show(vg)));
    }
    Ok(())
}

pub fn identity_absorption(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let n = r.gen_range(1..=8);
    let k = r.gen_range(0..=n.min(2));
    let g = random_graph(&mut r, n, k);
    let x = category_with_arity(k);
    let sem = Semantics::Graph(g.clone());
    let cases = [
        (BinaryRule::Application(Direction::Forward), format!("({x})/({x})"), true),
        (BinaryRule::Application(Direction::Backward), format!("({x})\\({x})"), false),
    ];
    for (rule, id_cat, id_left) in cases {
        let id = leaf(if id_left { 0 } else { 1 }, &id_cat, Semantics::Identity);
        let other = leaf(if id_left { 1 } else { 0 }, &x.to_string(), sem.clone());
        let (l, rt) = if id_left { (&id, &other) } else { (&other, &id) };
        let res = combinator::combine(rule, l, rt, None).map_err(|e| format!("{rule}: {e}"))?;
        if res.constituent.semantics != sem || res.variant != Variant::Regular || res.constituent.category != x {
            return Err(format!("{rule} on {}", show(&g)));
        }
    }
    if k >= 1 {
        let id = leaf(0, "S/S", Semantics::Identity);
        let other = leaf(1, &x.to_string(), sem.clone());
        let rule = BinaryRule::Composition { dir: Direction::Forward, order: 1, crossed: false };
        let rule =
            if k == 2 { BinaryRule::Composition { dir: Direction::Forward, order: 2, crossed: false } } else { rule };
        let res = combinator::combine(rule, &id, &other, None).map_err(|e| format!("{rule}: {e}"))?;
        if res.constituent.semantics != sem {
            return Err(format!("{rule} on {}", show(&g)));
        }
    }
    // The function side may also be the graph.
    if k >= 1 {
        let id = leaf(1, "NP", Semantics::Identity);
        let f = leaf(0, &x.to_string(), sem.clone());
        let res = combinator::combine(BinaryRule::Application(Direction::Forward), &f, &id, None);
        if let Ok(res) = res {
            if res.constituent.semantics != sem {
                return Err(format!("identity argument changed {}", show(&g)));
            }
        }
    }
    Ok(())
}

pub fn penman_round_trip(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let n = r.gen_range(1..=8);
    let kg = r.gen_range(0..=n.min(3));
    let g = random_graph(&mut r, n, kg);
    if !validate(&g).is_empty() {
        return Err(format!("generator produced an invalid graph: {:?}", validate(&g)));
    }
    let text = penman::serialize(&g);
    let back = penman::parse(&text).map_err(|e| format!("{text}: {e}"))?;
    if !iso_equal(&g, &back) || back.fv().len() != g.fv().len() {
        return Err(format!("round trip changed {text} into {}", show(&back)));
    }
    if penman::serialize(&back) != text {
        return Err(format!("not a fixed point: {text} vs {}", show(&back)));
    }
    let indented = penman::parse(&penman::serialize_indented(&g)).map_err(|e| e.to_string())?;
    if !iso_equal(&g, &indented) {
        return Err(format!("indented form changed {text}"));
    }
    Ok(())
}

pub fn iso_vs_brute_force(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let n = r.gen_range(1..=12);
    let kg = r.gen_range(0..=n.min(3));
    let g = random_graph(&mut r, n, kg);
    let copy = shuffled_copy(&mut r, &g);
    if !iso_equal(&g, &copy) || !brute_force_iso(&g, &copy) || iso_invariant(&g) != iso_invariant(&copy) {
        return Err(format!("shuffled copy not isomorphic: {}", show(&g)));
    }
    let other = mutate(&mut r, &g);
    let fast = iso_equal(&g, &other);
    let slow = brute_force_iso(&g, &other);
    if fast != slow {
        return Err(format!("iso_equal={fast} brute={slow}: {} vs {}", show(&g), show(&other)));
    }
    if fast != iso_equal(&other, &g) {
        return Err("iso_equal is not symmetric".into());
    }
    Ok(())
}

/// Runs `check` on `cases` consecutive seeds starting at `base`.
pub fn run_seeds(check: Check, base: u64, cases: u64) -> Result<(), String> {
    for s in base..base + cases {
        check(s).map_err(|e| format!("seed {s}: {e}"))?;
    }
    Ok(())
}

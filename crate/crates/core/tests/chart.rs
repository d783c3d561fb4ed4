mod common;

use ccgamr::derivation::{cky_parse, replay, ChartError, ParserConfig};
use ccgamr::graph::iso_equal;
use ccgamr::lexicon::Lexicon;
use common::*;

fn tokens(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

#[test]
fn chart_finds_every_gold_graph() {
    let lex = lexicon();
    for fig in FIGURES {
        let cfg = config(fig.config);
        let res = cky_parse(&tokens(fig.sentence), &lex, &cfg).unwrap();
        let want = gold(fig.name);
        assert!(
            res.derivations.iter().any(|d| iso_equal(final_graph(d), &want)),
            "{}: {} readings",
            fig.name,
            res.derivations.len()
        );
    }
}

#[test]
fn chart_derivations_replay_to_the_same_graph() {
    let lex = lexicon();
    for fig in FIGURES.iter().chain(DIVERGENCES) {
        let res = cky_parse(&tokens(fig.sentence), &lex, &config(fig.config)).unwrap();
        for d in &res.derivations {
            let again = replay(&d.to_script(), &lex).unwrap();
            assert!(iso_equal(final_graph(d), final_graph(&again)), "{}", fig.name);
        }
    }
}

#[test]
fn chart_agrees_with_exhaustive_bracketing() {
    let lex = lexicon();
    for fig in FIGURES.iter().chain(DIVERGENCES) {
        let toks = tokens(fig.sentence);
        if toks.len() > 7 {
            continue;
        }
        let cfg = config(fig.config);
        let res = cky_parse(&toks, &lex, &cfg).unwrap();
        let chart: Vec<_> = res.derivations.iter().map(|d| final_graph(d).clone()).collect();
        let mut distinct = Vec::new();
        for g in chart {
            if !distinct.iter().any(|x| iso_equal(x, &g)) {
                distinct.push(g);
            }
        }
        let brute = brute_force_classes(&toks, &lex, &cfg);
        assert!(same_classes(&distinct, &brute), "{}: chart {} vs brute {}", fig.name, distinct.len(), brute.len());
    }
}

#[test]
fn forest_count_matches_unshared_chart() {
    let lex = lexicon();
    for fig in FIGURES.iter().filter(|f| tokens(f.sentence).len() <= 6) {
        let cfg = config(fig.config);
        let shared = cky_parse(&tokens(fig.sentence), &lex, &cfg).unwrap();
        let full = cky_parse(&tokens(fig.sentence), &lex, &ParserConfig { keep_forest: true, ..cfg }).unwrap();
        assert_eq!(shared.forest_size, full.forest_size, "{}", fig.name);
        assert_eq!(full.derivations.len() as u128, full.forest_size, "{}", fig.name);
    }
}

#[test]
fn coordination_needs_type_raising() {
    let lex = lexicon();
    let toks = tokens("John likes and Mary hates cats");
    assert!(cky_parse(&toks, &lex, &ParserConfig::default()).unwrap().derivations.is_empty());
    assert!(!cky_parse(&toks, &lex, &config(Some("raising.cfg"))).unwrap().derivations.is_empty());
}

#[test]
fn unknown_tokens_and_empty_input_are_errors() {
    let lex = lexicon();
    assert!(matches!(
        cky_parse(&tokens("John likes zebras"), &lex, &ParserConfig::default()),
        Err(ChartError::UnknownToken { index: 2, .. })
    ));
    assert!(matches!(cky_parse(&[], &lex, &ParserConfig::default()), Err(ChartError::Empty)));
}

#[test]
fn cell_limit_is_enforced() {
    let lex = Lexicon::parse_str(
        "x | NP | (x)\nx | NP/NP | (y :mod ?1)\nx | NP\\NP | (z :mod ?1)\nx | NP/NP | (w :ARG0 ?1)\n",
    )
    .unwrap();
    let cfg = ParserConfig { max_cell_items: 3, ..ParserConfig::default() };
    assert!(matches!(cky_parse(&tokens("x x x x"), &lex, &cfg), Err(ChartError::CellOverflow { .. })));
}

#[test]
fn modal_chart_shows_the_known_divergence() {
    let lex = lexicon();
    let res = cky_parse(&tokens("Tomorrow John may eat rice"), &lex, &ParserConfig::default()).unwrap();
    let graphs: Vec<_> = res.derivations.iter().map(final_graph).collect();
    assert!(graphs.iter().any(|g| iso_equal(g, &gold("modal.derived"))));
    assert!(!graphs.iter().any(|g| iso_equal(g, &gold("modal.correct"))));
}

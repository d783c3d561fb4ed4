//! Command-line front end.
//!
//! Exit statuses: 0 success or gold match, 1 usage or I/O error, 2 no
//! derivation, 3 gold mismatch, 4 validation or replay failure.

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::derivation::{self, cky_parse, replay, ChartError, ParserConfig, Script};
use crate::graph::{iso_equal, AmrSubgraph, NodeId, NodeKind};
use crate::lexicon::{Lexicon, LexiconError};
use crate::penman;

pub const OK: i32 = 0;
pub const USAGE: i32 = 1;
pub const NO_DERIVATION: i32 = 2;
pub const MISMATCH: i32 = 3;
pub const INVALID: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "ccgamr", version, about = "CCG derivations with AMR subgraph semantics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Chart-parse a sentence and print the final graphs.
    Parse {
        #[arg(long)]
        lexicon: PathBuf,
        /// Whitespace-tokenized sentence.
        #[arg(long)]
        sentence: String,
        /// Gold graph; status 0 if any derivation matches, else 3.
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Print every derivation as a script with its graph.
        #[arg(long)]
        all: bool,
    },
    /// Evaluate a derivation script.
    Replay {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        derivation: PathBuf,
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Print every intermediate constituent.
        #[arg(long)]
        trace: bool,
    },
    /// Validate a lexicon file.
    Check {
        #[arg(long)]
        lexicon: PathBuf,
    },
    /// Render a graph or a derivation script.
    Render {
        #[arg(long)]
        input: PathBuf,
        /// Needed when the input is a derivation script.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Compare two graphs up to isomorphism.
    Compare { g1: PathBuf, g2: PathBuf },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Dot,
}

/// Failure carrying an exit status and a message for stderr.
struct Fail(i32, String);

type Outcome = Result<i32, Fail>;

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail(USAGE, format!("cannot read {}: {e}", path.display())))
}

fn load_lexicon(path: &Path) -> Result<Lexicon, Fail> {
    Lexicon::load(path).map_err(|e| match e {
        LexiconError::Io { .. } => Fail(USAGE, e.to_string()),
        LexiconError::Invalid(_) => Fail(INVALID, e.to_string()),
    })
}

fn load_graph(path: &Path) -> Result<AmrSubgraph, Fail> {
    let text = read(path)?;
    penman::parse(text.trim()).map_err(|e| Fail(USAGE, format!("{}: {e}", path.display())))
}

fn load_script(path: &Path) -> Result<Script, Fail> {
    let text = read(path)?;
    Script::parse(&text).map_err(|e| Fail(USAGE, format!("{}: {e}", path.display())))
}

/// Runs the CLI with `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Parse { lexicon, sentence, gold, config, all } => {
            cmd_parse(&lexicon, &sentence, gold.as_deref(), config.as_deref(), all, out)
        }
        Command::Replay { lexicon, derivation, gold, trace } => {
            cmd_replay(&lexicon, &derivation, gold.as_deref(), trace, out)
        }
        Command::Check { lexicon } => cmd_check(&lexicon, out),
        Command::Render { input, lexicon, format } => cmd_render(&input, lexicon.as_deref(), format, out),
        Command::Compare { g1, g2 } => cmd_compare(&g1, &g2, out),
    };
    match result {
        Ok(code) => code,
        Err(Fail(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn cmd_parse(
    lexicon: &Path,
    sentence: &str,
    gold: Option<&Path>,
    config: Option<&Path>,
    all: bool,
    out: &mut dyn Write,
) -> Outcome {
    let lex = load_lexicon(lexicon)?;
    let cfg = match config {
        Some(p) => ParserConfig::parse(&read(p)?).map_err(|e| Fail(USAGE, format!("{}: {e}", p.display())))?,
        None => ParserConfig::default(),
    };
    let gold = gold.map(load_graph).transpose()?;
    let tokens: Vec<&str> = sentence.split_whitespace().collect();
    let result = cky_parse(&tokens, &lex, &cfg).map_err(|e| match e {
        ChartError::UnknownToken { .. } | ChartError::Empty => Fail(NO_DERIVATION, e.to_string()),
        ChartError::CellOverflow { .. } => Fail(NO_DERIVATION, e.to_string()),
    })?;
    if result.derivations.is_empty() {
        return Err(Fail(NO_DERIVATION, format!("no complete derivation for \"{sentence}\"")));
    }

    let mut distinct: Vec<&AmrSubgraph> = Vec::new();
    for d in &result.derivations {
        if let Some(g) = d.semantics().graph() {
            if !distinct.iter().any(|x| iso_equal(x, g)) {
                distinct.push(g);
            }
        }
    }
    if all {
        let _ = writeln!(
            out,
            "# {} representative derivations, {} in the full forest",
            result.derivations.len(),
            result.forest_size
        );
        for d in &result.derivations {
            let _ = writeln!(out, "{}\t{}\t{}", d.constituent.category, d.to_script(), d.semantics());
        }
    } else {
        for g in &distinct {
            let _ = writeln!(out, "{}", penman::serialize(g));
        }
    }
    match gold {
        None => Ok(OK),
        Some(gold) => {
            if distinct.iter().any(|g| iso_equal(g, &gold)) {
                let _ = writeln!(out, "gold: match");
                Ok(OK)
            } else {
                let _ = writeln!(out, "gold: mismatch");
                Ok(MISMATCH)
            }
        }
    }
}

fn cmd_replay(lexicon: &Path, script: &Path, gold: Option<&Path>, trace: bool, out: &mut dyn Write) -> Outcome {
    let lex = load_lexicon(lexicon)?;
    let script = load_script(script)?;
    let gold = gold.map(load_graph).transpose()?;
    let d = replay(&script, &lex).map_err(|e| Fail(INVALID, e.to_string()))?;
    if trace {
        let _ = write!(out, "{}", derivation::trace(&d));
    }
    let _ = writeln!(out, "{}", d.semantics());
    let problems = derivation::finalize_check(&d.constituent);
    for p in &problems {
        let _ = writeln!(out, "warning: {p}");
    }
    match gold {
        None => Ok(OK),
        Some(gold) => match d.semantics().graph() {
            Some(g) if iso_equal(g, &gold) => {
                let _ = writeln!(out, "gold: match");
                Ok(OK)
            }
            Some(g) => {
                let _ = writeln!(out, "gold: mismatch");
                if let Some(w) = difference_witness(g, &gold) {
                    let _ = writeln!(out, "witness: {w}");
                }
                Ok(MISMATCH)
            }
            None => {
                let _ = writeln!(out, "gold: mismatch");
                Ok(MISMATCH)
            }
        },
    }
}

fn cmd_check(lexicon: &Path, out: &mut dyn Write) -> Outcome {
    match Lexicon::load(lexicon) {
        Ok(lex) => {
            let _ = writeln!(out, "{}: {} entries, all valid", lexicon.display(), lex.len());
            Ok(OK)
        }
        Err(LexiconError::Invalid(problems)) => {
            for p in &problems {
                let _ = writeln!(out, "{p}");
            }
            let _ = writeln!(out, "{}: {} invalid entries", lexicon.display(), problems.len());
            Ok(INVALID)
        }
        Err(e) => Err(Fail(USAGE, e.to_string())),
    }
}

fn cmd_render(input: &Path, lexicon: Option<&Path>, format: Format, out: &mut dyn Write) -> Outcome {
    let text = read(input)?;
    let graph = match Script::parse(&text) {
        Ok(script) => {
            let lexicon = lexicon.ok_or_else(|| Fail(USAGE, "rendering a derivation needs --lexicon".into()))?;
            let lex = load_lexicon(lexicon)?;
            let d = replay(&script, &lex).map_err(|e| Fail(INVALID, e.to_string()))?;
            if let Format::Text = format {
                let _ = write!(out, "{}", derivation::trace(&d));
            }
            d.semantics().graph().cloned().ok_or_else(|| Fail(INVALID, "derivation has identity semantics".into()))?
        }
        Err(_) => penman::parse(text.trim()).map_err(|e| Fail(USAGE, format!("{}: {e}", input.display())))?,
    };
    match format {
        Format::Text => {
            let _ = writeln!(out, "{}", penman::serialize_indented(&graph));
        }
        Format::Dot => {
            let _ = write!(out, "{}", to_dot(&graph));
        }
    }
    Ok(OK)
}

fn cmd_compare(g1: &Path, g2: &Path, out: &mut dyn Write) -> Outcome {
    let a = load_graph(g1)?;
    let b = load_graph(g2)?;
    if iso_equal(&a, &b) {
        let _ = writeln!(out, "isomorphic");
        return Ok(OK);
    }
    let _ = writeln!(out, "not isomorphic");
    if let Some(w) = difference_witness(&a, &b) {
        let _ = writeln!(out, "witness: {w}");
    }
    Ok(MISMATCH)
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering: free variables as boxes, root doubly outlined.
pub fn to_dot(g: &AmrSubgraph) -> String {
    let ids: HashMap<NodeId, usize> = g.nodes().enumerate().map(|(i, (n, _))| (n, i)).collect();
    let mut s = String::from("digraph amr {\n");
    for (n, kind) in g.nodes() {
        let mut attrs = match kind {
            NodeKind::Constant(c) => format!("label=\"{}\"", escape(c)),
            NodeKind::FreeVariable => format!("label=\"?{}\", shape=box", g.fv_position(n).unwrap_or(0)),
        };
        if n == g.root() {
            attrs.push_str(", peripheries=2");
        }
        s.push_str(&format!("  n{} [{attrs}];\n", ids[&n]));
    }
    for e in g.edges() {
        let label = e.role.to_string();
        s.push_str(&format!(
            "  n{} -> n{} [label=\"{}\"];\n",
            ids[&e.source],
            ids[&e.target],
            escape(label.trim_start_matches(':'))
        ));
    }
    s.push_str("}\n");
    s
}

fn base_label(g: &AmrSubgraph, n: NodeId) -> String {
    match g.kind(n) {
        Some(NodeKind::Constant(c)) => c.clone(),
        Some(NodeKind::FreeVariable) => format!("?{}", g.fv_position(n).unwrap_or(0)),
        None => String::new(),
    }
}

/// Node labels after `rounds` of neighborhood refinement, as strings so
/// they compare across graphs.
fn signatures(g: &AmrSubgraph, rounds: usize) -> HashMap<NodeId, String> {
    let mut sig: HashMap<NodeId, String> = g.nodes().map(|(n, _)| (n, base_label(g, n))).collect();
    for _ in 0..rounds {
        let mut next = HashMap::new();
        for (n, _) in g.nodes() {
            let mut parts: Vec<String> = g
                .incident_edges(n)
                .map(|e| {
                    if e.source == n {
                        format!(">{}:{}", e.role, sig[&e.target])
                    } else {
                        format!("<{}:{}", e.role, sig[&e.source])
                    }
                })
                .collect();
            parts.sort();
            next.insert(n, format!("{}[{}]", sig[&n], parts.join(",")));
        }
        sig = next;
    }
    sig
}

/// An edge of `g1`, in serialization order, whose neighborhood has no
/// counterpart in `g2`. Falls back to structural differences.
pub fn difference_witness(g1: &AmrSubgraph, g2: &AmrSubgraph) -> Option<String> {
    let names = penman::variable_names(g1);
    let order = penman::emission_order(g1);
    let max_rounds = g1.node_count().max(g2.node_count()).max(1);
    for rounds in 1..=max_rounds {
        let s1 = signatures(g1, rounds);
        let s2 = signatures(g2, rounds);
        let key = |s: &HashMap<NodeId, String>, e: &crate::graph::Edge| {
            (s[&e.source].clone(), e.role.to_string(), s[&e.target].clone())
        };
        let mut c2: BTreeMap<(String, String, String), usize> = BTreeMap::new();
        for e in g2.edges() {
            *c2.entry(key(&s2, e)).or_default() += 1;
        }
        let mut c1: BTreeMap<(String, String, String), usize> = BTreeMap::new();
        for e in g1.edges() {
            *c1.entry(key(&s1, e)).or_default() += 1;
        }
        if let Some(e) = order.iter().find(|e| {
            let k = key(&s1, e);
            c1.get(&k) != c2.get(&k)
        }) {
            return Some(penman::edge_text(g1, &names, e));
        }
    }
    if g1.node_count() != g2.node_count() {
        return Some(format!("{} nodes vs {}", g1.node_count(), g2.node_count()));
    }
    if g1.edges().len() != g2.edges().len() {
        return Some(format!("{} edges vs {}", g1.edges().len(), g2.edges().len()));
    }
    if base_label(g1, g1.root()) != base_label(g2, g2.root()) {
        return Some(format!("root {} vs {}", base_label(g1, g1.root()), base_label(g2, g2.root())));
    }
    None
}

pub mod category;
pub mod cli;
pub mod combinator;
pub mod derivation;
pub mod graph;
pub mod lexicon;
pub mod penman;

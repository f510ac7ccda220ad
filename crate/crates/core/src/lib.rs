//! Core of the SQL hint engine: query trees, solution steps, tree edit
//! distance, query execution and grading, per-exercise Markov decision
//! processes, hint generation, file-backed storage and trajectory analysis.

pub mod analysis;
pub mod ast;
pub mod exec;
pub mod hint;
pub mod mdp;
pub mod record;
pub mod steps;
pub mod store;
pub mod treedist;

pub use ast::{canonicalize_aliases, parse, render, AliasMap, Node, NodeKind, ParseError, QueryTree};

//! Query trees for the supported SQL subset.
//!
//! A [`QueryTree`] is the canonical parse of a (possibly unfinished) `SELECT`
//! statement. Internal nodes stand for expressions and clauses, leaves carry
//! the terminal symbols. Keywords are stored upper-case, identifiers
//! lower-case, and string literals keep their content verbatim in a
//! single-quoted canonical spelling.

mod alias;
mod lexer;
mod parser;
mod render;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use alias::{canonicalize_aliases, AliasMap};
pub use parser::{parse, ParseError};
pub use render::render;
pub(crate) use render::render_node;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    Query,
    SelectList,
    SelectItem,
    Aggregate,
    Star,
    Column,
    FromList,
    TableRef,
    Join,
    JoinCondition,
    Where,
    Predicate,
    Comparison,
    InExpr,
    LikeExpr,
    BetweenExpr,
    LogicalAnd,
    LogicalOr,
    Not,
    Subquery,
    GroupBy,
    Having,
    OrderBy,
    OrderItem,
    Literal,
    Identifier,
    PartialPredicate,
}

impl NodeKind {
    /// Kinds that act as a boolean condition inside WHERE, HAVING or ON.
    pub fn is_predicate(self) -> bool {
        matches!(
            self,
            NodeKind::Predicate
                | NodeKind::Comparison
                | NodeKind::InExpr
                | NodeKind::LikeExpr
                | NodeKind::BetweenExpr
                | NodeKind::PartialPredicate
        )
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Node {
    pub kind: NodeKind,
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Node>,
}

impl Node {
    pub fn new(kind: NodeKind, label: impl Into<String>, children: Vec<Node>) -> Self {
        Node {
            kind,
            label: label.into(),
            children,
        }
    }

    pub fn leaf(kind: NodeKind, label: impl Into<String>) -> Self {
        Node::new(kind, label, Vec::new())
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Node::size).sum::<usize>()
    }

    pub fn child(&self, kind: NodeKind) -> Option<&Node> {
        self.children.iter().find(|c| c.kind == kind)
    }

    pub fn child_mut(&mut self, kind: NodeKind) -> Option<&mut Node> {
        self.children.iter_mut().find(|c| c.kind == kind)
    }

    /// Pre-order iterator over this node and all of its descendants.
    pub fn iter(&self) -> impl Iterator<Item = &Node> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            stack.extend(node.children.iter().rev());
            Some(node)
        })
    }

    /// Follows a path of child indices from this node.
    pub fn at_path(&self, path: &[usize]) -> Option<&Node> {
        path.iter().try_fold(self, |node, &i| node.children.get(i))
    }

    /// Text shown for this node in diffs and graph labels.
    pub fn token(&self) -> String {
        if self.label.is_empty() {
            self.kind.to_string()
        } else {
            self.label.clone()
        }
    }
}

/// Canonical tree of a (possibly incomplete) query.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QueryTree {
    pub root: Node,
}

impl QueryTree {
    pub fn new(root: Node) -> Self {
        QueryTree { root }
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }

    pub fn select_list(&self) -> Option<&Node> {
        self.root.child(NodeKind::SelectList)
    }

    /// True when the select list has at least one item.
    pub fn has_selection(&self) -> bool {
        self.select_list().is_some_and(|s| !s.children.is_empty())
    }

    /// A complete query has a non-empty select list everywhere and no dangling predicates.
    pub fn is_complete(&self) -> bool {
        self.root.iter().all(|n| match n.kind {
            NodeKind::PartialPredicate => false,
            NodeKind::SelectList => !n.children.is_empty(),
            _ => true,
        })
    }
}

impl fmt::Display for QueryTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

impl std::str::FromStr for QueryTree {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

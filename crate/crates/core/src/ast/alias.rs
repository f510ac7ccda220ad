use serde::{Deserialize, Serialize};

use super::{Node, NodeKind, QueryTree};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliasEntry {
    pub original: String,
    pub canonical: String,
    /// 0 for the outermost query, then one per nested query in visiting order.
    pub scope: usize,
}

/// Original alias to canonical alias, one entry per declared table alias.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliasMap {
    pub entries: Vec<AliasEntry>,
}

impl AliasMap {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Canonical name of an alias declared in the outermost query.
    pub fn canonical(&self, original: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.scope == 0 && e.original == original)
            .map(|e| e.canonical.as_str())
    }

    /// Original spelling of a canonical alias, any scope.
    pub fn original(&self, canonical: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.canonical == canonical)
            .map(|e| e.original.as_str())
    }
}

/// Renames table aliases to `t1`, `t2`, ... in declaration order.
///
/// Numbering continues into nested queries so an inner alias can never
/// collide with an outer one that a correlated reference still uses. Column
/// qualifiers are resolved innermost scope first, the way SQL resolves them.
pub fn canonicalize_aliases(tree: &QueryTree) -> (QueryTree, AliasMap) {
    let mut root = tree.root.clone();
    let mut canon = Canonicalizer::default();
    let mut scopes = Vec::new();
    canon.query(&mut root, &mut scopes);
    (QueryTree::new(root), canon.map)
}

#[derive(Default)]
struct Canonicalizer {
    next: usize,
    next_scope: usize,
    map: AliasMap,
}

type Scope = Vec<(String, String)>;

impl Canonicalizer {
    fn query(&mut self, query: &mut Node, scopes: &mut Vec<Scope>) {
        let scope_id = self.next_scope;
        self.next_scope += 1;
        let mut scope = Scope::new();
        if let Some(from) = query.child_mut(NodeKind::FromList) {
            for item in &mut from.children {
                self.declare(item, scope_id, &mut scope);
            }
        }
        scopes.push(scope);
        for clause in &mut query.children {
            self.rewrite(clause, scopes);
        }
        scopes.pop();
    }

    fn declare(&mut self, item: &mut Node, scope_id: usize, scope: &mut Scope) {
        match item.kind {
            NodeKind::TableRef => {
                if let Some(alias) = item.child_mut(NodeKind::Identifier) {
                    self.next += 1;
                    let canonical = format!("t{}", self.next);
                    let original = std::mem::replace(&mut alias.label, canonical.clone());
                    self.map.entries.push(AliasEntry {
                        original: original.clone(),
                        canonical: canonical.clone(),
                        scope: scope_id,
                    });
                    scope.push((original, canonical));
                }
            }
            NodeKind::Join => {
                for child in &mut item.children {
                    self.declare(child, scope_id, scope);
                }
            }
            _ => {}
        }
    }

    fn rewrite(&mut self, node: &mut Node, scopes: &mut Vec<Scope>) {
        match node.kind {
            NodeKind::Query => self.query(node, scopes),
            NodeKind::Column => {
                if let Some((qualifier, column)) = node.label.split_once('.') {
                    let renamed = scopes
                        .iter()
                        .rev()
                        .find_map(|s| s.iter().find(|(orig, _)| orig == qualifier))
                        .map(|(_, canonical)| format!("{canonical}.{column}"));
                    if let Some(label) = renamed {
                        node.label = label;
                    }
                }
            }
            _ => {
                for child in &mut node.children {
                    self.rewrite(child, scopes);
                }
            }
        }
    }
}

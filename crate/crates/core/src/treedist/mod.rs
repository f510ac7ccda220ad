//! Tree edit distance between query trees.
//!
//! [`zhang_shasha`] is the classic ordered distance. [`query_distance`]
//! additionally lets the children of set-like clauses (select list, FROM
//! list, AND/OR, GROUP BY) be matched in any order, so reordering them costs
//! nothing.

mod assignment;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ast::{Node, NodeKind, QueryTree};

pub use assignment::min_cost_assignment;

/// Unit costs for the three edit operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditCost {
    pub insert: u32,
    pub delete: u32,
    pub relabel: u32,
}

impl Default for EditCost {
    fn default() -> Self {
        EditCost {
            insert: 1,
            delete: 1,
            relabel: 1,
        }
    }
}

impl EditCost {
    /// Relabelling a node to its own (kind, label) is free.
    pub fn relabel_cost(&self, a: &Node, b: &Node) -> u32 {
        if a.kind == b.kind && a.label == b.label {
            0
        } else {
            self.relabel
        }
    }
}

/// Node kinds whose children form a set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnorderedKinds(pub BTreeSet<NodeKind>);

impl Default for UnorderedKinds {
    fn default() -> Self {
        use NodeKind::*;
        UnorderedKinds([SelectList, FromList, LogicalAnd, LogicalOr, GroupBy].into_iter().collect())
    }
}

impl UnorderedKinds {
    pub fn none() -> Self {
        UnorderedKinds(BTreeSet::new())
    }

    pub fn contains(&self, kind: NodeKind) -> bool {
        self.0.contains(&kind)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceConfig {
    pub cost: EditCost,
    pub unordered: UnorderedKinds,
}

/// Ordered tree edit distance with unit costs.
pub fn zhang_shasha(a: &QueryTree, b: &QueryTree) -> u32 {
    zhang_shasha_nodes(&a.root, &b.root, &EditCost::default())
}

pub fn zhang_shasha_nodes(a: &Node, b: &Node, cost: &EditCost) -> u32 {
    let c = *cost;
    edit_distance(
        a,
        b,
        &|_| c.delete as u64,
        &|_| c.insert as u64,
        &|x, y| c.relabel_cost(x, y) as u64,
        None,
    ) as u32
}

/// Distance used for matching student queries against MDP states.
pub fn query_distance(a: &QueryTree, b: &QueryTree) -> u32 {
    query_distance_with(&a.root, &b.root, &DistanceConfig::default())
}

pub fn query_distance_with(a: &Node, b: &Node, config: &DistanceConfig) -> u32 {
    let c = config.cost;
    edit_distance(
        a,
        b,
        &|_| c.delete as u64,
        &|_| c.insert as u64,
        &|x, y| c.relabel_cost(x, y) as u64,
        Some(&config.unordered),
    ) as u32
}

/// Postorder view of a tree.
struct Indexed<'a> {
    nodes: Vec<&'a Node>,
    /// Leftmost leaf descendant of each node.
    lml: Vec<usize>,
    children: Vec<Vec<usize>>,
    keyroots: Vec<usize>,
}

impl<'a> Indexed<'a> {
    fn new(root: &'a Node) -> Self {
        let mut ix = Indexed {
            nodes: Vec::with_capacity(root.size()),
            lml: Vec::new(),
            children: Vec::new(),
            keyroots: Vec::new(),
        };
        let top = ix.visit(root);
        ix.keyroots.push(top);
        ix.keyroots.sort_unstable();
        ix
    }

    fn visit(&mut self, node: &'a Node) -> usize {
        let mut kids = Vec::with_capacity(node.children.len());
        for (i, c) in node.children.iter().enumerate() {
            let id = self.visit(c);
            if i > 0 {
                self.keyroots.push(id);
            }
            kids.push(id);
        }
        let id = self.nodes.len();
        self.nodes.push(node);
        self.lml.push(kids.first().map_or(id, |&k| self.lml[k]));
        self.children.push(kids);
        id
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }
}

pub(crate) type NodeCost<'f> = &'f dyn Fn(&Node) -> u64;
pub(crate) type PairCost<'f> = &'f dyn Fn(&Node, &Node) -> u64;

/// Zhang-Shasha keyroot recursion. When `unordered` is given, a matched pair
/// of set-like nodes may also align its children by minimum-cost assignment,
/// with unmatched children deleted or inserted whole.
pub(crate) fn edit_distance(
    a: &Node,
    b: &Node,
    del: NodeCost,
    ins: NodeCost,
    rel: PairCost,
    unordered: Option<&UnorderedKinds>,
) -> u64 {
    let ta = Indexed::new(a);
    let tb = Indexed::new(b);
    let (n, m) = (ta.len(), tb.len());
    let del_cost: Vec<u64> = ta.nodes.iter().map(|x| del(x)).collect();
    let ins_cost: Vec<u64> = tb.nodes.iter().map(|y| ins(y)).collect();
    let del_sub = subtree_sums(&ta, &del_cost);
    let ins_sub = subtree_sums(&tb, &ins_cost);

    let mut td = vec![vec![0u64; m]; n];
    let mut fd = vec![vec![0u64; m + 1]; n + 1];

    for &i in &ta.keyroots {
        for &j in &tb.keyroots {
            let (li, lj) = (ta.lml[i], tb.lml[j]);
            fd[0][0] = 0;
            for x in li..=i {
                fd[x - li + 1][0] = fd[x - li][0] + del_cost[x];
            }
            for y in lj..=j {
                fd[0][y - lj + 1] = fd[0][y - lj] + ins_cost[y];
            }
            for x in li..=i {
                for y in lj..=j {
                    let (xi, yi) = (x - li + 1, y - lj + 1);
                    let drop = fd[xi - 1][yi] + del_cost[x];
                    let add = fd[xi][yi - 1] + ins_cost[y];
                    if ta.lml[x] == li && tb.lml[y] == lj {
                        let mut kids = fd[xi - 1][yi - 1];
                        if let Some(set) = unordered {
                            let (nx, ny) = (ta.nodes[x], tb.nodes[y]);
                            if set.contains(nx.kind) && set.contains(ny.kind) {
                                kids = kids.min(assign_children(
                                    &ta.children[x],
                                    &tb.children[y],
                                    &td,
                                    &del_sub,
                                    &ins_sub,
                                ));
                            }
                        }
                        let v = drop.min(add).min(kids + rel(ta.nodes[x], tb.nodes[y]));
                        fd[xi][yi] = v;
                        td[x][y] = v;
                    } else {
                        let (px, py) = (ta.lml[x] - li, tb.lml[y] - lj);
                        fd[xi][yi] = drop.min(add).min(fd[px][py] + td[x][y]);
                    }
                }
            }
        }
    }
    td[n - 1][m - 1]
}

fn subtree_sums(t: &Indexed, cost: &[u64]) -> Vec<u64> {
    let mut sums = vec![0u64; t.len()];
    for v in 0..t.len() {
        sums[v] = cost[v] + t.children[v].iter().map(|&c| sums[c]).sum::<u64>();
    }
    sums
}

fn assign_children(xs: &[usize], ys: &[usize], td: &[Vec<u64>], del_sub: &[u64], ins_sub: &[u64]) -> u64 {
    let k = xs.len().max(ys.len());
    if k == 0 {
        return 0;
    }
    let mut cost = vec![vec![0i64; k]; k];
    for (r, row) in cost.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = match (xs.get(r), ys.get(c)) {
                (Some(&x), Some(&y)) => td[x][y] as i64,
                (Some(&x), None) => del_sub[x] as i64,
                (None, Some(&y)) => ins_sub[y] as i64,
                (None, None) => 0,
            };
        }
    }
    min_cost_assignment(&cost).0 as u64
}

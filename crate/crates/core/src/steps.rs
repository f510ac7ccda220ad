//! Decomposition of a complete query into the partial queries a student
//! writing it clause by clause would pass through.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::{Node, NodeKind, QueryTree};
use crate::treedist::edit_distance;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionStep {
    pub index: usize,
    pub tree: QueryTree,
    pub is_final: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecomposeError {
    #[error("not a complete query")]
    Incomplete,
}

/// Splits `full` into solution steps:
///
/// 1. the select list alone;
/// 2. FROM items one at a time (a JOIN first shows its left side);
/// 3. each top-level WHERE conjunct, first as its left operand only and then
///    complete; a subquery on the right first appears as a bare
///    `(SELECT ...)` and then grows through its own steps;
/// 4. GROUP BY, 5. HAVING, 6. ORDER BY, one step each.
///
/// Consecutive identical trees are collapsed. The tree is used as given;
/// callers canonicalize aliases first.
pub fn decompose(full: &QueryTree) -> Result<Vec<SolutionStep>, DecomposeError> {
    if full.root.kind != NodeKind::Query || !full.is_complete() {
        return Err(DecomposeError::Incomplete);
    }
    let mut trees = query_steps(&full.root);
    trees.dedup();
    let last = trees.len() - 1;
    Ok(trees
        .into_iter()
        .enumerate()
        .map(|(index, root)| SolutionStep {
            index,
            tree: QueryTree::new(root),
            is_final: index == last,
        })
        .collect())
}

fn query_steps(q: &Node) -> Vec<Node> {
    let with = |clauses: &[Node]| Node::new(NodeKind::Query, q.label.clone(), clauses.to_vec());
    let mut done: Vec<Node> = Vec::new();
    let mut out = Vec::new();
    for clause in &q.children {
        match clause.kind {
            NodeKind::SelectList => {
                done.push(clause.clone());
                out.push(with(&done));
                continue;
            }
            NodeKind::FromList => {
                let mut items: Vec<Node> = Vec::new();
                for item in &clause.children {
                    for partial in from_item_steps(item) {
                        let mut list = items.clone();
                        list.push(partial);
                        let mut clauses = done.clone();
                        clauses.push(Node::new(NodeKind::FromList, clause.label.clone(), list));
                        out.push(with(&clauses));
                    }
                    items.push(item.clone());
                }
            }
            NodeKind::Where => {
                for cond in where_steps(&clause.children[0]) {
                    let mut clauses = done.clone();
                    clauses.push(Node::new(NodeKind::Where, clause.label.clone(), vec![cond]));
                    out.push(with(&clauses));
                }
            }
            _ => {
                let mut clauses = done.clone();
                clauses.push(clause.clone());
                out.push(with(&clauses));
            }
        }
        done.push(clause.clone());
    }
    out
}

fn from_item_steps(item: &Node) -> Vec<Node> {
    if item.kind == NodeKind::Join {
        let mut steps = from_item_steps(&item.children[0]);
        steps.push(item.clone());
        steps
    } else {
        vec![item.clone()]
    }
}

fn where_steps(cond: &Node) -> Vec<Node> {
    let conjuncts: &[Node] = if cond.kind == NodeKind::LogicalAnd {
        &cond.children
    } else {
        std::slice::from_ref(cond)
    };
    let mut out = Vec::new();
    for (k, c) in conjuncts.iter().enumerate() {
        for partial in predicate_steps(c) {
            let mut list = conjuncts[..k].to_vec();
            list.push(partial);
            out.push(if list.len() == 1 {
                list.pop().unwrap()
            } else {
                Node::new(NodeKind::LogicalAnd, "AND", list)
            });
        }
    }
    out
}

fn predicate_steps(pred: &Node) -> Vec<Node> {
    use NodeKind::*;
    if !matches!(pred.kind, Comparison | InExpr | LikeExpr | BetweenExpr) {
        return vec![pred.clone()];
    }
    let mut out = vec![Node::new(PartialPredicate, "", vec![pred.children[0].clone()])];
    let sub_at = pred.children.iter().skip(1).position(|c| c.kind == Subquery).map(|i| i + 1);
    match sub_at {
        Some(i) => {
            for inner in query_steps(&pred.children[i].children[0]) {
                let mut p = pred.clone();
                p.children[i] = Node::new(Subquery, "", vec![inner]);
                out.push(p);
            }
        }
        None => out.push(pred.clone()),
    }
    out
}

const FORBIDDEN: u64 = 1 << 40;

/// True when `prev` can be obtained from `next` by deleting nodes only. A
/// dangling operand in `prev` may grow into any complete predicate.
pub fn extension_of(prev: &QueryTree, next: &QueryTree) -> bool {
    let (a, b) = (&prev.root, &next.root);
    if a.size() > b.size() {
        return false;
    }
    let d = edit_distance(
        a,
        b,
        &|_| FORBIDDEN,
        &|_| 1,
        &|x, y| {
            let same = x.kind == y.kind && x.label == y.label;
            if same || (x.kind == NodeKind::PartialPredicate && y.kind.is_predicate()) {
                0
            } else {
                FORBIDDEN
            }
        },
        None,
    );
    d == (b.size() - a.size()) as u64
}

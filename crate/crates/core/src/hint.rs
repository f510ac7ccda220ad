//! Matching a student's query to the MDP and choosing the next step.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ast::{canonicalize_aliases, render, Node, NodeKind, QueryTree};
use crate::mdp::{dist_to_solution, MdpGraph, State, StateId};
use crate::treedist::{min_cost_assignment, query_distance, query_distance_with, DistanceConfig, UnorderedKinds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffKind {
    Added,
    Removed,
}

/// One node that the hint adds or removes. Paths of removed nodes index the
/// student's tree, paths of added nodes index the target tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffOp {
    pub op: DiffKind,
    pub path: Vec<usize>,
    pub kind: NodeKind,
    pub token: String,
    /// Kind of the top-level clause containing the node.
    pub clause: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hint {
    pub sql_text: String,
    pub diff: Vec<DiffOp>,
    pub matched_state: StateId,
    pub matched_distance: u32,
    /// State the hint starts from after leaving an incorrect branch.
    pub escaped_state: StateId,
    pub target_state: StateId,
    /// Moves to a passing final from the matched state and from the target.
    pub dist_before: Option<u32>,
    pub dist_after: Option<u32>,
    pub target_tree: QueryTree,
    pub student_fingerprint: String,
    pub target_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum HintError {
    #[error("the query is empty")]
    EmptySolution,
    #[error("no passing solution is reachable in this exercise")]
    NoHintAvailable,
    #[error("the query changed since the hint was generated")]
    StaleHint,
}

/// Hex SHA-256 of the alias-canonical rendering.
pub fn fingerprint(tree: &QueryTree) -> String {
    let (canon, _) = canonicalize_aliases(tree);
    hex::encode(Sha256::digest(render(&canon).as_bytes()))
}

/// Nearest state by query distance; ties go to the higher value, then the
/// higher support, then the lower id.
pub fn match_state(g: &MdpGraph, student: &QueryTree) -> Result<(StateId, u32), HintError> {
    if !student.has_selection() {
        return Err(HintError::EmptySolution);
    }
    let (canon, _) = canonicalize_aliases(student);
    let size = canon.size();
    // Unit costs: the size difference bounds the distance from below, so
    // states are visited nearest size first and the scan stops early.
    let mut order: Vec<(usize, &State)> = g.states.iter().map(|s| (s.tree.size().abs_diff(size), s)).collect();
    order.sort_by_key(|(lb, s)| (*lb, s.id));
    let mut best: Option<(&State, u32)> = None;
    for (lb, s) in order {
        if best.is_some_and(|(_, d)| lb as u32 > d) {
            break;
        }
        let d = query_distance(&canon, &s.tree);
        let better = match best {
            None => true,
            Some((b, bd)) => d
                .cmp(&bd)
                .then(b.value.total_cmp(&s.value))
                .then(b.support.cmp(&s.support))
                .then(s.id.cmp(&b.id))
                .is_lt(),
        };
        if better {
            best = Some((s, d));
        }
    }
    best.map(|(s, d)| (s.id, d)).ok_or(HintError::NoHintAvailable)
}

pub fn generate_hint(g: &MdpGraph, student: &QueryTree) -> Result<Hint, HintError> {
    let (matched, distance) = match_state(g, student)?;
    let dist = dist_to_solution(g);
    let (escaped, target) = if g.states[matched].is_passing() {
        (matched, matched)
    } else {
        let escaped = match crate::mdp::nav_escape(g, &dist, matched) {
            Some(e) => e,
            None => fallback_root(g, &dist).ok_or(HintError::NoHintAvailable)?,
        };
        (escaped, next_best(g, &dist, escaped).ok_or(HintError::NoHintAvailable)?)
    };

    let (student_canon, _) = canonicalize_aliases(student);
    let t = &g.states[target];
    let confirm = student_canon == t.tree;
    let display = if confirm { student.clone() } else { t.display.clone() };
    Ok(Hint {
        sql_text: render(&display),
        diff: diff(&student_canon, student, &t.tree, &display),
        matched_state: matched,
        matched_distance: distance,
        escaped_state: escaped,
        target_state: target,
        dist_before: dist[matched],
        dist_after: dist[target],
        student_fingerprint: fingerprint(student),
        target_fingerprint: fingerprint(&display),
        target_tree: display,
    })
}

/// Replaces the student's query with the hint's target.
pub fn apply_hint(student: &QueryTree, hint: &Hint) -> Result<QueryTree, HintError> {
    let fp = fingerprint(student);
    if fp != hint.student_fingerprint && fp != hint.target_fingerprint {
        return Err(HintError::StaleHint);
    }
    Ok(hint.target_tree.clone())
}

fn fallback_root(g: &MdpGraph, dist: &[Option<u32>]) -> Option<StateId> {
    g.roots
        .iter()
        .map(|&r| &g.states[r])
        .filter(|s| s.seeded && dist[s.id].is_some())
        .max_by(|a, b| {
            a.value
                .total_cmp(&b.value)
                .then(a.support.cmp(&b.support))
                .then(b.id.cmp(&a.id))
        })
        .map(|s| s.id)
}

/// Forward destination on a shortest route to a passing final with the
/// highest value; ties by probability, then lowest id.
fn next_best(g: &MdpGraph, dist: &[Option<u32>], s: StateId) -> Option<StateId> {
    if g.states[s].is_passing() {
        return Some(s);
    }
    let d = dist[s]?;
    g.forward[s]
        .iter()
        .filter(|t| dist[t.to] == Some(d - 1))
        .max_by(|a, b| {
            g.states[a.to]
                .value
                .total_cmp(&g.states[b.to].value)
                .then(a.probability.total_cmp(&b.probability))
                .then(b.to.cmp(&a.to))
        })
        .map(|t| t.to)
}

/// Node-level difference between two trees. Structure is aligned on the
/// canonical trees; tokens are read from the display trees, which have the
/// same shape.
pub fn diff(from: &QueryTree, from_display: &QueryTree, to: &QueryTree, to_display: &QueryTree) -> Vec<DiffOp> {
    let mut d = Differ {
        from_display: &from_display.root,
        to_display: &to_display.root,
        config: DistanceConfig::default(),
        ops: Vec::new(),
    };
    d.node(&from.root, &to.root, &mut Vec::new(), &mut Vec::new());
    d.ops
}

struct Differ<'a> {
    from_display: &'a Node,
    to_display: &'a Node,
    config: DistanceConfig,
    ops: Vec<DiffOp>,
}

impl Differ<'_> {
    fn emit(&mut self, op: DiffKind, path: &[usize]) {
        let root = match op {
            DiffKind::Added => self.to_display,
            DiffKind::Removed => self.from_display,
        };
        let node = root.at_path(path).expect("diff path inside tree");
        let clause = path
            .first()
            .and_then(|&i| root.children.get(i))
            .map_or_else(|| root.kind.to_string(), |c| c.kind.to_string());
        self.ops.push(DiffOp {
            op,
            path: path.to_vec(),
            kind: node.kind,
            token: node.token(),
            clause,
        });
    }

    fn whole(&mut self, op: DiffKind, node: &Node, path: &mut Vec<usize>) {
        self.emit(op, path);
        for (i, c) in node.children.iter().enumerate() {
            path.push(i);
            self.whole(op, c, path);
            path.pop();
        }
    }

    fn node(&mut self, a: &Node, b: &Node, pa: &mut Vec<usize>, pb: &mut Vec<usize>) {
        if a.kind != b.kind || a.label != b.label {
            self.emit(DiffKind::Removed, pa);
            self.emit(DiffKind::Added, pb);
        }
        let pairs = self.align(a, b);
        let mut used_a = vec![false; a.children.len()];
        let mut used_b = vec![false; b.children.len()];
        for &(i, j) in &pairs {
            used_a[i] = true;
            used_b[j] = true;
        }
        for (i, c) in a.children.iter().enumerate() {
            if !used_a[i] {
                pa.push(i);
                self.whole(DiffKind::Removed, c, pa);
                pa.pop();
            }
        }
        for (i, j) in pairs {
            pa.push(i);
            pb.push(j);
            self.node(&a.children[i], &b.children[j], pa, pb);
            pa.pop();
            pb.pop();
        }
        for (j, c) in b.children.iter().enumerate() {
            if !used_b[j] {
                pb.push(j);
                self.whole(DiffKind::Added, c, pb);
                pb.pop();
            }
        }
    }

    /// Child pairs to compare recursively; unpaired children are removed or
    /// added whole.
    fn align(&self, a: &Node, b: &Node) -> Vec<(usize, usize)> {
        let (xs, ys) = (&a.children, &b.children);
        let cost = |i: usize, j: usize| query_distance_with(&xs[i], &ys[j], &self.config) as i64;
        let unordered = UnorderedKinds::default();
        if unordered.contains(a.kind) && unordered.contains(b.kind) {
            let k = xs.len().max(ys.len());
            let mut m = vec![vec![0i64; k]; k];
            for (i, row) in m.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    *cell = match (i < xs.len(), j < ys.len()) {
                        (true, true) => cost(i, j).min((xs[i].size() + ys[j].size()) as i64),
                        (true, false) => xs[i].size() as i64,
                        (false, true) => ys[j].size() as i64,
                        (false, false) => 0,
                    };
                }
            }
            let (_, assign) = min_cost_assignment(&m);
            return assign
                .into_iter()
                .enumerate()
                .filter(|&(i, j)| i < xs.len() && j < ys.len() && cost(i, j) < (xs[i].size() + ys[j].size()) as i64)
                .collect();
        }
        // ordered: edit-distance alignment of the two child sequences
        let (n, m) = (xs.len(), ys.len());
        let mut dp = vec![vec![0i64; m + 1]; n + 1];
        for i in 1..=n {
            dp[i][0] = dp[i - 1][0] + xs[i - 1].size() as i64;
        }
        for j in 1..=m {
            dp[0][j] = dp[0][j - 1] + ys[j - 1].size() as i64;
        }
        for i in 1..=n {
            for j in 1..=m {
                dp[i][j] = (dp[i - 1][j] + xs[i - 1].size() as i64)
                    .min(dp[i][j - 1] + ys[j - 1].size() as i64)
                    .min(dp[i - 1][j - 1] + cost(i - 1, j - 1));
            }
        }
        let mut pairs = Vec::new();
        let (mut i, mut j) = (n, m);
        while i > 0 && j > 0 {
            let here = dp[i][j];
            if here == dp[i - 1][j - 1] + cost(i - 1, j - 1) && cost(i - 1, j - 1) < (xs[i - 1].size() + ys[j - 1].size()) as i64 {
                pairs.push((i - 1, j - 1));
                i -= 1;
                j -= 1;
            } else if here == dp[i - 1][j] + xs[i - 1].size() as i64 {
                i -= 1;
            } else {
                j -= 1;
            }
        }
        pairs.reverse();
        pairs
    }
}

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{MdpGraph, StateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum EscapeError {
    #[error("no passing final state is reachable from state {0}")]
    NoEscape(StateId),
}

/// Fewest forward or backward moves from each state to a passing final
/// (breadth-first, every move counts 1). `None` when none is reachable.
pub fn dist_to_solution(g: &MdpGraph) -> Vec<Option<u32>> {
    let n = g.len();
    let mut incoming: Vec<Vec<StateId>> = vec![Vec::new(); n];
    for s in 0..n {
        for t in &g.forward[s] {
            incoming[t.to].push(s);
        }
        if let Some(p) = g.backward[s] {
            incoming[p].push(s);
        }
    }
    let mut dist = vec![None; n];
    let mut queue = VecDeque::new();
    for s in g.passing_finals() {
        dist[s.id] = Some(0);
        queue.push_back(s.id);
    }
    while let Some(s) = queue.pop_front() {
        let d = dist[s].unwrap() + 1;
        for &p in &incoming[s] {
            if dist[p].is_none() {
                dist[p] = Some(d);
                queue.push_back(p);
            }
        }
    }
    dist
}

/// Leaves an incorrect branch: if no forward move from `s` brings it closer
/// to a passing final, follow backward actions to the nearest ancestor that
/// has such a move. Passing finals and states already on a shortest route
/// are returned unchanged.
pub fn escape_incorrect_branch(g: &MdpGraph, s: StateId) -> Result<StateId, EscapeError> {
    escape_with(g, &dist_to_solution(g), s)
}

pub(crate) fn escape_with(g: &MdpGraph, dist: &[Option<u32>], s: StateId) -> Result<StateId, EscapeError> {
    let Some(mut d) = dist[s] else {
        return Err(EscapeError::NoEscape(s));
    };
    let mut cur = s;
    loop {
        if d == 0 || g.forward[cur].iter().any(|t| dist[t.to] == Some(d - 1)) {
            return Ok(cur);
        }
        match g.backward[cur] {
            Some(p) if dist[p] == Some(d - 1) => {
                cur = p;
                d -= 1;
            }
            _ => unreachable!("finite distance must be realized by a forward or backward move"),
        }
    }
}

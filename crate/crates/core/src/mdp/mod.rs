//! Per-exercise Markov decision process over solution steps.
//!
//! Every historical attempt and every ideal solution is decomposed into
//! solution steps; each distinct step is a state. Consecutive steps give the
//! single forward action of a state (one action, many destinations), and
//! every non-root state also gets a backward action to its most supported
//! predecessor. Only final states carry rewards.

mod export;
mod nav;
mod vi;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::{canonicalize_aliases, parse, QueryTree};
use crate::record::AttemptRecord;
use crate::steps::decompose;

pub use export::{to_dot, to_json};
pub use nav::{dist_to_solution, escape_incorrect_branch, EscapeError};
pub use vi::{default_limits, run_value_iteration, ViReport};

pub(crate) fn nav_escape(g: &MdpGraph, dist: &[Option<u32>], s: StateId) -> Option<StateId> {
    nav::escape_with(g, dist, s).ok()
}

pub type StateId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardPolicy {
    /// A final state passes when its score is strictly above this percent.
    pub pass_threshold: f64,
    pub fail_reward: f64,
}

impl Default for RewardPolicy {
    fn default() -> Self {
        RewardPolicy {
            pass_threshold: 95.0,
            fail_reward: -100.0,
        }
    }
}

impl RewardPolicy {
    /// Passing scores are rewarded with the score itself.
    pub fn reward(&self, score: f64) -> f64 {
        if score > self.pass_threshold {
            score
        } else {
            self.fail_reward
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub id: StateId,
    /// Alias-canonical tree; the identity of the state.
    pub tree: QueryTree,
    /// The tree as first written, used when showing the state to students.
    pub display: QueryTree,
    pub is_final: bool,
    pub reward: f64,
    pub value: f64,
    /// Number of attempts (ideal seeds included) passing through the state.
    pub support: u32,
    /// Lies on a decomposed ideal solution.
    pub seeded: bool,
    /// Smallest step index at which the state occurs.
    pub step: usize,
}

impl State {
    pub fn is_passing(&self) -> bool {
        self.is_final && self.reward > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub to: StateId,
    pub probability: f64,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedAttempt {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpGraph {
    pub states: Vec<State>,
    /// The forward action of each state; empty for finals.
    pub forward: Vec<Vec<Transition>>,
    pub backward: Vec<Option<StateId>>,
    pub gamma: f64,
    pub roots: Vec<StateId>,
    pub skipped: Vec<SkippedAttempt>,
    pub report: Option<ViReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("at least one ideal solution is required")]
    NoIdeals,
    #[error("ideal solution {0} is not a complete query")]
    BadIdeal(usize),
}

impl Default for MdpGraph {
    fn default() -> Self {
        MdpGraph {
            states: Vec::new(),
            forward: Vec::new(),
            backward: Vec::new(),
            gamma: 1.0,
            roots: Vec::new(),
            skipped: Vec::new(),
            report: None,
        }
    }
}

impl MdpGraph {
    /// Appends a bare state; used to assemble graphs by hand.
    pub fn add_state(&mut self, tree: QueryTree, is_final: bool, reward: f64) -> StateId {
        let id = self.states.len();
        self.states.push(State {
            id,
            display: tree.clone(),
            tree,
            is_final,
            reward: if is_final { reward } else { 0.0 },
            value: if is_final { reward } else { 0.0 },
            support: 0,
            seeded: false,
            step: 0,
        });
        self.forward.push(Vec::new());
        self.backward.push(None);
        id
    }

    pub fn set_forward(&mut self, from: StateId, dests: &[(StateId, f64)]) {
        self.forward[from] = dests
            .iter()
            .map(|&(to, probability)| Transition {
                to,
                probability,
                count: 0,
            })
            .collect();
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, id: StateId) -> &State {
        &self.states[id]
    }

    /// Number of distinct root-to-final paths along forward transitions.
    pub fn branch_count(&self) -> u64 {
        self.roots.iter().map(|&r| self.paths_from(r, &mut HashMap::new(), &|_| true)).sum()
    }

    /// Root-to-final paths restricted to states accepted by `keep`.
    pub(crate) fn paths_from(&self, s: StateId, memo: &mut HashMap<StateId, u64>, keep: &dyn Fn(StateId) -> bool) -> u64 {
        if !keep(s) {
            return 0;
        }
        if self.states[s].is_final {
            return 1;
        }
        if let Some(&n) = memo.get(&s) {
            return n;
        }
        memo.insert(s, 0);
        let n = self.forward[s].iter().map(|t| self.paths_from(t.to, memo, keep)).sum();
        memo.insert(s, n);
        n
    }

    pub fn passing_finals(&self) -> impl Iterator<Item = &State> {
        self.states.iter().filter(|s| s.is_passing())
    }
}

struct Sequence {
    steps: Vec<(QueryTree, QueryTree)>,
    score: f64,
    seeded: bool,
}

fn sequence(text_tree: &QueryTree, score: f64, seeded: bool) -> Option<Sequence> {
    // Each step is canonicalized on its own, the same way a student's
    // in-progress query is before matching.
    let mut steps: Vec<(QueryTree, QueryTree)> = Vec::new();
    for step in decompose(text_tree).ok()? {
        let (canon, _) = canonicalize_aliases(&step.tree);
        if steps.last().is_some_and(|(c, _)| *c == canon) {
            steps.pop();
        }
        steps.push((canon, step.tree));
    }
    Some(Sequence { steps, score, seeded })
}

/// Builds the graph for one exercise. Ideal solutions are injected as
/// attempts scoring 100. Attempts that do not parse to a complete query are
/// skipped and listed in [`MdpGraph::skipped`]. Values are left at their
/// initial estimate; see [`run_value_iteration`].
pub fn build_mdp(attempts: &[AttemptRecord], ideals: &[QueryTree], policy: &RewardPolicy) -> Result<MdpGraph, BuildError> {
    if ideals.is_empty() {
        return Err(BuildError::NoIdeals);
    }
    let mut sequences = Vec::with_capacity(ideals.len() + attempts.len());
    for (i, ideal) in ideals.iter().enumerate() {
        sequences.push(sequence(ideal, 100.0, true).ok_or(BuildError::BadIdeal(i))?);
    }
    let mut skipped = Vec::new();
    for (index, a) in attempts.iter().enumerate() {
        let seq = match parse(&a.query_text) {
            Ok(t) => sequence(&t, a.score, false).ok_or_else(|| "not a complete query".to_string()),
            Err(e) => Err(e.to_string()),
        };
        match seq {
            Ok(s) => sequences.push(s),
            Err(reason) => skipped.push(SkippedAttempt { index, reason }),
        }
    }

    let mut g = MdpGraph {
        skipped,
        ..MdpGraph::default()
    };
    let mut index: HashMap<(QueryTree, bool), StateId> = HashMap::new();
    let mut counts: Vec<BTreeMap<StateId, u32>> = Vec::new();
    let mut final_score: HashMap<StateId, f64> = HashMap::new();

    for seq in &sequences {
        let last = seq.steps.len() - 1;
        let mut prev: Option<StateId> = None;
        for (k, (tree, display)) in seq.steps.iter().enumerate() {
            let is_final = k == last;
            let id = *index.entry((tree.clone(), is_final)).or_insert_with(|| {
                let id = g.add_state(tree.clone(), is_final, 0.0);
                g.states[id].display = display.clone();
                g.states[id].step = k;
                counts.push(BTreeMap::new());
                id
            });
            let st = &mut g.states[id];
            st.support += 1;
            st.seeded |= seq.seeded;
            st.step = st.step.min(k);
            if is_final {
                let best = final_score.entry(id).or_insert(seq.score);
                *best = best.max(seq.score);
            }
            if let Some(p) = prev {
                *counts[p].entry(id).or_default() += 1;
            }
            prev = Some(id);
        }
    }

    for (id, score) in final_score {
        let r = policy.reward(score);
        g.states[id].reward = r;
        g.states[id].value = r;
    }
    for (from, dests) in counts.iter().enumerate() {
        let total: u32 = dests.values().sum();
        g.forward[from] = dests
            .iter()
            .map(|(&to, &count)| Transition {
                to,
                probability: count as f64 / total as f64,
                count,
            })
            .collect();
    }
    let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); g.len()];
    for (from, ts) in g.forward.iter().enumerate() {
        for t in ts {
            preds[t.to].push(from);
        }
    }
    for (id, ps) in preds.iter().enumerate() {
        g.backward[id] = ps
            .iter()
            .copied()
            .max_by(|&a, &b| g.states[a].support.cmp(&g.states[b].support).then(b.cmp(&a)));
    }
    g.roots = g.states.iter().filter(|s| s.step == 0).map(|s| s.id).collect();
    Ok(g)
}
